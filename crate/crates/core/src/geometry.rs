//! Billiard boundaries built from straight and circular pieces.
//!
//! A [`Boundary`] is a closed chain traversed counterclockwise, so the
//! interior lies on the left and the inward normal is the tangent rotated by
//! `+pi/2`. Curvature is positive where the center of curvature is on the
//! interior side.
//!
//! Self-intersecting chains are not detected.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use thiserror::Error;

/// Chain-closure tolerance (distance).
pub const CLOSURE_TOL: f64 = 1e-9;
/// Tangent mismatch below which a junction is a smooth seam, not a corner.
pub const CORNER_ANGLE_TOL: f64 = 1e-9;
/// Arclength tolerance around corners for frames and ray hits.
pub const CORNER_ARC_TOL: f64 = 1e-9;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("boundary chain is open: segment {index} ends {gap:e} away from the next start")]
    OpenChain { index: usize, gap: f64 },
    #[error("boundary is clockwise (signed area {area}); counterclockwise orientation is required")]
    Orientation { area: f64 },
    #[error("segment {index} has zero length")]
    ZeroLengthSegment { index: usize },
    #[error("arc segment {index} has non-positive radius {radius}")]
    BadRadius { index: usize, radius: f64 },
    #[error("arclength {s} lies on a corner; the frame is undefined there")]
    CornerPoint { s: f64 },
    #[error("arclength {s} outside [0, {perimeter})")]
    OutOfRange { s: f64, perimeter: f64 },
    #[error("boundary has no segments")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line {
        from: Point,
        to: Point,
    },
    /// Circular arc swept from `start` to `end` (radians). `ccw` fixes the
    /// direction; the signed sweep is `end - start` taken in that direction.
    Arc {
        center: Point,
        radius: f64,
        start: f64,
        end: f64,
        ccw: bool,
    },
}

impl Segment {
    /// Signed sweep angle; positive for counterclockwise arcs, zero for lines.
    pub fn sweep(&self) -> f64 {
        match *self {
            Segment::Line { .. } => 0.0,
            Segment::Arc { start, end, ccw, .. } => {
                let mut d = end - start;
                if ccw {
                    while d <= 0.0 {
                        d += TAU;
                    }
                    while d > TAU + 1e-12 {
                        d -= TAU;
                    }
                    d
                } else {
                    while d >= 0.0 {
                        d -= TAU;
                    }
                    while d < -TAU - 1e-12 {
                        d += TAU;
                    }
                    d
                }
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { from, to } => dist(from, to),
            Segment::Arc { radius, .. } => radius * self.sweep().abs(),
        }
    }

    /// Signed curvature; `+1/r` for counterclockwise arcs.
    pub fn curvature(&self) -> f64 {
        match *self {
            Segment::Line { .. } => 0.0,
            Segment::Arc { radius, ccw, .. } => {
                if ccw {
                    1.0 / radius
                } else {
                    -1.0 / radius
                }
            }
        }
    }

    pub fn start_point(&self) -> Point {
        self.point_at(0.0)
    }

    pub fn end_point(&self) -> Point {
        self.point_at(self.length())
    }

    /// Point at arclength `u` from the segment start.
    pub fn point_at(&self, u: f64) -> Point {
        match *self {
            Segment::Line { from, to } => {
                let l = dist(from, to);
                let t = u / l;
                [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
            }
            Segment::Arc {
                center,
                radius,
                start,
                ..
            } => {
                let phi = start + self.sweep().signum() * u / radius;
                [center[0] + radius * phi.cos(), center[1] + radius * phi.sin()]
            }
        }
    }

    /// Unit tangent at arclength `u` along the direction of travel.
    pub fn tangent_at(&self, u: f64) -> Point {
        match *self {
            Segment::Line { from, to } => {
                let l = dist(from, to);
                [(to[0] - from[0]) / l, (to[1] - from[1]) / l]
            }
            Segment::Arc { radius, start, .. } => {
                let dir = self.sweep().signum();
                let phi = start + dir * u / radius;
                [-dir * phi.sin(), dir * phi.cos()]
            }
        }
    }

    /// Contribution to `1/2 ∮ (x dy - y dx)`.
    fn area_contribution(&self) -> f64 {
        match *self {
            Segment::Line { from, to } => 0.5 * (from[0] * to[1] - from[1] * to[0]),
            Segment::Arc {
                center,
                radius,
                start,
                ..
            } => {
                let sweep = self.sweep();
                let end = start + sweep;
                0.5 * (radius * center[0] * (end.sin() - start.sin())
                    - radius * center[1] * (end.cos() - start.cos())
                    + radius * radius * sweep)
            }
        }
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub position: Point,
    /// Interior angle in `(0, 2 pi)`.
    pub alpha: f64,
    /// Arclength of the corner measured from the chain start.
    pub s: f64,
    /// Index of the segment that ends at this corner.
    pub incoming: usize,
    /// Index of the segment that starts at this corner.
    pub outgoing: usize,
}

/// Closed counterclockwise chain of segments with its corners.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    segments: Vec<Segment>,
    /// Arclength at the start of each segment, plus the perimeter at the end.
    offsets: Vec<f64>,
    corners: Vec<Corner>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricMeasures {
    pub area: f64,
    pub perimeter: f64,
    /// Integral of the curvature over the smooth parts of the boundary.
    pub curvature_integral: f64,
    pub corners: Vec<Corner>,
}

/// Position and local frame at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: Point,
    pub tangent: Point,
    pub inward_normal: Point,
    pub curvature: f64,
}

impl Boundary {
    /// Validate a chain of segments: closure, positive lengths, positive area.
    pub fn new(segments: Vec<Segment>) -> Result<Self, GeometryError> {
        if segments.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (index, seg) in segments.iter().enumerate() {
            if let Segment::Arc { radius, .. } = *seg {
                if !(radius > 0.0) {
                    return Err(GeometryError::BadRadius { index, radius });
                }
            }
            if !(seg.length() > 0.0) {
                return Err(GeometryError::ZeroLengthSegment { index });
            }
        }
        let n = segments.len();
        for index in 0..n {
            let gap = dist(segments[index].end_point(), segments[(index + 1) % n].start_point());
            if gap > CLOSURE_TOL {
                return Err(GeometryError::OpenChain { index, gap });
            }
        }
        let area: f64 = segments.iter().map(Segment::area_contribution).sum();
        if !(area > 0.0) {
            return Err(GeometryError::Orientation { area });
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for seg in &segments {
            offsets.push(acc);
            acc += seg.length();
        }
        offsets.push(acc);

        let mut corners = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let t_in = segments[i].tangent_at(segments[i].length());
            let t_out = segments[j].tangent_at(0.0);
            let turn = (t_in[0] * t_out[1] - t_in[1] * t_out[0])
                .atan2(t_in[0] * t_out[0] + t_in[1] * t_out[1]);
            if turn.abs() < CORNER_ANGLE_TOL {
                continue;
            }
            corners.push(Corner {
                position: segments[j].start_point(),
                alpha: PI - turn,
                s: if j == 0 { 0.0 } else { offsets[j] },
                incoming: i,
                outgoing: j,
            });
        }
        corners.sort_by(|a, b| a.s.total_cmp(&b.s));
        Ok(Boundary {
            segments,
            offsets,
            corners,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn perimeter(&self) -> f64 {
        self.offsets[self.segments.len()]
    }

    pub fn measures(&self) -> GeometricMeasures {
        GeometricMeasures {
            area: self.segments.iter().map(Segment::area_contribution).sum(),
            perimeter: self.perimeter(),
            curvature_integral: self.segments.iter().map(Segment::sweep).sum(),
            corners: self.corners.clone(),
        }
    }

    /// Distance in arclength from `s` to the nearest corner (periodic).
    pub fn distance_to_corner(&self, s: f64) -> f64 {
        let p = self.perimeter();
        self.corners
            .iter()
            .map(|c| {
                let d = (s - c.s).rem_euclid(p);
                d.min(p - d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Segment index and local arclength for a global arclength.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.rem_euclid(self.perimeter());
        let idx = match self.offsets[..self.segments.len()]
            .binary_search_by(|o| o.total_cmp(&s))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (idx, s - self.offsets[idx])
    }

    /// Global arclength of local position `u` on segment `idx`.
    pub fn arclength_of(&self, idx: usize, u: f64) -> f64 {
        (self.offsets[idx] + u).rem_euclid(self.perimeter())
    }

    pub fn frame_at(&self, s: f64) -> Result<Frame, GeometryError> {
        let perimeter = self.perimeter();
        if !(0.0..perimeter).contains(&s) {
            return Err(GeometryError::OutOfRange { s, perimeter });
        }
        if self.distance_to_corner(s) < CORNER_ARC_TOL {
            return Err(GeometryError::CornerPoint { s });
        }
        let (idx, u) = self.locate(s);
        Ok(self.frame_on(idx, u))
    }

    pub(crate) fn frame_on(&self, idx: usize, u: f64) -> Frame {
        let seg = &self.segments[idx];
        let t = seg.tangent_at(u);
        Frame {
            point: seg.point_at(u),
            tangent: t,
            inward_normal: [-t[1], t[0]],
            curvature: seg.curvature(),
        }
    }

    /// Write the boundary in the text geometry format.
    pub fn serialize(&self) -> String {
        let mut out = String::from("billiard v1\n");
        for seg in &self.segments {
            match *seg {
                Segment::Line { from, to } => {
                    writeln!(out, "line {:?} {:?} {:?} {:?}", from[0], from[1], to[0], to[1])
                }
                Segment::Arc {
                    center,
                    radius,
                    start,
                    end,
                    ccw,
                } => writeln!(
                    out,
                    "arc {:?} {:?} {:?} {:?} {:?} {}",
                    center[0],
                    center[1],
                    radius,
                    start,
                    end,
                    if ccw { "ccw" } else { "cw" }
                ),
            }
            .expect("writing to a String");
        }
        out
    }

    pub fn unit_square() -> Self {
        Self::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("unit square")
    }

    pub fn disk(radius: f64) -> Result<Self, GeometryError> {
        Self::new(vec![Segment::Arc {
            center: [0.0, 0.0],
            radius,
            start: 0.0,
            end: TAU,
            ccw: true,
        }])
    }

    /// Closed polygon through `vertices` (counterclockwise).
    pub fn polygon(vertices: &[Point]) -> Result<Self, GeometryError> {
        let n = vertices.len();
        Self::new(
            (0..n)
                .map(|i| Segment::Line {
                    from: vertices[i],
                    to: vertices[(i + 1) % n],
                })
                .collect(),
        )
    }
}

/// Parse the line-oriented geometry format.
///
/// ```text
/// billiard v1
/// # comment
/// line x0 y0 x1 y1
/// arc cx cy r a0 a1 ccw|cw
/// ```
pub fn parse_geometry(text: &str) -> Result<Boundary, GeometryError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some(x) => break x,
            None => {
                return Err(GeometryError::Syntax {
                    line: 1,
                    column: 1,
                    message: "missing `billiard v1` header".into(),
                })
            }
        }
    };
    if header.1.trim() != "billiard v1" {
        return Err(GeometryError::Syntax {
            line: header.0 + 1,
            column: 1,
            message: format!("expected `billiard v1`, found `{}`", header.1.trim()),
        });
    }
    let mut segments = Vec::new();
    for (lineno, raw) in lines {
        let line = raw.trim_start();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let indent = raw.len() - line.len();
        let mut tokens = Vec::new();
        let mut pos = 0;
        for tok in line.split_whitespace() {
            let at = line[pos..].find(tok).expect("token from the same line") + pos;
            tokens.push((at + indent + 1, tok));
            pos = at + tok.len();
        }
        let syntax = |column: usize, message: String| GeometryError::Syntax {
            line: lineno + 1,
            column,
            message,
        };
        let number = |i: usize| -> Result<f64, GeometryError> {
            let (col, tok) = tokens[i];
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(col, format!("expected a number, found `{tok}`")))
        };
        let (kind_col, kind) = tokens[0];
        let arity = match kind {
            "line" => 5,
            "arc" => 7,
            other => return Err(syntax(kind_col, format!("unknown record `{other}`"))),
        };
        if tokens.len() != arity {
            let col = tokens.get(arity).map_or(raw.len() + 1, |t| t.0);
            return Err(syntax(
                col,
                format!("`{kind}` takes {} fields, found {}", arity - 1, tokens.len() - 1),
            ));
        }
        if kind == "line" {
            segments.push(Segment::Line {
                from: [number(1)?, number(2)?],
                to: [number(3)?, number(4)?],
            });
        } else {
            let (dir_col, dir) = tokens[6];
            let ccw = match dir {
                "ccw" => true,
                "cw" => false,
                other => return Err(syntax(dir_col, format!("expected `ccw` or `cw`, found `{other}`"))),
            };
            segments.push(Segment::Arc {
                center: [number(1)?, number(2)?],
                radius: number(3)?,
                start: number(4)?,
                end: number(5)?,
                ccw,
            });
        }
    }
    Boundary::new(segments)
}
