//! Linearized billiard dynamics in Birkhoff coordinates.
//!
//! A bounce is labelled by the boundary arclength `s` and the tangential
//! component `v` of the unit velocity right after reflection; `v_perp =
//! sqrt(1 - v^2)` is the inward normal component. Perturbations transverse to a
//! chord are `(xi, kappa)`: displacement and velocity perpendicular to the
//! path.
//!
//! `v` is kept signed in `(-1, 1)`: reflected rays run both ways along the
//! boundary.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Boundary, GeometryError, Point, Segment, CORNER_ARC_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BirkhoffError {
    #[error("grazing incidence: normal velocity component {0} is not in (0, 1]")]
    GrazingIncidence(f64),
    #[error("ray from s = {s} found no boundary intersection")]
    RayEscape { s: f64 },
    #[error("ray lands on the corner near s = {s}")]
    CornerHit { s: f64 },
    #[error("tangential velocity {0} must satisfy |v| < 1")]
    BadVelocity(f64),
    #[error("inconsistent orbit: {0}")]
    BadOrbit(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Real 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub const fn diag(a: f64, d: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, d)
    }

    /// `[[1, b], [0, 1]]`
    pub const fn shear_upper(b: f64) -> Self {
        Mat2::new(1.0, b, 0.0, 1.0)
    }

    /// `[[1, 0], [c, 1]]`
    pub const fn shear_lower(c: f64) -> Self {
        Mat2::new(1.0, 0.0, c, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d))
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    /// Largest entrywise absolute difference.
    pub fn max_diff(&self, other: &Mat2) -> f64 {
        (self.m11 - other.m11)
            .abs()
            .max((self.m12 - other.m12).abs())
            .max((self.m21 - other.m21).abs())
            .max((self.m22 - other.m22).abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, b: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * b.m11 + self.m12 * b.m21,
            self.m11 * b.m12 + self.m12 * b.m22,
            self.m21 * b.m11 + self.m22 * b.m21,
            self.m21 * b.m12 + self.m22 * b.m22,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirkhoffCoord {
    pub s: f64,
    pub v: f64,
}

impl BirkhoffCoord {
    pub fn new(s: f64, v: f64) -> Result<Self, BirkhoffError> {
        if !(v.abs() < 1.0) {
            return Err(BirkhoffError::BadVelocity(v));
        }
        Ok(BirkhoffCoord { s, v })
    }

    pub fn v_perp(&self) -> f64 {
        (1.0 - self.v * self.v).sqrt()
    }
}

/// Transverse perturbation at a point of a chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransverseState {
    pub xi: f64,
    pub kappa: f64,
}

fn check_perp(v: f64) -> Result<(), BirkhoffError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(BirkhoffError::GrazingIncidence(v))
    }
}

/// Linearized bounce-to-bounce map `(ds1, dv1) -> (ds2, dv2)` along a chord
/// of length `l12`, in closed form.
pub fn linearized_bounce_map(
    v1_perp: f64,
    v2_perp: f64,
    l12: f64,
    c1: f64,
    c2: f64,
) -> Result<Mat2, BirkhoffError> {
    check_perp(v1_perp)?;
    check_perp(v2_perp)?;
    if !(l12 > 0.0) {
        return Err(BirkhoffError::BadOrbit(format!("chord length {l12} must be positive")));
    }
    Ok(Mat2::new(
        (l12 * c1 - v1_perp) / v2_perp,
        -l12 / (v1_perp * v2_perp),
        c1 * v2_perp + c2 * v1_perp - l12 * c1 * c2,
        (l12 * c2 - v2_perp) / v1_perp,
    ))
}

/// The same map as the product of five elementary factors: boundary-to-chord
/// rescaling, curvature kick, free flight, curvature kick, rescaling.
pub fn linearized_bounce_map_factored(
    v1_perp: f64,
    v2_perp: f64,
    l12: f64,
    c1: f64,
    c2: f64,
) -> Result<Mat2, BirkhoffError> {
    check_perp(v1_perp)?;
    check_perp(v2_perp)?;
    Ok(Mat2::diag(1.0 / v2_perp, v2_perp)
        * Mat2::shear_lower(-c2 / v2_perp)
        * Mat2::new(-1.0, -l12, 0.0, -1.0)
        * Mat2::shear_lower(-c1 / v1_perp)
        * Mat2::diag(v1_perp, 1.0 / v1_perp))
}

/// Which side of a bounce the transverse reference point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChordEnd {
    /// Velocity taken right after the bounce (the chord leaves the boundary).
    Start,
    /// Velocity taken right before the bounce (the chord arrives); `v_perp`
    /// enters with the opposite sign.
    Finish,
}

/// `(J_s_xi, J_xi_s)`: the map from transverse `(xi, kappa)` at a chord point
/// to `(ds, dv)` at the bounce, and its inverse. `y` is the bounce position
/// along the chord measured from the reference point.
pub fn transverse_jacobians(
    y: f64,
    c: f64,
    v_perp: f64,
    end: ChordEnd,
) -> Result<(Mat2, Mat2), BirkhoffError> {
    check_perp(v_perp)?;
    let w = match end {
        ChordEnd::Start => v_perp,
        ChordEnd::Finish => -v_perp,
    };
    let j_s_xi = Mat2::diag(1.0 / w, w) * Mat2::shear_lower(c / w) * Mat2::shear_upper(y);
    let j_xi_s = Mat2::shear_upper(-y) * Mat2::shear_lower(-c / w) * Mat2::diag(w, 1.0 / w);
    Ok((j_s_xi, j_xi_s))
}

/// Boundary data at one bounce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BounceData {
    pub s: f64,
    pub v_perp: f64,
    pub curvature: f64,
}

/// An orbit from an interior point, through `n >= 1` bounces, to an interior
/// end point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSpec {
    pub bounces: Vec<BounceData>,
    /// `chords[i]` joins bounce `i` and bounce `i + 1`.
    pub chords: Vec<f64>,
    /// Distance from the start point to the first bounce.
    pub y_first: f64,
    /// Distance from the last bounce to the end point.
    pub y_last: f64,
    /// Conserved momentum magnitude.
    pub k: f64,
}

impl OrbitSpec {
    pub fn total_length(&self) -> f64 {
        self.y_first.abs() + self.chords.iter().sum::<f64>() + self.y_last.abs()
    }

    fn validate(&self) -> Result<(), BirkhoffError> {
        if self.bounces.is_empty() {
            return Err(BirkhoffError::BadOrbit("at least one bounce is required".into()));
        }
        if self.chords.len() + 1 != self.bounces.len() {
            return Err(BirkhoffError::BadOrbit(format!(
                "{} bounces need {} chords, got {}",
                self.bounces.len(),
                self.bounces.len() - 1,
                self.chords.len()
            )));
        }
        if let Some(l) = self.chords.iter().find(|l| !(**l > 0.0)) {
            return Err(BirkhoffError::BadOrbit(format!("chord length {l} must be positive")));
        }
        if !(self.k > 0.0) {
            return Err(BirkhoffError::BadOrbit(format!("momentum {} must be positive", self.k)));
        }
        Ok(())
    }
}

/// Monodromy `(xi_0, kappa_0) -> (xi_t, kappa_t)` across all bounces.
pub fn monodromy(orbit: &OrbitSpec) -> Result<Mat2, BirkhoffError> {
    orbit.validate()?;
    let first = orbit.bounces[0];
    let last = orbit.bounces[orbit.bounces.len() - 1];
    let (enter, _) = transverse_jacobians(orbit.y_first.abs(), first.curvature, first.v_perp, ChordEnd::Finish)?;
    let mut m = enter;
    for (i, &l) in orbit.chords.iter().enumerate() {
        let b1 = orbit.bounces[i];
        let b2 = orbit.bounces[i + 1];
        m = linearized_bounce_map(b1.v_perp, b2.v_perp, l, b1.curvature, b2.curvature)? * m;
    }
    let (_, leave) = transverse_jacobians(-orbit.y_last.abs(), last.curvature, last.v_perp, ChordEnd::Start)?;
    Ok(leave * m)
}

/// `d r_perp / d p'_perp = M_12 / k`.
pub fn jacobian_r_p(m: &Mat2, k: f64) -> f64 {
    m.m12 / k
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

const SELF_HIT_TOL: f64 = 1e-10;

/// Nearest forward intersection of the ray `p + t d` with the boundary.
/// Returns `(t, segment index, local arclength)`.
fn cast(b: &Boundary, p: Point, d: Point) -> Option<(f64, usize, f64)> {
    let mut best: Option<(f64, usize, f64)> = None;
    let mut consider = |t: f64, idx: usize, u: f64| {
        if t > SELF_HIT_TOL && best.map_or(true, |(bt, _, _)| t < bt) {
            best = Some((t, idx, u));
        }
    };
    for (idx, seg) in b.segments().iter().enumerate() {
        match *seg {
            Segment::Line { from, to } => {
                let e = [to[0] - from[0], to[1] - from[1]];
                let den = d[0] * e[1] - d[1] * e[0];
                if den.abs() < 1e-300 {
                    continue;
                }
                let w = [from[0] - p[0], from[1] - p[1]];
                let t = (w[0] * e[1] - w[1] * e[0]) / den;
                let frac = (w[0] * d[1] - w[1] * d[0]) / den;
                if (-1e-12..=1.0 + 1e-12).contains(&frac) {
                    consider(t, idx, frac.clamp(0.0, 1.0) * seg.length());
                }
            }
            Segment::Arc {
                center,
                radius,
                start,
                ..
            } => {
                let w = [p[0] - center[0], p[1] - center[1]];
                let half_b = dot(d, w);
                let cc = dot(w, w) - radius * radius;
                let disc = half_b * half_b - cc;
                if disc < 0.0 {
                    continue;
                }
                let sq = disc.sqrt();
                let sweep = seg.sweep();
                for t in [-half_b - sq, -half_b + sq] {
                    let q = [p[0] + t * d[0] - center[0], p[1] + t * d[1] - center[1]];
                    let phi = q[1].atan2(q[0]);
                    let mut off = (phi - start) * sweep.signum();
                    off = off.rem_euclid(std::f64::consts::TAU);
                    let span = sweep.abs();
                    if off > span + 1e-12 {
                        // allow hits just before the start angle
                        if std::f64::consts::TAU - off < 1e-12 {
                            off = 0.0;
                        } else {
                            continue;
                        }
                    }
                    consider(t, idx, off.min(span) * radius);
                }
            }
        }
    }
    best
}

/// One specular bounce: from `(s, v)` to the next boundary hit.
pub fn bounce_map(b: &Boundary, p: BirkhoffCoord) -> Result<BirkhoffCoord, BirkhoffError> {
    Ok(bounce_with_chord(b, p)?.0)
}

/// [`bounce_map`] also returning the chord length travelled.
pub fn bounce_with_chord(b: &Boundary, p: BirkhoffCoord) -> Result<(BirkhoffCoord, f64), BirkhoffError> {
    if !(p.v.abs() < 1.0) {
        return Err(BirkhoffError::BadVelocity(p.v));
    }
    let s = p.s.rem_euclid(b.perimeter());
    let frame = b.frame_at(s)?;
    let vp = p.v_perp();
    check_perp(vp)?;
    let d = [
        p.v * frame.tangent[0] + vp * frame.inward_normal[0],
        p.v * frame.tangent[1] + vp * frame.inward_normal[1],
    ];
    let (t, idx, u) = cast(b, frame.point, d).ok_or(BirkhoffError::RayEscape { s })?;
    let s2 = b.arclength_of(idx, u);
    if b.distance_to_corner(s2) < CORNER_ARC_TOL {
        return Err(BirkhoffError::CornerHit { s: s2 });
    }
    let f2 = b.frame_on(idx, u);
    let dn = dot(d, f2.inward_normal);
    if dn >= 0.0 {
        // the ray must arrive from the interior
        return Err(BirkhoffError::RayEscape { s });
    }
    let r = [d[0] - 2.0 * dn * f2.inward_normal[0], d[1] - 2.0 * dn * f2.inward_normal[1]];
    let v2 = dot(r, f2.tangent).clamp(-1.0, 1.0);
    Ok((BirkhoffCoord { s: s2, v: v2 }, t))
}

/// Successive bounces starting from `p`, `p` included.
pub fn trace(b: &Boundary, p: BirkhoffCoord, bounces: usize) -> Result<Vec<(BirkhoffCoord, f64)>, BirkhoffError> {
    let mut out = Vec::with_capacity(bounces + 1);
    out.push((p, 0.0));
    let mut cur = p;
    for _ in 0..bounces {
        let (next, l) = bounce_with_chord(b, cur)?;
        out.push((next, l));
        cur = next;
    }
    Ok(out)
}

/// Linearized map along a traced sequence of bounces.
pub fn chain_matrix(b: &Boundary, path: &[(BirkhoffCoord, f64)]) -> Result<Mat2, BirkhoffError> {
    let mut m = Mat2::IDENTITY;
    for w in path.windows(2) {
        let (p1, _) = w[0];
        let (p2, l) = w[1];
        let c1 = b.frame_at(p1.s.rem_euclid(b.perimeter()))?.curvature;
        let c2 = b.frame_at(p2.s)?.curvature;
        m = linearized_bounce_map(p1.v_perp(), p2.v_perp(), l, c1, c2)? * m;
    }
    Ok(m)
}

/// Central-difference Jacobian of `n` bounces of the nonlinear map, with one
/// Richardson step over `h` and `h/2`.
pub fn finite_difference_jacobian(
    b: &Boundary,
    p: BirkhoffCoord,
    bounces: usize,
    h: f64,
) -> Result<Mat2, BirkhoffError> {
    let perimeter = b.perimeter();
    let image = |s: f64, v: f64| -> Result<BirkhoffCoord, BirkhoffError> {
        let mut cur = BirkhoffCoord::new(s, v)?;
        for _ in 0..bounces {
            cur = bounce_map(b, cur)?;
        }
        Ok(cur)
    };
    let base = image(p.s, p.v)?;
    let unwrap = |x: f64| {
        let d = (x - base.s).rem_euclid(perimeter);
        if d > perimeter / 2.0 {
            d - perimeter
        } else {
            d
        }
    };
    let column = |ds: f64, dv: f64, step: f64| -> Result<[f64; 2], BirkhoffError> {
        let plus = image(p.s + ds * step, p.v + dv * step)?;
        let minus = image(p.s - ds * step, p.v - dv * step)?;
        Ok([
            (unwrap(plus.s) - unwrap(minus.s)) / (2.0 * step),
            (plus.v - minus.v) / (2.0 * step),
        ])
    };
    let richardson = |ds: f64, dv: f64| -> Result<[f64; 2], BirkhoffError> {
        let a = column(ds, dv, h)?;
        let c = column(ds, dv, h / 2.0)?;
        Ok([(4.0 * c[0] - a[0]) / 3.0, (4.0 * c[1] - a[1]) / 3.0])
    };
    let cs = richardson(1.0, 0.0)?;
    let cv = richardson(0.0, 1.0)?;
    Ok(Mat2::new(cs[0], cv[0], cs[1], cv[1]))
}
