//! Smooth mode density of a planar billiard (units `2m = hbar = 1`).
//!
//! `rho(E) ~ A/(4 pi) - L/(8 pi sqrt(E)) + C delta(E)`, with
//! `C = (1/12pi) ∮ c ds + (1/24) sum_i (pi/alpha_i - alpha_i/pi)` for Dirichlet
//! walls. The delta term is never evaluated pointwise; it is carried as the
//! additive constant of the smoothed counting function.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::GeometricMeasures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    /// Sign picked up per wall reflection.
    pub fn reflection_sign(self) -> f64 {
        match self {
            BoundaryCondition::Dirichlet => -1.0,
            BoundaryCondition::Neumann => 1.0,
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            other => Err(format!("unknown boundary condition `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerTerm {
    pub alpha: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionBreakdown {
    pub curvature_part: f64,
    pub corner_part: f64,
    pub per_corner: Vec<CornerTerm>,
    /// Set when the corner part has no established value for this boundary
    /// condition (Neumann walls): it is then the Dirichlet formula, reported
    /// for comparison only.
    pub corner_unverified: bool,
}

/// Coefficients of `E^0`, `E^(-1/2)` and `delta(E)` in the smooth density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralExpansion {
    pub const_coef: f64,
    pub inv_sqrt_coef: f64,
    pub delta_coef: f64,
    pub breakdown: ExpansionBreakdown,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeylError {
    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("corner angle {0} outside (0, pi)")]
    AngleOutOfRange(f64),
}

impl SpectralExpansion {
    /// The all-zero expansion.
    pub fn zero() -> Self {
        SpectralExpansion {
            const_coef: 0.0,
            inv_sqrt_coef: 0.0,
            delta_coef: 0.0,
            breakdown: ExpansionBreakdown {
                curvature_part: 0.0,
                corner_part: 0.0,
                per_corner: Vec::new(),
                corner_unverified: false,
            },
        }
    }

    /// `const_coef E + 2 inv_sqrt_coef sqrt(E)`: the E-dependent part of the
    /// smoothed counting function.
    pub fn growing_part(&self, e: f64) -> f64 {
        self.const_coef * e + 2.0 * self.inv_sqrt_coef * e.sqrt()
    }
}

/// Corner contribution to the delta coefficient, `(pi/alpha - alpha/pi) / 24`.
pub fn weyl_corner_term(alpha: f64) -> f64 {
    (PI / alpha - alpha / PI) / 24.0
}

pub fn weyl_expansion(m: &GeometricMeasures, bc: BoundaryCondition) -> SpectralExpansion {
    let length_sign = match bc {
        BoundaryCondition::Dirichlet => -1.0,
        BoundaryCondition::Neumann => 1.0,
    };
    let curvature_part = m.curvature_integral / (12.0 * PI);
    let per_corner: Vec<CornerTerm> = m
        .corners
        .iter()
        .map(|c| CornerTerm {
            alpha: c.alpha,
            coefficient: weyl_corner_term(c.alpha),
        })
        .collect();
    let corner_part = per_corner.iter().fold(0.0, |acc, c| acc + c.coefficient);
    SpectralExpansion {
        const_coef: m.area / (4.0 * PI),
        inv_sqrt_coef: length_sign * m.perimeter / (8.0 * PI),
        delta_coef: curvature_part + corner_part,
        breakdown: ExpansionBreakdown {
            curvature_part,
            corner_part,
            per_corner,
            corner_unverified: bc == BoundaryCondition::Neumann && !m.corners.is_empty(),
        },
    }
}

/// Smoothed counting function `N(E) = const E + 2 inv_sqrt sqrt(E) + delta`.
pub fn smooth_counting(e: &SpectralExpansion, energy: f64) -> Result<f64, WeylError> {
    if !(energy > 0.0) {
        return Err(WeylError::NonPositiveEnergy(energy));
    }
    Ok(e.growing_part(energy) + e.delta_coef)
}

/// Why the orbit-family coefficients are absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AbsentReason {
    /// Closed double-reflection orbits only exist for acute corners.
    ObtuseNoClosedOrbit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitCornerCoeffs {
    /// `alpha / (8 pi sin^2 alpha)` from the double-reflection family.
    pub orbit: f64,
    /// `1 / (4 pi tan alpha)` from truncating the single-reflection strip.
    pub edge_correction: f64,
    /// `(alpha / sin^2 alpha + 2 cot alpha) / (8 pi)`.
    pub total_semiclassical: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerCoeffs {
    pub alpha: f64,
    pub weyl: f64,
    pub semiclassical: Result<OrbitCornerCoeffs, AbsentReason>,
}

/// Weyl corner coefficient alongside the closed-orbit estimate for a corner
/// of interior angle `alpha`.
pub fn corner_coeffs(alpha: f64) -> Result<CornerCoeffs, WeylError> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(WeylError::AngleOutOfRange(alpha));
    }
    let semiclassical = if alpha < PI / 2.0 || alpha == PI / 2.0 {
        let s = alpha.sin();
        let orbit = alpha / (8.0 * PI * s * s);
        let edge_correction = alpha.cos() / (4.0 * PI * s);
        Ok(OrbitCornerCoeffs {
            orbit,
            edge_correction,
            total_semiclassical: orbit + edge_correction,
        })
    } else {
        Err(AbsentReason::ObtuseNoClosedOrbit)
    };
    Ok(CornerCoeffs {
        alpha,
        weyl: weyl_corner_term(alpha),
        semiclassical,
    })
}
