//! Explicit kernels of the two-state homodirectional system
//! `v₁ₜ − μ₁v₁ₓ = σ₁₂v₂`, `v₂ₜ − μ₂v₂ₓ = σ₂₁v₁`.

use super::bessel::{i0, i1_over_x, j0, j1, j1_over_x};
use crate::error::{Error, Result};
use super::picard::ArtificialBoundary;
use crate::grid::TriangularGrid;
use crate::system::HyperbolicSystem;
use std::sync::Arc;

/// Which prefactor multiplies `I₀` in `L₁₂`.
///
/// The printed formula carries `σ₂₁/(μ₂−μ₁)`; only `σ₁₂/(μ₂−μ₁)` satisfies the
/// kernel equations and the hypotenuse condition. Both are kept so the
/// residual check can tell them apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L12Prefactor {
    AsPrinted,
    Swapped,
}

impl L12Prefactor {
    pub const VALIDATED: L12Prefactor = L12Prefactor::Swapped;

    pub fn label(self) -> &'static str {
        match self {
            L12Prefactor::AsPrinted => "L12 prefactor sigma21/(mu2-mu1) (as printed)",
            L12Prefactor::Swapped => "L12 prefactor sigma12/(mu2-mu1) (swapped)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm2x2 {
    pub l11: f64,
    pub l12: f64,
    pub l21: f64,
    pub l22: f64,
}

impl ClosedForm2x2 {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.l11,
            (0, 1) => self.l12,
            (1, 0) => self.l21,
            (1, 1) => self.l22,
            _ => panic!("index ({i}, {j}) out of range for a 2x2 kernel"),
        }
    }
}

/// Closed-form kernels with the validated `L₁₂` prefactor.
pub fn closed_form_2x2(mu1: f64, mu2: f64, s12: f64, s21: f64, x: f64, xi: f64) -> Result<ClosedForm2x2> {
    closed_form_2x2_variant(mu1, mu2, s12, s21, x, xi, L12Prefactor::VALIDATED)
}

pub fn closed_form_2x2_variant(
    mu1: f64,
    mu2: f64,
    s12: f64,
    s21: f64,
    x: f64,
    xi: f64,
    variant: L12Prefactor,
) -> Result<ClosedForm2x2> {
    if !(mu1 > mu2 && mu2 > 0.0) {
        return Err(Error::Parameter(format!("need mu1 > mu2 > 0, got mu1 = {mu1}, mu2 = {mu2}")));
    }
    if s12 * s21 < 0.0 {
        return Err(Error::Unsupported("closed forms need sigma12*sigma21 >= 0".into()));
    }
    TriangularGrid::check_domain(x, xi)?;
    let xi = xi.clamp(0.0, x);
    let ss = s12 * s21;
    let c = 2.0 / (mu1 - mu2);
    let d = (x - xi).max(0.0);

    let (l11, l12) = if xi >= mu2 / mu1 * x {
        let a = (mu1 * xi - mu2 * x).max(0.0);
        let z = c * (ss * d * a / mu1).sqrt();
        // √(a/(μ₁(x−ξ)))·I₁(z) written without the removable 0/0
        let l11 = ss.sqrt() / (mu2 - mu1) * c * ss.sqrt() * a / mu1 * i1_over_x(z);
        let pre = match variant {
            L12Prefactor::AsPrinted => s21,
            L12Prefactor::Swapped => s12,
        };
        (l11, pre / (mu2 - mu1) * i0(z))
    } else {
        (0.0, 0.0)
    };

    let b = mu1 * x - mu2 * xi;
    let w = c * (ss * d * b / mu2).sqrt();
    let (l21, l22) = if b <= 0.0 {
        (s21 / (mu1 - mu2), 0.0)
    } else {
        let l21 = s21 * xi / b * j0(w) + mu1 * (s21 * mu2 * d / (s12 * b * b * b)).sqrt() * j1(w);
        let l22 = xi * c * ss / mu2 * j1_over_x(w);
        (l21, l22)
    };
    Ok(ClosedForm2x2 { l11, l12, l21, l22 })
}

/// Artificial data `L₂₁(1, ξ)` taken from the closed forms, so the numerical
/// solution of a 2×2 homodirectional problem is comparable to them.
pub fn closed_form_artificial(sys: &HyperbolicSystem) -> Result<ArtificialBoundary> {
    if sys.n() != 0 || sys.m() != 2 {
        return Err(Error::Unsupported("closed-form artificial data needs n = 0, m = 2".into()));
    }
    let (mu1, mu2, s12, s21) = (sys.mu[0], sys.mu[1], sys.sigma_mm[(0, 1)], sys.sigma_mm[(1, 0)]);
    closed_form_2x2(mu1, mu2, s12, s21, 1.0, 0.5)?;
    let mut art = ArtificialBoundary::zeros(2);
    art.set_function(1, 0, Arc::new(move |xi| closed_form_2x2(mu1, mu2, s12, s21, 1.0, xi).map_or(f64::NAN, |c| c.l21)));
    Ok(art)
}

/// Residuals of the four kernel equations at `(x, ξ)` by central differences
/// with step `h`, in the order `L₁₁, L₁₂, L₂₁, L₂₂`.
#[allow(clippy::too_many_arguments)]
pub fn pde_residuals(
    mu1: f64,
    mu2: f64,
    s12: f64,
    s21: f64,
    x: f64,
    xi: f64,
    h: f64,
    variant: L12Prefactor,
) -> Result<[f64; 4]> {
    let f = |x: f64, xi: f64| closed_form_2x2_variant(mu1, mu2, s12, s21, x, xi, variant);
    let c = f(x, xi)?;
    let (xp, xm, yp, ym) = (f(x + h, xi)?, f(x - h, xi)?, f(x, xi + h)?, f(x, xi - h)?);
    let d = |g: fn(&ClosedForm2x2) -> f64, cx: f64, cy: f64| {
        (cx * (g(&xp) - g(&xm)) + cy * (g(&yp) - g(&ym))) / (2.0 * h)
    };
    Ok([
        d(|k| k.l11, mu1, mu1) - s21 * c.l12,
        d(|k| k.l12, mu1, mu2) - s12 * c.l11,
        d(|k| k.l21, mu2, mu1) - s21 * c.l22,
        d(|k| k.l22, mu2, mu2) - s12 * c.l21,
    ])
}
