//! The constructive bound `|K|, |L| <= φ̄·exp(M(x − (1−ε)ξ))` on the kernels.

use super::picard::ArtificialBoundary;
use crate::error::{Error, Result};
use crate::system::HyperbolicSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalBound {
    pub eps: f64,
    pub lambda_bar: f64,
    pub lambda_under: f64,
    pub sigma_bar: f64,
    pub q_bar: f64,
    pub m_lambda: f64,
    pub m: f64,
    pub phi_bar: f64,
}

impl TheoreticalBound {
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        self.phi_bar * (self.m * (x - (1.0 - self.eps) * xi)).exp()
    }
}

/// `1 − max_{p<i} μᵢ/μₚ`, or 1 for a single `v`-state.
pub fn eps_upper_limit(mu: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..mu.len() {
        for p in 0..i {
            worst = worst.max(mu[i] / mu[p]);
        }
    }
    1.0 - worst
}

pub fn default_eps(mu: &[f64]) -> f64 {
    0.5 * eps_upper_limit(mu)
}

fn amax(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.abs()))
}

pub fn theoretical_bound(sys: &HyperbolicSystem, artificial: &ArtificialBoundary, eps: f64) -> Result<TheoreticalBound> {
    sys.ensure_valid()?;
    let upper = eps_upper_limit(&sys.mu);
    if !(eps > 0.0 && eps < upper) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, {upper}), got {eps}")));
    }
    let (n, m) = (sys.n(), sys.m());
    let lam = &sys.lambda;
    let mu = &sys.mu;

    let lambda_bar = lam.last().copied().unwrap_or(0.0).max(mu[0]);
    let lambda_under = lam.first().map_or(0.0, |l| 1.0 / l).max(1.0 / mu[m - 1]);
    let sigma_bar = amax(&sys.sigma_pp).max(amax(&sys.sigma_pm)).max(amax(&sys.sigma_mp)).max(amax(&sys.sigma_mm));
    let q_bar = amax(&sys.q0);

    let mut m_lambda: f64 = 0.0;
    for i in 0..m {
        for l in lam {
            m_lambda = m_lambda.max(1.0 / (mu[i] + (1.0 - eps) * l));
        }
        for p in 0..m {
            let d = if i <= p { mu[i] - (1.0 - eps) * mu[p] } else { (1.0 - eps) * mu[p] - mu[i] };
            m_lambda = m_lambda.max(1.0 / d);
        }
    }
    let m_const = (n as f64 * lambda_bar * lambda_under * q_bar + 1.0) * (n + m) as f64 * sigma_bar * m_lambda;

    // size of the first successive approximation
    let mut phi_bar: f64 = 0.0;
    for i in 0..m {
        for j in 0..n {
            phi_bar = phi_bar.max((sys.sigma_mp[(i, j)] / (mu[i] + lam[j])).abs());
        }
        for j in 0..m {
            if i != j {
                phi_bar = phi_bar.max((sys.sigma_mm[(i, j)] / (mu[i] - mu[j])).abs());
            }
            if i > j {
                phi_bar = phi_bar.max(artificial.sup(i, j));
            } else {
                let edge: f64 = (0..n)
                    .map(|r| lam[r] * sys.q0[(r, j)] * (-sys.sigma_mp[(i, r)] / (mu[i] + lam[r])))
                    .sum::<f64>()
                    / mu[j];
                phi_bar = phi_bar.max(edge.abs());
            }
        }
    }

    Ok(TheoreticalBound { eps, lambda_bar, lambda_under, sigma_bar, q_bar, m_lambda, m: m_const, phi_bar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, DMatrix};
    use proptest::prelude::*;

    fn planning() -> HyperbolicSystem {
        HyperbolicSystem::homodirectional(vec![1.0, 0.2], dmatrix![0.0, 2.0; 5.0, 0.0])
    }

    #[test]
    fn eps_range() {
        assert_abs_diff_eq!(eps_upper_limit(&[1.0, 0.2]), 0.8);
        assert_abs_diff_eq!(default_eps(&[1.0, 0.2]), 0.4);
        assert_eq!(default_eps(&[3.0]), 0.5);
        let sys = planning();
        let art = ArtificialBoundary::constants(&sys.mu, &sys.sigma_mm);
        assert!(theoretical_bound(&sys, &art, 0.8).is_err());
        assert!(theoretical_bound(&sys, &art, 0.0).is_err());
        assert!(theoretical_bound(&sys, &art, 0.4).is_ok());
    }

    #[test]
    fn planning_constants() {
        let sys = planning();
        let art = ArtificialBoundary::constants(&sys.mu, &sys.sigma_mm);
        let b = theoretical_bound(&sys, &art, 0.4).unwrap();
        assert_eq!(b.sigma_bar, 5.0);
        assert_abs_diff_eq!(b.lambda_under, 5.0);
        // M_λ = 1/(μ₂ − 0.6μ₂) = 12.5
        assert_abs_diff_eq!(b.m_lambda, 12.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.m, 2.0 * 5.0 * 12.5, epsilon = 1e-9);
        assert_abs_diff_eq!(b.phi_bar, 6.25, epsilon = 1e-12);
    }

    #[test]
    fn zero_coupling_bound_is_zero() {
        let sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.5]);
        let b = theoretical_bound(&sys, &ArtificialBoundary::zeros(2), 0.25).unwrap();
        assert_eq!(b.phi_bar, 0.0);
        assert_eq!(b.eval(1.0, 0.0), 0.0);
    }

    proptest! {
        #[test]
        fn monotone(x0 in 0.0..1.0f64, t in 0.0..1.0f64, dx in 0.0..0.1f64) {
            let sys = HyperbolicSystem::homodirectional(vec![1.0, 0.5], DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.2, 0.0]));
            let b = theoretical_bound(&sys, &ArtificialBoundary::constants(&sys.mu, &sys.sigma_mm), 0.25).unwrap();
            let xi = t * x0;
            prop_assert!(b.eval(x0 + dx, xi) >= b.eval(x0, xi));
            prop_assert!(b.eval(x0, xi) <= b.eval(x0, (xi - dx).max(0.0)));
        }
    }
}
