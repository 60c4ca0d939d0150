//! Straight characteristic lines of the kernel equations.

use crate::error::{Error, Result};
use crate::grid::TriangularGrid;
use crate::system::HyperbolicSystem;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminus {
    Hypotenuse,
    XiZero,
    XOne,
}

/// `p(s) = origin + s·direction` for `s ∈ [0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicPath {
    pub origin: (f64, f64),
    pub direction: (f64, f64),
    pub length: f64,
    pub endpoint: (f64, f64),
    pub terminus: Terminus,
    /// 1 when the endpoint value comes from hypotenuse or `x = 1` data.
    pub delta: u8,
    /// Orientation of the parametrisation relative to `(μᵢ, μⱼ)`.
    pub eps: i8,
}

impl CharacteristicPath {
    pub fn point_at(&self, s: f64) -> (f64, f64) {
        (self.origin.0 + s * self.direction.0, self.origin.1 + s * self.direction.1)
    }
}

/// Path of `K_ij`: `dx/ds = −μᵢ`, `dξ/ds = λⱼ`, ending on `ξ = x`.
pub fn k_path(mu_i: f64, lambda_j: f64, x: f64, xi: f64) -> CharacteristicPath {
    let len = ((x - xi) / (mu_i + lambda_j)).max(0.0);
    let xf = (lambda_j * x + mu_i * xi) / (mu_i + lambda_j);
    CharacteristicPath {
        origin: (x, xi),
        direction: (-mu_i, lambda_j),
        length: len,
        endpoint: (xf, xf),
        terminus: Terminus::Hypotenuse,
        delta: 1,
        eps: -1,
    }
}

/// Path of `L_ij` for zero-based indices `i`, `j` (ordering decides the case).
pub fn l_path(i: usize, j: usize, mu_i: f64, mu_j: f64, x: f64, xi: f64) -> CharacteristicPath {
    if i == j {
        let len = xi / mu_i;
        return CharacteristicPath {
            origin: (x, xi),
            direction: (-mu_i, -mu_i),
            length: len,
            endpoint: ((x - xi).max(0.0), 0.0),
            terminus: Terminus::XiZero,
            delta: 0,
            eps: -1,
        };
    }
    if i < j {
        // μᵢ > μⱼ: moving backwards the path descends more slowly than it moves left
        let dir = (-mu_i, -mu_j);
        if mu_i * xi - mu_j * x > TIE_TOL {
            let len = ((x - xi) / (mu_i - mu_j)).max(0.0);
            let c = x - mu_i * len;
            CharacteristicPath {
                origin: (x, xi),
                direction: dir,
                length: len,
                endpoint: (c, c),
                terminus: Terminus::Hypotenuse,
                delta: 1,
                eps: -1,
            }
        } else {
            let len = xi / mu_j;
            CharacteristicPath {
                origin: (x, xi),
                direction: dir,
                length: len,
                endpoint: ((x - mu_i * len).max(0.0), 0.0),
                terminus: Terminus::XiZero,
                delta: 0,
                eps: -1,
            }
        }
    } else {
        // μᵢ < μⱼ: moving forwards ξ grows faster than x
        let dir = (mu_i, mu_j);
        let to_hyp = (x - xi) / (mu_j - mu_i);
        let to_edge = (1.0 - x) / mu_i;
        if to_hyp <= to_edge {
            let c = x + mu_i * to_hyp;
            CharacteristicPath {
                origin: (x, xi),
                direction: dir,
                length: to_hyp.max(0.0),
                endpoint: (c, c),
                terminus: Terminus::Hypotenuse,
                delta: 1,
                eps: 1,
            }
        } else {
            CharacteristicPath {
                origin: (x, xi),
                direction: dir,
                length: to_edge.max(0.0),
                endpoint: (1.0, (xi + mu_j * to_edge).min(1.0)),
                terminus: Terminus::XOne,
                delta: 1,
                eps: 1,
            }
        }
    }
}

/// `K_ij` characteristic through `(x, ξ)` with zero-based `i < m`, `j < n`.
pub fn trace_characteristic_k(sys: &HyperbolicSystem, i: usize, j: usize, x: f64, xi: f64) -> Result<CharacteristicPath> {
    TriangularGrid::check_domain(x, xi)?;
    if i >= sys.m() || j >= sys.n() {
        return Err(Error::Dimension(format!("K index ({i}, {j}) outside {}x{}", sys.m(), sys.n())));
    }
    Ok(k_path(sys.mu[i], sys.lambda[j], x, xi.clamp(0.0, x)))
}

/// `L_ij` characteristic through `(x, ξ)` with zero-based `i, j < m`.
pub fn trace_characteristic_l(sys: &HyperbolicSystem, i: usize, j: usize, x: f64, xi: f64) -> Result<CharacteristicPath> {
    TriangularGrid::check_domain(x, xi)?;
    if i >= sys.m() || j >= sys.m() {
        return Err(Error::Dimension(format!("L index ({i}, {j}) outside {0}x{0}", sys.m())));
    }
    Ok(l_path(i, j, sys.mu[i], sys.mu[j], x, xi.clamp(0.0, x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn k_examples() {
        let p = k_path(1.0, 1.0, 0.4, 0.4);
        assert_eq!(p.length, 0.0);
        assert_eq!(p.endpoint, (0.4, 0.4));
        let p = k_path(1.0, 1.0, 1.0, 0.0);
        assert_abs_diff_eq!(p.length, 0.5);
        assert_abs_diff_eq!(p.endpoint.0, 0.5);
        let p = k_path(1.0, 3.0, 0.8, 0.0);
        assert_abs_diff_eq!(p.length, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.endpoint.0, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn l_examples() {
        let p = l_path(0, 0, 0.5, 0.5, 0.8, 0.2);
        assert_abs_diff_eq!(p.length, 0.4);
        assert_abs_diff_eq!(p.endpoint.0, 0.6);
        assert_eq!((p.delta, p.terminus), (0, Terminus::XiZero));

        let p = l_path(0, 1, 1.0, 0.2, 0.5, 0.05);
        assert_eq!((p.delta, p.eps, p.terminus), (0, -1, Terminus::XiZero));
        let p = l_path(0, 1, 1.0, 0.2, 0.5, 0.3);
        assert_eq!((p.delta, p.terminus), (1, Terminus::Hypotenuse));

        for &(x, xi) in &[(0.3, 0.1), (0.9, 0.2), (0.5, 0.45)] {
            assert_eq!(l_path(1, 0, 0.2, 1.0, x, xi).eps, 1);
        }
        assert_eq!(l_path(1, 0, 0.2, 1.0, 0.9, 0.2).terminus, Terminus::XOne);
        assert_eq!(l_path(1, 0, 0.2, 1.0, 0.5, 0.45).terminus, Terminus::Hypotenuse);
    }

    #[test]
    fn tie_takes_edge_branch() {
        let p = l_path(0, 1, 1.0, 0.5, 0.8, 0.4);
        assert_eq!(p.delta, 0);
        assert_abs_diff_eq!(p.endpoint.0, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn domain_and_index_errors() {
        let sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.2]);
        assert!(matches!(trace_characteristic_k(&sys, 0, 0, 0.2, 0.5), Err(Error::Domain { .. })));
        assert!(matches!(trace_characteristic_k(&sys, 0, 1, 0.5, 0.2), Err(Error::Dimension(_))));
        assert!(trace_characteristic_l(&sys, 1, 0, 0.5, 0.2).is_ok());
    }

    proptest! {
        #[test]
        fn endpoints_on_boundary(x in 0.0..1.0f64, t in 0.0..1.0f64, i in 0usize..3, j in 0usize..3) {
            let mu = [1.5, 0.7, 0.25];
            let xi = t * x;
            let p = l_path(i, j, mu[i], mu[j], x, xi);
            let e = p.point_at(p.length);
            prop_assert!((e.0 - p.endpoint.0).abs() < 1e-12 && (e.1 - p.endpoint.1).abs() < 1e-12);
            prop_assert!(TriangularGrid::contains(e.0, e.1));
            let on = match p.terminus {
                Terminus::Hypotenuse => (e.0 - e.1).abs() < 1e-12,
                Terminus::XiZero => e.1.abs() < 1e-12,
                Terminus::XOne => (e.0 - 1.0).abs() < 1e-12,
            };
            prop_assert!(on);
            let k = k_path(mu[i], 0.6, x, xi);
            let e = k.point_at(k.length);
            prop_assert!((e.0 - e.1).abs() < 1e-12);
        }
    }
}
