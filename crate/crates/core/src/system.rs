//! System data for `u_t + Λ⁺u_x = Σ⁺⁺u + Σ⁺⁻v`, `v_t − Λ⁻v_x = Σ⁻⁺u + Σ⁻⁻v`
//! with `u(t,0) = Q₀v(t,0)` and `v(t,1) = R₁u(t,1) + U(t)`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Speeds closer than this are treated as equal.
pub const ISOTACHIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicSystem {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma_pp: DMatrix<f64>,
    pub sigma_pm: DMatrix<f64>,
    pub sigma_mp: DMatrix<f64>,
    pub sigma_mm: DMatrix<f64>,
    pub q0: DMatrix<f64>,
    pub r1: DMatrix<f64>,
}

impl HyperbolicSystem {
    /// System with the given speeds and all couplings and reflections zero.
    pub fn uncoupled(lambda: Vec<f64>, mu: Vec<f64>) -> Self {
        let (n, m) = (lambda.len(), mu.len());
        Self {
            lambda,
            mu,
            sigma_pp: DMatrix::zeros(n, n),
            sigma_pm: DMatrix::zeros(n, m),
            sigma_mp: DMatrix::zeros(m, n),
            sigma_mm: DMatrix::zeros(m, m),
            q0: DMatrix::zeros(n, m),
            r1: DMatrix::zeros(m, n),
        }
    }

    /// Homodirectional system (`n = 0`) with only the `Σ⁻⁻` coupling.
    pub fn homodirectional(mu: Vec<f64>, sigma_mm: DMatrix<f64>) -> Self {
        Self { sigma_mm, ..Self::uncoupled(Vec::new(), mu) }
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Validates and converts a failed report into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.ok {
            Ok(())
        } else {
            Err(Error::InvalidSystem(Box::new(report)))
        }
    }

    pub fn horizons(&self) -> Result<Horizons> {
        horizons(self)
    }

    pub fn max_speed(&self) -> f64 {
        self.lambda.iter().chain(&self.mu).fold(0.0, |a, &b| a.max(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Zero-based indices of `v`-states sharing a speed.
    pub isotachic_groups: Vec<Vec<usize>>,
}

impl ValidationReport {
    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    /// Rule ids in report order, with `isotachic` appended when groups were found.
    pub fn rule_ids(&self) -> Vec<&'static str> {
        let mut ids: Vec<_> = self.violations.iter().map(|v| v.rule).collect();
        if !self.isotachic_groups.is_empty() {
            ids.push("isotachic");
        }
        ids
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        let mut first = true;
        for v in &self.violations {
            if !first {
                write!(f, "; ")?;
            }
            first = false;
            write!(f, "[{}] {}", v.rule, v.message)?;
        }
        for g in &self.isotachic_groups {
            if !first {
                write!(f, "; ")?;
            }
            first = false;
            let ids: Vec<String> = g.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "[isotachic] v-states {{{}}} share a speed", ids.join(","))?;
        }
        Ok(())
    }
}

pub fn validate(sys: &HyperbolicSystem) -> ValidationReport {
    let (n, m) = (sys.n(), sys.m());
    let mut violations = Vec::new();
    let mut push = |rule: &'static str, message: String| violations.push(Violation { rule, message });

    if m == 0 {
        push("m-positive", "at least one leftward state v is required".into());
    }

    let shapes = [
        ("sigma_pp", &sys.sigma_pp, n, n),
        ("sigma_pm", &sys.sigma_pm, n, m),
        ("sigma_mp", &sys.sigma_mp, m, n),
        ("sigma_mm", &sys.sigma_mm, m, m),
        ("q0", &sys.q0, n, m),
        ("r1", &sys.r1, m, n),
    ];
    let mut shapes_ok = true;
    for (name, mat, r, c) in shapes {
        if mat.shape() != (r, c) {
            shapes_ok = false;
            push(
                "dimensions",
                format!("{name} is {}x{}, expected {r}x{c} for n = {n}, m = {m}", mat.nrows(), mat.ncols()),
            );
        } else if mat.iter().any(|x| !x.is_finite()) {
            push("finite", format!("{name} has non-finite entries"));
        }
    }

    if sys.lambda.iter().chain(&sys.mu).any(|x| !x.is_finite()) {
        push("finite", "speeds must be finite".into());
    }
    if sys.lambda.iter().any(|&l| l <= 0.0) {
        push("lambda-positive", "all lambda must be strictly positive".into());
    }
    if sys.lambda.windows(2).any(|w| w[1] < w[0]) {
        push("lambda-ordering", "lambda must be non-decreasing".into());
    }
    if sys.mu.iter().any(|&u| u <= 0.0) {
        push("mu-positive", "all mu must be strictly positive".into());
    }
    if sys.mu.windows(2).any(|w| w[1] > w[0] + ISOTACHIC_TOL) {
        push("mu-ordering", "mu must be strictly decreasing (mu_1 > mu_2 > ... > mu_m)".into());
    }
    if shapes_ok {
        for j in 0..m {
            if sys.sigma_mm[(j, j)] != 0.0 {
                push(
                    "sigma-mm-diagonal",
                    format!(
                        "sigma_mm[{0},{0}] = {1}: the diagonal of sigma_mm must vanish (no internal diagonal coupling)",
                        j + 1,
                        sys.sigma_mm[(j, j)]
                    ),
                );
            }
        }
    }

    let mut isotachic_groups: Vec<Vec<usize>> = Vec::new();
    let mut assigned = vec![false; m];
    for i in 0..m {
        if assigned[i] {
            continue;
        }
        let group: Vec<usize> =
            (i..m).filter(|&j| !assigned[j] && (sys.mu[j] - sys.mu[i]).abs() <= ISOTACHIC_TOL).collect();
        if group.len() > 1 {
            for &j in &group {
                assigned[j] = true;
            }
            isotachic_groups.push(group);
        }
    }

    ValidationReport { ok: violations.is_empty() && isotachic_groups.is_empty(), violations, isotachic_groups }
}

/// Decoupling for a group of isotachic states sharing the speed `mu_i`.
///
/// Returns `(B(x), C(x))` with `B' = (1/μ) B Σ`, `B(0) = I`, and `C = B⁻¹`,
/// both integrated with classical RK4.
pub fn isotachic_decoupling(sigma_iso: &DMatrix<f64>, mu_i: f64, x: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !sigma_iso.is_square() {
        return Err(Error::Dimension(format!(
            "sigma_iso must be square, got {}x{}",
            sigma_iso.nrows(),
            sigma_iso.ncols()
        )));
    }
    if !(mu_i > 0.0) {
        return Err(Error::Parameter(format!("mu_i must be positive, got {mu_i}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Parameter(format!("x must lie in [0, 1], got {x}")));
    }
    let k = sigma_iso.nrows();
    let a = sigma_iso / mu_i;
    let steps = ((x.abs() * a.amax() * 400.0).ceil() as usize).max(256);
    let h = x / steps as f64;

    let rk4 = |y: &DMatrix<f64>, f: &dyn Fn(&DMatrix<f64>) -> DMatrix<f64>| {
        let k1 = f(y);
        let k2 = f(&(y + &k1 * (h / 2.0)));
        let k3 = f(&(y + &k2 * (h / 2.0)));
        let k4 = f(&(y + &k3 * h));
        y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let mut b = DMatrix::identity(k, k);
    let mut c = DMatrix::identity(k, k);
    for _ in 0..steps {
        b = rk4(&b, &|y| y * &a);
        c = rk4(&c, &|y| -(&a * y));
    }
    Ok((b, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizons {
    /// `1/λ₁ + Σ 1/μ_j`; absent for homodirectional systems.
    pub t_f: Option<f64>,
    /// `Σ 1/μ_j`.
    pub t_m: f64,
}

pub fn horizons(sys: &HyperbolicSystem) -> Result<Horizons> {
    sys.ensure_valid()?;
    let t_m: f64 = sys.mu.iter().map(|u| 1.0 / u).sum();
    let t_f = sys.lambda.first().map(|l| 1.0 / l + t_m);
    Ok(Horizons { t_f, t_m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    fn planning_speeds() -> HyperbolicSystem {
        HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.2])
    }

    #[test]
    fn accepts_ordered_speeds() {
        let r = validate(&planning_speeds());
        assert!(r.ok, "{r}");
    }

    #[test]
    fn flags_wrong_mu_order() {
        let r = validate(&HyperbolicSystem::uncoupled(vec![1.0], vec![0.2, 1.0]));
        assert!(!r.ok);
        assert!(r.has_rule("mu-ordering"));
    }

    #[test]
    fn reports_isotachic_group() {
        let r = validate(&HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 1.0]));
        assert!(!r.ok);
        assert!(r.violations.is_empty());
        assert_eq!(r.isotachic_groups, vec![vec![0, 1]]);
        assert!(r.to_string().contains("{1,2}"));
    }

    #[test]
    fn rejects_diagonal_coupling_and_bad_shapes() {
        let mut sys = planning_speeds();
        sys.sigma_mm[(1, 1)] = 0.3;
        assert!(validate(&sys).has_rule("sigma-mm-diagonal"));
        sys.q0 = DMatrix::zeros(2, 2);
        assert!(validate(&sys).has_rule("dimensions"));
        assert!(matches!(sys.ensure_valid(), Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn lambda_ties_are_fine() {
        assert!(validate(&HyperbolicSystem::uncoupled(vec![1.0, 1.0], vec![2.0])).ok);
        assert!(validate(&HyperbolicSystem::uncoupled(vec![2.0, 1.0], vec![2.0])).has_rule("lambda-ordering"));
    }

    #[test]
    fn horizon_examples() {
        let h = horizons(&planning_speeds()).unwrap();
        assert_abs_diff_eq!(h.t_f.unwrap(), 7.0, epsilon = 1e-12);
        let h = horizons(&HyperbolicSystem::homodirectional(vec![1.0, 0.2], DMatrix::zeros(2, 2))).unwrap();
        assert!(h.t_f.is_none());
        assert_abs_diff_eq!(h.t_m, 6.0, epsilon = 1e-12);
        let h = horizons(&HyperbolicSystem::uncoupled(vec![2.0], vec![4.0])).unwrap();
        assert_abs_diff_eq!(h.t_f.unwrap(), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn decoupling_zero_and_scalar() {
        let (b, c) = isotachic_decoupling(&DMatrix::zeros(2, 2), 1.5, 0.7).unwrap();
        assert_abs_diff_eq!(b, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_abs_diff_eq!(c, DMatrix::identity(2, 2), epsilon = 1e-14);
        let (b, c) = isotachic_decoupling(&dmatrix![0.8], 1.0, 0.6).unwrap();
        assert_abs_diff_eq!(b[(0, 0)], (0.48f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(c[(0, 0)], (-0.48f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn decoupling_nilpotent() {
        let (b, _) = isotachic_decoupling(&dmatrix![0.0, 1.0; 0.0, 0.0], 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(b, dmatrix![1.0, 0.5; 0.0, 1.0], epsilon = 1e-13);
        assert!(matches!(isotachic_decoupling(&DMatrix::zeros(2, 3), 1.0, 0.5), Err(Error::Dimension(_))));
    }

    fn square(k: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-2.0..2.0f64, k * k).prop_map(move |v| DMatrix::from_row_slice(k, k, &v))
    }

    proptest! {
        #[test]
        fn decoupling_inverse(s in prop_oneof![square(2), square(3)], mu in 0.2..3.0f64, xi in 0usize..5) {
            let x = xi as f64 * 0.25;
            let (b, c) = isotachic_decoupling(&s, mu, x).unwrap();
            let k = s.nrows();
            let scale = b.amax() * c.amax();
            prop_assert!((b * c - DMatrix::identity(k, k)).amax() <= 1e-10 * scale);
        }

        #[test]
        fn validate_is_idempotent(mu1 in 0.1..3.0f64, mu2 in 0.1..3.0f64, s in -1.0..1.0f64) {
            let mut sys = HyperbolicSystem::uncoupled(vec![1.0], vec![mu1, mu2]);
            sys.sigma_mm[(0, 1)] = s;
            prop_assert_eq!(validate(&sys), validate(&sys));
        }

        #[test]
        fn t_f_monotone(l in 0.2..3.0f64, m1 in 1.0..3.0f64, m2 in 0.1..0.9f64, bump in 0.01..1.0f64) {
            let base = horizons(&HyperbolicSystem::uncoupled(vec![l], vec![m1, m2])).unwrap().t_f.unwrap();
            let slower = horizons(&HyperbolicSystem::uncoupled(vec![l / (1.0 + bump)], vec![m1, m2])).unwrap().t_f.unwrap();
            prop_assert!(slower > base);
        }
    }
}
