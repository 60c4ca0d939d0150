//! The acceptance suite: nine numerical checks run against two reference
//! systems, sharing kernel solves through a [`Workbench`].

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::time::Instant;

use nalgebra::{dmatrix, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{KernelMatrix, TriangularGrid};
use crate::kernels::closed_form::{closed_form_2x2_variant, pde_residuals};
use crate::kernels::controller::{compute_g, controller_problem, solve_c_kernels};
use crate::kernels::transform::{forward, inverse};
use crate::kernels::{
    closed_form_artificial, default_eps, picard, solve_observer_kernels, theoretical_bound, ArtificialBoundary,
    ControllerKernels, L12Prefactor, ObserverKernels, PicardOptions, PicardReport,
};
use crate::planner::{run_tracking, ReferenceTrajectory, Signal};
use crate::sim::{
    integrate, linf_norm, run_closed_loop, run_observer, run_open_loop, FeedbackLaw, FieldState, Grid1D,
    ObserverMode, RunConfig, Scheme, TargetSystem,
};
use crate::system::HyperbolicSystem;

/// `n = 1, m = 2` heterodirectional system whose open loop grows.
pub fn heterodirectional_test_system() -> HyperbolicSystem {
    let mut sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.2]);
    sys.sigma_pm = dmatrix![1.0, 0.5];
    sys.sigma_mp = dmatrix![1.0; 0.75];
    sys.sigma_mm = dmatrix![0.0, 0.5; -0.5, 0.0];
    sys.q0 = dmatrix![0.5, 0.5];
    sys.r1 = dmatrix![1.0; 0.5];
    sys
}

/// Two homodirectional states with `μ = (1, 0.2)`, `σ₁₂ = 2`, `σ₂₁ = 5`.
pub fn planning_system() -> HyperbolicSystem {
    HyperbolicSystem::homodirectional(vec![1.0, 0.2], dmatrix![0.0, 2.0; 5.0, 0.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestSystem {
    Heterodirectional,
    Planning,
}

impl TestSystem {
    pub const ALL: [TestSystem; 2] = [TestSystem::Heterodirectional, TestSystem::Planning];

    pub fn system(self) -> HyperbolicSystem {
        match self {
            TestSystem::Heterodirectional => heterodirectional_test_system(),
            TestSystem::Planning => planning_system(),
        }
    }

    /// Constant artificial data for the heterodirectional system, the closed-form
    /// trace for the planning system so it can be compared with the Bessel kernels.
    pub fn artificial(self) -> ArtificialBoundary {
        let sys = self.system();
        match self {
            TestSystem::Heterodirectional => ArtificialBoundary::constants(&sys.mu, &sys.sigma_mm),
            TestSystem::Planning => closed_form_artificial(&sys).expect("planning system has closed forms"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TestSystem::Heterodirectional => "hetero(n=1,m=2)",
            TestSystem::Planning => "planning(n=0,m=2)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySettings {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub nx_coarse: usize,
    pub nx_fine: usize,
    pub picard: PicardOptions,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { n_coarse: 200, n_fine: 400, nx_coarse: 200, nx_fine: 400, picard: PicardOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl CriterionOutcome {
    /// `criterion=<id> name=<name> measured=<v> threshold=<v> pass=<bool>`.
    pub fn machine_line(&self) -> String {
        format!(
            "criterion={} name={} measured={:.4e} threshold={:.4e} pass={}",
            self.id, self.name, self.measured, self.threshold, self.pass
        )
    }

    fn failed(id: u8, err: &Error) -> Self {
        Self { id, name: name_of(id), measured: f64::NAN, threshold: f64::NAN, pass: false, detail: format!("error: {err}") }
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {}: measured {:.3e}, threshold {:.3e}; {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "bessel-oracle"),
    (2, "boundary-residuals"),
    (3, "theoretical-bound"),
    (4, "finite-time-stabilization"),
    (5, "observer-and-output-feedback"),
    (6, "motion-planning-tracking"),
    (7, "transform-round-trip"),
    (8, "target-cascade"),
    (9, "picard-convergence"),
];

fn name_of(id: u8) -> &'static str {
    CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1)
}

/// Looks a criterion up by number or name.
pub fn parse_criterion(s: &str) -> Option<u8> {
    let s = s.trim();
    if let Ok(id) = s.parse::<u8>() {
        return CRITERIA.iter().any(|c| c.0 == id).then_some(id);
    }
    CRITERIA.iter().find(|c| c.1 == s).map(|c| c.0)
}

struct PicardFields {
    k: KernelMatrix,
    l: KernelMatrix,
    report: PicardReport,
    seconds: f64,
}

type Key = (TestSystem, usize);

/// Kernel solves shared between criteria.
pub struct Workbench {
    pub settings: VerifySettings,
    picard: RefCell<HashMap<Key, Rc<PicardFields>>>,
    controller: RefCell<HashMap<Key, Rc<ControllerKernels>>>,
    observer: RefCell<HashMap<Key, Rc<ObserverKernels>>>,
}

impl Workbench {
    pub fn new(settings: VerifySettings) -> Self {
        Self {
            settings,
            picard: RefCell::default(),
            controller: RefCell::default(),
            observer: RefCell::default(),
        }
    }

    fn picard(&self, ts: TestSystem, n: usize) -> Result<Rc<PicardFields>> {
        if let Some(p) = self.picard.borrow().get(&(ts, n)) {
            return Ok(p.clone());
        }
        let start = Instant::now();
        let problem = controller_problem(&ts.system(), ts.artificial())?;
        let (k, l, report) = picard::solve(&problem, TriangularGrid::new(n)?, self.settings.picard)?;
        let p = Rc::new(PicardFields { k, l, report, seconds: start.elapsed().as_secs_f64() });
        self.picard.borrow_mut().insert((ts, n), p.clone());
        Ok(p)
    }

    pub fn controller(&self, ts: TestSystem, n: usize) -> Result<Rc<ControllerKernels>> {
        if let Some(c) = self.controller.borrow().get(&(ts, n)) {
            return Ok(c.clone());
        }
        let p = self.picard(ts, n)?;
        let sys = ts.system();
        let g = compute_g(&p.k, &p.l, &sys)?;
        let (c_minus, c_plus) = solve_c_kernels(&p.k, &p.l)?;
        let c = Rc::new(ControllerKernels {
            grid: TriangularGrid::new(n)?,
            k: p.k.clone(),
            l: p.l.clone(),
            g,
            c_plus,
            c_minus,
            artificial: ts.artificial(),
            report: p.report.clone(),
        });
        self.controller.borrow_mut().insert((ts, n), c.clone());
        Ok(c)
    }

    pub fn observer(&self, ts: TestSystem, n: usize) -> Result<Rc<ObserverKernels>> {
        if let Some(o) = self.observer.borrow().get(&(ts, n)) {
            return Ok(o.clone());
        }
        let o = Rc::new(solve_observer_kernels(&ts.system(), TriangularGrid::new(n)?, self.settings.picard)?);
        self.observer.borrow_mut().insert((ts, n), o.clone());
        Ok(o)
    }

    pub fn run(&self, id: u8) -> CriterionOutcome {
        let res = match id {
            1 => self.bessel_oracle(),
            2 => self.boundary_residuals(),
            3 => self.theoretical_bound(),
            4 => self.stabilization(),
            5 => self.observer_decay(),
            6 => self.tracking(),
            7 => self.round_trip(),
            8 => self.target_cascade(),
            9 => self.picard_convergence(),
            _ => Err(Error::Parameter(format!("no criterion {id}"))),
        };
        res.unwrap_or_else(|e| CriterionOutcome::failed(id, &e))
    }

    fn outcome(id: u8, measured: f64, threshold: f64, pass: bool, detail: String) -> Result<CriterionOutcome> {
        Ok(CriterionOutcome { id, name: name_of(id), measured, threshold, pass, detail })
    }

    fn bessel_oracle(&self) -> Result<CriterionOutcome> {
        let (mu1, mu2, s12, s21) = (1.0, 0.2, 2.0, 5.0);
        // pick the L12 prefactor by substituting both into the kernel equations
        let probe = [(0.8, 0.5), (0.9, 0.3), (0.95, 0.7), (0.6, 0.4)];
        let residual = |v| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for &(x, xi) in &probe {
                let r = pde_residuals(mu1, mu2, s12, s21, x, xi, 1e-5, v)?;
                worst = r.iter().fold(worst, |a, b| a.max(b.abs()));
            }
            Ok(worst)
        };
        let (printed, swapped) = (residual(L12Prefactor::AsPrinted)?, residual(L12Prefactor::Swapped)?);
        let variant = if swapped < printed { L12Prefactor::Swapped } else { L12Prefactor::AsPrinted };

        let mut pass = true;
        let mut detail = format!("variant: {} (pde residual {swapped:.1e} vs {printed:.1e} printed)", variant.label());
        let mut headline = 0.0;
        for (n, thr) in [(self.settings.n_coarse, 2e-2), (self.settings.n_fine, 1e-2)] {
            let p = self.picard(TestSystem::Planning, n)?;
            let h = 1.0 / n as f64;
            let mut err = [0.0f64; 4];
            for (a, b) in TriangularGrid::new(n)?.nodes() {
                let (x, xi) = (a as f64 * h, b as f64 * h);
                if (xi - mu2 / mu1 * x).abs() <= 2.0 * h {
                    continue;
                }
                let cf = closed_form_2x2_variant(mu1, mu2, s12, s21, x, xi, variant)?;
                for (f, e) in err.iter_mut().enumerate() {
                    let (i, j) = (f / 2, f % 2);
                    *e = e.max((p.l.get(i, j).at(a, b) - cf.get(i, j)).abs());
                }
            }
            let worst = err.iter().fold(0.0f64, |a, &b| a.max(b));
            pass &= worst <= thr && p.seconds <= 60.0;
            headline = worst;
            detail += &format!(
                "; N={n}: L11 {:.2e} L12 {:.2e} L21 {:.2e} L22 {:.2e} (tol {thr:.0e}), solve {:.1}s",
                err[0], err[1], err[2], err[3], p.seconds
            );
        }
        Self::outcome(1, headline, 1e-2, pass, detail)
    }

    fn boundary_residuals(&self) -> Result<CriterionOutcome> {
        let (nc, nf) = (self.settings.n_coarse, self.settings.n_fine);
        // boundary data are imposed exactly at the nodes, so residuals can sit at
        // the iteration floor where no further halving is observable
        let floor = 10.0 * self.settings.picard.tol;
        let mut pass = true;
        let mut detail = Vec::new();
        let mut headline: f64 = 0.0;
        for ts in TestSystem::ALL {
            let sys = ts.system();
            let art = ts.artificial();
            let mut r = [[0.0; 2]; 2];
            for (q, n) in [nc, nf].into_iter().enumerate() {
                let p = self.picard(ts, n)?;
                r[0][q] = controller_residual(&sys, &art, &p.k, &p.l, n)?;
                let o = self.observer(ts, n)?;
                r[1][q] = observer_residual(&sys, &o, n)?;
            }
            for (which, rr) in ["K/L", "M/N"].iter().zip(r) {
                let ok = rr[0] <= 1e-2 && (rr[1] <= floor || (rr[1] <= 0.625 * rr[0]));
                pass &= ok;
                headline = headline.max(rr[0]);
                detail.push(format!("{} {which}: N={nc} {:.2e}, N={nf} {:.2e}", ts.label(), rr[0], rr[1]));
            }
        }
        Self::outcome(2, headline, 1e-2, pass, detail.join("; "))
    }

    fn theoretical_bound(&self) -> Result<CriterionOutcome> {
        let n = self.settings.n_coarse;
        let mut cases: Vec<(String, HyperbolicSystem, ArtificialBoundary, Rc<PicardFields>)> = Vec::new();
        for ts in TestSystem::ALL {
            cases.push((ts.label().to_string(), ts.system(), ts.artificial(), self.picard(ts, n)?));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
        for draw in 0..3 {
            let sys = random_system(&mut rng);
            let art = ArtificialBoundary::constants(&sys.mu, &sys.sigma_mm);
            let problem = controller_problem(&sys, art.clone())?;
            let (k, l, report) = picard::solve(&problem, TriangularGrid::new(n)?, self.settings.picard)?;
            cases.push((format!("draw{}", draw + 1), sys, art, Rc::new(PicardFields { k, l, report, seconds: 0.0 })));
        }
        let mut worst: f64 = 0.0;
        let mut detail = Vec::new();
        for (label, sys, art, p) in &cases {
            let bound = theoretical_bound(sys, art, default_eps(&sys.mu))?;
            let h = 1.0 / n as f64;
            let (mut ratio, mut inner): (f64, f64) = (0.0, 0.0);
            for (a, b) in TriangularGrid::new(n)?.nodes() {
                let cap = bound.eval(a as f64 * h, b as f64 * h);
                for f in p.k.fields.iter().chain(&p.l.fields) {
                    let r = f.at(a, b).abs() / cap;
                    ratio = ratio.max(r);
                    if a > 0 {
                        inner = inner.max(r);
                    }
                }
            }
            worst = worst.max(ratio);
            // at the origin the bound reduces to the largest boundary datum
            detail.push(format!("{label} max|kernel|/bound {ratio:.6} ({inner:.3} away from the origin)"));
        }
        Self::outcome(3, worst, 1.0, worst <= 1.0, detail.join("; "))
    }

    fn stabilization(&self) -> Result<CriterionOutcome> {
        let start = Instant::now();
        let ts = TestSystem::Heterodirectional;
        let sys = ts.system();
        let kern = self.controller(ts, self.settings.n_coarse)?;
        let t_end = 1.1 * sys.horizons()?.t_f.expect("heterodirectional");
        let mut ratios = Vec::new();
        let mut growth = 0.0;
        for nx in [self.settings.nx_coarse, self.settings.nx_fine] {
            let initial = compatible_state(&sys, &kern, nx)?;
            if nx == self.settings.nx_fine {
                let open = run_open_loop(&sys, initial.clone(), RunConfig::new(t_end))?;
                growth = open.last("norm_L2") / open.rows[0][0];
            }
            let run = run_closed_loop(&sys, &kern, initial, RunConfig::new(t_end))?;
            ratios.push(run.last("norm_L2") / run.max_over("norm_L2", 0.0, t_end));
        }
        let seconds = start.elapsed().as_secs_f64();
        let improvement = ratios[0] / ratios[1];
        let pass = growth > 1.0 && ratios[1] <= 0.05 && improvement >= 1.5 && seconds <= 120.0;
        let detail = format!(
            "open-loop growth {growth:.1}x; residual ratio Nx={} {:.3e}, Nx={} {:.3e}, improvement {improvement:.2}x (>= 1.5); {seconds:.1}s",
            self.settings.nx_coarse, ratios[0], self.settings.nx_fine, ratios[1]
        );
        Self::outcome(4, ratios[1], 0.05, pass, detail)
    }

    fn observer_decay(&self) -> Result<CriterionOutcome> {
        let ts = TestSystem::Heterodirectional;
        let sys = ts.system();
        let (n, nx) = (self.settings.n_coarse, self.settings.nx_fine);
        let ctrl = self.controller(ts, n)?;
        let obs = self.observer(ts, n)?;
        let t_f = sys.horizons()?.t_f.expect("heterodirectional");
        let truth = compatible_state(&sys, &ctrl, nx)?;
        let estimate = FieldState::zeros(sys.n(), sys.m(), Grid1D::new(nx)?);

        let run = run_observer(&sys, &obs, &ctrl, &truth, &estimate, ObserverMode::StateFeedbackPlant, RunConfig::new(1.1 * t_f))?;
        let est = run.last("err_L2") / run.rows[0][run.columns.iter().position(|c| c == "err_L2").unwrap()];

        let t_end = 2.2 * t_f;
        let run = run_observer(&sys, &obs, &ctrl, &truth, &estimate, ObserverMode::OutputFeedback, RunConfig::new(t_end))?;
        let plant = run.last("norm_L2") / run.max_over("norm_L2", 0.0, t_end);
        let hat = run.last("norm_L2_hat") / run.max_over("norm_L2_hat", 0.0, t_end);
        let worst = est.max(plant).max(hat);
        let detail = format!(
            "estimation error at 1.1 t_F {est:.3e} of initial; output feedback at 2.2 t_F: plant {plant:.3e}, observer {hat:.3e} of running max (Nx={nx})"
        );
        Self::outcome(5, worst, 0.05, worst <= 0.05, detail)
    }

    fn tracking(&self) -> Result<CriterionOutcome> {
        let ts = TestSystem::Planning;
        let sys = ts.system();
        let kern = self.controller(ts, self.settings.n_coarse)?;
        let nx = self.settings.nx_fine;
        let t_m = sys.horizons()?.t_m;
        let phi = reference_signal();
        let (from, to) = (1.1 * t_m, 2.0 * t_m);
        let staged = 1.1 / sys.mu[0];
        let rms = |scheme| -> Result<[f64; 3]> {
            let initial = FieldState::zeros(0, 2, Grid1D::new(nx)?);
            let run = run_tracking(&sys, &kern, &phi, initial, RunConfig::new(to).with_scheme(scheme))?;
            Ok([run.rms_over("track_err1", from, to), run.rms_over("track_err2", from, to), run.rms_over("track_err1", staged, to)])
        };
        let upwind = rms(Scheme::Upwind)?;
        let chr = rms(Scheme::Characteristic)?;
        let worst = chr.iter().fold(0.0f64, |a, &b| a.max(b));
        let detail = format!(
            "characteristic scheme Nx={nx}: RMS over [{from:.1}, {to:.1}] {:.2e} / {:.2e}, component 1 from t={staged:.2}: {:.2e}; first-order upwind gives {:.2e} / {:.2e} / {:.2e}",
            chr[0], chr[1], chr[2], upwind[0], upwind[1], upwind[2]
        );
        Self::outcome(6, worst, 0.02, worst <= 0.02, detail)
    }

    fn round_trip(&self) -> Result<CriterionOutcome> {
        let (nc, nf) = (self.settings.n_coarse, self.settings.n_fine);
        let mut worst_c: f64 = 0.0;
        let mut pass = true;
        let mut detail = Vec::new();
        for ts in TestSystem::ALL {
            let sys = ts.system();
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
            let profiles: Vec<Vec<Modes>> = (0..5).map(|_| (0..sys.n() + sys.m()).map(|_| random_modes(&mut rng)).collect()).collect();
            let mut errs = Vec::new();
            for n in [nc, nf] {
                let kern = self.controller(ts, n)?;
                let grid = Grid1D::new(n)?;
                let mut err: f64 = 0.0;
                for w in &profiles {
                    let sampled: Vec<Vec<f64>> = w.iter().map(|m| grid.sample(|x| eval_modes(m, x))).collect();
                    let (u, v) = sampled.split_at(sys.n());
                    let (a, b) = forward(&kern, u, v)?;
                    let (u2, v2) = inverse(&kern, &a, &b)?;
                    for (p, q) in sampled.iter().zip(u2.iter().chain(&v2)) {
                        err = p.iter().zip(q).fold(err, |e, (x, y)| e.max((x - y).abs()));
                    }
                }
                let c = err * (n * n) as f64;
                worst_c = worst_c.max(c);
                errs.push(err);
                detail.push(format!("{} N={n}: err {err:.2e} = {c:.1}·Δ²", ts.label()));
            }
            let rate = errs[0] / errs[1];
            pass &= rate >= 3.0;
            detail.push(format!("{} refinement factor {rate:.2} (>= 3)", ts.label()));
        }
        pass &= worst_c <= ROUND_TRIP_C;
        Self::outcome(7, worst_c, ROUND_TRIP_C, pass, detail.join("; "))
    }

    fn target_cascade(&self) -> Result<CriterionOutcome> {
        let ts = TestSystem::Heterodirectional;
        let sys = ts.system();
        let kern = self.controller(ts, self.settings.n_coarse)?;
        let h = sys.horizons()?;
        let t_end = 1.1 * h.t_f.expect("heterodirectional");
        let (t1, t_all) = (1.0 / sys.mu[0], sys.mu.iter().map(|m| 1.0 / m).sum::<f64>());
        let every = 0.25;
        let mut rows = Vec::new();
        for nx in [self.settings.nx_coarse, self.settings.nx_fine] {
            let plant0 = compatible_state(&sys, &kern, nx)?;
            let (alpha, beta) = forward(&kern, &plant0.u, &plant0.v)?;
            let target0 = FieldState { t: 0.0, u: alpha, v: beta };
            let scale = linf_norm(&target0.v).max(linf_norm(&target0.u));
            let target = TargetSystem::new(&sys, &kern, nx, None)?;
            let cfg = RunConfig { snapshot_every: Some(every), ..RunConfig::new(t_end) };
            let run = integrate(&target, target0, cfg, &["beta1_linf", "beta_linf"], |s| {
                vec![linf_norm(&s.v[..1]), linf_norm(&s.v)]
            })?;
            let b1 = run.max_over("beta1_linf", 1.1 * t1, t_end) / scale;
            let ball = run.max_over("beta_linf", 1.1 * t_all, t_end) / scale;
            let plant = run_closed_loop(&sys, &kern, plant0, cfg)?;
            let mut mismatch: f64 = 0.0;
            for (p, q) in plant.snapshots.iter().zip(&run.snapshots) {
                let (a, b) = forward(&kern, &p.u, &p.v)?;
                let d: Vec<Vec<f64>> = a
                    .iter()
                    .chain(&b)
                    .zip(q.u.iter().chain(&q.v))
                    .map(|(x, y)| x.iter().zip(y).map(|(s, t)| s - t).collect())
                    .collect();
                mismatch = mismatch.max(linf_norm(&d) / scale);
            }
            rows.push((nx, [b1, ball, mismatch]));
        }
        let (c, f) = (rows[0].1, rows[1].1);
        let mut pass = true;
        let mut worst: f64 = 0.0;
        for q in 0..3 {
            pass &= f[q] <= TARGET_C * 1.0 / rows[1].0 as f64 && c[q] / f[q] >= 1.5;
            worst = worst.max(f[q] * rows[1].0 as f64);
        }
        let detail = format!(
            "relative sup: beta1 for t >= {:.2}: {:.2e} -> {:.2e}; beta for t >= {:.2}: {:.2e} -> {:.2e}; transformed plant vs target: {:.2e} -> {:.2e} (Nx {} -> {}, each must shrink >= 1.5x)",
            1.1 * t1, c[0], f[0], 1.1 * t_all, c[1], f[1], c[2], f[2], rows[0].0, rows[1].0
        );
        Self::outcome(8, worst, TARGET_C, pass, detail)
    }

    fn picard_convergence(&self) -> Result<CriterionOutcome> {
        let n = self.settings.n_coarse;
        let mut worst = 0usize;
        let mut pass = true;
        let mut detail = Vec::new();
        for ts in TestSystem::ALL {
            let reports = [("controller", self.picard(ts, n)?.report.clone()), ("observer", self.observer(ts, n)?.report.clone())];
            for (which, r) in reports {
                let accel = accelerating(&r.increments);
                worst = worst.max(r.iterations);
                pass &= r.converged && r.iterations <= 60 && accel.0;
                detail.push(format!(
                    "{} {which}: {} iterations, final increment {:.1e}, contraction {:.2} -> {:.2}",
                    ts.label(),
                    r.iterations,
                    r.residual,
                    accel.1,
                    accel.2
                ));
            }
        }
        Self::outcome(9, worst as f64, 60.0, pass, detail.join("; "))
    }
}

/// Fixed constant of the round-trip bound `‖w − T⁻¹Tw‖∞ ≤ C·Δ²`, calibrated
/// once at `N = 200` (worst case ≈ 1240 on the steep planning kernels).
pub const ROUND_TRIP_C: f64 = 1500.0;

/// Fixed constant of the `C·Δx` bounds of the target-system checks.
pub const TARGET_C: f64 = 20.0;

/// Runs the selected criteria, or all when `only` is empty.
pub fn run_suite(settings: VerifySettings, only: &[u8]) -> Vec<CriterionOutcome> {
    let wb = Workbench::new(settings);
    CRITERIA.iter().map(|c| c.0).filter(|id| only.is_empty() || only.contains(id)).map(|id| wb.run(id)).collect()
}

/// Reference of the tracking experiment: `Φ = (sin 2πt, cos 2πt)`.
pub fn reference_signal() -> ReferenceTrajectory {
    ReferenceTrajectory::new(vec![
        Signal::sin(1.0, 1.0, 0.0),
        Signal::sin(1.0, 1.0, std::f64::consts::FRAC_PI_2),
    ])
}

/// `u = sin πx`, `v₁ = sin πx`, `v₂ = ½ sin 2πx`, corrected to satisfy the
/// closed-loop boundary conditions.
pub fn compatible_state(sys: &HyperbolicSystem, kernels: &ControllerKernels, nx: usize) -> Result<FieldState> {
    use std::f64::consts::PI;
    let grid = Grid1D::new(nx)?;
    let wave = |k: f64, a: f64| move |x: f64| a * (k * PI * x).sin();
    let u: Vec<Vec<f64>> = (0..sys.n()).map(|_| grid.sample(wave(1.0, 1.0))).collect();
    let v: Vec<Vec<f64>> = (0..sys.m()).map(|j| grid.sample(wave(1.0 + j as f64, 1.0 / (1.0 + j as f64)))).collect();
    let base = FieldState { t: 0.0, u, v };
    FeedbackLaw::new(kernels, sys, grid)?.make_compatible(sys, &base)
}

/// Boundary-condition residuals of controller kernels at nodes and midpoints.
/// The flagged lines meet the boundary at a corner, where the conditions
/// disagree, so points within `2Δ` of the corners are skipped.
pub fn controller_residual(
    sys: &HyperbolicSystem,
    art: &ArtificialBoundary,
    k: &KernelMatrix,
    l: &KernelMatrix,
    n: usize,
) -> Result<f64> {
    let (nn, m) = (sys.n(), sys.m());
    let mut worst: f64 = 0.0;
    for s in 0..=2 * n {
        let x = s as f64 / (2 * n) as f64;
        if x < 2.0 / n as f64 {
            continue;
        }
        for i in 0..m {
            for j in 0..nn {
                let want = -sys.sigma_mp[(i, j)] / (sys.mu[i] + sys.lambda[j]);
                worst = worst.max((k.get(i, j).eval(x, x)? - want).abs());
            }
            for j in 0..m {
                if i != j {
                    let want = -sys.sigma_mm[(i, j)] / (sys.mu[i] - sys.mu[j]);
                    worst = worst.max((l.get(i, j).eval(x, x)? - want).abs());
                }
                if i <= j {
                    let edge: f64 =
                        (0..nn).map(|p| k.get(i, p).eval(x, 0.0).unwrap_or(f64::NAN) * sys.lambda[p] * sys.q0[(p, j)] / sys.mu[j]).sum();
                    worst = worst.max((l.get(i, j).eval(x, 0.0)? - edge).abs());
                } else {
                    worst = worst.max((l.get(i, j).eval(1.0, x)? - art.value(i, j, x)).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// The same for the observer kernels `M`, `N`; their lines meet at `(1, 1)`.
pub fn observer_residual(sys: &HyperbolicSystem, o: &ObserverKernels, n: usize) -> Result<f64> {
    let (nn, m) = (sys.n(), sys.m());
    let mut worst: f64 = 0.0;
    for s in 0..=2 * n {
        let x = s as f64 / (2 * n) as f64;
        if x < 2.0 / n as f64 || x > 1.0 - 2.0 / n as f64 {
            continue;
        }
        for i in 0..nn {
            for j in 0..m {
                let want = sys.sigma_pm[(i, j)] / (sys.lambda[i] + sys.mu[j]);
                worst = worst.max((o.m.get(i, j).eval(x, x)? - want).abs());
            }
        }
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let want = sys.sigma_mm[(i, j)] / (sys.mu[j] - sys.mu[i]);
                    worst = worst.max((o.n.get(i, j).eval(x, x)? - want).abs());
                }
                if j <= i {
                    let refl: f64 = (0..nn).map(|p| sys.r1[(i, p)] * o.m.get(p, j).eval(1.0, x).unwrap_or(f64::NAN)).sum();
                    worst = worst.max((o.n.get(i, j).eval(1.0, x)? - refl).abs());
                } else {
                    worst = worst.max(o.n.get(i, j).eval(x, 0.0)?.abs());
                }
            }
        }
    }
    Ok(worst)
}

fn random_system(rng: &mut ChaCha8Rng) -> HyperbolicSystem {
    let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..=1.0));
    let mut sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.2]);
    sys.sigma_pp = draw(1, 1);
    sys.sigma_pm = draw(1, 2);
    sys.sigma_mp = draw(2, 1);
    sys.sigma_mm = draw(2, 2);
    sys.q0 = draw(1, 2);
    sys.r1 = draw(2, 1);
    for i in 0..2 {
        sys.sigma_mm[(i, i)] = 0.0;
    }
    sys
}

/// Amplitude, wave number and phase of three sine modes.
type Modes = Vec<(f64, f64, f64)>;

fn random_modes(rng: &mut ChaCha8Rng) -> Modes {
    (1..=3)
        .map(|k| (rng.random_range(-1.0..=1.0), k as f64 * std::f64::consts::PI, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

fn eval_modes(modes: &Modes, x: f64) -> f64 {
    modes.iter().map(|(a, w, p)| a * (w * x + p).sin()).sum()
}

/// Whether the contraction factor `‖ΔH^{q+1}‖/‖ΔH^q‖` shrinks along the run:
/// `(ok, mean factor over the first half, mean factor over the second half)`.
fn accelerating(inc: &[f64]) -> (bool, f64, f64) {
    let logs: Vec<f64> = inc.windows(2).filter(|w| w[0] > 0.0 && w[1] > 0.0).map(|w| (w[1] / w[0]).ln()).collect();
    if logs.len() < 4 {
        return (true, 0.0, 0.0);
    }
    let half = logs.len() / 2;
    let mean = |s: &[f64]| (s.iter().sum::<f64>() / s.len() as f64).exp();
    let (a, b) = (mean(&logs[..half]), mean(&logs[half..]));
    (b < a, a, b)
}
