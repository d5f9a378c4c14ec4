//! Time integration: projection of initial data, a backward-Euler start and BDF2 steps,
//! each solved by Newton's method.

use std::sync::Arc;

use crate::basis::DofMap;
use crate::error::{config, Error, Result};
use crate::linalg::{gmres, lu_solve, norm2, norm_inf, DenseMatrix};
use crate::operators::OperatorSet;
use crate::quadrature::gauss_rule;

/// Systems up to this size are solved with a dense LU factorization.
pub const DENSE_SOLVE_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    #[default]
    Bdf2,
    BackwardEuler,
}

impl std::str::FromStr for TimeScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bdf2" => Ok(Self::Bdf2),
            "backward_euler" | "be" => Ok(Self::BackwardEuler),
            _ => config(format!("unknown time scheme `{s}` (bdf2|backward_euler)")),
        }
    }
}

impl std::fmt::Display for TimeScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Bdf2 => "bdf2",
            Self::BackwardEuler => "backward_euler",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub tau: f64,
    pub t_final: f64,
    /// Tolerance on `‖F‖₂ / √n`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub max_halvings: usize,
    pub scheme: TimeScheme,
    pub gmres_restart: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            t_final: 1.0,
            newton_tol: 1e-11,
            max_newton_iters: 25,
            max_halvings: 5,
            scheme: TimeScheme::Bdf2,
            gmres_restart: 40,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return config(format!("time step must be positive, got {}", self.tau));
        }
        if !(self.t_final >= self.tau) {
            return config(format!("final time {} is shorter than one step {}", self.t_final, self.tau));
        }
        if !(self.newton_tol > 0.0) || self.max_newton_iters == 0 {
            return config("Newton tolerance and iteration limit must be positive");
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`, warning when it is not a multiple of `tau`.
    pub fn num_steps(&self) -> usize {
        let exact = self.t_final / self.tau;
        let n = exact.round();
        if (exact - n).abs() > 1e-9 * exact.max(1.0) {
            log::warn!("T = {} is not a multiple of tau = {}; stopping at the nearest step", self.t_final, self.tau);
        }
        (n as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonStats {
    pub iterations: usize,
    /// Scaled residual norms, starting with the initial guess.
    pub history: Vec<f64>,
    pub linear_iterations: usize,
}

/// Separable factor or point-set function used for initial data.
pub type AxisFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Load vector `∫ f(·, t) φ_j` of a manufactured source term.
pub type ForcingFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum InitialDatum {
    Smooth(PointFn),
    /// `Π_a f_a(x_a)`
    Separable(Vec<AxisFn>),
    /// `weight · δ(x − location)`
    DiracProduct { location: Vec<f64>, weight: f64 },
}

impl std::fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Smooth(_) => f.write_str("Smooth(..)"),
            Self::Separable(v) => write!(f, "Separable({} factors)", v.len()),
            Self::DiracProduct { location, weight } => {
                write!(f, "DiracProduct {{ location: {location:?}, weight: {weight} }}")
            }
        }
    }
}

/// Right-hand side `b_j = ∫ u₀ φ_j` of the L² projection.
pub fn initial_load(u0: &InitialDatum, dofs: &DofMap) -> Result<Vec<f64>> {
    let r = dofs.degree();
    let rule = gauss_rule(r + 4)?;
    match u0 {
        InitialDatum::DiracProduct { location, weight } => {
            if !(*weight >= 0.0) {
                return config("Dirac weight must be nonnegative");
            }
            let mut b = vec![0.0; dofs.len()];
            for (j, v) in dofs.shape_functions(location)? {
                b[j] += weight * v;
            }
            Ok(b)
        }
        InitialDatum::Separable(fs) => {
            if fs.len() != dofs.dim() {
                return config("initial datum has the wrong number of factors");
            }
            let loads = fs
                .iter()
                .enumerate()
                .map(|(a, f)| axis_load(dofs, a, &rule, |x| f(x)))
                .collect::<Vec<_>>();
            Ok(crate::operators::kron_vectors(&loads))
        }
        InitialDatum::Smooth(f) => {
            let mut b = vec![0.0; dofs.len()];
            let per_axis: Vec<Vec<(f64, f64)>> = dofs
                .axes()
                .iter()
                .map(|ax| {
                    (0..ax.axis().num_elements())
                        .flat_map(|e| {
                            let (a, bb) = ax.axis().element(e);
                            rule.mapped(a, bb).collect::<Vec<_>>()
                        })
                        .collect()
                })
                .collect();
            let mut idx = vec![0usize; dofs.dim()];
            let mut x = vec![0.0; dofs.dim()];
            'outer: loop {
                let mut w = 1.0;
                for a in 0..dofs.dim() {
                    x[a] = per_axis[a][idx[a]].0;
                    w *= per_axis[a][idx[a]].1;
                }
                let fx = w * f(&x);
                for (j, v) in dofs.shape_functions(&x)? {
                    b[j] += fx * v;
                }
                let mut a = dofs.dim();
                loop {
                    if a == 0 {
                        break 'outer;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] < per_axis[a].len() {
                        break;
                    }
                    idx[a] = 0;
                }
            }
            Ok(b)
        }
    }
}

fn axis_load(dofs: &DofMap, a: usize, rule: &crate::quadrature::QuadratureRule, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let ax = dofs.axis(a);
    let basis = dofs.basis();
    let mut v = vec![0.0; ax.len()];
    for e in 0..ax.axis().num_elements() {
        let (lo, hi) = ax.axis().element(e);
        let g0 = ax.global(e, 0);
        for (x, w) in rule.mapped(lo, hi) {
            let vals = basis.values((x - lo) / (hi - lo));
            let wf = w * f(x);
            for k in 0..=ax.degree() {
                v[g0 + k] += wf * vals[k];
            }
        }
    }
    v
}

/// L² projection `α⁰ = M⁻¹ b`.
pub fn project_initial(u0: &InitialDatum, ops: &OperatorSet) -> Result<Vec<f64>> {
    let mut b = initial_load(u0, ops.dofs())?;
    ops.mass_solve_in_place(&mut b);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("projection produced non-finite coefficients".into()));
    }
    Ok(b)
}

/// Newton iteration for `F(x) = 0`; `solve(x, F)` must return `δ ≈ J(x)⁻¹ F`.
pub fn newton_solve(
    mut residual: impl FnMut(&[f64]) -> Vec<f64>,
    mut solve: impl FnMut(&[f64], &[f64]) -> Result<(Vec<f64>, usize)>,
    guess: Vec<f64>,
    cfg: &StepperConfig,
    time: f64,
) -> Result<(Vec<f64>, NewtonStats)> {
    let scale = (guess.len().max(1) as f64).sqrt();
    let mut x = guess;
    let mut f = residual(&x);
    let mut fnorm = norm2(&f) / scale;
    let mut stats = NewtonStats { iterations: 0, history: vec![fnorm], linear_iterations: 0 };
    if !fnorm.is_finite() {
        return Err(non_convergence(time, stats, fnorm));
    }
    while fnorm > cfg.newton_tol {
        if stats.iterations >= cfg.max_newton_iters {
            return Err(non_convergence(time, stats, fnorm));
        }
        let (delta, lin_iters) = solve(&x, &f)?;
        stats.linear_iterations += lin_iters;
        stats.iterations += 1;
        let mut lambda = 1.0;
        let mut halvings = 0;
        let (x_new, f_new, norm_new) = loop {
            let cand: Vec<f64> = x.iter().zip(&delta).map(|(xi, di)| xi - lambda * di).collect();
            let fc = residual(&cand);
            let nc = norm2(&fc) / scale;
            if (nc.is_finite() && nc <= fnorm) || halvings >= cfg.max_halvings {
                break (cand, fc, nc);
            }
            lambda *= 0.5;
            halvings += 1;
        };
        let step = lambda * norm_inf(&delta);
        x = x_new;
        f = f_new;
        fnorm = norm_new;
        stats.history.push(fnorm);
        if !fnorm.is_finite() {
            return Err(non_convergence(time, stats, fnorm));
        }
        // Converged to roundoff: the update no longer changes the iterate.
        if step <= 1e-14 * (1.0 + norm_inf(&x)) && fnorm <= 1e3 * cfg.newton_tol {
            break;
        }
    }
    Ok((x, stats))
}

fn non_convergence(time: f64, stats: NewtonStats, residual: f64) -> Error {
    Error::NonConvergence { time, iterations: stats.iterations, residual, history: stats.history }
}

/// Coefficients at the current and previous time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub alpha: Vec<f64>,
    pub alpha_prev: Vec<f64>,
    pub t: f64,
    pub step: usize,
    pub last_stats: NewtonStats,
}

impl SolverState {
    pub fn new(alpha0: Vec<f64>) -> Self {
        Self { alpha_prev: alpha0.clone(), alpha: alpha0, t: 0.0, step: 0, last_stats: NewtonStats::default() }
    }
}

/// Implicit step `M (a₀ α − h) / τ + N(α) − b(t) = 0`.
struct StepSystem<'a> {
    ops: &'a OperatorSet,
    a0: f64,
    tau: f64,
    history: Vec<f64>,
    load: Option<Vec<f64>>,
    mass_dense: Option<DenseMatrix>,
    cfg: &'a StepperConfig,
}

impl StepSystem<'_> {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let lin = self.ops.linearize(x);
        self.residual_from(x, &lin.residual)
    }

    fn residual_from(&self, x: &[f64], n: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = x.iter().zip(&self.history).map(|(xi, hi)| self.a0 * xi - hi).collect();
        let mut out = self.ops.mass_apply(&diff);
        let inv = 1.0 / self.tau;
        for (o, ni) in out.iter_mut().zip(n) {
            *o = *o * inv + ni;
        }
        if let Some(b) = &self.load {
            for (o, bi) in out.iter_mut().zip(b) {
                *o -= bi;
            }
        }
        out
    }

    fn solve(&self, x: &[f64], f: &[f64]) -> Result<(Vec<f64>, usize)> {
        let lin = self.ops.linearize(x);
        let shift = self.a0 / self.tau;
        if let Some(m) = &self.mass_dense {
            let mut j = self.ops.jacobian_dense(&lin)?;
            j.add_scaled(shift, m);
            return Ok((lu_solve(&j, f)?, 1));
        }
        let n = f.len();
        let mut delta = vec![0.0; n];
        let atol = 0.01 * self.cfg.newton_tol * (n as f64).sqrt();
        let stats = gmres(
            |v, out| {
                let mv = self.ops.mass_apply(v);
                let jv = self.ops.jacobian_apply(&lin, v);
                for ((o, m), j) in out.iter_mut().zip(mv).zip(jv) {
                    *o = shift * m + j;
                }
            },
            |v| {
                self.ops.mass_solve_in_place(v);
                v.iter_mut().for_each(|x| *x /= shift);
            },
            f,
            &mut delta,
            1e-12,
            atol,
            self.cfg.gmres_restart,
            20 * self.cfg.gmres_restart,
        );
        if !stats.converged {
            log::debug!("GMRES stopped at residual {:e} after {} iterations", stats.residual, stats.iterations);
        }
        Ok((delta, stats.iterations))
    }
}

fn implicit_step(
    state: &SolverState,
    ops: &OperatorSet,
    cfg: &StepperConfig,
    bdf2: bool,
    forcing: Option<&ForcingFn>,
    mass_dense: Option<DenseMatrix>,
) -> Result<(Vec<f64>, NewtonStats)> {
    let t_new = (state.step + 1) as f64 * cfg.tau;
    let (a0, history, guess) = if bdf2 {
        let h: Vec<f64> = state.alpha.iter().zip(&state.alpha_prev).map(|(a, p)| 2.0 * a - 0.5 * p).collect();
        let g: Vec<f64> = state.alpha.iter().zip(&state.alpha_prev).map(|(a, p)| 2.0 * a - p).collect();
        (1.5, h, g)
    } else {
        (1.0, state.alpha.clone(), state.alpha.clone())
    };
    let system = StepSystem {
        ops,
        a0,
        tau: cfg.tau,
        history,
        load: forcing.map(|f| f(t_new)),
        mass_dense,
        cfg,
    };
    newton_solve(|x| system.residual(x), |x, f| system.solve(x, f), guess, cfg, t_new)
}

fn dense_mass_if_small(ops: &OperatorSet) -> Result<Option<DenseMatrix>> {
    if ops.len() <= DENSE_SOLVE_LIMIT {
        Ok(Some(ops.mass_dense()?))
    } else {
        Ok(None)
    }
}

fn advance(state: &mut SolverState, alpha: Vec<f64>, stats: NewtonStats, tau: f64) {
    state.alpha_prev = std::mem::replace(&mut state.alpha, alpha);
    state.step += 1;
    state.t = state.step as f64 * tau;
    state.last_stats = stats;
}

/// One backward-Euler step: `M (α¹ − α⁰) / τ + N(α¹) = b(t¹)`.
pub fn be_step(state: &mut SolverState, ops: &OperatorSet, cfg: &StepperConfig) -> Result<()> {
    be_step_forced(state, ops, cfg, None)
}

pub fn be_step_forced(
    state: &mut SolverState,
    ops: &OperatorSet,
    cfg: &StepperConfig,
    forcing: Option<&ForcingFn>,
) -> Result<()> {
    let (alpha, stats) = implicit_step(state, ops, cfg, false, forcing, dense_mass_if_small(ops)?)?;
    advance(state, alpha, stats, cfg.tau);
    Ok(())
}

/// One BDF2 step: `M (3α^{n+1} − 4α^n + α^{n−1}) / (2τ) + N(α^{n+1}) = b(t^{n+1})`.
pub fn bdf2_step(state: &mut SolverState, ops: &OperatorSet, cfg: &StepperConfig) -> Result<()> {
    bdf2_step_forced(state, ops, cfg, None)
}

pub fn bdf2_step_forced(
    state: &mut SolverState,
    ops: &OperatorSet,
    cfg: &StepperConfig,
    forcing: Option<&ForcingFn>,
) -> Result<()> {
    if state.step == 0 {
        return config("BDF2 needs two time levels; take a backward-Euler step first");
    }
    let (alpha, stats) = implicit_step(state, ops, cfg, true, forcing, dense_mass_if_small(ops)?)?;
    advance(state, alpha, stats, cfg.tau);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub alpha: Vec<f64>,
    pub newton_iterations: usize,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    pub residual: f64,
    pub number: f64,
    pub hypervolume: f64,
    pub min_nodal: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

/// Marches from `alpha0` to `cfg.t_final`, storing snapshots at the requested times
/// (rounded to the nearest step) plus the initial and final states.
pub fn run(
    ops: &OperatorSet,
    alpha0: Vec<f64>,
    cfg: &StepperConfig,
    snapshot_times: &[f64],
    forcing: Option<&ForcingFn>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if alpha0.len() != ops.len() {
        return config("initial coefficients do not match the operators");
    }
    let steps = cfg.num_steps();
    let mut wanted = Vec::with_capacity(snapshot_times.len());
    for &ts in snapshot_times {
        if !(0.0..=cfg.t_final * (1.0 + 1e-12)).contains(&ts) {
            return config(format!("snapshot time {ts} outside [0, {}]", cfg.t_final));
        }
        let k = (ts / cfg.tau).round();
        if (k * cfg.tau - ts).abs() > 1e-9 * ts.max(1.0) {
            log::warn!("snapshot t = {ts} is not a multiple of tau; using t = {}", k * cfg.tau);
        }
        wanted.push(k as usize);
    }
    wanted.push(steps);
    wanted.sort_unstable();
    wanted.dedup();
    if let Some(max_step) = ops.stability().max_step() {
        if cfg.tau >= max_step {
            log::info!(
                "tau = {} exceeds the stability bound 1/(4K) = {max_step:e}; the step is not covered by the stability estimate",
                cfg.tau
            );
        }
    }
    let mass_dense = dense_mass_if_small(ops)?;
    let mut state = SolverState::new(alpha0);
    let mut traj = Trajectory::default();
    let record = |state: &SolverState, traj: &mut Trajectory| {
        traj.steps.push(StepRecord {
            t: state.t,
            newton_iterations: state.last_stats.iterations,
            linear_iterations: state.last_stats.linear_iterations,
            residual: state.last_stats.history.last().copied().unwrap_or(0.0),
            number: ops.number(&state.alpha),
            hypervolume: ops.hypervolume(&state.alpha),
            min_nodal: state.alpha.iter().copied().fold(f64::INFINITY, f64::min),
        });
    };
    record(&state, &mut traj);
    let mut next = wanted.iter().peekable();
    if next.peek() == Some(&&0) {
        traj.snapshots.push(Snapshot { t: 0.0, step: 0, alpha: state.alpha.clone(), newton_iterations: 0 });
        next.next();
    }
    for n in 0..steps {
        let bdf2 = cfg.scheme == TimeScheme::Bdf2 && n > 0;
        let (alpha, stats) = implicit_step(&state, ops, cfg, bdf2, forcing, mass_dense.clone())?;
        advance(&mut state, alpha, stats, cfg.tau);
        record(&state, &mut traj);
        if next.peek() == Some(&&state.step) {
            traj.snapshots.push(Snapshot {
                t: state.t,
                step: state.step,
                alpha: state.alpha.clone(),
                newton_iterations: state.last_stats.iterations,
            });
            next.next();
        }
    }
    Ok(traj)
}
