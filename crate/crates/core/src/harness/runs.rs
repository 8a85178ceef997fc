//! Experiment drivers: convergence tables, the scheme comparison matrix,
//! resonance sweeps and error-vs-time traces.

use ndarray::Array1;
use num_complex::Complex64;

use crate::field::Field;
use crate::grid::{advection_operator, build_grid, diffusion_operator, dispersion_operator, ConstrainedSides};
use crate::harness::config::{
    coefficient_by_name, initial_condition_complex, initial_condition_real, ErrorKind,
    ExperimentConfig, ProblemConfig, ProblemKind,
};
use crate::harness::report::{
    error_linf, error_linf_window, observed_order, ComparisonCell, ComparisonReport,
    ConvergenceReport, ConvergenceRow, ResonanceReport, ResonanceRow, TraceReport, TraceRow,
};
use crate::reaction::Reaction;
use crate::reference::{reference_checkpoints, reference_solve, ReferenceConfig};
use crate::stepper::{integrate_with, strang_step_with, PhiCache, Scheme, SplitProblem};
use crate::{Error, Result};

/// Step size of the comparison matrix when the config does not fix one
/// (the finest ladder value of the second-order transport tables).
pub const COMPARISON_DEFAULT_TAU: f64 = 7.5e-3;

/// Horizons of the comparison matrix.
pub const COMPARISON_TIMES: [f64; 2] = [0.5, 2.0];

/// Reactions of the comparison matrix, in row order.
pub const COMPARISON_REACTIONS: [Reaction; 5] = [
    Reaction::SqrtUp1,
    Reaction::ExpU5,
    Reaction::Log2Pu,
    Reaction::ArsinhHalf,
    Reaction::CosU,
];

/// Coefficients of the comparison matrix, in column order.
pub const COMPARISON_COEFFICIENTS: [&str; 5] = ["a1", "a2", "a3", "a4", "a5"];

/// A problem instance over its natural scalar field.
pub enum Problem {
    Real(SplitProblem<f64>),
    Complex(SplitProblem<Complex64>),
}

/// Resolve a problem config against the registries.
pub fn build_problem(pc: &ProblemConfig) -> Result<Problem> {
    let reaction = Reaction::by_name(&pc.reaction)?;
    match pc.kind {
        ProblemKind::Diffusion => {
            let grid = build_grid(pc.n, ConstrainedSides::Both)?;
            let op = diffusion_operator(&grid)?;
            let ic = initial_condition_real(&pc.initial)?;
            let u0: Array1<f64> = grid.nodes().iter().map(|&x| ic(x)).collect();
            Ok(Problem::Real(SplitProblem::new(
                op, reaction, pc.b_left, pc.b_right, u0,
            )?))
        }
        ProblemKind::Advection => {
            let grid = build_grid(pc.n, ConstrainedSides::LeftOnly)?;
            let coeff = coefficient_by_name(pc.coefficient.as_deref().unwrap_or("one"))?;
            let op = advection_operator(&grid, &coeff)?;
            let ic = initial_condition_real(&pc.initial)?;
            let u0: Array1<f64> = grid.nodes().iter().map(|&x| ic(x)).collect();
            Ok(Problem::Real(SplitProblem::new(
                op, reaction, pc.b_left, 0.0, u0,
            )?))
        }
        ProblemKind::Dispersion => {
            let grid = build_grid(pc.n, ConstrainedSides::Both)?;
            let op = dispersion_operator(&grid)?;
            let ic = initial_condition_complex(&pc.initial)?;
            let u0: Array1<Complex64> = grid.nodes().iter().map(|&x| ic(x)).collect();
            Ok(Problem::Complex(SplitProblem::new(
                op, reaction, pc.b_left, pc.b_right, u0,
            )?))
        }
    }
}

fn measure<S: Field>(
    p: &SplitProblem<S>,
    window: Option<[f64; 2]>,
    a: &Array1<S>,
    b: &Array1<S>,
) -> Result<f64> {
    match window {
        Some(w) => error_linf_window(a, b, p.xs(), w),
        None => error_linf(a, b),
    }
}

fn convergence_impl<S: Field>(
    p: &SplitProblem<S>,
    schemes: &[Scheme],
    taus: &[f64],
    t_final: f64,
    kind: ErrorKind,
    window: Option<[f64; 2]>,
) -> Result<ConvergenceReport> {
    let ref_cfg = ReferenceConfig::default();
    let mut errors = vec![vec![0.0f64; taus.len()]; schemes.len()];
    let mut cache = PhiCache::new();
    let kmax_all = schemes
        .iter()
        .map(|&s| p.required_kmax(s))
        .max()
        .unwrap_or(0);

    match kind {
        ErrorKind::Global => {
            let reference = reference_solve(p, t_final, &ref_cfg)?;
            for (ti, &tau) in taus.iter().enumerate() {
                cache.family(&p.op, tau, kmax_all)?;
                for (si, &scheme) in schemes.iter().enumerate() {
                    let out = integrate_with(p, scheme, t_final, tau, &mut cache, None)?;
                    errors[si][ti] = measure(p, window, &out.values, &reference)?;
                }
            }
        }
        ErrorKind::Local => {
            // local error at t = 0: one step from the discrete initial data
            let s0 = p.initial_state();
            for (ti, &tau) in taus.iter().enumerate() {
                let reference = reference_solve(p, tau, &ref_cfg)?;
                let fam = cache.family(&p.op, tau, kmax_all)?;
                for (si, &scheme) in schemes.iter().enumerate() {
                    let out = strang_step_with(p, scheme, &s0, tau, &fam)?;
                    errors[si][ti] = measure(p, window, &out.values, &reference)?;
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (si, &scheme) in schemes.iter().enumerate() {
        for (ti, &tau) in taus.iter().enumerate() {
            let order = if ti > 0 && (taus[ti - 1] / tau - 2.0).abs() < 1e-9 {
                observed_order(errors[si][ti - 1], errors[si][ti])
            } else {
                None
            };
            rows.push(ConvergenceRow {
                scheme,
                tau,
                error: errors[si][ti],
                order,
            });
        }
    }
    Ok(ConvergenceReport {
        error_kind: kind,
        rows,
    })
}

fn common_convergence_checks(cfg: &ExperimentConfig) -> Result<(Vec<Scheme>, Vec<f64>, ErrorKind)> {
    let schemes = cfg.schemes()?;
    if schemes.is_empty() {
        return Err(Error::Config("run.schemes must not be empty".into()));
    }
    let taus = cfg.taus()?;
    let kind = cfg
        .run
        .error_kind
        .ok_or_else(|| Error::Config("run.error_kind is required".into()))?;
    if cfg.run.t_final <= 0.0 {
        return Err(Error::Config("run.T must be positive".into()));
    }
    Ok((schemes, taus, kind))
}

/// Convergence table over the full domain.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    if cfg.run.window.is_some() {
        return Err(Error::Config(
            "run.window is only valid for the interior command".into(),
        ));
    }
    let (schemes, taus, kind) = common_convergence_checks(cfg)?;
    match build_problem(&cfg.problem)? {
        Problem::Real(p) => convergence_impl(&p, &schemes, &taus, cfg.run.t_final, kind, None),
        Problem::Complex(p) => convergence_impl(&p, &schemes, &taus, cfg.run.t_final, kind, None),
    }
}

/// Convergence table with errors restricted to a window of node positions.
pub fn run_interior_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let window = cfg
        .run
        .window
        .ok_or_else(|| Error::Config("run.window is required for interior runs".into()))?;
    if !(window[0] < window[1] && window[0] >= 0.0 && window[1] <= 1.0) {
        return Err(Error::Config(format!(
            "window [{}, {}] must be an ordered subset of [0, 1]",
            window[0], window[1]
        )));
    }
    let (schemes, taus, kind) = common_convergence_checks(cfg)?;
    match build_problem(&cfg.problem)? {
        Problem::Real(p) => {
            // fail early when the window misses every node
            if !p.xs().iter().any(|&x| x >= window[0] && x <= window[1]) {
                return Err(Error::Config("window contains no grid nodes".into()));
            }
            convergence_impl(&p, &schemes, &taus, cfg.run.t_final, kind, Some(window))
        }
        Problem::Complex(p) => {
            if !p.xs().iter().any(|&x| x >= window[0] && x <= window[1]) {
                return Err(Error::Config("window contains no grid nodes".into()));
            }
            convergence_impl(&p, &schemes, &taus, cfg.run.t_final, kind, Some(window))
        }
    }
}

/// Comparison matrix of the four corrected schemes over the reaction and
/// coefficient registries at a fixed step size. The config fixes the grid
/// size, boundary value and initial condition; reactions and coefficients
/// are swept.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    if cfg.problem.kind != ProblemKind::Advection {
        return Err(Error::Config(
            "the comparison matrix is defined for the advection problem".into(),
        ));
    }
    let tau = match &cfg.run.taus {
        Some(ts) if !ts.is_empty() => ts[0],
        _ => COMPARISON_DEFAULT_TAU,
    };
    if tau <= 0.0 {
        return Err(Error::Config("comparison tau must be positive".into()));
    }
    let schemes = [Scheme::Tdbc3, Scheme::Tdbc2, Scheme::Cec2, Scheme::Cec3];
    let ic = initial_condition_real(&cfg.problem.initial)?;
    let grid = build_grid(cfg.problem.n, ConstrainedSides::LeftOnly)?;
    let ref_cfg = ReferenceConfig::default();

    // errors[time][reaction][coefficient][scheme]
    let nf = COMPARISON_REACTIONS.len();
    let na = COMPARISON_COEFFICIENTS.len();
    let mut errors = vec![vec![vec![[0.0f64; 4]; na]; nf]; COMPARISON_TIMES.len()];

    for (ai, aname) in COMPARISON_COEFFICIENTS.iter().enumerate() {
        let coeff = coefficient_by_name(aname)?;
        let op = advection_operator(&grid, &coeff)?;
        let mut cache = PhiCache::new();
        for (fi, &reaction) in COMPARISON_REACTIONS.iter().enumerate() {
            let u0: Array1<f64> = grid.nodes().iter().map(|&x| ic(x)).collect();
            let p = SplitProblem::new(op.clone(), reaction, cfg.problem.b_left, 0.0, u0)?;
            let refs = reference_checkpoints(&p, &COMPARISON_TIMES, &ref_cfg)?;
            for (si, &scheme) in schemes.iter().enumerate() {
                for (wi, &t_end) in COMPARISON_TIMES.iter().enumerate() {
                    let out = integrate_with(&p, scheme, t_end, tau, &mut cache, None)?;
                    errors[wi][fi][ai][si] = error_linf(&out.values, &refs[wi])?;
                }
            }
        }
    }

    let mut cells = Vec::new();
    for (wi, &t) in COMPARISON_TIMES.iter().enumerate() {
        for (fi, &reaction) in COMPARISON_REACTIONS.iter().enumerate() {
            for (ai, aname) in COMPARISON_COEFFICIENTS.iter().enumerate() {
                let e = &errors[wi][fi][ai];
                cells.push(ComparisonCell {
                    reaction: reaction.name().to_string(),
                    coefficient: aname.to_string(),
                    t,
                    tdbc3: e[0],
                    tdbc2: e[1],
                    cec2: e[2],
                    cec3: e[3],
                });
            }
        }
    }
    Ok(ComparisonReport {
        n: cfg.problem.n,
        tau,
        times: COMPARISON_TIMES.to_vec(),
        cells,
    })
}

/// Global error over a log-spaced step-size sweep (dispersion problems).
pub fn run_resonance(cfg: &ExperimentConfig) -> Result<ResonanceReport> {
    if cfg.problem.kind != ProblemKind::Dispersion {
        return Err(Error::Config(
            "resonance sweeps are defined for the dispersion problem".into(),
        ));
    }
    let sweep = cfg
        .run
        .tau_sweep
        .ok_or_else(|| Error::Config("run.tau_sweep is required for resonance runs".into()))?;
    let taus = sweep.values()?;
    let schemes = if cfg.run.schemes.is_empty() {
        vec![Scheme::Unmodified, Scheme::Tdbc2, Scheme::Tdbc3]
    } else {
        cfg.schemes()?
    };
    if cfg.run.t_final <= 0.0 {
        return Err(Error::Config("run.T must be positive".into()));
    }

    let p = match build_problem(&cfg.problem)? {
        Problem::Complex(p) => p,
        Problem::Real(_) => unreachable!("dispersion builds a complex problem"),
    };
    let ref_cfg = ReferenceConfig::default();
    let reference = reference_solve(&p, cfg.run.t_final, &ref_cfg)?;
    let kmax_all = schemes
        .iter()
        .map(|&s| p.required_kmax(s))
        .max()
        .unwrap_or(0);

    let mut cache = PhiCache::new();
    let mut per_scheme = vec![Vec::with_capacity(taus.len()); schemes.len()];
    for &tau in &taus {
        cache.family(&p.op, tau, kmax_all)?;
        for (si, &scheme) in schemes.iter().enumerate() {
            let out = integrate_with(&p, scheme, cfg.run.t_final, tau, &mut cache, None)?;
            per_scheme[si].push(error_linf(&out.values, &reference)?);
        }
    }

    let mut rows = Vec::new();
    for (si, &scheme) in schemes.iter().enumerate() {
        for (ti, &tau) in taus.iter().enumerate() {
            rows.push(ResonanceRow {
                scheme,
                tau,
                error: per_scheme[si][ti],
            });
        }
    }
    Ok(ResonanceReport { rows })
}

/// Step times of an integration run: full steps, plus the shortened final
/// step if the horizon is not an integer multiple of `tau`.
fn step_times(t_final: f64, tau: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut n = 0u64;
    while (n + 1) as f64 * tau <= t_final + 1e-12 {
        n += 1;
        times.push(n as f64 * tau);
    }
    if t_final - n as f64 * tau > 1e-12 {
        times.push(t_final);
    }
    times
}

fn trace_impl<S: Field>(
    p: &SplitProblem<S>,
    schemes: &[Scheme],
    taus: &[f64],
    t_final: f64,
) -> Result<TraceReport> {
    let ref_cfg = ReferenceConfig::default();
    let mut rows = Vec::new();
    let kmax_all = schemes
        .iter()
        .map(|&s| p.required_kmax(s))
        .max()
        .unwrap_or(0);

    // rows grouped by scheme; reference checkpoints shared per step size
    let mut blocks: Vec<Vec<TraceRow>> = vec![Vec::new(); schemes.len()];
    for &tau in taus {
        let times = step_times(t_final, tau);
        let refs = reference_checkpoints(p, &times, &ref_cfg)?;
        let mut cache = PhiCache::new();
        cache.family(&p.op, tau, kmax_all)?;
        for (si, &scheme) in schemes.iter().enumerate() {
            let mut traj = Vec::new();
            integrate_with(p, scheme, t_final, tau, &mut cache, Some(&mut traj))?;
            debug_assert_eq!(traj.len(), times.len() + 1);
            for (k, &t) in times.iter().enumerate() {
                let t_prev = if k == 0 { 0.0 } else { times[k - 1] };
                let step = t - t_prev;
                let from = if k == 0 {
                    p.initial_state()
                } else {
                    crate::grid::StateVector::new(refs[k - 1].clone(), t_prev)
                };
                let fam = cache.family(&p.op, step, kmax_all)?;
                let stepped = strang_step_with(p, scheme, &from, step, &fam)?;
                let local = error_linf(&stepped.values, &refs[k])?;
                let global = error_linf(&traj[k + 1].values, &refs[k])?;
                blocks[si].push(TraceRow {
                    scheme,
                    tau,
                    t,
                    local,
                    global,
                });
            }
        }
    }
    for b in blocks {
        rows.extend(b);
    }
    Ok(TraceReport { rows })
}

/// Per-step local and global error time series for each configured step
/// size and scheme.
pub fn run_trace(cfg: &ExperimentConfig) -> Result<TraceReport> {
    let schemes = cfg.schemes()?;
    if schemes.is_empty() {
        return Err(Error::Config("run.schemes must not be empty".into()));
    }
    let taus = cfg.taus()?;
    if cfg.run.t_final <= 0.0 {
        return Err(Error::Config("run.T must be positive".into()));
    }
    match build_problem(&cfg.problem)? {
        Problem::Real(p) => trace_impl(&p, &schemes, &taus, cfg.run.t_final),
        Problem::Complex(p) => trace_impl(&p, &schemes, &taus, cfg.run.t_final),
    }
}
