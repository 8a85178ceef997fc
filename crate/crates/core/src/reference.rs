//! Unsplit reference integration of the semi-discrete system
//! `u' = a0 u + g(b) + f(u)`, used as ground truth for every error
//! measurement. Splitting output and reference share the identical
//! discrete operator, so all reported errors are pure time-discretisation
//! errors.

use ndarray::Array1;

use crate::field::Field;
use crate::rk;
use crate::stepper::SplitProblem;
use crate::{Error, Result};

/// Tolerances and safety cap of the reference integrator.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_steps: 10_000_000,
        }
    }
}

impl ReferenceConfig {
    fn validate(&self) -> Result<()> {
        let floor = 100.0 * f64::EPSILON;
        if self.abs_tol < floor || self.rel_tol < floor {
            return Err(Error::Config(format!(
                "reference tolerances must be at least {floor:e}"
            )));
        }
        Ok(())
    }
}

/// Adaptive embedded Runge-Kutta 5(4) driver with PI step-size control.
/// `rhs(t, y, out)` writes the derivative into `out`.
pub struct Dopri5<S: Field, F> {
    rhs: F,
    t: f64,
    y: Array1<S>,
    h: f64,
    err_old: f64,
    k: Vec<Array1<S>>,
    stage: Array1<S>,
    cfg: ReferenceConfig,
    steps: usize,
    first: bool,
}

impl<S, F> Dopri5<S, F>
where
    S: Field,
    F: FnMut(f64, &Array1<S>, &mut Array1<S>),
{
    pub fn new(rhs: F, t0: f64, y0: Array1<S>, cfg: ReferenceConfig) -> Result<Self> {
        cfg.validate()?;
        let n = y0.len();
        Ok(Dopri5 {
            rhs,
            t: t0,
            y: y0,
            h: 0.0,
            err_old: 1e-4,
            k: vec![Array1::zeros(n); rk::STAGES],
            stage: Array1::zeros(n),
            cfg,
            steps: 0,
            first: true,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &Array1<S> {
        &self.y
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    fn weighted_rms(&self, err: &Array1<S>, y_new: &Array1<S>) -> f64 {
        let n = err.len() as f64;
        let sum: f64 = err
            .iter()
            .zip(self.y.iter().zip(y_new.iter()))
            .map(|(e, (a, b))| {
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * a.abs().max(b.abs());
                let r = e.abs() / sc;
                r * r
            })
            .sum();
        (sum / n).sqrt()
    }

    /// Starting step from the scaled size of the first two derivatives.
    fn initial_step(&mut self, span: f64) -> f64 {
        let n = self.y.len() as f64;
        let sc = |a: S| self.cfg.abs_tol + self.cfg.rel_tol * a.abs();
        let d0 = (self
            .y
            .iter()
            .map(|&v| (v.abs() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let d1 = (self
            .k[0]
            .iter()
            .zip(self.y.iter())
            .map(|(&f, &v)| (f.abs() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
        .min(span);

        // explicit Euler probe for the second-derivative scale
        let y1 = &self.y + &self.k[0].mapv(|v| v.mul_real(h0));
        (self.rhs)(self.t + h0, &y1, &mut self.stage);
        let d2 = (self
            .stage
            .iter()
            .zip(self.k[0].iter().zip(self.y.iter()))
            .map(|(&f1, (&f0, &v))| ((f1 - f0).abs() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        h1.min(100.0 * h0).min(span)
    }

    /// Advance to exactly `t_target`.
    pub fn integrate_to(&mut self, t_target: f64) -> Result<()> {
        if t_target < self.t {
            return Err(Error::Config(format!(
                "cannot integrate backwards from {} to {t_target}",
                self.t
            )));
        }
        if t_target == self.t {
            return Ok(());
        }
        if self.first {
            (self.rhs)(self.t, &self.y, &mut self.k[0]);
            self.h = self.initial_step(t_target - self.t);
            self.first = false;
        }

        loop {
            if self.t >= t_target {
                return Ok(());
            }
            self.steps += 1;
            if self.steps > self.cfg.max_steps {
                return Err(Error::Convergence(format!(
                    "reference integrator exceeded {} steps",
                    self.cfg.max_steps
                )));
            }
            if self.h < 1e-15 * t_target.abs().max(1.0) {
                return Err(Error::Convergence(
                    "reference integrator step size underflow".into(),
                ));
            }
            let mut h = self.h;
            let last = self.t + h >= t_target;
            if last {
                h = t_target - self.t;
            }

            for s in 1..rk::STAGES {
                self.stage.assign(&self.y);
                for j in 0..s {
                    let a = rk::A[s][j];
                    if a != 0.0 {
                        let kj = &self.k[j];
                        self.stage
                            .zip_mut_with(kj, |acc, kv| *acc = *acc + kv.mul_real(a * h));
                    }
                }
                let t_stage = self.t + rk::C[s] * h;
                (self.rhs)(t_stage, &self.stage, &mut self.k[s]);
            }

            let mut y_new = self.y.clone();
            let mut err_vec: Array1<S> = Array1::zeros(self.y.len());
            for s in 0..rk::STAGES {
                if rk::B[s] != 0.0 {
                    y_new.zip_mut_with(&self.k[s], |acc, kv| {
                        *acc = *acc + kv.mul_real(rk::B[s] * h)
                    });
                }
                if rk::E[s] != 0.0 {
                    err_vec.zip_mut_with(&self.k[s], |acc, kv| {
                        *acc = *acc + kv.mul_real(rk::E[s] * h)
                    });
                }
            }
            if y_new.iter().any(|v| !v.abs().is_finite()) {
                return Err(Error::FlowDomain(
                    "reference integration blew up".into(),
                ));
            }
            let err = self.weighted_rms(&err_vec, &y_new).max(1e-30);

            if err <= 1.0 {
                std::mem::swap(&mut self.y, &mut y_new);
                self.k.swap(0, rk::STAGES - 1); // FSAL
                if last {
                    self.t = t_target;
                } else {
                    self.t += h;
                    self.h = h / rk::step_factor(err, self.err_old);
                    self.err_old = err.max(1e-4);
                }
            } else {
                self.h = h / rk::reject_factor(err);
            }
        }
    }
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (general ODE entry point;
/// also serves as an independent oracle in tests).
pub fn dopri5<S, F>(rhs: F, y0: &Array1<S>, t0: f64, t1: f64, cfg: &ReferenceConfig) -> Result<Array1<S>>
where
    S: Field,
    F: FnMut(f64, &Array1<S>, &mut Array1<S>),
{
    let mut drv = Dopri5::new(rhs, t0, y0.clone(), *cfg)?;
    drv.integrate_to(t1)?;
    Ok(drv.y().clone())
}

fn problem_rhs<'a, S: Field>(
    problem: &'a SplitProblem<S>,
) -> impl FnMut(f64, &Array1<S>, &mut Array1<S>) + 'a {
    let (bl, br) = problem.boundary_values();
    let g = problem.op.boundary_inhomogeneity(bl, br);
    let xs = problem.xs().to_vec();
    move |_t, y, out| {
        problem.op.apply_a0_into(y, out);
        for i in 0..out.len() {
            out[i] = out[i] + g[i] + problem.reaction.f(y[i], xs[i]);
        }
    }
}

/// Reference solution of the unsplit semi-discrete system at `t_final`.
pub fn reference_solve<S: Field>(
    problem: &SplitProblem<S>,
    t_final: f64,
    cfg: &ReferenceConfig,
) -> Result<Array1<S>> {
    if t_final <= 0.0 {
        return Err(Error::Domain(format!(
            "reference solve needs T > 0, got {t_final}"
        )));
    }
    let mut drv = Dopri5::new(problem_rhs(problem), 0.0, problem.u0.clone(), *cfg)?;
    drv.integrate_to(t_final)?;
    Ok(drv.y().clone())
}

/// Reference solution at each requested checkpoint (strictly increasing,
/// positive times), obtained by integrating exactly to each checkpoint.
pub fn reference_checkpoints<S: Field>(
    problem: &SplitProblem<S>,
    times: &[f64],
    cfg: &ReferenceConfig,
) -> Result<Vec<Array1<S>>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "checkpoint times must be positive and strictly increasing".into(),
        ));
    }
    let mut drv = Dopri5::new(problem_rhs(problem), 0.0, problem.u0.clone(), *cfg)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        drv.integrate_to(t)?;
        out.push(drv.y().clone());
    }
    Ok(out)
}
