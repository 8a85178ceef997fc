//! Reaction registry and the pointwise reaction subflow.
//!
//! Each reaction carries its analytic first and second derivatives in `u`
//! (the corrections need `f(b)`, `f'(b)`, `f''(b)` at the boundary) and,
//! where available, a closed-form pointwise flow map. Everything else is
//! integrated per node with an adaptive embedded Runge-Kutta 5(4) pair at
//! tolerance `1e-13`, which makes the subflow error negligible against the
//! splitting error under study.

use ndarray::Array1;

use crate::field::Field;
use crate::rk;
use crate::{Error, Result};

/// Tolerance of the adaptive pointwise flow (absolute and relative).
pub const FLOW_TOL: f64 = 1e-13;

/// Named reaction term `f(u, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reaction {
    /// `f = 0` (pure linear problems).
    Zero,
    /// `f = u + 1`
    UPlus1,
    /// `f = u + x (1 - x)`
    UPlusP,
    /// `f = u + (x - 1) x (-1 - x + x^2)`, vanishing with its second
    /// derivative at both endpoints
    UPlusQ,
    /// `f = u + x`
    UPlusX,
    /// `f = u + x^2`
    UPlusX2,
    /// `f = exp(u - 1)`
    ExpUm1,
    /// `f = sqrt(u + 1)`
    SqrtUp1,
    /// `f = exp(u / 5)`
    ExpU5,
    /// `f = log(2 + u)`
    Log2Pu,
    /// `f = 1/2 + arsinh(u)`
    ArsinhHalf,
    /// `f = cos(u)`
    CosU,
}

fn p_poly(x: f64) -> f64 {
    x * (1.0 - x)
}

// (x - 1) x (-1 - x + x^2) expanded; vanishes at 0 and 1 together with its
// second derivative.
fn q_poly(x: f64) -> f64 {
    ((x - 2.0) * x * x + 1.0) * x
}

impl Reaction {
    pub fn by_name(name: &str) -> Result<Reaction> {
        Ok(match name {
            "zero" => Reaction::Zero,
            "u_plus_1" => Reaction::UPlus1,
            "u_plus_p" => Reaction::UPlusP,
            "u_plus_q" => Reaction::UPlusQ,
            "u_plus_x" => Reaction::UPlusX,
            "u_plus_x2" => Reaction::UPlusX2,
            "exp_um1" => Reaction::ExpUm1,
            "sqrt_up1" => Reaction::SqrtUp1,
            "exp_u5" => Reaction::ExpU5,
            "log_2pu" => Reaction::Log2Pu,
            "arsinh_half" => Reaction::ArsinhHalf,
            "cos_u" => Reaction::CosU,
            other => return Err(Error::Registry(format!("unknown reaction '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Reaction::Zero => "zero",
            Reaction::UPlus1 => "u_plus_1",
            Reaction::UPlusP => "u_plus_p",
            Reaction::UPlusQ => "u_plus_q",
            Reaction::UPlusX => "u_plus_x",
            Reaction::UPlusX2 => "u_plus_x2",
            Reaction::ExpUm1 => "exp_um1",
            Reaction::SqrtUp1 => "sqrt_up1",
            Reaction::ExpU5 => "exp_u5",
            Reaction::Log2Pu => "log_2pu",
            Reaction::ArsinhHalf => "arsinh_half",
            Reaction::CosU => "cos_u",
        }
    }

    /// For the linear family `f = u + c(x)`: the offset `c(x)`.
    fn linear_offset(self, x: f64) -> Option<f64> {
        match self {
            Reaction::UPlus1 => Some(1.0),
            Reaction::UPlusP => Some(p_poly(x)),
            Reaction::UPlusQ => Some(q_poly(x)),
            Reaction::UPlusX => Some(x),
            Reaction::UPlusX2 => Some(x * x),
            _ => None,
        }
    }

    pub fn f<S: Field>(self, u: S, x: f64) -> S {
        if let Some(c) = self.linear_offset(x) {
            return u.add_real(c);
        }
        match self {
            Reaction::Zero => S::zero(),
            Reaction::ExpUm1 => u.sub_real(1.0).exp(),
            Reaction::SqrtUp1 => u.add_real(1.0).sqrt(),
            Reaction::ExpU5 => u.div_real(5.0).exp(),
            Reaction::Log2Pu => u.add_real(2.0).ln(),
            Reaction::ArsinhHalf => u.asinh().add_real(0.5),
            Reaction::CosU => u.cos(),
            _ => unreachable!(),
        }
    }

    pub fn f_u<S: Field>(self, u: S, x: f64) -> S {
        if self.linear_offset(x).is_some() {
            return S::one();
        }
        match self {
            Reaction::Zero => S::zero(),
            Reaction::ExpUm1 => u.sub_real(1.0).exp(),
            Reaction::SqrtUp1 => S::from_real(0.5) / u.add_real(1.0).sqrt(),
            Reaction::ExpU5 => u.div_real(5.0).exp().div_real(5.0),
            Reaction::Log2Pu => S::one() / u.add_real(2.0),
            Reaction::ArsinhHalf => S::one() / (u * u).add_real(1.0).sqrt(),
            Reaction::CosU => -u.sin(),
            _ => unreachable!(),
        }
    }

    pub fn f_uu<S: Field>(self, u: S, x: f64) -> S {
        if self.linear_offset(x).is_some() {
            return S::zero();
        }
        match self {
            Reaction::Zero => S::zero(),
            Reaction::ExpUm1 => u.sub_real(1.0).exp(),
            Reaction::SqrtUp1 => {
                let w = u.add_real(1.0);
                -S::from_real(0.25) / (w * w.sqrt())
            }
            Reaction::ExpU5 => u.div_real(5.0).exp().div_real(25.0),
            Reaction::Log2Pu => {
                let w = u.add_real(2.0);
                -S::one() / (w * w)
            }
            Reaction::ArsinhHalf => {
                let w = (u * u).add_real(1.0);
                -u / (w * w.sqrt())
            }
            Reaction::CosU => -u.cos(),
            _ => unreachable!(),
        }
    }

    pub fn has_exact_flow(self) -> bool {
        matches!(
            self,
            Reaction::Zero
                | Reaction::UPlus1
                | Reaction::UPlusP
                | Reaction::UPlusQ
                | Reaction::UPlusX
                | Reaction::UPlusX2
                | Reaction::ExpUm1
        )
    }

    /// Closed-form pointwise flow `u0 -> u(t)` where registered.
    ///
    /// For the linear family `w' = w + c(x)` this is `(u0 + c) e^t - c`;
    /// for `f = exp(u - 1)` it is `1 - log(exp(1 - u0) - t)` with the
    /// principal branch, valid while the argument stays off the branch cut.
    pub fn exact_flow<S: Field>(self, u0: S, x: f64, t: f64) -> Result<S> {
        if let Some(c) = self.linear_offset(x) {
            return Ok(u0.add_real(c).mul_real(t.exp()).sub_real(c));
        }
        match self {
            Reaction::Zero => Ok(u0),
            Reaction::ExpUm1 => {
                let z0 = (S::one() - u0).exp();
                let arg = z0.sub_real(t);
                // the path z0 - s, s in [0, t], hits the branch cut of the
                // principal log only along the real axis
                if arg.im() == 0.0 && arg.re() <= 0.0 {
                    return Err(Error::FlowDomain(format!(
                        "exp(u-1) flow blows up before t = {t}"
                    )));
                }
                Ok(S::one() - arg.ln())
            }
            _ => Err(Error::Domain(format!(
                "no closed-form flow for {}",
                self.name()
            ))),
        }
    }
}

/// Reaction with an optional node-wise shift: right-hand side
/// `f(w_i, x_i) - q_i`.
pub struct ShiftedReaction<'a, S: Field> {
    pub base: Reaction,
    /// Node positions `x_i`.
    pub xs: &'a [f64],
    /// Shift `q` sampled at the nodes; `None` means zero.
    pub shift: Option<&'a Array1<S>>,
}

impl<'a, S: Field> ShiftedReaction<'a, S> {
    pub fn unshifted(base: Reaction, xs: &'a [f64]) -> Self {
        ShiftedReaction {
            base,
            xs,
            shift: None,
        }
    }
}

/// Pointwise reaction flow over a duration `t >= 0`; nodes are independent.
pub fn reaction_flow<S: Field>(
    values: &Array1<S>,
    t: f64,
    r: &ShiftedReaction<S>,
) -> Result<Array1<S>> {
    reaction_flow_tol(values, t, r, FLOW_TOL)
}

/// Same as [`reaction_flow`] with an explicit adaptive tolerance.
pub fn reaction_flow_tol<S: Field>(
    values: &Array1<S>,
    t: f64,
    r: &ShiftedReaction<S>,
    tol: f64,
) -> Result<Array1<S>> {
    if t < 0.0 {
        return Err(Error::Domain(format!("reaction flow needs t >= 0, got {t}")));
    }
    if values.len() != r.xs.len() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} entries but {} node positions given",
            values.len(),
            r.xs.len()
        )));
    }
    if let Some(q) = r.shift {
        if q.len() != values.len() {
            return Err(Error::DimensionMismatch(
                "shift length must match the state".into(),
            ));
        }
    }
    if t == 0.0 {
        return Ok(values.clone());
    }

    // a shift that is identically zero does not change the flow
    let shift = r
        .shift
        .filter(|q| q.iter().any(|v| v.abs() != 0.0));

    if shift.is_none() && r.base.has_exact_flow() {
        let mut out = values.clone();
        for (v, &x) in out.iter_mut().zip(r.xs.iter()) {
            *v = r.base.exact_flow(*v, x, t)?;
        }
        return Ok(out);
    }

    let mut out = values.clone();
    for (i, v) in out.iter_mut().enumerate() {
        let x = r.xs[i];
        let q = shift.map_or(S::zero(), |qv| qv[i]);
        let rhs = |w: S| r.base.f(w, x) - q;
        *v = flow_scalar(&rhs, *v, t, tol)?;
    }
    Ok(out)
}

/// Adaptive scalar integration of `w' = rhs(w)` over `[0, t]`.
fn flow_scalar<S: Field>(rhs: &impl Fn(S) -> S, y0: S, t_end: f64, tol: f64) -> Result<S> {
    let mut y = y0;
    let mut t = 0.0f64;
    let mut k = [S::zero(); rk::STAGES];
    k[0] = rhs(y);

    // starting step from the first derivative scale
    let sc = tol + tol * y.abs();
    let d1 = k[0].abs() / sc;
    let mut h = if d1 > 1e-10 {
        (0.01 / d1).min(t_end)
    } else {
        t_end
    };

    let mut err_old = 1e-4f64;
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::Convergence("pointwise flow exceeded step cap".into()));
        }
        if h < 1e-15 * t_end {
            return Err(Error::Convergence(
                "pointwise flow step size underflow".into(),
            ));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        for s in 1..rk::STAGES {
            let mut acc = S::zero();
            for (j, kj) in k.iter().enumerate().take(s) {
                acc = acc + kj.mul_real(rk::A[s][j]);
            }
            k[s] = rhs(y + acc.mul_real(h));
        }
        let mut dy = S::zero();
        let mut de = S::zero();
        for s in 0..rk::STAGES {
            dy = dy + k[s].mul_real(rk::B[s]);
            de = de + k[s].mul_real(rk::E[s]);
        }
        let y_new = y + dy.mul_real(h);
        if !(y_new.abs().is_finite()) {
            return Err(Error::FlowDomain("pointwise flow blew up".into()));
        }
        let sc = tol + tol * y.abs().max(y_new.abs());
        let err = (de.mul_real(h).abs() / sc).max(1e-30);

        if err <= 1.0 {
            y = y_new;
            if last {
                break;
            }
            t += h;
            k[0] = k[rk::STAGES - 1]; // FSAL
            h /= rk::step_factor(err, err_old);
            h = h.min(t_end - t);
            err_old = err.max(1e-4);
        } else {
            h /= rk::reject_factor(err);
        }
    }
    Ok(y)
}

/// Maximum deviation of the analytic derivatives from centered finite
/// differences of `f` (respectively `f_u`) over the samples `(u, x)`.
pub fn check_derivatives(r: Reaction, samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    let delta = 1e-5;
    let mut worst_fu = 0.0f64;
    let mut worst_fuu = 0.0f64;
    for &(u, x) in samples {
        let fd_fu = (r.f(u + delta, x) - r.f(u - delta, x)) / (2.0 * delta);
        let fd_fuu = (r.f_u(u + delta, x) - r.f_u(u - delta, x)) / (2.0 * delta);
        if !fd_fu.is_finite() || !fd_fuu.is_finite() {
            return Err(Error::Domain(format!(
                "sample (u = {u}, x = {x}) outside the domain of {}",
                r.name()
            )));
        }
        worst_fu = worst_fu.max((fd_fu - r.f_u(u, x)).abs());
        worst_fuu = worst_fuu.max((fd_fuu - r.f_uu(u, x)).abs());
    }
    Ok((worst_fu, worst_fuu))
}
