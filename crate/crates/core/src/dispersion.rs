//! Spreading speeds, the predator dispersion relation and its roots.

use crate::error::{Error, Result};
use crate::model::{Dispersal, Kernel, ValidatedModel};

const LAMBDA_MIN: f64 = 1e-6;
const PRESCAN: usize = 256;
const DOUBLE_ROOT_BAND: f64 = 1e-8;

/// A spreading speed and the rate at which its objective is minimal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedEstimate {
    pub speed: f64,
    pub lambda: f64,
}

/// `c(lambda) = (d * symbol(lambda) + rate) / lambda`.
pub fn speed_objective(d: f64, dispersal: &Dispersal, rate: f64, lambda: f64) -> Result<f64> {
    Ok((d * dispersal.symbol(lambda)? + rate) / lambda)
}

/// Infimum over `lambda > 0` of the kernel speed objective.
pub fn linear_speed(d: f64, kernel: &Kernel, rate: f64) -> Result<SpeedEstimate> {
    spreading_speed(d, &Dispersal::Nonlocal(kernel.clone()), rate)
}

pub fn local_speed(d: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::UndefinedSpeed { rate });
    }
    Ok(2.0 * (d * rate).sqrt())
}

pub fn spreading_speed(d: f64, dispersal: &Dispersal, rate: f64) -> Result<SpeedEstimate> {
    if !(rate > 0.0) {
        return Err(Error::UndefinedSpeed { rate });
    }
    match dispersal {
        Dispersal::Local => Ok(SpeedEstimate {
            speed: local_speed(d, rate)?,
            lambda: (rate / d).sqrt(),
        }),
        Dispersal::Nonlocal(k) => minimize_objective(d, dispersal, k.radius(), rate),
    }
}

fn minimize_objective(
    d: f64,
    dispersal: &Dispersal,
    radius: f64,
    rate: f64,
) -> Result<SpeedEstimate> {
    let cap = crate::model::kernel::EXP_GUARD / radius;
    let (x0, x1) = (LAMBDA_MIN.ln(), cap.ln());
    let c = |x: f64| speed_objective(d, dispersal, rate, x.exp().min(cap));
    let xs: Vec<f64> = (0..PRESCAN)
        .map(|i| x0 + (x1 - x0) * i as f64 / (PRESCAN - 1) as f64)
        .collect();
    let mut best = (0, f64::INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let v = c(x)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    if best.0 == PRESCAN - 1 {
        return Err(Error::LambdaCap { cap });
    }
    let lo = xs[best.0.saturating_sub(1)];
    let hi = xs[(best.0 + 1).min(PRESCAN - 1)];
    let (x, v) = golden_section_min(c, lo, hi, 1e-13)?;
    // Fall back to the scan if the bracket was not unimodal.
    let (x, v) = if v <= best.1 {
        (x, v)
    } else {
        (xs[best.0], best.1)
    };
    Ok(SpeedEstimate {
        speed: v,
        lambda: x.exp().min(cap),
    })
}

/// Golden-section minimization of `f` on `[a, b]` down to width `tol`.
pub fn golden_section_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..400 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run until the bracket
/// cannot shrink further in floating point.
pub fn bisect(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Internal(format!(
            "bisection bracket [{lo}, {hi}] has no sign change"
        )));
    }
    let lo_sign = flo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest positive `lambda` with `d * symbol(lambda) + rate = c lambda`.
/// Exists whenever `c` exceeds the spreading speed for `rate`.
pub fn envelope_rate(d: f64, dispersal: &Dispersal, rate: f64, c: f64) -> Result<f64> {
    let est = spreading_speed(d, dispersal, rate)?;
    if !(c > est.speed) {
        return Err(Error::Precondition(format!(
            "frame speed {c} must exceed the spreading speed {}",
            est.speed
        )));
    }
    let g = |l: f64| Ok(d * dispersal.symbol(l)? + rate - c * l);
    bisect(g, 1e-12, est.lambda)
}

/// A speed value or the reason it is undefined.
#[derive(Clone, Debug, PartialEq)]
pub enum SpeedValue {
    Defined(SpeedEstimate),
    /// Defined as a combination of other speeds; no minimizing rate.
    Derived(f64),
    Undefined(String),
}

impl SpeedValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            SpeedValue::Defined(e) => Some(e.speed),
            SpeedValue::Derived(v) => Some(*v),
            SpeedValue::Undefined(_) => None,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            SpeedValue::Defined(e) => Some(e.lambda),
            _ => None,
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            SpeedValue::Undefined(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedReport {
    /// Prey speed, rate `r1`.
    pub s_star_prey: SpeedValue,
    /// Predator speed on saturated prey, rate `r2 (b - 1)`.
    pub s_star_pred: SpeedValue,
    /// Prey speed under maximal predation, rate `r1 (1 - a(b - 1))`.
    pub s_dstar_prey: SpeedValue,
    /// Predator speed on minimal prey, rate `r2 (b - 1)(1 - ab)`.
    pub s_dstar_pred: SpeedValue,
    /// `min(s_dstar_prey, s_dstar_pred)`.
    pub s_underline: SpeedValue,
    /// `min(s_star_prey, s_star_pred)`.
    pub s_hat: SpeedValue,
}

impl SpeedReport {
    pub fn rows(&self) -> [(&'static str, &SpeedValue); 6] {
        [
            ("s_star_prey", &self.s_star_prey),
            ("s_star_pred", &self.s_star_pred),
            ("s_dstar_prey", &self.s_dstar_prey),
            ("s_dstar_pred", &self.s_dstar_pred),
            ("s_underline", &self.s_underline),
            ("s_hat", &self.s_hat),
        ]
    }
}

fn speed_or_reason(d: f64, dispersal: &Dispersal, rate: f64) -> Result<SpeedValue> {
    match spreading_speed(d, dispersal, rate) {
        Ok(e) => Ok(SpeedValue::Defined(e)),
        Err(Error::UndefinedSpeed { rate }) => Ok(SpeedValue::Undefined(format!(
            "rate nonpositive ({rate:.6e})"
        ))),
        Err(e) => Err(e),
    }
}

fn min_of(a: &SpeedValue, b: &SpeedValue) -> SpeedValue {
    match (a.value(), b.value()) {
        (Some(x), Some(y)) => SpeedValue::Derived(x.min(y)),
        _ => SpeedValue::Undefined("depends on an undefined speed".into()),
    }
}

pub fn speed_report(model: &ValidatedModel) -> Result<SpeedReport> {
    let p = &model.params;
    let s_star_prey = speed_or_reason(p.d1, &model.prey, p.r1)?;
    let s_star_pred = speed_or_reason(p.d2, &model.predator, p.r2 * (p.b - 1.0))?;
    let s_dstar_prey = speed_or_reason(p.d1, &model.prey, p.r1 * (1.0 - p.a * (p.b - 1.0)))?;
    let s_dstar_pred = speed_or_reason(
        p.d2,
        &model.predator,
        p.r2 * (p.b - 1.0) * (1.0 - p.a * p.b),
    )?;
    let s_underline = min_of(&s_dstar_prey, &s_dstar_pred);
    let s_hat = min_of(&s_star_prey, &s_star_pred);
    Ok(SpeedReport {
        s_star_prey,
        s_star_pred,
        s_dstar_prey,
        s_dstar_pred,
        s_underline,
        s_hat,
    })
}

/// Predator speed on saturated prey together with its minimizing rate.
pub fn predator_speed(model: &ValidatedModel) -> Result<SpeedEstimate> {
    let p = &model.params;
    spreading_speed(p.d2, &model.predator, p.r2 * (p.b - 1.0))
}

/// `Delta(lambda, s) = d2 * symbol2(lambda) + r2 (b - 1) - s lambda`.
pub fn dispersion_delta(lambda: f64, s: f64, model: &ValidatedModel) -> Result<f64> {
    let p = &model.params;
    Ok(p.d2 * model.predator.symbol(lambda)? + p.r2 * (p.b - 1.0) - s * lambda)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRoots {
    TwoRoots { lambda1: f64, lambda2: f64 },
    DoubleRoot { lambda_star: f64 },
    NoRoot,
}

pub fn delta_roots(s: f64, model: &ValidatedModel) -> Result<DeltaRoots> {
    let est = predator_speed(model)?;
    if (s - est.speed).abs() <= DOUBLE_ROOT_BAND * est.speed {
        return Ok(DeltaRoots::DoubleRoot {
            lambda_star: est.lambda,
        });
    }
    if s < est.speed {
        return Ok(DeltaRoots::NoRoot);
    }
    let delta = |l: f64| dispersion_delta(l, s, model);
    let mid = est.lambda;
    if delta(mid)? >= 0.0 {
        // s is above the speed by more than the band, so this cannot happen
        // unless the minimizer is badly off.
        return Err(Error::Internal(format!(
            "Delta is nonnegative at its minimizer for s = {s}"
        )));
    }
    let lambda1 = bisect(delta, 1e-9, mid)?;
    let cap = model.predator.lambda_cap();
    let mut hi = 2.0 * mid;
    while delta(hi.min(cap))? <= 0.0 {
        if hi >= cap {
            return Err(Error::LambdaCap { cap });
        }
        hi *= 2.0;
    }
    let lambda2 = bisect(delta, mid, hi.min(cap))?;
    Ok(DeltaRoots::TwoRoots { lambda1, lambda2 })
}

/// Lower bound on the shift `beta` that makes the fixed-point operators
/// monotone.
pub fn beta_floor(model: &ValidatedModel) -> f64 {
    let p = &model.params;
    let am = model.habitat.left_limit();
    let b1 = p.d1 + p.r1 * (-am + 2.0 + p.a * (p.b - 1.0));
    let b2 = p.d2 + p.r2 * (2.0 * p.b - 1.0);
    b1.max(b2)
}
