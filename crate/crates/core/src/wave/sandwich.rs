//! Ordered pairs of upper and lower solutions bracketing a forced wave.

use super::scalar::{scalar_forced_wave, MarchOptions};
use super::{ProfilePair, WaveGrid, WaveSystem};
use crate::dispersion::{delta_roots, dispersion_delta, predator_speed, DeltaRoots};
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use std::fmt;

/// Constants are doubled at most this many times while searching for a
/// verified sandwich.
const LADDER_CAP: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SandwichKind {
    /// Constant upper pair, lower pair from scalar forced waves.
    Front,
    /// Exponential sandwich for speeds above the predator speed.
    MixedSuper,
    /// `-L z e^{lambda* z}` sandwich at the predator speed.
    MixedCritical,
}

impl fmt::Display for SandwichKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SandwichKind::Front => "front",
            SandwichKind::MixedSuper => "mixed-super",
            SandwichKind::MixedCritical => "mixed-critical",
        })
    }
}

/// Every constant chosen during a construction; unused ones stay `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SandwichParams {
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda_star: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub mu0: Option<f64>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub k: Option<f64>,
    pub big_l: Option<f64>,
    pub big_q: Option<f64>,
    pub q: Option<f64>,
    pub z1: Option<f64>,
    pub z1_hat: Option<f64>,
    pub z2: Option<f64>,
    pub z3: Option<f64>,
}

impl SandwichParams {
    /// Name/value pairs of the constants that were set.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda_star", self.lambda_star),
            ("lambda_tilde", self.lambda_tilde),
            ("mu0", self.mu0),
            ("mu", self.mu),
            ("eta", self.eta),
            ("k", self.k),
            ("L", self.big_l),
            ("Q", self.big_q),
            ("q", self.q),
            ("z1", self.z1),
            ("z1_hat", self.z1_hat),
            ("z2", self.z2),
            ("z3", self.z3),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sandwich {
    pub kind: SandwichKind,
    pub upper: ProfilePair,
    pub lower: ProfilePair,
    pub params: SandwichParams,
    /// Points where a profile switches branch; inequalities are not
    /// checked next to them.
    pub stitches: Vec<f64>,
}

pub fn build_sandwich_front(
    model: &ValidatedModel,
    s: f64,
    grid: WaveGrid,
    march: MarchOptions,
) -> Result<Sandwich> {
    let p = model.params;
    if !model.front_regime {
        return Err(Error::Regime(format!(
            "front-type wave requires ab < 1, got ab = {}",
            p.a * p.b
        )));
    }
    let sys = WaveSystem::new(model, s, grid)?;
    let (_, rho) = model.habitat.approach_constants();
    if !model.habitat.is_test_only() {
        grid.check_width(1.0 / rho, "habitat")?;
    }
    let gamma1 = 1.0 - p.a * (p.b - 1.0);
    let gamma2 = -1.0 + p.b * gamma1;
    let g1: Vec<f64> = sys.alpha.iter().map(|al| al - p.a * (p.b - 1.0)).collect();
    let w1 = scalar_forced_wave(p.d1, &model.prey, s, p.r1, &g1, grid, march)?;
    if !w1.converged {
        return Err(Error::NotConverged {
            what: "lower prey profile".into(),
            residual: w1.residual,
        });
    }
    let g2: Vec<f64> = w1.profile.iter().map(|u| -1.0 + p.b * u).collect();
    let w2 = scalar_forced_wave(p.d2, &model.predator, s, p.r2, &g2, grid, march)?;
    if !w2.converged {
        return Err(Error::NotConverged {
            what: "lower predator profile".into(),
            residual: w2.residual,
        });
    }
    Ok(Sandwich {
        kind: SandwichKind::Front,
        upper: ProfilePair::constant(grid, 1.0, p.b - 1.0),
        lower: ProfilePair {
            grid,
            phi: w1.profile,
            psi: w2.profile,
        },
        params: SandwichParams {
            gamma1: Some(gamma1),
            gamma2: Some(gamma2),
            ..Default::default()
        },
        stitches: Vec::new(),
    })
}

/// Constants of the sandwich above the predator speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedConstants {
    pub mu: f64,
    pub eta: f64,
    pub k: f64,
}

fn regime_below_speed(s: f64, model: &ValidatedModel) -> Error {
    let speed = predator_speed(model).map(|e| e.speed).unwrap_or(f64::NAN);
    Error::Regime(format!(
        "mixed-type sandwich requires s >= s_* = {speed:.6}, got s = {s}; below the predator \
         speed the wave system does not have any positive solution of mixed type"
    ))
}

/// `A(mu) = d1 (M1(mu) - 1) - s mu`.
fn prey_a(model: &ValidatedModel, s: f64, mu: f64) -> Result<f64> {
    Ok(model.params.d1 * model.prey.symbol(mu)? - s * mu)
}

/// Largest `mu0 / 2^j`, `j >= 1`, with `A(mu) < 0`.
fn choose_mu(model: &ValidatedModel, s: f64, mu0: f64) -> Result<f64> {
    let mut mu = mu0;
    for _ in 0..60 {
        mu *= 0.5;
        if prey_a(model, s, mu)? < 0.0 {
            return Ok(mu);
        }
    }
    Err(Error::Internal(format!("no mu below {mu0} with A(mu) < 0")))
}

/// Smallest `eta` that puts `z2 = -ln(eta)/mu` left of `z1`, of the habitat
/// anchor and of zero, and covers the habitat and predation terms.
fn initial_eta(model: &ValidatedModel, mu: f64, z1: f64) -> f64 {
    let (c, _) = model.habitat.approach_constants();
    let offset = model.habitat.offset();
    1f64.max((-mu * z1).exp())
        .max((mu * offset).exp())
        .max(c + model.params.a)
}

fn super_pair(
    grid: WaveGrid,
    b: f64,
    lambda1: f64,
    c: MixedConstants,
) -> (ProfilePair, ProfilePair) {
    let z3 = -c.k.ln() / c.mu;
    let upper = ProfilePair::from_fn(grid, |z| (1.0, (lambda1 * z).exp().min(b - 1.0)));
    let lower = ProfilePair::from_fn(grid, |z| {
        let phi = (1.0 - c.eta * (c.mu * z).exp()).max(0.0);
        let psi = if z < z3 {
            ((lambda1 * z).exp() * (1.0 - c.k * (c.mu * z).exp())).max(0.0)
        } else {
            0.0
        };
        (phi, psi)
    });
    (upper, lower)
}

/// Sandwich above the predator speed with caller-chosen constants.
pub fn mixed_sandwich_with(
    model: &ValidatedModel,
    s: f64,
    grid: WaveGrid,
    constants: MixedConstants,
) -> Result<Sandwich> {
    let DeltaRoots::TwoRoots { lambda1, lambda2 } = delta_roots(s, model)? else {
        return Err(regime_below_speed(s, model));
    };
    let b = model.params.b;
    let (upper, lower) = super_pair(grid, b, lambda1, constants);
    let z1 = (b - 1.0).ln() / lambda1;
    let z2 = -constants.eta.ln() / constants.mu;
    let z3 = -constants.k.ln() / constants.mu;
    Ok(Sandwich {
        kind: SandwichKind::MixedSuper,
        upper,
        lower,
        params: SandwichParams {
            lambda1: Some(lambda1),
            lambda2: Some(lambda2),
            mu: Some(constants.mu),
            eta: Some(constants.eta),
            k: Some(constants.k),
            z1: Some(z1),
            z2: Some(z2),
            z3: Some(z3),
            ..Default::default()
        },
        stitches: vec![z1, z2, z3],
    })
}

pub fn build_sandwich_mixed(
    model: &ValidatedModel,
    s: f64,
    grid: WaveGrid,
    slack_tol: f64,
) -> Result<Sandwich> {
    WaveSystem::new(model, s, grid)?;
    match delta_roots(s, model)? {
        DeltaRoots::NoRoot => Err(regime_below_speed(s, model)),
        DeltaRoots::TwoRoots { lambda1, lambda2 } => {
            build_super(model, s, grid, slack_tol, lambda1, lambda2)
        }
        DeltaRoots::DoubleRoot { lambda_star } => {
            build_critical(model, s, grid, slack_tol, lambda_star)
        }
    }
}

fn build_super(
    model: &ValidatedModel,
    s: f64,
    grid: WaveGrid,
    slack_tol: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<Sandwich> {
    let p = model.params;
    let (_, rho) = model.habitat.approach_constants();
    grid.check_width(1.0 / lambda1, "predator tail")?;
    if !model.habitat.is_test_only() {
        grid.check_width(1.0 / rho, "habitat")?;
    }
    let z1 = (p.b - 1.0).ln() / lambda1;
    let mu0 = (lambda2 - lambda1).min(lambda1).min(rho);
    let mu = choose_mu(model, s, mu0)?;
    let k_floor = |eta: f64| -> Result<f64> {
        let delta = dispersion_delta(lambda1 + mu, s, model)?;
        Ok(eta.max(p.r2 * (p.b * eta + 1.0) / -delta))
    };

    let mut eta = initial_eta(model, mu, z1);
    let mut steps = 0;
    loop {
        let c = MixedConstants {
            mu,
            eta,
            k: k_floor(eta)?,
        };
        let sw = mixed_sandwich_with(model, s, grid, c)?;
        if check_supersub(&sw, model, s, slack_tol)?.slack[2] >= -slack_tol {
            break;
        }
        steps += 1;
        if steps > LADDER_CAP {
            return Err(Error::Internal(
                "no eta up to the ladder cap verifies (l1)".into(),
            ));
        }
        eta *= 2.0;
    }

    let mut k = k_floor(eta)?;
    let mut steps = 0;
    let sw = loop {
        let sw = mixed_sandwich_with(model, s, grid, MixedConstants { mu, eta, k })?;
        if check_supersub(&sw, model, s, slack_tol)?.slack[3] >= -slack_tol {
            break sw;
        }
        steps += 1;
        if steps > LADDER_CAP {
            return Err(Error::Internal(
                "no k up to the ladder cap verifies (l2)".into(),
            ));
        }
        k *= 2.0;
    };
    if sw.lower.psi.iter().all(|&v| v == 0.0) {
        return Err(Error::Grid(format!(
            "lower predator profile vanishes on the grid (cutoff z3 = {:.4} <= z_min = {})",
            sw.params.z3.unwrap_or(f64::NAN),
            grid.z_min
        )));
    }
    let mut sw = sw;
    sw.params.mu0 = Some(mu0);
    Ok(sw)
}

/// `Psi(z) = -L z e^{lambda* z}` crosses `b - 1` at `z1 <= -1/lambda*` and
/// `z1_hat >= -1/lambda*`.
fn critical_crossings(big_l: f64, lambda_star: f64, level: f64) -> Result<(f64, f64)> {
    let psi = |z: f64| -big_l * z * (lambda_star * z).exp() - level;
    let peak = -1.0 / lambda_star;
    if psi(peak) < 0.0 {
        return Err(Error::Internal(
            "L too small for the critical sandwich".into(),
        ));
    }
    let mut lo = peak - 1.0;
    while psi(lo) > 0.0 {
        lo = peak + 2.0 * (lo - peak);
    }
    let z1 = crate::dispersion::bisect(|z| Ok(psi(z)), lo, peak)?;
    let z1_hat = crate::dispersion::bisect(|z| Ok(psi(z)), peak, 0.0)?;
    Ok((z1, z1_hat))
}

fn build_critical(
    model: &ValidatedModel,
    s: f64,
    grid: WaveGrid,
    slack_tol: f64,
    lambda_star: f64,
) -> Result<Sandwich> {
    let p = model.params;
    let tau = model.predator.radius();
    let (_, rho) = model.habitat.approach_constants();
    grid.check_width(1.0 / lambda_star, "predator tail")?;
    let level = p.b - 1.0;

    let mut big_l = level * lambda_star * std::f64::consts::E * (1.0 + 1e-12);
    let mut steps = 0;
    let (z1, z1_hat) = loop {
        let (z1, z1_hat) = critical_crossings(big_l, lambda_star, level)?;
        if z1_hat - z1 > tau {
            break (z1, z1_hat);
        }
        steps += 1;
        if steps > LADDER_CAP {
            return Err(Error::Internal(
                "no L up to the ladder cap separates the crossings".into(),
            ));
        }
        big_l *= 2.0;
    };

    let mu0 = rho.min(0.5 * lambda_star);
    let mu = choose_mu(model, s, mu0)?;
    let lambda_tilde = lambda_star - 0.5 * mu;
    let gap = lambda_star - lambda_tilde;

    let upper = ProfilePair::from_fn(grid, |z| {
        let v = if z < z1 {
            -big_l * z * (lambda_star * z).exp()
        } else {
            level
        };
        (1.0, v)
    });
    let lower_phi = |eta: f64| -> ProfilePair {
        ProfilePair::from_fn(grid, |z| ((1.0 - eta * (mu * z).exp()).max(0.0), 0.0))
    };

    let mut eta = initial_eta(model, mu, z1);
    let mut steps = 0;
    loop {
        let z2 = -eta.ln() / mu;
        let geometric = z2 < -1.0 / gap && -big_l * z2 * (gap * z2).exp() < eta;
        if geometric {
            let probe = Sandwich {
                kind: SandwichKind::MixedCritical,
                upper: upper.clone(),
                lower: lower_phi(eta),
                params: SandwichParams::default(),
                stitches: vec![z1, z2],
            };
            if check_supersub(&probe, model, s, slack_tol)?.slack[2] >= -slack_tol {
                break;
            }
        }
        steps += 1;
        if steps > LADDER_CAP {
            return Err(Error::Internal(
                "no eta up to the ladder cap fits the critical sandwich".into(),
            ));
        }
        eta *= 2.0;
    }
    let z2 = -eta.ln() / mu;

    let big_q = critical_q(model, eta, mu, lambda_star, lambda_tilde);
    let q = big_q.max(big_l * (eta.ln() / mu).sqrt()) * (1.0 + 1e-6);
    let z3 = -(q / big_l).powi(2);
    let params = SandwichParams {
        lambda_star: Some(lambda_star),
        lambda_tilde: Some(lambda_tilde),
        mu0: Some(mu0),
        mu: Some(mu),
        eta: Some(eta),
        big_l: Some(big_l),
        big_q: Some(big_q),
        q: Some(q),
        z1: Some(z1),
        z1_hat: Some(z1_hat),
        z2: Some(z2),
        z3: Some(z3),
        ..Default::default()
    };
    if z3 <= grid.z_min {
        return Err(Error::Grid(format!(
            "critical-speed lower predator profile is supported on z < z3 = {z3:.6e}, \
             left of the window start {}; widen the window or use a speed above s_*",
            grid.z_min
        )));
    }
    let mut lower = lower_phi(eta);
    for (j, v) in lower.psi.iter_mut().enumerate() {
        let z = grid.z(j);
        if z < z3 {
            *v = ((-big_l * z - q * (-z).sqrt()) * (lambda_star * z).exp()).max(0.0);
        }
    }
    Ok(Sandwich {
        kind: SandwichKind::MixedCritical,
        upper,
        lower,
        params,
        stitches: vec![z1, z2, z3],
    })
}

/// `max_{z<0} 8 (-z + tau)^{3/2} I2(z)` over `d2 * int J2 y^2 e^{-lambda* y}`,
/// with `I2(z) = r2 b eta^2 e^{(mu + lt - l*) z} + r2 eta^2 e^{(2 lt - l*) z}`.
pub(crate) fn critical_q(
    model: &ValidatedModel,
    eta: f64,
    mu: f64,
    lambda_star: f64,
    lambda_tilde: f64,
) -> f64 {
    let p = model.params;
    let tau = model.predator.radius();
    let e1 = mu + lambda_tilde - lambda_star;
    let e2 = 2.0 * lambda_tilde - lambda_star;
    let t_max = 60.0 / e1.min(e2);
    let samples = 200_000;
    let numer = (0..=samples)
        .map(|i| {
            let t = t_max * i as f64 / samples as f64;
            let i2 = p.r2 * p.b * eta * eta * (-e1 * t).exp() + p.r2 * eta * eta * (-e2 * t).exp();
            8.0 * (t + tau).powf(1.5) * i2
        })
        .fold(0.0, f64::max);
    let denom = p.d2 * model.predator.weighted_second_moment(lambda_star);
    numer / denom
}

/// Worst signed slack of each discrete inequality, in the order
/// upper-prey, upper-predator, lower-prey, lower-predator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupersubReport {
    pub slack: [f64; 4],
    pub ordered: bool,
    pub pass: bool,
    pub checked_nodes: usize,
}

pub const INEQUALITY_NAMES: [&str; 4] = ["u1", "u2", "l1", "l2"];

pub fn check_supersub(
    sandwich: &Sandwich,
    model: &ValidatedModel,
    s: f64,
    slack_tol: f64,
) -> Result<SupersubReport> {
    let grid = sandwich.upper.grid;
    let sys = WaveSystem::new(model, s, grid)?;
    let n = grid.n;
    let (up, lo) = (&sandwich.upper, &sandwich.lower);
    let mut rhs = vec![0.0; n];
    let mut adv = vec![0.0; n];
    let mut worst = [f64::INFINITY; 4];

    let edge = sys.n1.half_width().max(sys.n2.half_width()) + 2;
    let near_stitch = |z: f64| {
        sandwich
            .stitches
            .iter()
            .any(|st| (z - st).abs() <= 2.0 * grid.h)
    };
    let mask: Vec<bool> = (0..n)
        .map(|j| j >= edge && j + edge < n && !near_stitch(grid.z(j)))
        .collect();
    let checked_nodes = mask.iter().filter(|m| **m).count();

    let mut fold = |idx: usize, vals: &[f64], sign: f64, adv: &[f64]| {
        for j in 0..n {
            if mask[j] {
                let v = sign * (adv[j] - vals[j]);
                worst[idx] = worst[idx].min(v);
            }
        }
    };

    sys.prey_rhs(&up.phi, &lo.psi, &mut rhs);
    sys.upwind(&up.phi, &mut adv);
    fold(0, &rhs, 1.0, &adv);
    sys.predator_rhs(&up.phi, &up.psi, &mut rhs);
    sys.upwind(&up.psi, &mut adv);
    fold(1, &rhs, 1.0, &adv);
    sys.prey_rhs(&lo.phi, &up.psi, &mut rhs);
    sys.upwind(&lo.phi, &mut adv);
    fold(2, &rhs, -1.0, &adv);
    sys.predator_rhs(&lo.phi, &lo.psi, &mut rhs);
    sys.upwind(&lo.psi, &mut adv);
    fold(3, &rhs, -1.0, &adv);

    let ordered = lo.phi.iter().zip(&up.phi).all(|(l, u)| l <= u)
        && lo.psi.iter().zip(&up.psi).all(|(l, u)| l <= u);
    let pass = ordered && worst.iter().all(|&w| w >= -slack_tol);
    Ok(SupersubReport {
        slack: worst,
        ordered,
        pass,
        checked_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, HabitatProfile, Kernel, ModelParams};
    use crate::wave::tests::homogeneous_model;

    fn uniform_model() -> ValidatedModel {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 1.2);
        let k = Kernel::uniform(1.0, 2001).unwrap();
        validate_model(
            p,
            Some((k.clone(), k)),
            HabitatProfile::tanh(-1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn exact_constants_have_zero_slack() {
        let m = homogeneous_model(false);
        let c = m.coexistence();
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let pair = ProfilePair::constant(g, c.u_star, c.v_star);
        let sw = Sandwich {
            kind: SandwichKind::Front,
            upper: pair.clone(),
            lower: pair,
            params: SandwichParams::default(),
            stitches: vec![],
        };
        let r = check_supersub(&sw, &m, 0.5, 1e-12).unwrap();
        assert!(r.pass);
        assert!(r.slack.iter().all(|v| v.abs() < 1e-15), "{:?}", r.slack);
    }

    #[test]
    fn front_sandwich_verifies() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        let k = Kernel::raised_cosine(1.0, 2001).unwrap();
        let m = validate_model(
            p,
            Some((k.clone(), k)),
            HabitatProfile::tanh(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        let g = WaveGrid::new(-60.0, 60.0, 0.1).unwrap();
        let sw = build_sandwich_front(&m, 0.5, g, MarchOptions::default()).unwrap();
        assert!((sw.params.gamma1.unwrap() - 0.6).abs() < 1e-15);
        assert!((sw.params.gamma2.unwrap() - 0.2).abs() < 1e-15);
        assert!((sw.lower.psi[0] - 0.2).abs() < 1e-2);
        let r = check_supersub(&sw, &m, 0.5, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn front_needs_ab_below_one() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.5, 2.0, 0.5).local();
        let m = validate_model(p, None, HabitatProfile::tanh(-1.0, 1.0).unwrap()).unwrap();
        let g = WaveGrid::new(-60.0, 60.0, 0.1).unwrap();
        let err = build_sandwich_front(&m, 0.5, g, MarchOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Regime(_)));
    }

    #[test]
    fn mixed_super_uniform_verifies() {
        let m = uniform_model();
        let g = WaveGrid::new(-100.0, 100.0, 0.05).unwrap();
        let sw = build_sandwich_mixed(&m, 1.2, g, 1e-3).unwrap();
        assert_eq!(sw.kind, SandwichKind::MixedSuper);
        let prm = &sw.params;
        let (l1, z1) = (prm.lambda1.unwrap(), prm.z1.unwrap());
        assert!(((l1 * z1).exp() - 1.0).abs() < 1e-12);
        let (k, mu) = (prm.k.unwrap(), prm.mu.unwrap());
        assert!(((mu * prm.z3.unwrap()).exp() * k - 1.0).abs() < 1e-12);
        for v in [l1, prm.lambda2.unwrap(), mu, prm.eta.unwrap(), k] {
            assert!(v.is_finite() && v > 0.0);
        }
        let r = check_supersub(&sw, &m, 1.2, 1e-3).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(sw.lower.psi.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn mixed_below_speed_is_a_regime_error() {
        let m = uniform_model();
        let g = WaveGrid::new(-100.0, 100.0, 0.05).unwrap();
        let err = build_sandwich_mixed(&m, 0.5, g, 1e-3).unwrap_err();
        assert!(matches!(err, Error::Regime(_)));
        assert!(err
            .to_string()
            .contains("does not have any positive solution"));
    }

    #[test]
    fn shrinking_k_breaks_lower_predator_inequality() {
        let m = uniform_model();
        let g = WaveGrid::new(-100.0, 100.0, 0.05).unwrap();
        let sw = build_sandwich_mixed(&m, 1.2, g, 1e-3).unwrap();
        let prm = &sw.params;
        let mut k = prm.k.unwrap();
        let mut worst = 0.0;
        for _ in 0..30 {
            k *= 0.5;
            let c = MixedConstants {
                mu: prm.mu.unwrap(),
                eta: prm.eta.unwrap(),
                k,
            };
            let bad = mixed_sandwich_with(&m, 1.2, g, c).unwrap();
            worst = check_supersub(&bad, &m, 1.2, 1e-3).unwrap().slack[3];
            if worst < 0.0 {
                break;
            }
        }
        assert!(worst < 0.0, "slack stayed {worst}");
    }

    #[test]
    fn critical_crossings_bracket_peak() {
        let (z1, zh) = critical_crossings(4.0, 1.0, 1.0).unwrap();
        assert!(z1 < -1.0 && zh > -1.0);
        for z in [z1, zh] {
            assert!((-4.0 * z * z.exp() - 1.0).abs() < 1e-12);
        }
    }
}
