//! Cauchy problems on a static wide domain: explicit Euler stepping,
//! moving-frame probes and field snapshots.
//!
//! The prey sees the habitat `alpha(x - s t)`, so the favorable side lies
//! ahead of the point `x = s t`. Nonlocal runs fill values past the grid
//! ends by constant extension, local runs by reflection.

pub mod classify;
pub mod envelope;

pub use classify::{
    bands_for, classify_outcome, Band, BandKind, BandVerdict, OutcomeReport, Thresholds, Verdict,
};
pub use envelope::{envelope_amplitude, envelope_check, EnvelopeReport, Species};

use crate::dispersion::spreading_speed;
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::ops::{Closure, DiscreteDispersal};
use crate::wave::WaveGrid;
use std::f64::consts::PI;
use std::str::FromStr;

/// Nodewise slack allowed above the invariant box before a step is
/// reported as broken.
const CLASS_SLACK: f64 = 1e-9;

/// Densities on a uniform grid at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub x_min: f64,
    pub h: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl Field {
    pub fn zeros(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        let g = WaveGrid::new(x_min, x_max, h)?;
        Ok(Self {
            x_min,
            h,
            u: vec![0.0; g.n],
            v: vec![0.0; g.n],
            t: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n() - 1)
    }

    /// Linear interpolation of `(u, v)` at `x`, or `None` outside the grid.
    pub fn sample(&self, x: f64) -> Option<(f64, f64)> {
        let pos = (x - self.x_min) / self.h;
        let last = self.n() - 1;
        if !(pos >= -1e-9 && pos <= last as f64 + 1e-9) {
            return None;
        }
        let pos = pos.clamp(0.0, last as f64);
        let j = (pos.floor() as usize).min(last - 1);
        let w = pos - j as f64;
        let lerp = |a: &[f64]| (1.0 - w) * a[j] + w * a[j + 1];
        Some((lerp(&self.u), lerp(&self.v)))
    }

    /// Checks `0 <= u <= 1` and `0 <= v <= b - 1` within `slack`.
    pub fn check_class(&self, b: f64, slack: f64) -> Result<()> {
        let bad = |w: &[f64], top: f64| w.iter().position(|&x| !(x >= -slack && x <= top + slack));
        if let Some(j) = bad(&self.u, 1.0) {
            return Err(Error::Internal(format!(
                "u = {} leaves [0, 1] at x = {}, t = {}",
                self.u[j],
                self.x(j),
                self.t
            )));
        }
        if let Some(j) = bad(&self.v, b - 1.0) {
            return Err(Error::Internal(format!(
                "v = {} leaves [0, b-1] at x = {}, t = {}",
                self.v[j],
                self.x(j),
                self.t
            )));
        }
        Ok(())
    }

    /// Smallest interval holding every nonzero node, or `None` for zero data.
    pub fn support(&self) -> Option<(f64, f64)> {
        let nz = |j: &usize| self.u[*j] != 0.0 || self.v[*j] != 0.0;
        let first = (0..self.n()).find(nz)?;
        let last = (0..self.n()).rev().find(nz)?;
        Some((self.x(first), self.x(last)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    /// Cosine-squared bumps of both species at the same center.
    Bump,
    /// Prey bump at `center - width`, predator bump at `center + width`.
    PairOfBumps,
    /// Smoothed step: full amplitude left of `center - width/2`, zero right
    /// of `center + width/2`.
    FrontLike,
}

impl FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bump" => Ok(InitialKind::Bump),
            "pair-of-bumps" => Ok(InitialKind::PairOfBumps),
            "front-like" => Ok(InitialKind::FrontLike),
            other => Err(Error::Config(format!(
                "unknown initial kind `{other}` (expected bump, pair-of-bumps or front-like)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialData {
    pub kind: InitialKind,
    pub center: f64,
    pub width: f64,
    pub amplitude_u: f64,
    pub amplitude_v: f64,
}

fn bump(x: f64, center: f64, width: f64) -> f64 {
    let y = x - center;
    if y.abs() <= 0.5 * width {
        (PI * y / width).cos().powi(2)
    } else {
        0.0
    }
}

fn ramp(x: f64, center: f64, width: f64) -> f64 {
    let y = x - (center - 0.5 * width);
    if y <= 0.0 {
        1.0
    } else if y >= width {
        0.0
    } else {
        (0.5 * PI * y / width).cos().powi(2)
    }
}

pub fn make_initial(data: &InitialData, b: f64, x_min: f64, x_max: f64, h: f64) -> Result<Field> {
    if !(data.width > 0.0 && data.width.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "width",
            reason: format!("must be positive, got {}", data.width),
        });
    }
    if !(0.0..=1.0).contains(&data.amplitude_u) {
        return Err(Error::InvalidParameter {
            name: "amplitude_u",
            reason: format!("must lie in [0, 1], got {}", data.amplitude_u),
        });
    }
    if !(data.amplitude_v >= 0.0 && data.amplitude_v <= b - 1.0) {
        return Err(Error::InvalidParameter {
            name: "amplitude_v",
            reason: format!(
                "must lie in [0, b-1] = [0, {}], got {}",
                b - 1.0,
                data.amplitude_v
            ),
        });
    }
    let mut f = Field::zeros(x_min, x_max, h)?;
    let (c, w) = (data.center, data.width);
    for j in 0..f.n() {
        let x = f.x(j);
        let (pu, pv) = match data.kind {
            InitialKind::Bump => (bump(x, c, w), bump(x, c, w)),
            InitialKind::PairOfBumps => (bump(x, c - w, w), bump(x, c + w, w)),
            InitialKind::FrontLike => (ramp(x, c, w), ramp(x, c, w)),
        };
        f.u[j] = data.amplitude_u * pu;
        f.v[j] = data.amplitude_v * pv;
    }
    Ok(f)
}

/// Reaction bounds `Lambda1 = max|alpha| + 2 + a(b-1)`, `Lambda2 = 2b`.
fn reaction_bounds(model: &ValidatedModel) -> (f64, f64) {
    let p = &model.params;
    let alpha_abs = model.habitat.left_limit().abs().max(1.0);
    (alpha_abs + 2.0 + p.a * (p.b - 1.0), 2.0 * p.b)
}

/// Largest admissible explicit step: `0.9 / max_i (d_i L_i + r_i Lambda_i)`
/// with `L_i = 2` for kernels and `2/h^2` for the Laplacian.
pub fn dt_max(model: &ValidatedModel, h: f64) -> Result<f64> {
    let p = &model.params;
    let n1 = DiscreteDispersal::new(&model.prey, h)?;
    let n2 = DiscreteDispersal::new(&model.predator, h)?;
    let (l1, l2) = reaction_bounds(model);
    let rate1 = p.d1 * n1.loss_rate() + p.r1 * l1;
    let rate2 = p.d2 * n2.loss_rate() + p.r2 * l2;
    Ok(0.9 / rate1.max(rate2))
}

/// Explicit Euler integrator with preallocated work buffers.
#[derive(Clone, Debug)]
pub struct Stepper {
    model: ValidatedModel,
    n1: DiscreteDispersal,
    n2: DiscreteDispersal,
    closure: Closure,
    dt: f64,
    work_u: Vec<f64>,
    work_v: Vec<f64>,
}

impl Stepper {
    pub fn new(model: &ValidatedModel, h: f64, dt: f64) -> Result<Self> {
        let bound = dt_max(model, h)?;
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "time step {dt} must lie in (0, {bound:.6e}]"
            )));
        }
        Ok(Self {
            model: model.clone(),
            n1: DiscreteDispersal::new(&model.prey, h)?,
            n2: DiscreteDispersal::new(&model.predator, h)?,
            closure: if model.is_local() {
                Closure::Mirror
            } else {
                Closure::Constant
            },
            dt,
            work_u: Vec::new(),
            work_v: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn advance(&mut self, f: &mut Field) -> Result<()> {
        let n = f.n();
        let p = self.model.params;
        self.work_u.resize(n, 0.0);
        self.work_v.resize(n, 0.0);
        self.n1.apply(&f.u, self.closure, &mut self.work_u);
        self.n2.apply(&f.v, self.closure, &mut self.work_v);
        let shift = p.s * f.t;
        let dt = self.dt;
        for j in 0..n {
            let (u, v) = (f.u[j], f.v[j]);
            let alpha = self.model.habitat.value(f.x(j) - shift);
            let du = p.d1 * self.work_u[j] + p.r1 * u * (alpha - u - p.a * v);
            let dv = p.d2 * self.work_v[j] + p.r2 * v * (-1.0 + p.b * u - v);
            self.work_u[j] = u + dt * du;
            self.work_v[j] = v + dt * dv;
        }
        if self
            .work_u
            .iter()
            .chain(&self.work_v)
            .any(|x| !x.is_finite())
        {
            return Err(Error::Integration {
                t: f.t,
                reason: "non-finite density".into(),
            });
        }
        std::mem::swap(&mut f.u, &mut self.work_u);
        std::mem::swap(&mut f.v, &mut self.work_v);
        f.t += dt;
        Ok(())
    }
}

/// One Euler step of size `dt`.
pub fn step(state: &Field, model: &ValidatedModel, dt: f64) -> Result<Field> {
    let mut out = state.clone();
    Stepper::new(model, state.h, dt)?.advance(&mut out)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    /// Frame speeds `c`; each frame is sampled at `x = c t`.
    pub frames: Vec<f64>,
    /// Sampling interval in time.
    pub cadence: f64,
    /// Times at which full snapshots are kept.
    pub snapshot_times: Vec<f64>,
}

impl ProbeConfig {
    /// Frames `0, step, 2 step, ...` up to `top`.
    pub fn uniform_frames(top: f64, step: f64, cadence: f64) -> Self {
        let count = (top / step).floor() as usize;
        Self {
            frames: (0..=count).map(|i| i as f64 * step).collect(),
            cadence,
            snapshot_times: Vec::new(),
        }
    }
}

/// Moving-frame samples plus whole-line maxima at each sampled time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbeSeries {
    pub frames: Vec<f64>,
    pub times: Vec<f64>,
    /// `u[k][i]`: value at time `times[k]` in frame `frames[i]`.
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub sup_u: Vec<f64>,
    pub sup_v: Vec<f64>,
}

impl ProbeSeries {
    pub fn new(frames: Vec<f64>) -> Self {
        Self {
            frames,
            ..Default::default()
        }
    }

    pub fn record(&mut self, f: &Field) -> Result<()> {
        let mut row_u = Vec::with_capacity(self.frames.len());
        let mut row_v = Vec::with_capacity(self.frames.len());
        for &c in &self.frames {
            let (u, v) = f
                .sample(c * f.t)
                .ok_or_else(|| Error::Grid(format!("frame {c} at t = {} leaves the grid", f.t)))?;
            row_u.push(u);
            row_v.push(v);
        }
        self.times.push(f.t);
        self.u.push(row_u);
        self.v.push(row_v);
        self.sup_u.push(f.u.iter().fold(0.0, |m: f64, x| m.max(*x)));
        self.sup_v.push(f.v.iter().fold(0.0, |m: f64, x| m.max(*x)));
        Ok(())
    }

    pub fn last_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub field: Field,
    pub probes: ProbeSeries,
    pub snapshots: Vec<Field>,
    pub steps: usize,
    pub dt: f64,
}

/// Fastest speed any part of the solution can travel: `max(s, s*, s_*)`.
pub fn guard_speed(model: &ValidatedModel) -> Result<f64> {
    let p = &model.params;
    let prey = spreading_speed(p.d1, &model.prey, p.r1)?.speed;
    let pred = spreading_speed(p.d2, &model.predator, p.r2 * (p.b - 1.0))?.speed;
    Ok(p.s.max(prey).max(pred))
}

/// The support of the data, widened by `c T + 3 tau` on each side where
/// the data vanish at the grid end, must stay inside the grid.
pub fn domain_guard(model: &ValidatedModel, init: &Field, t_end: f64) -> Result<()> {
    let Some((lo, hi)) = init.support() else {
        return Ok(());
    };
    let reach = guard_speed(model)? * t_end + 3.0 * model.max_radius().max(init.h);
    let n = init.n();
    let open_left = init.u[0] == 0.0 && init.v[0] == 0.0;
    let open_right = init.u[n - 1] == 0.0 && init.v[n - 1] == 0.0;
    if open_left && lo - reach < init.x_min {
        return Err(Error::Grid(format!(
            "domain too short on the left: need x_min <= {:.3}, have {}",
            lo - reach,
            init.x_min
        )));
    }
    if open_right && hi + reach > init.x_max() {
        return Err(Error::Grid(format!(
            "domain too short on the right: need x_max >= {:.3}, have {}",
            hi + reach,
            init.x_max()
        )));
    }
    Ok(())
}

/// Advances `init` to `t_end`, sampling every `cadence` and keeping the
/// requested snapshots. The step is `t_end / ceil(t_end / dt)`.
pub fn run(
    model: &ValidatedModel,
    init: &Field,
    t_end: f64,
    probes: &ProbeConfig,
    dt: Option<f64>,
) -> Result<RunOutput> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must be nonnegative, got {t_end}"),
        });
    }
    if !(probes.cadence > 0.0) {
        return Err(Error::InvalidParameter {
            name: "cadence",
            reason: format!("must be positive, got {}", probes.cadence),
        });
    }
    init.check_class(model.params.b, 0.0)
        .map_err(|e| Error::Precondition(format!("initial data outside the invariant box: {e}")))?;
    domain_guard(model, init, t_end)?;
    for &c in &probes.frames {
        // Frame speeds are built by accumulation; allow for rounding.
        let slack = 1e-9 * init.x_max().abs().max(init.x_min.abs()).max(1.0);
        for x in [0.0, c * t_end] {
            if x < init.x_min - slack || x > init.x_max() + slack {
                return Err(Error::Grid(format!(
                    "frame {c} leaves the grid by t = {t_end}"
                )));
            }
        }
    }

    let bound = dt_max(model, init.h)?;
    let dt_req = match dt {
        Some(d) if !(d > 0.0) || d > bound * (1.0 + 1e-12) => {
            return Err(Error::Precondition(format!(
                "time step {d} must lie in (0, {bound:.6e}]"
            )))
        }
        Some(d) => d,
        None => bound,
    };
    let steps = if t_end == 0.0 {
        0
    } else {
        ((t_end / dt_req) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    };
    let dt = if steps == 0 {
        dt_req
    } else {
        t_end / steps as f64
    };
    let every = ((probes.cadence / dt).round() as usize).max(1);
    let snap_steps: Vec<usize> = probes
        .snapshot_times
        .iter()
        .map(|&ts| ((ts / dt).round() as usize).min(steps))
        .collect();

    let mut stepper = Stepper::new(model, init.h, dt)?;
    let mut field = init.clone();
    let mut series = ProbeSeries::new(probes.frames.clone());
    let mut snapshots = Vec::new();
    let b = model.params.b;
    for k in 0..=steps {
        if k > 0 {
            stepper.advance(&mut field)?;
            field.check_class(b, CLASS_SLACK)?;
            if k == steps {
                field.t = t_end;
            }
        }
        if k % every == 0 || k == steps {
            series.record(&field)?;
        }
        for _ in snap_steps.iter().filter(|&&s| s == k) {
            snapshots.push(field.clone());
        }
    }
    Ok(RunOutput {
        field,
        probes: series,
        snapshots,
        steps,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, HabitatProfile, Kernel, ModelParams};
    use proptest::prelude::*;

    fn local_model(s: f64) -> ValidatedModel {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.25, 0.3, 2.0, s).local();
        validate_model(p, None, HabitatProfile::tanh(-1.0, 1.0).unwrap()).unwrap()
    }

    fn homogeneous(local: bool) -> ValidatedModel {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        if local {
            validate_model(p.local(), None, HabitatProfile::homogeneous()).unwrap()
        } else {
            let k = Kernel::raised_cosine(1.0, 2001).unwrap();
            validate_model(p, Some((k.clone(), k)), HabitatProfile::homogeneous()).unwrap()
        }
    }

    #[test]
    fn bump_support_and_peak() {
        let data = InitialData {
            kind: InitialKind::Bump,
            center: 0.0,
            width: 10.0,
            amplitude_u: 1.0,
            amplitude_v: 0.5,
        };
        let f = make_initial(&data, 2.0, -20.0, 20.0, 0.1).unwrap();
        let (lo, hi) = f.support().unwrap();
        assert!(lo >= -5.0 - 1e-12 && hi <= 5.0 + 1e-12 && lo < -4.8 && hi > 4.8);
        assert_eq!(f.u[200], 1.0);
        assert_eq!(f.v[200], 0.5);
        assert!(f.u[149] == 0.0 && f.u[251] == 0.0);
    }

    #[test]
    fn zero_amplitudes_and_class_violation() {
        let mut data = InitialData {
            kind: InitialKind::PairOfBumps,
            center: 0.0,
            width: 4.0,
            amplitude_u: 0.0,
            amplitude_v: 0.0,
        };
        let f = make_initial(&data, 2.0, -20.0, 20.0, 0.1).unwrap();
        assert!(f.support().is_none());
        data.amplitude_v = 1.1;
        assert!(matches!(
            make_initial(&data, 2.0, -20.0, 20.0, 0.1),
            Err(Error::InvalidParameter {
                name: "amplitude_v",
                ..
            })
        ));
    }

    #[test]
    fn zero_and_equilibrium_are_fixed() {
        for local in [false, true] {
            let m = homogeneous(local);
            let dt = dt_max(&m, 0.1).unwrap();
            let mut f = Field::zeros(-10.0, 10.0, 0.1).unwrap();
            let z = step(&f, &m, dt).unwrap();
            assert!(z.u.iter().chain(&z.v).all(|&x| x == 0.0));
            f.u.fill(1.0);
            let mut st = Stepper::new(&m, 0.1, dt).unwrap();
            for _ in 0..100 {
                st.advance(&mut f).unwrap();
            }
            assert!(f.u.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn oversized_step_rejected_before_work() {
        let m = homogeneous(true);
        let f = Field::zeros(-10.0, 10.0, 0.1).unwrap();
        let dt = dt_max(&m, 0.1).unwrap();
        assert!(matches!(
            step(&f, &m, 1.01 * dt),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_horizon_probes_initial_values() {
        let m = local_model(1.5);
        let data = InitialData {
            kind: InitialKind::Bump,
            center: 0.0,
            width: 10.0,
            amplitude_u: 1.0,
            amplitude_v: 1.0,
        };
        let f = make_initial(&data, 2.0, -50.0, 50.0, 0.5).unwrap();
        let cfg = ProbeConfig::uniform_frames(2.0, 0.5, 1.0);
        let out = run(&m, &f, 0.0, &cfg, None).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.probes.times, vec![0.0]);
        assert!(out.probes.u[0].iter().all(|&u| u == 1.0));
    }

    #[test]
    fn guard_rejects_short_domain() {
        let m = local_model(1.5);
        let data = InitialData {
            kind: InitialKind::Bump,
            center: 0.0,
            width: 10.0,
            amplitude_u: 1.0,
            amplitude_v: 1.0,
        };
        let f = make_initial(&data, 2.0, -50.0, 50.0, 0.5).unwrap();
        let cfg = ProbeConfig::uniform_frames(2.0, 0.5, 1.0);
        assert!(matches!(run(&m, &f, 40.0, &cfg, None), Err(Error::Grid(_))));
        assert!(run(&m, &f, 10.0, &cfg, None).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ordered_data_stay_ordered(seed_lo in 0.0..0.5f64, extra in 0.0..0.5f64, c in -5.0..5.0f64) {
            // Scalar comparison: predator frozen at zero.
            let m = local_model(1.0);
            let dt = dt_max(&m, 0.25).unwrap();
            let mk = |amp: f64| {
                let data = InitialData {
                    kind: InitialKind::Bump,
                    center: c,
                    width: 8.0,
                    amplitude_u: amp,
                    amplitude_v: 0.0,
                };
                make_initial(&data, 2.0, -30.0, 30.0, 0.25).unwrap()
            };
            let mut lo = mk(seed_lo);
            let mut hi = mk(seed_lo + extra);
            let mut st = Stepper::new(&m, 0.25, dt).unwrap();
            for _ in 0..200 {
                st.advance(&mut lo).unwrap();
                st.advance(&mut hi).unwrap();
                prop_assert!(lo.u.iter().zip(&hi.u).all(|(a, b)| a <= b));
            }
        }
    }
}
