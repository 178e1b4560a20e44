//! Forced traveling waves in the frame moving with the climate.
//!
//! Profiles use the coordinate `z` in which the favorable habitat lies at
//! `z -> -infinity`: `alpha` is evaluated at `-z`. The wave equations read
//! `s phi' = d1 N1[phi] + r1 phi (alpha(-z) - phi - a psi)` and
//! `s psi' = d2 N2[psi] + r2 psi (-1 + b phi - psi)`, discretized with a
//! backward (upwind) difference for the derivative and constant extension
//! past the grid ends.

pub mod monotone;
pub mod relax;
pub mod sandwich;
pub mod scalar;

pub use monotone::{apply_p1, apply_p2, solve_wave_monotone, FixedPointOperators, MonotoneOptions};
pub use relax::{relaxation_dt_bound, solve_wave_relaxation, RelaxOptions};
pub use sandwich::{
    build_sandwich_front, build_sandwich_mixed, check_supersub, mixed_sandwich_with,
    MixedConstants, Sandwich, SandwichKind, SandwichParams, SupersubReport,
};
pub use scalar::{scalar_forced_wave, scalar_forced_wave_from, MarchOptions, ScalarWave};

use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::ops::{Closure, DiscreteDispersal};
use std::fmt;

/// Values below this are flushed to zero to keep iterations out of the
/// subnormal range.
pub(crate) const FLUSH: f64 = 1e-280;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveGrid {
    pub z_min: f64,
    pub h: f64,
    pub n: usize,
}

impl WaveGrid {
    pub fn new(z_min: f64, z_max: f64, h: f64) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite() && z_max > z_min) {
            return Err(Error::Grid(format!("bad extent [{z_min}, {z_max}]")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Grid(format!("spacing must be positive, got {h}")));
        }
        let cells = (z_max - z_min) / h;
        let m = cells.round();
        if (cells - m).abs() > 1e-6 {
            return Err(Error::Grid(format!(
                "extent {} is not a multiple of the spacing {h}",
                z_max - z_min
            )));
        }
        let n = m as usize + 1;
        if n < 16 {
            return Err(Error::Grid(format!("too few nodes ({n})")));
        }
        Ok(Self { z_min, h, n })
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.h
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.n - 1)
    }

    pub fn width(&self) -> f64 {
        self.z_max() - self.z_min
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.z(j)).collect()
    }

    /// The window must span at least 40 decay lengths `scale`.
    pub fn check_width(&self, scale: f64, what: &str) -> Result<()> {
        if self.width() < 40.0 * scale {
            return Err(Error::Grid(format!(
                "window width {} is below 40 x {what} length {scale:.4}",
                self.width()
            )));
        }
        Ok(())
    }
}

/// Sampled `(phi, psi)` on a wave grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePair {
    pub grid: WaveGrid,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ProfilePair {
    pub fn constant(grid: WaveGrid, phi: f64, psi: f64) -> Self {
        Self {
            grid,
            phi: vec![phi; grid.n],
            psi: vec![psi; grid.n],
        }
    }

    pub fn from_fn(grid: WaveGrid, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (phi, psi) = (0..grid.n).map(|j| f(grid.z(j))).unzip();
        Self { grid, phi, psi }
    }

    pub fn midpoint(a: &Self, b: &Self) -> Self {
        let mid = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| 0.5 * (p + q)).collect();
        Self {
            grid: a.grid,
            phi: mid(&a.phi, &b.phi),
            psi: mid(&a.psi, &b.psi),
        }
    }

    /// Sup-norm distance over both components.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_diff(&self.phi, &other.phi).max(sup_diff(&self.psi, &other.psi))
    }

    /// Checks `0 <= phi <= 1` and `0 <= psi <= b - 1` within `slack`.
    pub fn check_bounds(&self, b: f64, slack: f64) -> Result<()> {
        let bad_phi = self
            .phi
            .iter()
            .position(|&v| !(v >= -slack && v <= 1.0 + slack));
        let bad_psi = self
            .psi
            .iter()
            .position(|&v| !(v >= -slack && v <= b - 1.0 + slack));
        if let Some(j) = bad_phi {
            return Err(Error::Internal(format!(
                "phi = {} leaves [0, 1] at z = {}",
                self.phi[j],
                self.grid.z(j)
            )));
        }
        if let Some(j) = bad_psi {
            return Err(Error::Internal(format!(
                "psi = {} leaves [0, b-1] at z = {}",
                self.psi[j],
                self.grid.z(j)
            )));
        }
        Ok(())
    }

    /// The profile in the original orientation: `hat(xi) = profile(-xi)`,
    /// on the grid `[-z_max, -z_min]`.
    pub fn reflected(&self) -> Self {
        let grid = WaveGrid {
            z_min: -self.grid.z_max(),
            h: self.grid.h,
            n: self.grid.n,
        };
        let rev = |v: &[f64]| v.iter().rev().copied().collect();
        Self {
            grid,
            phi: rev(&self.phi),
            psi: rev(&self.psi),
        }
    }
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// The discretized wave system at a fixed speed on a fixed grid.
#[derive(Clone, Debug)]
pub struct WaveSystem {
    pub model: ValidatedModel,
    pub s: f64,
    pub grid: WaveGrid,
    pub n1: DiscreteDispersal,
    pub n2: DiscreteDispersal,
    /// `alpha(-z_j)`.
    pub alpha: Vec<f64>,
}

impl WaveSystem {
    pub fn new(model: &ValidatedModel, s: f64, grid: WaveGrid) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s",
                reason: format!("climate speed must be positive, got {s}"),
            });
        }
        let n1 = DiscreteDispersal::new(&model.prey, grid.h)?;
        let n2 = DiscreteDispersal::new(&model.predator, grid.h)?;
        let alpha = (0..grid.n)
            .map(|j| model.habitat.value(-grid.z(j)))
            .collect();
        Ok(Self {
            model: model.clone(),
            s,
            grid,
            n1,
            n2,
            alpha,
        })
    }

    /// `d1 N1[phi] + r1 phi (alpha(-z) - phi - a psi)` at every node.
    pub fn prey_rhs(&self, phi: &[f64], psi: &[f64], out: &mut [f64]) {
        let p = &self.model.params;
        self.n1.apply(phi, Closure::Constant, out);
        for j in 0..phi.len() {
            out[j] = p.d1 * out[j] + p.r1 * phi[j] * (self.alpha[j] - phi[j] - p.a * psi[j]);
        }
    }

    /// `d2 N2[psi] + r2 psi (-1 + b phi - psi)` at every node.
    pub fn predator_rhs(&self, phi: &[f64], psi: &[f64], out: &mut [f64]) {
        let p = &self.model.params;
        self.n2.apply(psi, Closure::Constant, out);
        for j in 0..psi.len() {
            out[j] = p.d2 * out[j] + p.r2 * psi[j] * (-1.0 + p.b * phi[j] - psi[j]);
        }
    }

    /// `s (w_j - w_{j-1}) / h`, with `w_{-1} = w_0`.
    pub fn upwind(&self, w: &[f64], out: &mut [f64]) {
        let c = self.s / self.grid.h;
        out[0] = 0.0;
        for j in 1..w.len() {
            out[j] = c * (w[j] - w[j - 1]);
        }
    }

    /// Residuals `rhs - s D^- w` of both equations.
    pub fn residuals(&self, pair: &ProfilePair) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n;
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        let mut adv = vec![0.0; n];
        self.prey_rhs(&pair.phi, &pair.psi, &mut r1);
        self.upwind(&pair.phi, &mut adv);
        for (r, a) in r1.iter_mut().zip(&adv) {
            *r -= a;
        }
        self.predator_rhs(&pair.phi, &pair.psi, &mut r2);
        self.upwind(&pair.psi, &mut adv);
        for (r, a) in r2.iter_mut().zip(&adv) {
            *r -= a;
        }
        (r1, r2)
    }

    /// Sup of both residuals over interior nodes.
    pub fn residual_sup(&self, pair: &ProfilePair) -> f64 {
        let (r1, r2) = self.residuals(pair);
        let n = self.grid.n;
        r1[1..n - 1]
            .iter()
            .chain(&r2[1..n - 1])
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Residual of the original-orientation system
    /// `-s hat' = d N[hat] + f(alpha(xi))` for a reflected pair, with the
    /// derivative taken as the forward difference.
    pub fn residual_sup_reflected(&self, hat: &ProfilePair) -> f64 {
        let n = hat.grid.n;
        let p = &self.model.params;
        let c = self.s / hat.grid.h;
        let mut n1 = vec![0.0; n];
        let mut n2 = vec![0.0; n];
        self.n1.apply(&hat.phi, Closure::Constant, &mut n1);
        self.n2.apply(&hat.psi, Closure::Constant, &mut n2);
        let mut worst: f64 = 0.0;
        for j in 1..n - 1 {
            let alpha = self.model.habitat.value(hat.grid.z(j));
            let (u, v) = (hat.phi[j], hat.psi[j]);
            let f1 = p.d1 * n1[j] + p.r1 * u * (alpha - u - p.a * v);
            let f2 = p.d2 * n2[j] + p.r2 * v * (-1.0 + p.b * u - v);
            let e1 = f1 + c * (hat.phi[j + 1] - u);
            let e2 = f2 + c * (hat.psi[j + 1] - v);
            worst = worst.max(e1.abs()).max(e2.abs());
        }
        worst
    }
}

pub fn residual_sup(pair: &ProfilePair, model: &ValidatedModel, s: f64) -> Result<f64> {
    Ok(WaveSystem::new(model, s, pair.grid)?.residual_sup(pair))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailTag {
    /// `(u*, v*)` on the favorable side, `(0, 0)` on the other.
    Front,
    /// `(1, 0)` on the favorable side, `(0, 0)` on the other.
    MixedFrontPulse,
    Pulse,
    Trivial,
    Other,
}

impl fmt::Display for TailTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailTag::Front => "Front",
            TailTag::MixedFrontPulse => "MixedFrontPulse",
            TailTag::Pulse => "Pulse",
            TailTag::Trivial => "Trivial",
            TailTag::Other => "Other",
        })
    }
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-2;
pub const DEFAULT_EDGE_FRACTION: f64 = 0.05;

/// Mean `(phi, psi)` over the outer `edge_fraction` of nodes at each end.
pub fn edge_means(pair: &ProfilePair, edge_fraction: f64) -> ((f64, f64), (f64, f64)) {
    let n = pair.grid.n;
    let k = ((edge_fraction * n as f64).floor() as usize).clamp(1, n);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (
        (mean(&pair.phi[..k]), mean(&pair.psi[..k])),
        (mean(&pair.phi[n - k..]), mean(&pair.psi[n - k..])),
    )
}

pub fn classify_tails(
    pair: &ProfilePair,
    model: &ValidatedModel,
    tail_tol: f64,
    edge_fraction: f64,
) -> TailTag {
    let (left, right) = edge_means(pair, edge_fraction);
    let near = |x: (f64, f64), t: (f64, f64)| {
        (x.0 - t.0).abs() <= tail_tol && (x.1 - t.1).abs() <= tail_tol
    };
    let c = model.coexistence();
    if !near(right, (0.0, 0.0)) {
        return TailTag::Other;
    }
    if near(left, (c.u_star, c.v_star)) {
        TailTag::Front
    } else if near(left, (1.0, 0.0)) {
        TailTag::MixedFrontPulse
    } else if near(left, (0.0, 0.0)) {
        let peak = pair
            .phi
            .iter()
            .chain(&pair.psi)
            .fold(0.0, |m: f64, v| m.max(*v));
        if peak > tail_tol {
            TailTag::Pulse
        } else {
            TailTag::Trivial
        }
    } else {
        TailTag::Other
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Monotone,
    Relaxation,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Monotone => "monotone",
            Method::Relaxation => "relaxation",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// The monotone iteration stopped with a remaining gap between the
    /// upper and lower iterates.
    QuasiSolution,
    /// The relaxation did not reach steady state within its time budget.
    NotConverged,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::QuasiSolution => "quasi-solution",
            SolveStatus::NotConverged => "not-converged",
        })
    }
}

/// Worst observed departures from the monotone-iteration invariants.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MonotoneDiagnostics {
    /// `max(lower - upper)` over all sweeps.
    pub order_violation: f64,
    /// `max(upper_{n+1} - upper_n)`.
    pub upper_increase: f64,
    /// `max(lower_n - lower_{n+1})`.
    pub lower_decrease: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveSolution {
    pub pair: ProfilePair,
    pub residual: f64,
    pub tail: TailTag,
    pub iterations: usize,
    pub method: Method,
    pub status: SolveStatus,
    /// Remaining upper-lower gap (monotone) or last steady-state rate
    /// (relaxation).
    pub gap: f64,
    pub diagnostics: MonotoneDiagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, HabitatProfile, Kernel, ModelParams};

    pub(crate) fn homogeneous_model(local: bool) -> ValidatedModel {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        if local {
            validate_model(p.local(), None, HabitatProfile::homogeneous()).unwrap()
        } else {
            let k = Kernel::raised_cosine(1.0, 2001).unwrap();
            validate_model(p, Some((k.clone(), k)), HabitatProfile::homogeneous()).unwrap()
        }
    }

    #[test]
    fn grid_construction() {
        let g = WaveGrid::new(-10.0, 10.0, 0.1).unwrap();
        assert_eq!(g.n, 201);
        assert!((g.z_max() - 10.0).abs() < 1e-12);
        assert!(WaveGrid::new(-10.0, 10.0, 0.3).is_err());
        assert!(g.check_width(0.6, "test").is_err());
        assert!(g.check_width(0.49, "test").is_ok());
    }

    #[test]
    fn coexistence_constants_have_zero_residual() {
        for local in [false, true] {
            let m = homogeneous_model(local);
            let c = m.coexistence();
            let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
            let pair = ProfilePair::constant(g, c.u_star, c.v_star);
            let r = residual_sup(&pair, &m, 0.5).unwrap();
            assert!(r <= 10.0 * f64::EPSILON, "{r}");
        }
    }

    #[test]
    fn saturated_constants_residual_matches_habitat_gap() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        let k = Kernel::raised_cosine(1.0, 2001).unwrap();
        let m = validate_model(
            p,
            Some((k.clone(), k)),
            HabitatProfile::tanh(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let pair = ProfilePair::constant(g, 1.0, 1.0);
        let r = residual_sup(&pair, &m, 0.5).unwrap();
        let expected = (1..g.n - 1)
            .map(|j| (m.habitat.value(-g.z(j)) - 1.0 - 0.4).abs())
            .fold(0.0, f64::max);
        assert!((r - expected).abs() < 1e-12, "{r} vs {expected}");
    }

    #[test]
    fn tail_tags() {
        let m = homogeneous_model(true);
        let c = m.coexistence();
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let tag = |p: &ProfilePair| classify_tails(p, &m, DEFAULT_TAIL_TOL, DEFAULT_EDGE_FRACTION);
        assert_eq!(
            tag(&ProfilePair::constant(g, c.u_star, c.v_star)),
            TailTag::Other
        );
        assert_eq!(tag(&ProfilePair::constant(g, 0.0, 0.0)), TailTag::Trivial);
        let front = ProfilePair::from_fn(g, |z| {
            let w = 0.5 * (1.0 - (z).tanh());
            (c.u_star * w, c.v_star * w)
        });
        assert_eq!(tag(&front), TailTag::Front);
        let mixed = ProfilePair::from_fn(g, |z| (0.5 * (1.0 - z.tanh()), 0.3 / z.cosh()));
        assert_eq!(tag(&mixed), TailTag::MixedFrontPulse);
        let pulse = ProfilePair::from_fn(g, |z| (0.5 / z.cosh(), 0.0));
        assert_eq!(tag(&pulse), TailTag::Pulse);
    }

    #[test]
    fn reflection_flips_grid() {
        let g = WaveGrid::new(-5.0, 15.0, 0.5).unwrap();
        let p = ProfilePair::from_fn(g, |z| (z, 2.0 * z));
        let r = p.reflected();
        assert_eq!(r.grid.z_min, -15.0);
        assert_eq!(r.phi[0], 15.0);
        assert_eq!(r.reflected(), p);
    }
}
