//! The shifted fixed-point operators and the coupled monotone iteration
//! between an upper and a lower solution.
//!
//! `P_i` inverts `s w' + beta w = F_i(phi, psi)` with
//! `F_1 = beta phi + d1 N1[phi] + r1 phi (alpha(-z) - phi - a psi)` and
//! `F_2 = beta psi + d2 N2[psi] + r2 psi (-1 + b phi - psi)`. The inverse is
//! taken in the same upwind discretization as the residual, so fixed points
//! are exact zeros of the discrete wave equations. With diffusion the
//! second difference goes to the implicit side and the inverse is a
//! tridiagonal M-matrix solve.

use super::{
    classify_tails, sup_diff, Method, MonotoneDiagnostics, ProfilePair, Sandwich, SolveStatus,
    WaveGrid, WaveSolution, WaveSystem, DEFAULT_EDGE_FRACTION, DEFAULT_TAIL_TOL, FLUSH,
};
use crate::dispersion::beta_floor;
use crate::error::{Error, Result};
use crate::model::{Dispersal, ValidatedModel};
use crate::ops::Closure;

/// Constant-coefficient tridiagonal system with boundary rows, stored in
/// factored (Thomas) form.
#[derive(Clone, Debug)]
struct Tridiagonal {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    denom: Vec<f64>,
}

impl Tridiagonal {
    /// Rows of `s D^- P - d D^2 P + beta P` with constant ghost values.
    fn upwind_diffusion(n: usize, s: f64, d: f64, beta: f64, h: f64) -> Self {
        let (c, k) = (s / h, d / (h * h));
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for j in 0..n {
            let first = j == 0;
            let last = j == n - 1;
            lower[j] = if first { 0.0 } else { -c - k };
            upper[j] = if last { 0.0 } else { -k };
            diag[j] = beta
                + if first { 0.0 } else { c }
                + if first { 0.0 } else { k }
                + if last { 0.0 } else { k };
        }
        let mut upper_mod = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        upper_mod[0] = upper[0] / denom[0];
        for j in 1..n {
            denom[j] = diag[j] - lower[j] * upper_mod[j - 1];
            upper_mod[j] = upper[j] / denom[j];
        }
        Self {
            lower,
            upper_mod,
            denom,
        }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] /= self.denom[0];
        for j in 1..n {
            rhs[j] = (rhs[j] - self.lower[j] * rhs[j - 1]) / self.denom[j];
        }
        for j in (0..n - 1).rev() {
            rhs[j] -= self.upper_mod[j] * rhs[j + 1];
        }
    }
}

/// `P_1` and `P_2` for one wave system and one shift `beta`.
#[derive(Clone, Debug)]
pub struct FixedPointOperators {
    sys: WaveSystem,
    beta: f64,
    tri: Option<(Tridiagonal, Tridiagonal)>,
}

impl FixedPointOperators {
    pub fn new(sys: WaveSystem, beta: f64) -> Result<Self> {
        let floor = beta_floor(&sys.model);
        if !(beta > floor) {
            return Err(Error::Precondition(format!(
                "beta = {beta} must exceed the monotonicity floor {floor}"
            )));
        }
        let p = sys.model.params;
        let (n, h, s) = (sys.grid.n, sys.grid.h, sys.s);
        let tri = match (&sys.model.prey, &sys.model.predator) {
            (Dispersal::Local, Dispersal::Local) => Some((
                Tridiagonal::upwind_diffusion(n, s, p.d1, beta, h),
                Tridiagonal::upwind_diffusion(n, s, p.d2, beta, h),
            )),
            (Dispersal::Nonlocal(_), Dispersal::Nonlocal(_)) => None,
            _ => {
                return Err(Error::Precondition(
                    "both species must use the same dispersal mode".into(),
                ))
            }
        };
        Ok(Self { sys, beta, tri })
    }

    pub fn system(&self) -> &WaveSystem {
        &self.sys
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn invert(&self, which: usize, f: &mut [f64]) {
        match &self.tri {
            Some((t1, t2)) => {
                if which == 1 {
                    t1.solve(f)
                } else {
                    t2.solve(f)
                }
            }
            None => {
                // s (P_j - P_{j-1}) / h + beta P_j = F_j, P_{-1} = P_0.
                let c = self.sys.s / self.sys.grid.h;
                let denom = c + self.beta;
                f[0] /= self.beta;
                for j in 1..f.len() {
                    f[j] = (c * f[j - 1] + f[j]) / denom;
                }
            }
        }
        for v in f.iter_mut() {
            if v.abs() < FLUSH {
                *v = 0.0;
            }
        }
    }

    pub fn p1(&self, phi: &[f64], psi: &[f64], out: &mut [f64]) {
        let p = &self.sys.model.params;
        if self.tri.is_some() {
            for j in 0..phi.len() {
                out[j] = self.beta * phi[j]
                    + p.r1 * phi[j] * (self.sys.alpha[j] - phi[j] - p.a * psi[j]);
            }
        } else {
            self.sys.n1.apply(phi, Closure::Constant, out);
            for j in 0..phi.len() {
                out[j] = self.beta * phi[j]
                    + p.d1 * out[j]
                    + p.r1 * phi[j] * (self.sys.alpha[j] - phi[j] - p.a * psi[j]);
            }
        }
        self.invert(1, out);
    }

    pub fn p2(&self, phi: &[f64], psi: &[f64], out: &mut [f64]) {
        let p = &self.sys.model.params;
        if self.tri.is_some() {
            for j in 0..psi.len() {
                out[j] = self.beta * psi[j] + p.r2 * psi[j] * (-1.0 + p.b * phi[j] - psi[j]);
            }
        } else {
            self.sys.n2.apply(psi, Closure::Constant, out);
            for j in 0..psi.len() {
                out[j] = self.beta * psi[j]
                    + p.d2 * out[j]
                    + p.r2 * psi[j] * (-1.0 + p.b * phi[j] - psi[j]);
            }
        }
        self.invert(2, out);
    }
}

pub fn apply_p1(
    phi: &[f64],
    psi: &[f64],
    beta: f64,
    s: f64,
    model: &ValidatedModel,
    grid: WaveGrid,
) -> Result<Vec<f64>> {
    let ops = FixedPointOperators::new(WaveSystem::new(model, s, grid)?, beta)?;
    let mut out = vec![0.0; grid.n];
    ops.p1(phi, psi, &mut out);
    Ok(out)
}

pub fn apply_p2(
    phi: &[f64],
    psi: &[f64],
    beta: f64,
    s: f64,
    model: &ValidatedModel,
    grid: WaveGrid,
) -> Result<Vec<f64>> {
    let ops = FixedPointOperators::new(WaveSystem::new(model, s, grid)?, beta)?;
    let mut out = vec![0.0; grid.n];
    ops.p2(phi, psi, &mut out);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneOptions {
    /// Stop once `sup |upper - lower| < tol`.
    pub tol: f64,
    pub maxiter: usize,
    /// `beta = beta_factor * beta_floor`.
    pub beta_factor: f64,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            maxiter: 100_000,
            beta_factor: 1.1,
        }
    }
}

fn project(v: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((x, l), h) in v.iter_mut().zip(lo).zip(hi) {
        *x = x.clamp(*l, *h);
    }
}

fn max_excess(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x - y).fold(0.0, f64::max)
}

/// Iterates `upper.phi <- P1(upper.phi, lower.psi)`,
/// `upper.psi <- P2(upper.phi, upper.psi)`,
/// `lower.phi <- P1(lower.phi, upper.psi_prev)`,
/// `lower.psi <- P2(lower.phi, lower.psi)`, keeping every iterate inside
/// the initial sandwich.
pub fn solve_wave_monotone(
    sandwich: &Sandwich,
    model: &ValidatedModel,
    s: f64,
    opts: MonotoneOptions,
) -> Result<WaveSolution> {
    let grid = sandwich.upper.grid;
    let sys = WaveSystem::new(model, s, grid)?;
    let beta = opts.beta_factor * beta_floor(model);
    let ops = FixedPointOperators::new(sys, beta)?;
    let b = model.params.b;
    sandwich.upper.check_bounds(b, 1e-12)?;
    sandwich.lower.check_bounds(b, 1e-12)?;
    let (hi, lo) = (&sandwich.upper, &sandwich.lower);
    let start_violation = max_excess(&lo.phi, &hi.phi).max(max_excess(&lo.psi, &hi.psi));
    if start_violation > 0.0 {
        return Err(Error::Precondition(format!(
            "lower solution exceeds upper solution by {start_violation:e}"
        )));
    }

    let mut up = hi.clone();
    let mut dn = lo.clone();
    let n = grid.n;
    let mut buf = vec![0.0; n];
    let mut psi_prev = vec![0.0; n];
    let mut diag = MonotoneDiagnostics::default();
    let mut gap = up.sup_distance(&dn);
    let mut iterations = 0;
    let tol_order = |x: f64| 10.0 * f64::EPSILON * x.abs().max(1.0);

    while gap >= opts.tol && iterations < opts.maxiter {
        iterations += 1;
        psi_prev.copy_from_slice(&up.psi);

        ops.p1(&up.phi, &dn.psi, &mut buf);
        project(&mut buf, &lo.phi, &hi.phi);
        diag.upper_increase = diag.upper_increase.max(max_excess(&buf, &up.phi));
        std::mem::swap(&mut up.phi, &mut buf);

        ops.p2(&up.phi, &up.psi, &mut buf);
        project(&mut buf, &lo.psi, &hi.psi);
        diag.upper_increase = diag.upper_increase.max(max_excess(&buf, &up.psi));
        std::mem::swap(&mut up.psi, &mut buf);

        ops.p1(&dn.phi, &psi_prev, &mut buf);
        project(&mut buf, &lo.phi, &hi.phi);
        diag.lower_decrease = diag.lower_decrease.max(max_excess(&dn.phi, &buf));
        std::mem::swap(&mut dn.phi, &mut buf);

        ops.p2(&dn.phi, &dn.psi, &mut buf);
        project(&mut buf, &lo.psi, &hi.psi);
        diag.lower_decrease = diag.lower_decrease.max(max_excess(&dn.psi, &buf));
        std::mem::swap(&mut dn.psi, &mut buf);

        for (l, u) in dn.phi.iter().zip(&up.phi).chain(dn.psi.iter().zip(&up.psi)) {
            let excess = l - u;
            if excess > 0.0 {
                diag.order_violation = diag.order_violation.max(excess);
                if excess > tol_order(*u) {
                    return Err(Error::Internal(format!(
                        "monotone sweep {iterations} broke the ordering by {excess:e}"
                    )));
                }
            }
        }
        if !(up.phi.iter().chain(&up.psi).all(|v| v.is_finite())) {
            return Err(Error::Internal("monotone iteration produced NaN".into()));
        }
        gap = sup_diff(&up.phi, &dn.phi).max(sup_diff(&up.psi, &dn.psi));
    }

    let pair = ProfilePair::midpoint(&up, &dn);
    let residual = ops.system().residual_sup(&pair);
    let tail = classify_tails(&pair, model, DEFAULT_TAIL_TOL, DEFAULT_EDGE_FRACTION);
    Ok(WaveSolution {
        pair,
        residual,
        tail,
        iterations,
        method: Method::Monotone,
        status: if gap < opts.tol {
            SolveStatus::Converged
        } else {
            SolveStatus::QuasiSolution
        },
        gap,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, HabitatProfile, Kernel, ModelParams};
    use crate::wave::tests::homogeneous_model;
    use proptest::prelude::*;

    #[test]
    fn constants_are_fixed_points() {
        for local in [false, true] {
            let m = homogeneous_model(local);
            let c = m.coexistence();
            let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
            let beta = 1.1 * beta_floor(&m);
            let phi = vec![c.u_star; g.n];
            let psi = vec![c.v_star; g.n];
            let p1 = apply_p1(&phi, &psi, beta, 0.5, &m, g).unwrap();
            let p2 = apply_p2(&phi, &psi, beta, 0.5, &m, g).unwrap();
            assert!(p1.iter().all(|v| (v - c.u_star).abs() < 1e-12));
            assert!(p2.iter().all(|v| (v - c.v_star).abs() < 1e-12));
        }
    }

    #[test]
    fn beta_at_floor_rejected() {
        let m = homogeneous_model(false);
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let phi = vec![0.5; g.n];
        let err = apply_p1(&phi, &phi, beta_floor(&m), 0.5, &m, g).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    fn tanh_model(local: bool) -> ValidatedModel {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        let h = HabitatProfile::tanh(-1.0, 1.0).unwrap();
        if local {
            validate_model(p.local(), None, h).unwrap()
        } else {
            let k = Kernel::raised_cosine(1.0, 2001).unwrap();
            validate_model(p, Some((k.clone(), k)), h).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn operators_are_monotone(
            seed in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 64),
            local in any::<bool>(),
        ) {
            let m = tanh_model(local);
            let g = WaveGrid::new(-3.15, 3.15, 0.1).unwrap();
            let beta = 1.1 * beta_floor(&m);
            let b1 = m.params.b - 1.0;
            let phi_lo: Vec<f64> = seed.iter().map(|t| t.0 * t.1).collect();
            let phi_hi: Vec<f64> = seed.iter().map(|t| t.0).collect();
            let psi_lo: Vec<f64> = seed.iter().map(|t| b1 * t.2 * t.3).collect();
            let psi_hi: Vec<f64> = seed.iter().map(|t| b1 * t.2).collect();
            let eps = 1e-12;
            // P1 increasing in phi, decreasing in psi.
            let a = apply_p1(&phi_lo, &psi_hi, beta, 0.5, &m, g).unwrap();
            let b = apply_p1(&phi_hi, &psi_hi, beta, 0.5, &m, g).unwrap();
            let c = apply_p1(&phi_hi, &psi_lo, beta, 0.5, &m, g).unwrap();
            for j in 0..g.n {
                prop_assert!(a[j] <= b[j] + eps && b[j] <= c[j] + eps);
            }
            // P2 increasing in both.
            let a = apply_p2(&phi_lo, &psi_lo, beta, 0.5, &m, g).unwrap();
            let b = apply_p2(&phi_hi, &psi_lo, beta, 0.5, &m, g).unwrap();
            let c = apply_p2(&phi_hi, &psi_hi, beta, 0.5, &m, g).unwrap();
            for j in 0..g.n {
                prop_assert!(a[j] <= b[j] + eps && b[j] <= c[j] + eps);
            }
        }
    }

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let n = 12;
        let t = Tridiagonal::upwind_diffusion(n, 0.7, 1.3, 5.0, 0.25);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        // Apply the operator directly, then solve back.
        let (c, k) = (0.7 / 0.25, 1.3 / 0.0625);
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            let l = if j == 0 { x[0] } else { x[j - 1] };
            let r = if j == n - 1 { x[n - 1] } else { x[j + 1] };
            rhs[j] = c * (x[j] - l) - k * (l - 2.0 * x[j] + r) + 5.0 * x[j];
        }
        t.solve(&mut rhs);
        for j in 0..n {
            assert!((rhs[j] - x[j]).abs() < 1e-12);
        }
    }
}
