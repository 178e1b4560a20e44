//! Forced waves as steady states of the moving-frame evolution
//! `w_t = rhs(w) - s D^- w`, marched with explicit Euler steps.

use super::{
    classify_tails, Method, MonotoneDiagnostics, ProfilePair, SolveStatus, WaveSolution,
    WaveSystem, DEFAULT_EDGE_FRACTION, DEFAULT_TAIL_TOL, FLUSH,
};
use crate::error::{Error, Result};
use crate::model::ValidatedModel;

/// Iterates may leave the invariant box by at most this much.
const BOX_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxOptions {
    /// Time step; the stability bound is used when `None`.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// Stop once the sup of both residuals falls below this.
    pub steady_tol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 5000.0,
            steady_tol: 1e-9,
        }
    }
}

/// Largest stable explicit step for the wave system on its grid.
pub fn relaxation_dt_bound(sys: &WaveSystem) -> f64 {
    let p = &sys.model.params;
    let alpha_abs = sys.alpha.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let c = sys.s / sys.grid.h;
    let lam1 = alpha_abs + 2.0 + p.a * (p.b - 1.0);
    let lam2 = 2.0 * p.b;
    let rate1 = p.d1 * sys.n1.loss_rate() + c + p.r1 * lam1;
    let rate2 = p.d2 * sys.n2.loss_rate() + c + p.r2 * lam2;
    0.9 / rate1.max(rate2)
}

pub fn solve_wave_relaxation(
    init: &ProfilePair,
    model: &ValidatedModel,
    s: f64,
    opts: RelaxOptions,
) -> Result<WaveSolution> {
    let grid = init.grid;
    let sys = WaveSystem::new(model, s, grid)?;
    let b = model.params.b;
    init.check_bounds(b, 0.0).map_err(|e| {
        Error::Precondition(format!("initial profile outside the invariant box: {e}"))
    })?;
    let bound = relaxation_dt_bound(&sys);
    let dt = match opts.dt {
        Some(dt) if !(dt > 0.0) || dt > bound => {
            return Err(Error::Precondition(format!(
                "time step {dt} must lie in (0, {bound:.6e}]"
            )))
        }
        Some(dt) => dt,
        None => bound,
    };

    let mut pair = init.clone();
    let mut t = 0.0;
    let mut iterations = 0;
    let interior = 1..grid.n - 1;
    let rate = loop {
        let (r1, r2) = sys.residuals(&pair);
        let rate = r1[interior.clone()]
            .iter()
            .chain(&r2[interior.clone()])
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        if !rate.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "relaxation produced a non-finite residual".into(),
            });
        }
        if rate < opts.steady_tol || t >= opts.t_max {
            break rate;
        }
        for (w, r) in pair
            .phi
            .iter_mut()
            .zip(&r1)
            .chain(pair.psi.iter_mut().zip(&r2))
        {
            *w += dt * r;
            if w.abs() < FLUSH {
                *w = 0.0;
            }
        }
        pair.check_bounds(b, BOX_SLACK)?;
        t += dt;
        iterations += 1;
    };

    let converged = rate < opts.steady_tol;
    let tail = classify_tails(&pair, model, DEFAULT_TAIL_TOL, DEFAULT_EDGE_FRACTION);
    Ok(WaveSolution {
        residual: sys.residual_sup(&pair),
        pair,
        tail,
        iterations,
        method: Method::Relaxation,
        status: if converged {
            SolveStatus::Converged
        } else {
            SolveStatus::NotConverged
        },
        gap: rate,
        diagnostics: MonotoneDiagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::tests::homogeneous_model;
    use crate::wave::WaveGrid;

    #[test]
    fn coexistence_is_steady_immediately() {
        let m = homogeneous_model(false);
        let c = m.coexistence();
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let init = ProfilePair::constant(g, c.u_star, c.v_star);
        let sol = solve_wave_relaxation(&init, &m, 0.5, RelaxOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn relaxes_to_coexistence() {
        let m = homogeneous_model(true);
        let c = m.coexistence();
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let init = ProfilePair::constant(g, 0.9, 0.5);
        let sol = solve_wave_relaxation(&init, &m, 0.5, RelaxOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.pair.phi[100] - c.u_star).abs() < 1e-8);
        assert!((sol.pair.psi[100] - c.v_star).abs() < 1e-8);
    }

    #[test]
    fn short_budget_reports_not_converged() {
        let m = homogeneous_model(true);
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let init = ProfilePair::constant(g, 0.9, 0.5);
        let opts = RelaxOptions {
            t_max: 0.1,
            ..Default::default()
        };
        let sol = solve_wave_relaxation(&init, &m, 0.5, opts).unwrap();
        assert_eq!(sol.status, SolveStatus::NotConverged);
    }

    #[test]
    fn oversized_step_rejected() {
        let m = homogeneous_model(true);
        let g = WaveGrid::new(-20.0, 20.0, 0.1).unwrap();
        let init = ProfilePair::constant(g, 0.9, 0.5);
        let opts = RelaxOptions {
            dt: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            solve_wave_relaxation(&init, &m, 0.5, opts),
            Err(Error::Precondition(_))
        ));
    }
}
