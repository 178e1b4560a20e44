//! Scalar forced waves `s w' = d N[w] + r w (g(z) - w)`, found as steady
//! states of the moving-frame evolution.

use super::{WaveGrid, FLUSH};
use crate::error::{Error, Result};
use crate::model::Dispersal;
use crate::ops::{Closure, DiscreteDispersal};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarchOptions {
    /// Time step; the stability bound is used when `None`.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// Stop once `sup |w_new - w| / dt` falls below this.
    pub steady_tol: f64,
}

impl Default for MarchOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 5000.0,
            steady_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarWave {
    pub profile: Vec<f64>,
    /// Sup of the discrete equation residual over interior nodes.
    pub residual: f64,
    pub time: f64,
    pub converged: bool,
}

/// Marches from the constant `max(g(z_min), 0)`.
pub fn scalar_forced_wave(
    d: f64,
    dispersal: &Dispersal,
    s: f64,
    rate: f64,
    g: &[f64],
    grid: WaveGrid,
    opts: MarchOptions,
) -> Result<ScalarWave> {
    let init = vec![g[0].max(0.0); grid.n];
    scalar_forced_wave_from(d, dispersal, s, rate, g, grid, init, opts)
}

#[allow(clippy::too_many_arguments)]
pub fn scalar_forced_wave_from(
    d: f64,
    dispersal: &Dispersal,
    s: f64,
    rate: f64,
    g: &[f64],
    grid: WaveGrid,
    init: Vec<f64>,
    opts: MarchOptions,
) -> Result<ScalarWave> {
    let n = grid.n;
    if g.len() != n || init.len() != n {
        return Err(Error::Grid(
            "rate profile and initial data must match the grid".into(),
        ));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("climate speed must be positive, got {s}"),
        });
    }
    if init.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Precondition(
            "initial profile must be nonnegative".into(),
        ));
    }
    let op = DiscreteDispersal::new(dispersal, grid.h)?;
    let g_abs = g.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let w_max = init.iter().chain(g.iter()).fold(0.0, |m: f64, v| m.max(*v));
    let c = s / grid.h;
    let bound = 0.9 / (d * op.loss_rate() + c + rate * (g_abs + 2.0 * w_max));
    let dt = match opts.dt {
        Some(dt) if dt > bound => {
            return Err(Error::Precondition(format!(
                "time step {dt} exceeds the stability bound {bound:.6e}"
            )))
        }
        Some(dt) => dt,
        None => bound,
    };

    let mut w = init;
    let mut nw = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut t = 0.0;
    let mut converged = false;
    while t < opts.t_max {
        op.apply(&w, Closure::Constant, &mut rhs);
        let mut change: f64 = 0.0;
        for j in 0..n {
            let back = if j == 0 { w[0] } else { w[j - 1] };
            let r = d * rhs[j] + rate * w[j] * (g[j] - w[j]) - c * (w[j] - back);
            let mut v = w[j] + dt * r;
            if v.abs() < FLUSH {
                v = 0.0;
            }
            nw[j] = v;
            change = change.max(r.abs());
        }
        if !change.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "scalar wave march produced a non-finite value".into(),
            });
        }
        std::mem::swap(&mut w, &mut nw);
        t += dt;
        if change < opts.steady_tol {
            converged = true;
            break;
        }
    }
    op.apply(&w, Closure::Constant, &mut rhs);
    let residual = (1..n - 1)
        .map(|j| (d * rhs[j] + rate * w[j] * (g[j] - w[j]) - c * (w[j] - w[j - 1])).abs())
        .fold(0.0, f64::max);
    Ok(ScalarWave {
        profile: w,
        residual,
        time: t,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::spreading_speed;
    use crate::model::{HabitatProfile, Kernel};

    fn grid() -> WaveGrid {
        WaveGrid::new(-60.0, 60.0, 0.1).unwrap()
    }

    #[test]
    fn constant_rate_is_a_fixed_point() {
        let g = grid();
        let rate = vec![0.7; g.n];
        let k = Dispersal::Nonlocal(Kernel::raised_cosine(1.0, 2001).unwrap());
        let w = scalar_forced_wave(1.0, &k, 0.5, 1.0, &rate, g, MarchOptions::default()).unwrap();
        assert!(w.converged);
        assert!(w.profile.iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn habitat_wave_limits() {
        // g(z) = alpha(-z) - a(b-1) with a(b-1) = 0.4.
        let g = grid();
        let h = HabitatProfile::tanh(-1.0, 1.0).unwrap();
        let rate: Vec<f64> = (0..g.n).map(|j| h.value(-g.z(j)) - 0.4).collect();
        let k = Dispersal::Nonlocal(Kernel::raised_cosine(1.0, 2001).unwrap());
        let w = scalar_forced_wave(1.0, &k, 0.3, 1.0, &rate, g, MarchOptions::default()).unwrap();
        assert!(w.converged, "residual {}", w.residual);
        assert!((w.profile[0] - 0.6).abs() < 1e-2);
        assert!(w.profile[g.n - 1] < 1e-2);
        assert!(w.residual < 1e-8);
    }

    #[test]
    fn compact_data_collapse_above_the_speed() {
        // Above the spreading speed for the favorable rate, a compactly
        // supported start is swept into the unfavorable side and dies out.
        let g = grid();
        let h = HabitatProfile::tanh(-1.0, 1.0).unwrap();
        let rate: Vec<f64> = (0..g.n).map(|j| h.value(-g.z(j)) - 0.4).collect();
        let disp = Dispersal::Local;
        let speed = spreading_speed(1.0, &disp, 0.6).unwrap().speed;
        let init: Vec<f64> = (0..g.n)
            .map(|j| {
                let z = g.z(j);
                if z.abs() < 5.0 {
                    0.6 * (std::f64::consts::PI * z / 10.0).cos().powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        let opts = MarchOptions {
            t_max: 200.0,
            ..Default::default()
        };
        let w =
            scalar_forced_wave_from(1.0, &disp, speed + 0.3, 1.0, &rate, g, init, opts).unwrap();
        let peak = w.profile.iter().fold(0.0, |m: f64, v| m.max(*v));
        assert!(peak < 1e-3, "peak {peak}");
    }

    #[test]
    fn explicit_dt_above_bound_rejected() {
        let g = grid();
        let rate = vec![1.0; g.n];
        let opts = MarchOptions {
            dt: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            scalar_forced_wave(1.0, &Dispersal::Local, 0.5, 1.0, &rate, g, opts),
            Err(Error::Precondition(_))
        ));
    }
}
