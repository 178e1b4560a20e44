//! Scenario runners shared by the command line and the acceptance suite.

use crate::config::{MethodChoice, ScenarioConfig, WaveType};
use crate::dispersion::speed_report;
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::sim::{
    classify_outcome, guard_speed, make_initial, run, BandVerdict, OutcomeReport, ProbeConfig,
    ProbeSeries, RunOutput, Verdict,
};
use crate::wave::{
    build_sandwich_front, build_sandwich_mixed, check_supersub, solve_wave_monotone,
    solve_wave_relaxation, MarchOptions, MonotoneOptions, ProfilePair, RelaxOptions, Sandwich,
    SolveStatus, SupersubReport, TailTag, WaveGrid, WaveSolution, WaveSystem,
};
use rayon::prelude::*;

/// Everything the `wave` command computes.
#[derive(Clone, Debug)]
pub struct WaveRun {
    pub wave_type: WaveType,
    pub sandwich: Sandwich,
    pub supersub: SupersubReport,
    pub solutions: Vec<WaveSolution>,
    pub expected_tail: TailTag,
    pub system: WaveSystem,
}

impl WaveRun {
    /// Every solver converged and found the expected tails.
    pub fn success(&self) -> bool {
        self.solutions
            .iter()
            .all(|s| s.status == SolveStatus::Converged && s.tail == self.expected_tail)
    }
}

pub fn resolve_wave_type(model: &ValidatedModel, requested: WaveType) -> WaveType {
    match requested {
        WaveType::Auto if model.front_regime => WaveType::Front,
        WaveType::Auto => WaveType::Mixed,
        other => other,
    }
}

pub fn wave_grid(cfg: &ScenarioConfig) -> Result<WaveGrid> {
    WaveGrid::new(cfg.grid.z_min, cfg.grid.z_max, cfg.grid.h)
}

pub fn build_sandwich(cfg: &ScenarioConfig, wave_type: WaveType) -> Result<Sandwich> {
    let model = &cfg.model;
    let s = model.params.s;
    let grid = wave_grid(cfg)?;
    match resolve_wave_type(model, wave_type) {
        WaveType::Front => build_sandwich_front(model, s, grid, MarchOptions::default()),
        _ => build_sandwich_mixed(model, s, grid, cfg.scenario.slack_tol),
    }
}

pub fn run_wave(cfg: &ScenarioConfig) -> Result<WaveRun> {
    let model = &cfg.model;
    let s = model.params.s;
    let wave_type = resolve_wave_type(model, cfg.scenario.wave_type);
    let sandwich = build_sandwich(cfg, wave_type)?;
    let supersub = check_supersub(&sandwich, model, s, cfg.scenario.slack_tol)?;
    let system = WaveSystem::new(model, s, sandwich.upper.grid)?;
    let sc = &cfg.scenario;
    let mut solutions = Vec::new();
    if matches!(sc.method, MethodChoice::Monotone | MethodChoice::Both) {
        let opts = MonotoneOptions {
            tol: sc.tol,
            maxiter: sc.maxiter,
            beta_factor: sc.beta_factor,
        };
        solutions.push(solve_wave_monotone(&sandwich, model, s, opts)?);
    }
    if matches!(sc.method, MethodChoice::Relaxation | MethodChoice::Both) {
        let init = ProfilePair::midpoint(&sandwich.upper, &sandwich.lower);
        let opts = RelaxOptions {
            dt: None,
            t_max: sc.relax_t_max,
            steady_tol: sc.relax_tol,
        };
        solutions.push(solve_wave_relaxation(&init, model, s, opts)?);
    }
    Ok(WaveRun {
        wave_type,
        expected_tail: if wave_type == WaveType::Front {
            TailTag::Front
        } else {
            TailTag::MixedFrontPulse
        },
        sandwich,
        supersub,
        solutions,
        system,
    })
}

/// The simulation domain `[-L, L]`: configured ends, or `L` sized so the
/// guard holds with a margin of ten length units.
pub fn sim_domain(cfg: &ScenarioConfig, model: &ValidatedModel) -> Result<(f64, f64)> {
    let sim = &cfg.sim;
    if let (Some(lo), Some(hi)) = (sim.x_min, sim.x_max) {
        return Ok((lo, hi));
    }
    let reach = guard_speed(model)? * sim.t_end
        + sim.initial.center.abs()
        + 2.0 * sim.initial.width
        + 3.0 * model.max_radius()
        + 10.0;
    let half = (reach / sim.dx).ceil() * sim.dx;
    Ok((sim.x_min.unwrap_or(-half), sim.x_max.unwrap_or(half)))
}

pub fn probe_config(
    cfg: &ScenarioConfig,
    model: &ValidatedModel,
    x_max: f64,
) -> Result<ProbeConfig> {
    let sim = &cfg.sim;
    let mut top = sim.frame_max.unwrap_or(guard_speed(model)? + 0.5);
    if sim.t_end > 0.0 && sim.frame_max.is_none() {
        top = top.min(x_max / sim.t_end);
    }
    let mut probes = ProbeConfig::uniform_frames(top, sim.frame_step, sim.cadence);
    probes.snapshot_times = sim.snapshots.clone();
    Ok(probes)
}

pub fn run_simulation(cfg: &ScenarioConfig, model: &ValidatedModel) -> Result<RunOutput> {
    let (lo, hi) = sim_domain(cfg, model)?;
    let init = make_initial(&cfg.sim.initial, model.params.b, lo, hi, cfg.sim.dx)?;
    let probes = probe_config(cfg, model, hi)?;
    run(model, &init, cfg.sim.t_end, &probes, cfg.sim.dt)
}

pub fn classify_series(
    cfg: &ScenarioConfig,
    model: &ValidatedModel,
    series: &ProbeSeries,
) -> Result<OutcomeReport> {
    let speeds = speed_report(model)?;
    classify_outcome(series, model, &speeds, &cfg.sim.thresholds)
}

/// A single verdict summarizing an outcome: whole-line extinction, else the
/// coexistence band, else the saturation band.
pub fn headline_verdict(report: &OutcomeReport) -> Verdict {
    let get = |name| report.band(name).map(|b: &BandVerdict| b.verdict);
    if get("all") == Some(Verdict::Extinct) {
        return Verdict::Extinct;
    }
    get("coexistence")
        .or_else(|| get("saturation"))
        .unwrap_or(Verdict::Indeterminate)
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub s: f64,
    pub outcome: Result<OutcomeReport>,
}

/// Sorted check and deduplication of sweep speeds; duplicates are reported
/// through `warn`.
pub fn prepare_speeds(speeds: &[f64], mut warn: impl FnMut(String)) -> Result<Vec<f64>> {
    if speeds.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one climate speed".into(),
        ));
    }
    if speeds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config(
            "sweep speeds must be listed in increasing order".into(),
        ));
    }
    let mut out: Vec<f64> = Vec::with_capacity(speeds.len());
    for &s in speeds {
        if out.last() == Some(&s) {
            warn(format!("duplicate climate speed {s} dropped"));
        } else {
            out.push(s);
        }
    }
    Ok(out)
}

/// Simulates and classifies each speed in parallel; rows keep input order.
pub fn run_sweep(cfg: &ScenarioConfig, speeds: &[f64]) -> Vec<SweepRow> {
    speeds
        .par_iter()
        .map(|&s| {
            let outcome = cfg.model.with_speed(s).and_then(|m| {
                let out = run_simulation(cfg, &m)?;
                classify_series(cfg, &m, &out.probes)
            });
            SweepRow { s, outcome }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speeds_are_checked_and_deduplicated() {
        let mut warnings = Vec::new();
        let out = prepare_speeds(&[0.5, 1.5, 1.5, 2.5], |w| warnings.push(w)).unwrap();
        assert_eq!(out, vec![0.5, 1.5, 2.5]);
        assert_eq!(warnings.len(), 1);
        assert!(matches!(prepare_speeds(&[], |_| {}), Err(Error::Config(_))));
        assert!(prepare_speeds(&[1.0, 0.5], |_| {}).is_err());
    }
}
