//! Persistence and extinction verdicts per band of moving frames, read off
//! the final part of a probe series.

use super::ProbeSeries;
use crate::dispersion::SpeedReport;
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Extinct,
    PreyOnlySaturated,
    Coexistence,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Extinct => "Extinct",
            Verdict::PreyOnlySaturated => "PreyOnlySaturated",
            Verdict::Coexistence => "Coexistence",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Offset `eps` trimmed from each end of a frame band.
    pub band_eps: f64,
    pub eps_ext: f64,
    pub eps_sat: f64,
    pub eps_coex: f64,
    /// Predator floor for nonlocal coexistence.
    pub v_min: f64,
    /// Prey floor for nonlocal coexistence, as a fraction of `1 - a(b-1)`.
    pub kappa_factor: f64,
    /// Verdicts use times in the final `window_fraction` of the run.
    pub window_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            band_eps: 0.1,
            eps_ext: 1e-3,
            eps_sat: 0.05,
            eps_coex: 0.05,
            v_min: 1e-3,
            kappa_factor: 0.5,
            window_fraction: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandKind {
    /// Whole-line maxima of both species.
    All,
    /// Whole-line maximum of the predator.
    PredatorAll,
    /// Frames with speeds in `[lo, hi]`.
    Frames,
    /// Frames in the range the theory leaves open; always indeterminate.
    Open,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub name: &'static str,
    pub kind: BandKind,
    pub lo: f64,
    pub hi: f64,
    /// Verdict the theory predicts, when it predicts one.
    pub expected: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandVerdict {
    pub band: Band,
    pub verdict: Verdict,
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Largest `|u - u*| + |v - v*|` over the band.
    pub coex_distance: f64,
    pub frames_used: usize,
}

impl BandVerdict {
    pub fn meets_expectation(&self) -> bool {
        self.band.expected.is_none_or(|e| e == self.verdict)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeReport {
    pub bands: Vec<BandVerdict>,
    /// `1 - a(b-1)`.
    pub kappa_floor: f64,
    /// `(u*, v*)`, the target in local mode.
    pub target: (f64, f64),
    pub window_start: f64,
    pub thresholds: Thresholds,
}

impl OutcomeReport {
    pub fn band(&self, name: &str) -> Option<&BandVerdict> {
        self.bands.iter().find(|b| b.band.name == name)
    }

    pub fn all_expected(&self) -> bool {
        self.bands.iter().all(BandVerdict::meets_expectation)
    }
}

fn speed(
    report: &SpeedReport,
    pick: fn(&SpeedReport) -> &crate::dispersion::SpeedValue,
) -> Option<f64> {
    pick(report).value()
}

/// The bands implied by the speed ordering; `Config` error when a band
/// with an expected verdict exists but `eps` swallows it or no probe frame
/// falls inside it. The verdict-free `open` band is dropped instead.
pub fn bands_for(
    model: &ValidatedModel,
    speeds: &SpeedReport,
    frames: &[f64],
    eps: f64,
) -> Result<Vec<Band>> {
    let s = model.params.s;
    let prey = speed(speeds, |r| &r.s_star_prey)
        .ok_or_else(|| Error::Config("prey speed undefined".into()))?;
    let pred = speed(speeds, |r| &r.s_star_pred)
        .ok_or_else(|| Error::Config("predator speed undefined".into()))?;
    let hat = prey.min(pred);
    let under = speed(speeds, |r| &r.s_underline);
    let top = frames.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut bands = vec![
        Band {
            name: "all",
            kind: BandKind::All,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            expected: (s > prey).then_some(Verdict::Extinct),
        },
        Band {
            name: "predator-all",
            kind: BandKind::PredatorAll,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            expected: (s > hat).then_some(Verdict::Extinct),
        },
    ];
    let mut core = |name: &'static str, kind: BandKind, a: f64, b: f64, expected| -> Result<()> {
        if b <= a {
            return Ok(());
        }
        if b - a <= 2.0 * eps {
            if kind == BandKind::Open {
                return Ok(());
            }
            return Err(Error::Config(format!(
                "band `{name}` ({a:.4}, {b:.4}) collapses with offset {eps}"
            )));
        }
        bands.push(Band {
            name,
            kind,
            lo: a + eps,
            hi: b - eps,
            expected,
        });
        Ok(())
    };
    if pred < prey {
        core(
            "saturation",
            BandKind::Frames,
            s.max(pred),
            prey,
            Some(Verdict::PreyOnlySaturated),
        )?;
    }
    if model.is_local() {
        core(
            "coexistence",
            BandKind::Frames,
            s,
            hat,
            Some(Verdict::Coexistence),
        )?;
    } else {
        match under {
            Some(under) => {
                core(
                    "coexistence",
                    BandKind::Frames,
                    s,
                    under,
                    Some(Verdict::Coexistence),
                )?;
                core("open", BandKind::Open, s.max(under), hat, None)?;
            }
            None => core("open", BandKind::Open, s, hat, None)?,
        }
    }
    if s - eps > 0.0 {
        bands.push(Band {
            name: "behind",
            kind: BandKind::Frames,
            lo: 0.0,
            hi: s - eps,
            expected: Some(Verdict::Extinct),
        });
    }
    if top >= prey + eps {
        bands.push(Band {
            name: "ahead",
            kind: BandKind::Frames,
            lo: prey + eps,
            hi: top,
            expected: Some(Verdict::Extinct),
        });
    }
    let has_frame = |b: &Band| frames.iter().any(|&c| c >= b.lo && c <= b.hi);
    bands.retain(|b| b.kind != BandKind::Open || has_frame(b));
    for b in &bands {
        let framed = matches!(b.kind, BandKind::Frames | BandKind::Open);
        if framed && !has_frame(b) {
            return Err(Error::Config(format!(
                "no probe frame inside band `{}` [{:.4}, {:.4}]",
                b.name, b.lo, b.hi
            )));
        }
    }
    Ok(bands)
}

pub fn classify_outcome(
    series: &ProbeSeries,
    model: &ValidatedModel,
    speeds: &SpeedReport,
    th: &Thresholds,
) -> Result<OutcomeReport> {
    if series.times.is_empty() {
        return Err(Error::Config("probe series is empty".into()));
    }
    if !(th.window_fraction > 0.0 && th.window_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "window fraction must lie in (0, 1], got {}",
            th.window_fraction
        )));
    }
    let p = &model.params;
    let c = model.coexistence();
    let target = (c.u_star, c.v_star);
    let kappa_floor = 1.0 - p.a * (p.b - 1.0);
    let window_start = (1.0 - th.window_fraction) * series.last_time();
    let window: Vec<usize> = (0..series.times.len())
        .filter(|&k| series.times[k] >= window_start)
        .collect();

    let mut out = Vec::new();
    for band in bands_for(model, speeds, &series.frames, th.band_eps)? {
        let mut acc = Levels::new();
        let mut frames_used = 0;
        match band.kind {
            BandKind::All | BandKind::PredatorAll => {
                for &k in &window {
                    let u = if band.kind == BandKind::All {
                        series.sup_u[k]
                    } else {
                        0.0
                    };
                    acc.add(u, series.sup_v[k], target);
                }
            }
            BandKind::Frames | BandKind::Open => {
                for (i, &cf) in series.frames.iter().enumerate() {
                    if cf < band.lo || cf > band.hi {
                        continue;
                    }
                    frames_used += 1;
                    for &k in &window {
                        acc.add(series.u[k][i], series.v[k][i], target);
                    }
                }
            }
        }
        let verdict = match band.kind {
            BandKind::Open => Verdict::Indeterminate,
            BandKind::All | BandKind::PredatorAll => {
                if acc.u_max.max(acc.v_max) < th.eps_ext {
                    Verdict::Extinct
                } else {
                    Verdict::Indeterminate
                }
            }
            BandKind::Frames => {
                let coexists = if model.is_local() {
                    acc.coex < th.eps_coex
                } else {
                    acc.u_min >= th.kappa_factor * kappa_floor && acc.v_min >= th.v_min
                };
                if acc.u_max.max(acc.v_max) < th.eps_ext {
                    Verdict::Extinct
                } else if (acc.u_min - 1.0).abs().max((acc.u_max - 1.0).abs()) < th.eps_sat
                    && acc.v_max < th.eps_ext
                {
                    Verdict::PreyOnlySaturated
                } else if coexists {
                    Verdict::Coexistence
                } else {
                    Verdict::Indeterminate
                }
            }
        };
        out.push(BandVerdict {
            band,
            verdict,
            u_min: acc.u_min,
            u_max: acc.u_max,
            v_min: acc.v_min,
            v_max: acc.v_max,
            coex_distance: acc.coex,
            frames_used,
        });
    }
    Ok(OutcomeReport {
        bands: out,
        kappa_floor,
        target,
        window_start,
        thresholds: *th,
    })
}

struct Levels {
    u_min: f64,
    u_max: f64,
    v_min: f64,
    v_max: f64,
    coex: f64,
}

impl Levels {
    fn new() -> Self {
        Self {
            u_min: f64::INFINITY,
            u_max: f64::NEG_INFINITY,
            v_min: f64::INFINITY,
            v_max: f64::NEG_INFINITY,
            coex: 0.0,
        }
    }

    fn add(&mut self, u: f64, v: f64, target: (f64, f64)) {
        self.u_min = self.u_min.min(u);
        self.u_max = self.u_max.max(u);
        self.v_min = self.v_min.min(v);
        self.v_max = self.v_max.max(v);
        self.coex = self.coex.max((u - target.0).abs() + (v - target.1).abs());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::speed_report;
    use crate::model::{validate_model, HabitatProfile, ModelParams};

    fn local(s: f64) -> ValidatedModel {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.25, 0.3, 2.0, s).local();
        validate_model(p, None, HabitatProfile::tanh(-1.0, 1.0).unwrap()).unwrap()
    }

    fn frames() -> Vec<f64> {
        (0..=60).map(|i| 0.05 * i as f64).collect()
    }

    /// A synthetic series whose frame values follow `f(c)` at all times.
    fn series(f: impl Fn(f64) -> (f64, f64), sup: (f64, f64)) -> ProbeSeries {
        let fr = frames();
        let mut s = ProbeSeries::new(fr.clone());
        for k in 0..=10 {
            s.times.push(10.0 * k as f64);
            s.u.push(fr.iter().map(|&c| f(c).0).collect());
            s.v.push(fr.iter().map(|&c| f(c).1).collect());
            s.sup_u.push(sup.0);
            s.sup_v.push(sup.1);
        }
        s
    }

    #[test]
    fn band_layout_local() {
        let m = local(1.5);
        let sp = speed_report(&m).unwrap();
        let bands = bands_for(&m, &sp, &frames(), 0.1).unwrap();
        let sat = bands.iter().find(|b| b.name == "saturation").unwrap();
        assert!((sat.lo - 1.6).abs() < 1e-9 && (sat.hi - 1.9).abs() < 1e-9);
        assert!(bands.iter().all(|b| b.name != "coexistence"));
        let m = local(0.5);
        let bands = bands_for(&m, &speed_report(&m).unwrap(), &frames(), 0.1).unwrap();
        let co = bands.iter().find(|b| b.name == "coexistence").unwrap();
        assert!((co.lo - 0.6).abs() < 1e-9 && (co.hi - 0.9).abs() < 1e-9);
    }

    #[test]
    fn wide_offset_collapses_band() {
        let m = local(0.5);
        let err = bands_for(&m, &speed_report(&m).unwrap(), &frames(), 0.3).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn synthetic_verdicts() {
        let m = local(1.5);
        let sp = speed_report(&m).unwrap();
        let th = Thresholds::default();
        let sat = series(
            |c| {
                if c > 1.5 && c < 2.0 {
                    (1.0, 0.0)
                } else {
                    (0.0, 0.0)
                }
            },
            (1.0, 0.0),
        );
        let rep = classify_outcome(&sat, &m, &sp, &th).unwrap();
        assert_eq!(
            rep.band("saturation").unwrap().verdict,
            Verdict::PreyOnlySaturated
        );
        assert_eq!(rep.band("predator-all").unwrap().verdict, Verdict::Extinct);
        assert!(rep.all_expected());

        let m = local(0.5);
        let sp = speed_report(&m).unwrap();
        let (us, vs) = (1.3 / 1.6, 1.0 / 1.6);
        let co = series(
            |c| {
                if c > 0.5 && c < 1.0 {
                    (us, vs)
                } else {
                    (0.0, 0.0)
                }
            },
            (1.0, 1.0),
        );
        let rep = classify_outcome(&co, &m, &sp, &th).unwrap();
        assert_eq!(
            rep.band("coexistence").unwrap().verdict,
            Verdict::Coexistence
        );
        assert_eq!(rep.band("all").unwrap().verdict, Verdict::Indeterminate);
    }
}
