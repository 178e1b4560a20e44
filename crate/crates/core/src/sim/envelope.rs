//! Exponential envelopes `A e^{-lambda (x - c t)}` that dominate a species
//! ahead of a moving frame.

use super::Field;
use crate::dispersion::envelope_rate;
use crate::error::Result;
use crate::model::ValidatedModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Species {
    Prey,
    Predator,
}

impl Species {
    fn values<'a>(&self, f: &'a Field) -> &'a [f64] {
        match self {
            Species::Prey => &f.u,
            Species::Predator => &f.v,
        }
    }

    /// Smaller positive root of `d (M(lambda) - 1) + rate = c lambda`, with
    /// rate `r1` for the prey and `r2 (b - 1)` for the predator.
    pub fn envelope_lambda(&self, model: &ValidatedModel, c: f64) -> Result<f64> {
        let p = &model.params;
        match self {
            Species::Prey => envelope_rate(p.d1, &model.prey, p.r1, c),
            Species::Predator => envelope_rate(p.d2, &model.predator, p.r2 * (p.b - 1.0), c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// Smallest `envelope - density` over checked points.
    pub worst_margin: f64,
    pub worst_t: f64,
    pub worst_x: f64,
    /// Largest `density / envelope` over checked points.
    pub peak_ratio: f64,
    pub checked: usize,
}

/// Smallest `A` with `w(x) <= A e^{-lambda x}` at every node.
pub fn envelope_amplitude(field: &Field, species: Species, lambda: f64) -> f64 {
    species
        .values(field)
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(j, w)| w * (lambda * field.x(j)).exp())
        .fold(0.0, f64::max)
}

/// Checks `w(x, t) <= A e^{-lambda (x - c t)}` at every node with
/// `x >= c t` in every snapshot.
pub fn envelope_check(
    snapshots: &[Field],
    species: Species,
    lambda: f64,
    c_frame: f64,
    amplitude: f64,
) -> EnvelopeReport {
    let mut rep = EnvelopeReport {
        pass: true,
        worst_margin: f64::INFINITY,
        worst_t: 0.0,
        worst_x: 0.0,
        peak_ratio: 0.0,
        checked: 0,
    };
    for f in snapshots {
        let front = c_frame * f.t;
        for (j, &w) in species.values(f).iter().enumerate() {
            let x = f.x(j);
            if x < front {
                continue;
            }
            let envelope = amplitude * (-lambda * (x - front)).exp();
            let margin = envelope - w;
            rep.checked += 1;
            if envelope > 0.0 {
                rep.peak_ratio = rep.peak_ratio.max(w / envelope);
            }
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
                rep.worst_t = f.t;
                rep.worst_x = x;
            }
        }
    }
    rep.pass = rep.worst_margin >= 0.0 && rep.peak_ratio <= 1.0;
    rep
}
