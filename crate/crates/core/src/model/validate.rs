use crate::error::{Error, Result};
use crate::model::habitat::HabitatProfile;
use crate::model::kernel::{Dispersal, Kernel};
use crate::model::params::{coexistence_state, CoexistenceState, DispersalMode, ModelParams};

/// Parameters, dispersal operators and habitat that passed every check.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel {
    pub params: ModelParams,
    pub prey: Dispersal,
    pub predator: Dispersal,
    pub habitat: HabitatProfile,
    pub front_regime: bool,
    /// Human-readable flags for inputs accepted only for cross-checks.
    pub notes: Vec<String>,
}

impl ValidatedModel {
    pub fn coexistence(&self) -> CoexistenceState {
        coexistence_state(self.params.a, self.params.b).expect("validated models have b > 1")
    }

    pub fn is_local(&self) -> bool {
        self.params.mode == DispersalMode::Local
    }

    /// Same model at another climate speed.
    pub fn with_speed(&self, s: f64) -> Result<Self> {
        let mut m = self.clone();
        m.params.s = s;
        m.params.check()?;
        Ok(m)
    }

    pub fn with_habitat(&self, habitat: HabitatProfile) -> Result<Self> {
        habitat.validate()?;
        let mut m = self.clone();
        m.habitat = habitat;
        Ok(m)
    }

    /// Largest support radius of the two dispersal operators.
    pub fn max_radius(&self) -> f64 {
        self.prey.radius().max(self.predator.radius())
    }
}

pub fn validate_model(
    params: ModelParams,
    kernels: Option<(Kernel, Kernel)>,
    habitat: HabitatProfile,
) -> Result<ValidatedModel> {
    params.check()?;
    habitat.validate()?;
    let mut notes = Vec::new();
    if habitat.is_test_only() {
        notes.push("test-only: homogeneous habitat".to_string());
    }
    let (prey, predator) = match params.mode {
        DispersalMode::Nonlocal => {
            let (k1, k2) = kernels.ok_or_else(|| {
                Error::Kernel("nonlocal mode needs a prey and a predator kernel".into())
            })?;
            for (who, k) in [("prey", &k1), ("predator", &k2)] {
                k.validate()?;
                if k.is_test_only() {
                    notes.push(format!("test-only: {who} kernel is {}", k.family()));
                }
            }
            (Dispersal::Nonlocal(k1), Dispersal::Nonlocal(k2))
        }
        DispersalMode::Local => {
            if kernels.is_some() {
                notes.push("kernels ignored in local mode".to_string());
            }
            (Dispersal::Local, Dispersal::Local)
        }
    };
    Ok(ValidatedModel {
        front_regime: params.front_regime(),
        params,
        prey,
        predator,
        habitat,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kernel::DEFAULT_SAMPLES;

    #[test]
    fn standard_model_validates() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        let k = Kernel::raised_cosine(1.0, DEFAULT_SAMPLES).unwrap();
        let m = validate_model(
            p,
            Some((k.clone(), k)),
            HabitatProfile::tanh(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(m.front_regime);
        assert!(!m.is_local());
        assert!(m.notes.is_empty());
    }

    #[test]
    fn b_below_one_rejected() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 0.9, 0.5).local();
        let err = validate_model(p, None, HabitatProfile::tanh(-1.0, 1.0).unwrap()).unwrap_err();
        assert!(err.to_string().contains("b must exceed 1"));
    }

    #[test]
    fn nonlocal_needs_kernels() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        assert!(validate_model(p, None, HabitatProfile::homogeneous()).is_err());
    }

    #[test]
    fn test_only_inputs_are_flagged() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, 0.5);
        let k = Kernel::uniform(1.0, 101).unwrap();
        let m = validate_model(p, Some((k.clone(), k)), HabitatProfile::homogeneous()).unwrap();
        assert_eq!(m.notes.len(), 3);
    }
}
