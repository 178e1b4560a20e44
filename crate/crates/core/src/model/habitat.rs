//! Climate profiles `alpha`: nondecreasing, negative far to the left and
//! approaching 1 exponentially far to the right.

use crate::error::{Error, Result};
use crate::model::table::interp_clamped;

#[derive(Clone, Debug, PartialEq)]
pub enum HabitatFamily {
    /// `1 + (1 - alpha_minus)/2 * (tanh(gamma z) - 1)`.
    Tanh { alpha_minus: f64, gamma: f64 },
    /// Linear interpolation of a nondecreasing table, constant past its ends.
    Table { z: Vec<f64>, alpha: Vec<f64> },
    /// `alpha = 1` everywhere. Violates the sign condition on the left limit
    /// and is only meant for homogeneous checks.
    Homogeneous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HabitatProfile {
    family: HabitatFamily,
    offset: f64,
    c: f64,
    rho: f64,
}

impl HabitatProfile {
    pub fn tanh(alpha_minus: f64, gamma: f64) -> Result<Self> {
        if !(alpha_minus.is_finite() && alpha_minus < 0.0) {
            return Err(Error::Habitat(format!(
                "left limit alpha_minus must be negative, got {alpha_minus}"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Habitat(format!(
                "steepness gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            family: HabitatFamily::Tanh { alpha_minus, gamma },
            offset: 0.0,
            c: 1.0 - alpha_minus,
            rho: 2.0 * gamma,
        })
    }

    /// Tabulated profile. `rho` is the decay rate the caller asserts for
    /// `1 - alpha`; `C` is then the smallest constant making the bound hold
    /// on the table.
    pub fn table(z: Vec<f64>, alpha: Vec<f64>, rho: f64) -> Result<Self> {
        if z.len() != alpha.len() || z.len() < 2 {
            return Err(Error::Habitat("habitat table needs at least 2 rows".into()));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Habitat(
                "habitat nodes must be strictly increasing".into(),
            ));
        }
        if let Some(i) = (1..alpha.len()).find(|&i| alpha[i] < alpha[i - 1]) {
            return Err(Error::Habitat(format!(
                "habitat table is not nondecreasing at z = {} ({} < {})",
                z[i],
                alpha[i],
                alpha[i - 1]
            )));
        }
        if !(alpha[0] < 0.0) {
            return Err(Error::Habitat(format!(
                "habitat left limit must be negative, got {}",
                alpha[0]
            )));
        }
        let last = alpha[alpha.len() - 1];
        if (last - 1.0).abs() > 1e-12 {
            return Err(Error::Habitat(format!(
                "habitat right limit must be 1, got {last}"
            )));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Habitat(format!("rho must be positive, got {rho}")));
        }
        let c = table_approach_constant(&z, &alpha, rho);
        Ok(Self {
            family: HabitatFamily::Table { z, alpha },
            offset: 0.0,
            c,
            rho,
        })
    }

    pub fn homogeneous() -> Self {
        Self {
            family: HabitatFamily::Homogeneous,
            offset: 0.0,
            c: 0.0,
            rho: 1.0,
        }
    }

    /// Shifts the profile so that `value(z) = original(z - offset)`.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn family(&self) -> &HabitatFamily {
        &self.family
    }

    pub fn is_test_only(&self) -> bool {
        matches!(self.family, HabitatFamily::Homogeneous)
    }

    pub fn value(&self, z: f64) -> f64 {
        let z = z - self.offset;
        match &self.family {
            HabitatFamily::Tanh { alpha_minus, gamma } => {
                // Equal to 1 + (1 - am)/2 (tanh(gamma z) - 1), without the
                // cancellation near 1.
                1.0 - (1.0 - alpha_minus) / (1.0 + (2.0 * gamma * z).exp())
            }
            HabitatFamily::Table { z: zs, alpha } => interp_clamped(zs, alpha, z),
            HabitatFamily::Homogeneous => 1.0,
        }
    }

    /// `alpha(-infinity)`.
    pub fn left_limit(&self) -> f64 {
        match &self.family {
            HabitatFamily::Tanh { alpha_minus, .. } => *alpha_minus,
            HabitatFamily::Table { alpha, .. } => alpha[0],
            HabitatFamily::Homogeneous => 1.0,
        }
    }

    /// `(C, rho)` with `1 - alpha(z) <= C e^{-rho z}` for `z >= 0` (before
    /// the offset is applied).
    pub fn approach_constants(&self) -> (f64, f64) {
        (self.c, self.rho)
    }

    /// Re-checks monotonicity on a sample grid and the limit conditions.
    pub fn validate(&self) -> Result<()> {
        if self.is_test_only() {
            return Ok(());
        }
        if !(self.left_limit() < 0.0) {
            return Err(Error::Habitat("left limit must be negative".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let z = self.offset - 200.0 + 0.1 * i as f64;
            let v = self.value(z);
            if v < prev {
                return Err(Error::Habitat(format!("habitat decreases near z = {z}")));
            }
            prev = v;
        }
        Ok(())
    }
}

fn table_approach_constant(z: &[f64], alpha: &[f64], rho: f64) -> f64 {
    // On each segment 1 - alpha is affine, g(z) = (p + q z) e^{rho z}, whose
    // only critical point is z = -p/q - 1/rho.
    let gap = |x: f64| (1.0 - interp_clamped(z, alpha, x)) * (rho * x).exp();
    let mut c = gap(0.0);
    for i in 0..z.len() - 1 {
        let (lo, hi) = (z[i].max(0.0), z[i + 1]);
        if hi <= lo {
            continue;
        }
        c = c.max(gap(lo)).max(gap(hi));
        let q = (alpha[i] - alpha[i + 1]) / (z[i + 1] - z[i]);
        let p = 1.0 - alpha[i] - q * z[i];
        if q < 0.0 {
            let zc = -p / q - 1.0 / rho;
            if zc > lo && zc < hi {
                c = c.max(gap(zc));
            }
        }
    }
    c * (1.0 + 1e-12)
}

pub fn habitat_value(profile: &HabitatProfile, z: f64) -> f64 {
    profile.value(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tanh_values() {
        let h = HabitatProfile::tanh(-1.0, 1.0).unwrap();
        assert_eq!(h.value(0.0), 0.0);
        assert!((h.value(40.0) - 1.0).abs() < 1e-15);
        let h = HabitatProfile::tanh(-0.5, 2.0).unwrap();
        assert!((h.value(-10.0) + 0.5).abs() < 1e-8);
        assert_eq!(h.approach_constants(), (1.5, 4.0));
    }

    #[test]
    fn tanh_approach_bound() {
        for &(am, g) in &[(-1.0, 1.0), (-0.3, 0.2), (-4.0, 3.0)] {
            let h = HabitatProfile::tanh(am, g).unwrap();
            let (c, rho) = h.approach_constants();
            for i in 0..=5000 {
                let z = 0.01 * i as f64;
                let gap = 1.0 - h.value(z);
                assert!(
                    gap <= c * (-rho * z).exp() * (1.0 + 1e-12) + f64::EPSILON,
                    "z {z}"
                );
            }
        }
    }

    #[test]
    fn table_profile() {
        let z = vec![-5.0, 0.0, 2.0, 4.0];
        let a = vec![-1.0, 0.0, 0.9, 1.0];
        let h = HabitatProfile::table(z.clone(), a, 1.0).unwrap();
        assert_eq!(h.value(-100.0), -1.0);
        assert_eq!(h.value(100.0), 1.0);
        assert!((h.value(1.0) - 0.45).abs() < 1e-15);
        let (c, rho) = h.approach_constants();
        for i in 0..=600 {
            let zz = 0.01 * i as f64;
            assert!(1.0 - h.value(zz) <= c * (-rho * zz).exp() + f64::EPSILON);
        }
        let err = HabitatProfile::table(z, vec![-1.0, 0.5, 0.4, 1.0], 1.0).unwrap_err();
        assert!(err.to_string().contains("nondecreasing"));
    }

    #[test]
    fn offset_translates() {
        let h = HabitatProfile::tanh(-1.0, 1.0).unwrap();
        let g = h.clone().with_offset(3.0);
        assert!((g.value(3.7) - h.value(0.7)).abs() < 1e-14);
        assert_eq!(g.value(5.0), h.value(2.0));
    }

    #[test]
    fn rejects_bad_tanh() {
        assert!(HabitatProfile::tanh(0.2, 1.0).is_err());
        assert!(HabitatProfile::tanh(-1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn tanh_is_nondecreasing(am in -5.0f64..-0.01, g in 0.05f64..5.0, z in -50.0f64..50.0, dz in 0.0f64..3.0) {
            let h = HabitatProfile::tanh(am, g).unwrap();
            prop_assert!(h.value(z) <= h.value(z + dz));
            prop_assert!(h.value(z) >= am - 1e-12 && h.value(z) <= 1.0);
        }
    }
}
