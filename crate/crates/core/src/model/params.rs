use crate::error::{Error, Result};

/// How individuals move: by a dispersal kernel or by standard diffusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DispersalMode {
    Nonlocal,
    Local,
}

impl DispersalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DispersalMode::Nonlocal => "nonlocal",
            DispersalMode::Local => "local",
        }
    }
}

impl std::str::FromStr for DispersalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonlocal" => Ok(DispersalMode::Nonlocal),
            "local" => Ok(DispersalMode::Local),
            other => Err(Error::Config(format!(
                "mode must be `nonlocal` or `local`, got `{other}`"
            ))),
        }
    }
}

/// The seven positive model constants plus the dispersal mode.
///
/// `d1, d2` are dispersal coefficients, `r1, r2` intrinsic rates, `a` the
/// predation rate, `b` the conversion rate and `s` the climate speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub d1: f64,
    pub d2: f64,
    pub r1: f64,
    pub r2: f64,
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub mode: DispersalMode,
}

impl ModelParams {
    pub fn new(d1: f64, d2: f64, r1: f64, r2: f64, a: f64, b: f64, s: f64) -> Self {
        Self {
            d1,
            d2,
            r1,
            r2,
            a,
            b,
            s,
            mode: DispersalMode::Nonlocal,
        }
    }

    pub fn local(mut self) -> Self {
        self.mode = DispersalMode::Local;
        self
    }

    pub fn with_speed(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    /// Positivity of every constant and `b > 1`.
    pub fn check(&self) -> Result<()> {
        let fields: [(&'static str, f64); 6] = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("r1", self.r1),
            ("r2", self.r2),
            ("a", self.a),
            ("b", self.b),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and positive, got {value}"),
                });
            }
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "s",
                reason: format!("climate speed must be positive, got {}", self.s),
            });
        }
        if self.b <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: format!(
                    "b must exceed 1 (predators cannot grow on saturated prey otherwise), got {}",
                    self.b
                ),
            });
        }
        Ok(())
    }

    /// `ab < 1`: front-type waves and the speeds `s**`, `s_**` are available.
    pub fn front_regime(&self) -> bool {
        self.a * self.b < 1.0
    }

    pub fn s_star_defined(&self) -> bool {
        self.b > 1.0
    }
}

/// The positive constant equilibrium of the homogeneous system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoexistenceState {
    pub u_star: f64,
    pub v_star: f64,
}

pub fn coexistence_state(a: f64, b: f64) -> Result<CoexistenceState> {
    if !(b > 1.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: format!("coexistence state needs b > 1, got {b}"),
        });
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "a",
            reason: format!("must be finite and positive, got {a}"),
        });
    }
    let denom = 1.0 + a * b;
    Ok(CoexistenceState {
        u_star: (1.0 + a) / denom,
        v_star: (b - 1.0) / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coexistence_closed_form() {
        let c = coexistence_state(0.5, 2.0).unwrap();
        assert!((c.u_star - 0.75).abs() < 1e-15);
        assert!((c.v_star - 0.5).abs() < 1e-15);
        let c = coexistence_state(0.2, 3.0).unwrap();
        assert!((c.u_star - 0.75).abs() < 1e-15);
        assert!((c.v_star - 1.25).abs() < 1e-15);
    }

    #[test]
    fn coexistence_tends_to_predator_free_state() {
        let c = coexistence_state(0.4, 1.0 + 1e-9).unwrap();
        assert!((c.u_star - 1.0).abs() < 1e-9);
        assert!(c.v_star > 0.0 && c.v_star < 1e-9);
        assert!(coexistence_state(0.4, 1.0).is_err());
    }

    #[test]
    fn coexistence_zeroes_reaction_terms() {
        for &(a, b) in &[(0.4, 2.0), (0.3, 2.0), (1.5, 1.2), (0.05, 7.0)] {
            let c = coexistence_state(a, b).unwrap();
            let f1 = 1.0 - c.u_star - a * c.v_star;
            let f2 = -1.0 + b * c.u_star - c.v_star;
            assert!(f1.abs() < 1e-15 && f2.abs() < 1e-15, "{a} {b}: {f1} {f2}");
            assert!(c.u_star > 0.0 && c.u_star < 1.0);
            assert!(c.v_star > 0.0 && c.v_star < b - 1.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 0.9, 0.5);
        let err = p.check().unwrap_err();
        assert!(err.to_string().contains("b must exceed 1"));
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 2.0, -1.0);
        assert!(p
            .check()
            .unwrap_err()
            .to_string()
            .contains("climate speed must be positive"));
        let p = ModelParams::new(0.0, 1.0, 1.0, 1.0, 0.4, 2.0, 1.0);
        assert!(p.check().is_err());
    }
}
