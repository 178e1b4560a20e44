//! Compactly supported symmetric dispersal kernels and their exponential
//! moments.

use crate::error::{Error, Result};
use std::fmt;

/// Default number of quadrature nodes across `[-radius, radius]`.
pub const DEFAULT_SAMPLES: usize = 20001;

/// `|lambda| * radius` above which `cosh` would overflow.
pub const EXP_GUARD: f64 = 700.0;

const NORM_TOL: f64 = 1e-12;
const SYM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    RaisedCosine,
    Uniform,
    Table,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::RaisedCosine => "raised-cosine",
            KernelFamily::Uniform => "uniform",
            KernelFamily::Table => "table",
        })
    }
}

/// A kernel sampled on its own node set with composite-trapezoid weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    radius: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl Kernel {
    /// `J(y) = (1 + cos(pi y / radius)) / (2 radius)` on `[-radius, radius]`.
    pub fn raised_cosine(radius: f64, samples: usize) -> Result<Self> {
        Self::analytic(KernelFamily::RaisedCosine, radius, samples, |y| {
            (1.0 + (std::f64::consts::PI * y / radius).cos()) / (2.0 * radius)
        })
    }

    /// `J(y) = 1 / (2 radius)` on `[-radius, radius]`. Discontinuous at the
    /// support edges, so only meant for analytic cross-checks.
    pub fn uniform(radius: f64, samples: usize) -> Result<Self> {
        Self::analytic(KernelFamily::Uniform, radius, samples, |_| {
            1.0 / (2.0 * radius)
        })
    }

    fn analytic(
        family: KernelFamily,
        radius: f64,
        samples: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Kernel(format!(
                "support radius must be positive, got {radius}"
            )));
        }
        if samples < 3 || samples.is_multiple_of(2) {
            return Err(Error::Kernel(format!(
                "sample count must be odd and at least 3, got {samples}"
            )));
        }
        let m = (samples - 1) / 2;
        let h = radius / m as f64;
        let nodes: Vec<f64> = (0..samples).map(|i| (i as f64 - m as f64) * h).collect();
        // Pair values from |y| so the sampled kernel is exactly even.
        let mut values: Vec<f64> = nodes.iter().map(|y| f(y.abs())).collect();
        let weights = trapezoid_weights(&nodes);
        let total: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
        for v in &mut values {
            *v /= total;
        }
        let k = Kernel {
            family,
            radius,
            nodes,
            values,
            weights,
        };
        k.validate()?;
        Ok(k)
    }

    /// Builds a kernel from tabulated nodes, which must cover a symmetric
    /// interval `[-radius, radius]`. The table is validated, not rescaled.
    pub fn from_table(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 3 {
            return Err(Error::Kernel("kernel table needs at least 3 rows".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Kernel(
                "kernel nodes must be strictly increasing".into(),
            ));
        }
        let radius = nodes[nodes.len() - 1];
        if !(radius > 0.0) {
            return Err(Error::Kernel("kernel support must be nondegenerate".into()));
        }
        let weights = trapezoid_weights(&nodes);
        let k = Kernel {
            family: KernelFamily::Table,
            radius,
            nodes,
            values,
            weights,
        };
        k.validate()?;
        Ok(k)
    }

    /// Nonnegativity, symmetric nodes and values, unit mass.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Kernel(format!(
                "kernel values must be finite and nonnegative, found {v}"
            )));
        }
        for i in 0..n / 2 {
            let j = n - 1 - i;
            if (self.nodes[i] + self.nodes[j]).abs() > SYM_TOL * self.radius {
                return Err(Error::Kernel(format!(
                    "kernel nodes are not symmetric: {} vs {}",
                    self.nodes[i], self.nodes[j]
                )));
            }
            if (self.values[i] - self.values[j]).abs() > SYM_TOL {
                return Err(Error::Kernel(format!(
                    "kernel is not even: J({}) = {} but J({}) = {}",
                    self.nodes[i], self.values[i], self.nodes[j], self.values[j]
                )));
            }
        }
        let mass = self.integrate(|_| 1.0);
        if (mass - 1.0).abs() > NORM_TOL {
            return Err(Error::Kernel(format!(
                "kernel normalization failed: integral is {mass:.15}, expected 1 within {NORM_TOL:e}"
            )));
        }
        Ok(())
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sample_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The uniform kernel breaks continuity and is kept for cross-checks only.
    pub fn is_test_only(&self) -> bool {
        self.family == KernelFamily::Uniform
    }

    /// Kernel value at `y`, by the closed form for analytic families and
    /// linear interpolation for tables. Zero outside the support.
    pub fn value(&self, y: f64) -> f64 {
        let ay = y.abs();
        if ay > self.radius {
            return 0.0;
        }
        let scale = self.values[self.nodes.len() / 2];
        match self.family {
            KernelFamily::RaisedCosine => {
                scale * (1.0 + (std::f64::consts::PI * ay / self.radius).cos()) / 2.0
            }
            KernelFamily::Uniform => scale,
            KernelFamily::Table => {
                crate::model::table::interp_clamped(&self.nodes, &self.values, y)
            }
        }
    }

    /// Trapezoid quadrature of `J(y) f(y)` over the support.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&y, &v), &w)| w * v * f(y))
            .sum()
    }

    /// `M(lambda) = integral of J(y) e^{lambda y}`.
    pub fn mgf(&self, lambda: f64) -> Result<f64> {
        Ok(1.0 + self.mgf_minus_one(lambda)?)
    }

    /// `M(lambda) - 1`, evaluated as `integral of J(y) 2 sinh^2(lambda y / 2)`
    /// so that it stays accurate for small `lambda` and is exactly even.
    pub fn mgf_minus_one(&self, lambda: f64) -> Result<f64> {
        if !lambda.is_finite() || lambda.abs() * self.radius > EXP_GUARD {
            return Err(Error::Overflow { lambda });
        }
        Ok(self.integrate(|y| {
            let sh = (0.5 * lambda * y).sinh();
            2.0 * sh * sh
        }))
    }

    /// `integral of J(y) y^2`.
    pub fn second_moment(&self) -> f64 {
        self.integrate(|y| y * y)
    }
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let half = 0.5 * (nodes[i + 1] - nodes[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

pub fn kernel_mgf(kernel: &Kernel, lambda: f64) -> Result<f64> {
    kernel.mgf(lambda)
}

/// Dispersal operator of one species: kernel convolution or diffusion.
#[derive(Clone, Debug, PartialEq)]
pub enum Dispersal {
    Nonlocal(Kernel),
    Local,
}

impl Dispersal {
    /// Symbol of the dispersal operator on `e^{lambda y}`: `M(lambda) - 1`
    /// for kernels, `lambda^2` for diffusion.
    pub fn symbol(&self, lambda: f64) -> Result<f64> {
        match self {
            Dispersal::Nonlocal(k) => k.mgf_minus_one(lambda),
            Dispersal::Local => Ok(lambda * lambda),
        }
    }

    /// Support radius, zero for diffusion.
    pub fn radius(&self) -> f64 {
        match self {
            Dispersal::Nonlocal(k) => k.radius(),
            Dispersal::Local => 0.0,
        }
    }

    /// Largest rate at which the symbol can be evaluated.
    pub fn lambda_cap(&self) -> f64 {
        match self {
            Dispersal::Nonlocal(k) => EXP_GUARD / k.radius(),
            Dispersal::Local => 1e150,
        }
    }

    /// `integral of J(y) y^2 e^{-lambda y}`; its local counterpart is 2.
    pub fn weighted_second_moment(&self, lambda: f64) -> f64 {
        match self {
            Dispersal::Nonlocal(k) => k.integrate(|y| y * y * (-lambda * y).exp()),
            Dispersal::Local => 2.0,
        }
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match self {
            Dispersal::Nonlocal(k) => Some(k),
            Dispersal::Local => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rc_closed(lambda: f64, tau: f64) -> f64 {
        let x = lambda * tau;
        if x == 0.0 {
            return 1.0;
        }
        x.sinh() / x * PI * PI / (x * x + PI * PI)
    }

    #[test]
    fn mgf_at_zero_is_one() {
        for k in [
            Kernel::raised_cosine(1.0, DEFAULT_SAMPLES).unwrap(),
            Kernel::uniform(2.5, 1001).unwrap(),
        ] {
            assert!((k.mgf(0.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_mgf_matches_sinh() {
        let k = Kernel::uniform(1.0, DEFAULT_SAMPLES).unwrap();
        let m = k.mgf(1.0).unwrap();
        assert!((m - 1f64.sinh()).abs() < 1e-8, "{m}");
        assert!((m - 1.1752).abs() < 1e-4);
    }

    #[test]
    fn raised_cosine_mgf_matches_closed_form() {
        let k = Kernel::raised_cosine(1.0, DEFAULT_SAMPLES).unwrap();
        let m = k.mgf(1.0).unwrap();
        assert!((m - rc_closed(1.0, 1.0)).abs() < 1e-10, "{m}");
        assert!((m - 1.0671).abs() < 1e-4);
        let k = Kernel::raised_cosine(2.0, DEFAULT_SAMPLES).unwrap();
        for &l in &[0.1, 1.3, 4.0] {
            let rel = (k.mgf(l).unwrap() / rc_closed(l, 2.0) - 1.0).abs();
            assert!(rel < 1e-9, "lambda {l}: {rel}");
        }
    }

    #[test]
    fn raised_cosine_second_moment() {
        let k = Kernel::raised_cosine(1.5, DEFAULT_SAMPLES).unwrap();
        let exact = 1.5f64.powi(2) * (1.0 / 3.0 - 2.0 / (PI * PI));
        assert!((k.second_moment() - exact).abs() < 1e-9);
    }

    #[test]
    fn overflow_guard() {
        let k = Kernel::raised_cosine(1.0, 101).unwrap();
        assert!(matches!(k.mgf(701.0), Err(Error::Overflow { .. })));
        assert!(k.mgf(699.0).is_ok());
    }

    #[test]
    fn quadrature_refinement_is_at_least_second_order() {
        let l = 3.0;
        let err = |k: Kernel, exact: f64| (k.mgf(l).unwrap() - exact).abs();
        // Uniform: the integrand has nonzero end slopes, plain second order.
        let exact = l.sinh() / l;
        let ratio = err(Kernel::uniform(1.0, 41).unwrap(), exact)
            / err(Kernel::uniform(1.0, 81).unwrap(), exact);
        assert!((ratio - 4.0).abs() < 0.4, "uniform ratio {ratio}");
        // Raised cosine: J' vanishes at the ends too, so the leading error
        // term cancels and refinement gains at least a factor 4.
        let exact = rc_closed(l, 1.0);
        let ratio = err(Kernel::raised_cosine(1.0, 41).unwrap(), exact)
            / err(Kernel::raised_cosine(1.0, 81).unwrap(), exact);
        assert!(ratio >= 3.6, "raised-cosine ratio {ratio}");
    }

    #[test]
    fn table_mass_error() {
        let nodes: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let values = vec![0.49; nodes.len()];
        let err = Kernel::from_table(nodes, values).unwrap_err();
        assert!(err.to_string().contains("normalization"), "{err}");
    }

    #[test]
    fn table_round_trip() {
        let nodes: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let values = vec![0.5; nodes.len()];
        let k = Kernel::from_table(nodes, values).unwrap();
        assert_eq!(k.family(), KernelFamily::Table);
        assert!((k.value(0.33) - 0.5).abs() < 1e-15);
        assert_eq!(k.value(1.2), 0.0);
    }

    #[test]
    fn asymmetric_table_rejected() {
        let nodes = vec![-1.0, 0.0, 1.0];
        let values = vec![0.4, 0.6, 0.6];
        assert!(Kernel::from_table(nodes, values).is_err());
        let nodes = vec![-1.0, 0.0, 2.0];
        let values = vec![0.4, 0.5, 0.4];
        assert!(Kernel::from_table(nodes, values).is_err());
    }

    #[test]
    fn value_matches_samples() {
        let k = Kernel::raised_cosine(1.0, 2001).unwrap();
        for (y, v) in k.nodes().iter().zip(k.values()).step_by(97) {
            assert!((k.value(*y) - v).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn mgf_is_even_convex_and_at_least_one(
            tau in 0.2f64..3.0,
            l in 0.0f64..8.0,
            dl in 0.01f64..0.5,
        ) {
            let k = Kernel::raised_cosine(tau, 401).unwrap();
            let m = k.mgf(l).unwrap();
            prop_assert!(m >= 1.0 - 1e-12);
            prop_assert_eq!(m, k.mgf(-l).unwrap());
            let lo = k.mgf(l - dl).unwrap();
            let hi = k.mgf(l + dl).unwrap();
            prop_assert!(lo + hi - 2.0 * m >= -1e-12 * m);
        }
    }
}
