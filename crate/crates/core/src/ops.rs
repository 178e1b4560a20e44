//! Discrete dispersal operators on uniform grids, shared by the wave
//! solvers and the Cauchy integrator.

use crate::error::{Error, Result};
use crate::model::Dispersal;

/// How values past the grid ends are filled in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Repeat the edge value.
    Constant,
    /// Reflect about the edge node.
    Mirror,
}

#[inline]
fn ghost(i: isize, n: usize, closure: Closure) -> usize {
    let last = n as isize - 1;
    let j = match closure {
        Closure::Constant => i.clamp(0, last),
        Closure::Mirror => {
            if i < 0 {
                (-i).min(last)
            } else if i > last {
                (2 * last - i).max(0)
            } else {
                i
            }
        }
    };
    j as usize
}

/// `N[u] = J * u - u` as a node stencil, or the second difference.
#[derive(Clone, Debug, PartialEq)]
pub enum DiscreteDispersal {
    Stencil { weights: Vec<f64>, half: usize },
    Laplacian { inv_h2: f64 },
}

impl DiscreteDispersal {
    pub fn new(dispersal: &Dispersal, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Grid(format!("spacing must be positive, got {h}")));
        }
        match dispersal {
            Dispersal::Local => Ok(DiscreteDispersal::Laplacian {
                inv_h2: 1.0 / (h * h),
            }),
            Dispersal::Nonlocal(k) => {
                let tau = k.radius();
                if h > tau / 8.0 * (1.0 + 1e-12) {
                    return Err(Error::Grid(format!(
                        "spacing {h} does not resolve a kernel of radius {tau} (need h <= radius/8)"
                    )));
                }
                let half = (tau / h + 1e-9).floor() as usize;
                let mut weights: Vec<f64> = (0..=2 * half)
                    .map(|i| {
                        let y = (i as f64 - half as f64) * h;
                        h * k.value(y)
                    })
                    .collect();
                if ((half as f64) * h - tau).abs() <= 1e-9 * h {
                    weights[0] *= 0.5;
                    weights[2 * half] *= 0.5;
                }
                // Mirror-pair the weights so the stencil is exactly even.
                for i in 0..half {
                    let avg = 0.5 * (weights[i] + weights[2 * half - i]);
                    weights[i] = avg;
                    weights[2 * half - i] = avg;
                }
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                Ok(DiscreteDispersal::Stencil { weights, half })
            }
        }
    }

    /// Upper bound on the diagonal loss rate `-dN[u]/du_j` per unit
    /// dispersal coefficient, used in explicit step-size bounds.
    pub fn loss_rate(&self) -> f64 {
        match self {
            DiscreteDispersal::Stencil { .. } => 2.0,
            DiscreteDispersal::Laplacian { inv_h2 } => 2.0 * inv_h2,
        }
    }

    /// Reach of the operator in nodes.
    pub fn half_width(&self) -> usize {
        match self {
            DiscreteDispersal::Stencil { half, .. } => *half,
            DiscreteDispersal::Laplacian { .. } => 1,
        }
    }

    /// Writes `N[u]` into `out`. Constants map exactly to zero.
    pub fn apply(&self, u: &[f64], closure: Closure, out: &mut [f64]) {
        let n = u.len();
        debug_assert_eq!(out.len(), n);
        match self {
            DiscreteDispersal::Laplacian { inv_h2 } => {
                for j in 0..n {
                    let l = u[ghost(j as isize - 1, n, closure)];
                    let r = u[ghost(j as isize + 1, n, closure)];
                    out[j] = ((l - u[j]) + (r - u[j])) * inv_h2;
                }
            }
            DiscreteDispersal::Stencil { weights, half } => {
                let m = *half;
                for j in 0..n {
                    let uj = u[j];
                    let mut acc = 0.0;
                    if j >= m && j + m < n {
                        for (w, &v) in weights.iter().zip(&u[j - m..=j + m]) {
                            acc += w * (v - uj);
                        }
                    } else {
                        for (i, w) in weights.iter().enumerate() {
                            let idx = ghost(j as isize + i as isize - m as isize, n, closure);
                            acc += w * (u[idx] - uj);
                        }
                    }
                    out[j] = acc;
                }
            }
        }
    }
}
