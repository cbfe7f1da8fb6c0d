//! Sequential minimal optimization for the weighted soft-margin dual.
//!
//! Solves min 1/2 a'Qa - e'a subject to y'a = 0 and 0 <= a_i <= C_i with
//! Q_ij = y_i y_j K(x_i, x_j), selecting the maximal KKT-violating pair each
//! iteration. Per-sample upper bounds C_i carry the training weights.

use alloc::vec::Vec;

use crate::math::Point3;

const TAU: f64 = 1e-12;
/// Dense kernel matrices are kept below this entry count (256 MB of f64).
const MAX_DENSE_ENTRIES: usize = 32_000_000;

pub(crate) struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final m(a) - M(a) KKT gap.
    pub gap: f64,
}

struct Kernel<'a> {
    x: &'a [Point3],
    gamma: f64,
    dense: Option<Vec<f64>>,
    n: usize,
}

impl<'a> Kernel<'a> {
    fn new(x: &'a [Point3], gamma: f64) -> Self {
        let n = x.len();
        let dense = if n * n <= MAX_DENSE_ENTRIES {
            let mut g = alloc::vec![0.0; n * n];
            for i in 0..n {
                g[i * n + i] = 1.0;
                for j in (i + 1)..n {
                    let v = libm::exp(-gamma * x[i].dist_squared(x[j]));
                    g[i * n + j] = v;
                    g[j * n + i] = v;
                }
            }
            Some(g)
        } else {
            None
        };
        Kernel { x, gamma, dense, n }
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(g) => g[i * self.n + j],
            None => libm::exp(-self.gamma * self.x[i].dist_squared(self.x[j])),
        }
    }
}

/// `x` are (already scaled) feature points, `y` in {-1, +1}, `c` per-sample
/// upper bounds.
pub(crate) fn solve(
    x: &[Point3],
    y: &[f64],
    c: &[f64],
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> SmoSolution {
    let n = x.len();
    debug_assert_eq!(y.len(), n);
    debug_assert_eq!(c.len(), n);
    let kernel = Kernel::new(x, gamma);
    let q = |i: usize, j: usize| y[i] * y[j] * kernel.k(i, j);

    let mut alpha = alloc::vec![0.0f64; n];
    let mut grad = alloc::vec![-1.0f64; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < max_iter {
        // maximal violating pair
        let mut i = usize::MAX;
        let mut m_up = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c[t]) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c[t]);
            if in_up && v > m_up {
                m_up = v;
                i = t;
            }
            if in_low && v < m_low {
                m_low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX {
            converged = true;
            gap = 0.0;
            break;
        }
        gap = m_up - m_low;
        if gap <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        let old_ai = alpha[i];
        let old_aj = alpha[j];
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * kernel.k(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > c[i] - c[j] {
                if alpha[i] > c[i] {
                    alpha[i] = c[i];
                    alpha[j] = c[i] - diff;
                }
            } else if alpha[j] > c[j] {
                alpha[j] = c[j];
                alpha[i] = c[j] + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * kernel.k(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c[i] {
                if alpha[i] > c[i] {
                    alpha[i] = c[i];
                    alpha[j] = sum - c[i];
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c[j] {
                if alpha[j] > c[j] {
                    alpha[j] = c[j];
                    alpha[i] = sum - c[j];
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let delta_i = alpha[i] - old_ai;
        let delta_j = alpha[j] - old_aj;
        if delta_i == 0.0 && delta_j == 0.0 {
            // numerically stuck pair; treat current gap as converged-enough
            break;
        }
        for t in 0..n {
            grad[t] += q(t, i) * delta_i + q(t, j) * delta_j;
        }
    }

    // bias from the free vectors, or the midpoint of the KKT bounds
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c[t] {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (upper + lower) / 2.0 };

    SmoSolution { alpha, rho, converged, iterations, gap }
}
