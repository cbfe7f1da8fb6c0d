//! Platt scaling: sigmoid fit P(object | f) = 1 / (1 + exp(A f + B)) by
//! regularized maximum likelihood with a damped Newton iteration.

use alloc::vec::Vec;

/// Fitted sigmoid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
    /// True when the targets were single-class and the identity-like
    /// fallback (A = -1, B = 0) was returned.
    pub fallback: bool,
}

impl PlattParams {
    /// Calibrated probability of the positive class for decision value `f`.
    #[inline]
    pub fn probability(&self, f: f64) -> f64 {
        sigmoid(self.a * f + self.b)
    }
}

#[inline]
fn sigmoid(f_a_b: f64) -> f64 {
    if f_a_b >= 0.0 {
        let e = libm::exp(-f_a_b);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(f_a_b))
    }
}

/// Negative log-likelihood of the smoothed targets under (a, b).
pub fn negative_log_likelihood(decision: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    let mut fval = 0.0;
    for (&f, &t) in decision.iter().zip(targets) {
        let f_a_b = f * a + b;
        if f_a_b >= 0.0 {
            fval += t * f_a_b + libm::log(1.0 + libm::exp(-f_a_b));
        } else {
            fval += (t - 1.0) * f_a_b + libm::log(1.0 + libm::exp(f_a_b));
        }
    }
    fval
}

/// Smoothed regression targets ((N+ + 1)/(N+ + 2) and 1/(N- + 2)).
pub fn smoothed_targets(is_positive: &[bool]) -> Vec<f64> {
    let prior1 = is_positive.iter().filter(|&&p| p).count() as f64;
    let prior0 = is_positive.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    is_positive.iter().map(|&p| if p { hi } else { lo }).collect()
}

/// Fits (A, B) over training decision values. Single-class targets return
/// the flagged fallback.
pub fn fit_sigmoid(decision: &[f64], is_positive: &[bool]) -> PlattParams {
    debug_assert_eq!(decision.len(), is_positive.len());
    let prior1 = is_positive.iter().filter(|&&p| p).count();
    let prior0 = is_positive.len() - prior1;
    if prior1 == 0 || prior0 == 0 {
        return PlattParams { a: -1.0, b: 0.0, fallback: true };
    }

    let targets = smoothed_targets(is_positive);
    let max_iter = 100;
    let min_step = 1e-10;
    let ridge = 1e-12;
    let eps = 1e-5;

    let mut a = 0.0;
    let mut b = libm::log((prior0 as f64 + 1.0) / (prior1 as f64 + 1.0));
    let mut fval = negative_log_likelihood(decision, &targets, a, b);

    for _ in 0..max_iter {
        let mut h11 = ridge;
        let mut h22 = ridge;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for (&f, &t) in decision.iter().zip(&targets) {
            let f_a_b = f * a + b;
            let (p, q) = if f_a_b >= 0.0 {
                let e = libm::exp(-f_a_b);
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = libm::exp(f_a_b);
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        let mut improved = false;
        while step >= min_step {
            let new_a = a + step * da;
            let new_b = b + step * db;
            let new_f = negative_log_likelihood(decision, &targets, new_a, new_b);
            if new_f < fval + 1e-4 * step * gd {
                a = new_a;
                b = new_b;
                fval = new_f;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }

    PlattParams { a, b, fallback: false }
}
