use nalgebra::{DMatrix, DVector};

use super::matrix::{sm_apply, SoftMaxMatrix};
use super::permutation::{active_count, SortPermutation};
use super::vector::{SimplexDistribution, ValueVector, NEG_CLAMP};
use crate::error::{domain, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

/// Exponential weights `exp(lambda x_i)`, stabilized by subtracting the max.
pub fn exp_mechanism(x: &ValueVector, lambda: f64) -> Result<SimplexDistribution> {
    check_positive("lambda", lambda)?;
    let m = x.max();
    let w: Vec<f64> = x.iter().map(|&v| (lambda * (v - m)).exp()).collect();
    SimplexDistribution::from_weights(w)
}

/// Power weights `x_i^lambda` with `0^lambda = 0`.
pub fn power_mechanism(x: &ValueVector, lambda: f64) -> Result<SimplexDistribution> {
    check_positive("lambda", lambda)?;
    if let Some(i) = x.iter().position(|&v| v < 0.0) {
        return domain(format!("power mechanism needs non-negative values (index {i})"));
    }
    let m = x.max();
    if m <= 0.0 {
        return domain("power mechanism needs at least one positive value");
    }
    // Dividing by the max first keeps x^lambda in range for large lambda.
    let w: Vec<f64> = x
        .iter()
        .map(|&v| if v == 0.0 { 0.0 } else { (v / m).powf(lambda) })
        .collect();
    SimplexDistribution::from_weights(w)
}

/// The affine piece `(1/delta) P^{-1} SM_(k,d) P x + P^{-1} u^(k)` for an
/// arbitrary permutation and active count, without clamping.
pub fn plsoftmax_piece(x: &[f64], perm: &SortPermutation, k: usize, delta: f64) -> Vec<f64> {
    let sorted = perm.apply(x);
    let mut y = sm_apply(k, &sorted);
    let share = 1.0 / k as f64;
    for (i, v) in y.iter_mut().enumerate() {
        *v /= delta;
        if i < k {
            *v += share;
        }
    }
    perm.apply_inverse(&y)
}

pub fn plsoftmax(x: &ValueVector, delta: f64) -> Result<SimplexDistribution> {
    check_positive("delta", delta)?;
    let perm = SortPermutation::descending(x);
    let sorted = perm.apply(x);
    let k = active_count(&sorted, delta);
    if k == 1 {
        return Ok(SimplexDistribution::point_mass(x.len(), perm.order()[0]));
    }
    // SM rows sum to zero, so centering on the max changes nothing but
    // keeps the arithmetic on O(delta)-sized numbers.
    let top = sorted[0];
    let centered: Vec<f64> = x.iter().map(|&v| v - top).collect();
    finish(plsoftmax_piece(&centered, &perm, k, delta))
}

fn finish(mut p: Vec<f64>) -> Result<SimplexDistribution> {
    for v in p.iter_mut() {
        assert!(*v > -NEG_CLAMP, "PLSoftMax produced a negative weight {v}");
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    SimplexDistribution::from_weights(p)
}

/// Same map as [`plsoftmax`], evaluated with explicit dense permutation and
/// soft-max matrices. Slow; used to cross-check the structured route.
pub fn plsoftmax_dense(x: &ValueVector, delta: f64) -> Result<SimplexDistribution> {
    check_positive("delta", delta)?;
    let d = x.len();
    let perm = SortPermutation::descending(x);
    let k = active_count(&perm.apply(x), delta);
    let p = DMatrix::from_fn(d, d, |r, c| if perm.order()[r] == c { 1.0 } else { 0.0 });
    let sm = SoftMaxMatrix::new(k, d)?.to_f64();
    let u = DVector::from_fn(d, |i, _| if i < k { 1.0 / k as f64 } else { 0.0 });
    let xv = DVector::from_column_slice(x);
    let out = p.transpose() * (&sm * (&p * xv) / delta + u);
    finish(out.iter().copied().collect())
}

/// PLSoftMax applied to coordinatewise logarithms.
pub fn log_plsoftmax(x: &ValueVector, delta: f64) -> Result<SimplexDistribution> {
    if let Some(i) = x.iter().position(|&v| v <= 0.0) {
        return domain(format!("LogPLSoftMax needs positive values (index {i})"));
    }
    let logs = ValueVector::new(x.iter().map(|v| v.ln()).collect())?;
    plsoftmax(&logs, delta)
}

/// Euclidean projection onto the simplex (sort and threshold).
pub fn sparsemax(x: &ValueVector) -> Result<SimplexDistribution> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    SimplexDistribution::from_weights(x.iter().map(|&v| (v - tau).max(0.0)).collect())
}

/// Point mass on the lowest-index maximizer.
pub fn argmax_mechanism(x: &ValueVector) -> SimplexDistribution {
    SimplexDistribution::point_mass(x.len(), x.argmax())
}
