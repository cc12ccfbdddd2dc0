use super::vector::{SimplexDistribution, ValueVector, SUPPORT_THRESHOLD};
use crate::error::{domain, Result};

/// Slack allowed below `max(x) - delta` when checking support.
pub const SUPPORT_SLACK: f64 = 1e-9;

fn expected(x: &ValueVector, p: &SimplexDistribution) -> f64 {
    assert_eq!(x.len(), p.len(), "dimension mismatch");
    x.iter().zip(p.iter()).map(|(a, b)| a * b).sum()
}

/// `max(x) - <x, p>`.
pub fn additive_gap(x: &ValueVector, p: &SimplexDistribution) -> f64 {
    x.max() - expected(x, p)
}

/// `1 - <x, p> / max(x)`.
pub fn multiplicative_gap(x: &ValueVector, p: &SimplexDistribution) -> Result<f64> {
    let m = x.max();
    if m <= 0.0 {
        return domain("multiplicative gap needs a positive maximum");
    }
    Ok(1.0 - expected(x, p) / m)
}

/// True iff every supported coordinate is within `delta` of the maximum.
pub fn worst_case_support_ok(x: &ValueVector, p: &SimplexDistribution, delta: f64) -> bool {
    assert_eq!(x.len(), p.len(), "dimension mismatch");
    let floor = x.max() - delta - SUPPORT_SLACK;
    x.iter()
        .zip(p.iter())
        .all(|(&xi, &pi)| pi <= SUPPORT_THRESHOLD || xi >= floor)
}
