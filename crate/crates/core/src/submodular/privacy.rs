use serde::Serialize;

use super::CoverageInstance;
use crate::distances::{lp_distance, renyi_divergence, DivergenceOrder};
use crate::error::{domain, Result};
use crate::mechanisms::MechanismSpec;

/// Which advanced-composition formula to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdvancedComposition {
    /// `½k²ε'² + √(2 ln(1/η))·ε'`, the form used in the greedy privacy analysis.
    AsPrinted,
    /// The usual form `√(2k ln(1/η))·ε' + kε'(e^{ε'} − 1)`.
    Standard,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyBudget {
    pub eps_step: f64,
    pub delta_step: f64,
    pub steps: usize,
    pub eta: f64,
    pub eps_total_basic: f64,
    pub delta_total_basic: f64,
    pub eps_total_advanced: f64,
    pub eps_total_advanced_standard: f64,
    /// `η + kδ'`, the failure probability of the advanced forms.
    pub delta_total: f64,
}

impl PrivacyBudget {
    pub fn eps_advanced(&self, variant: AdvancedComposition) -> f64 {
        match variant {
            AdvancedComposition::AsPrinted => self.eps_total_advanced,
            AdvancedComposition::Standard => self.eps_total_advanced_standard,
        }
    }
}

pub fn compose_privacy(eps_step: f64, delta_step: f64, steps: usize, eta: f64) -> Result<PrivacyBudget> {
    if !(eps_step > 0.0) || !(delta_step >= 0.0) || steps == 0 {
        return domain("need eps_step > 0, delta_step >= 0 and at least one step");
    }
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("eta must lie in (0, 1), got {eta}"));
    }
    let k = steps as f64;
    let log_term = (1.0 / eta).ln();
    Ok(PrivacyBudget {
        eps_step,
        delta_step,
        steps,
        eta,
        eps_total_basic: k * eps_step,
        delta_total_basic: k * delta_step,
        eps_total_advanced: 0.5 * k * k * eps_step * eps_step + (2.0 * log_term).sqrt() * eps_step,
        eps_total_advanced_standard: (2.0 * k * log_term).sqrt() * eps_step + k * eps_step * eps_step.exp_m1(),
        delta_total: eta + k * delta_step,
    })
}

/// Largest change of any marginal gain between two neighboring instances,
/// over the given selection contexts.
pub fn sensitivity_linf(a: &CoverageInstance, b: &CoverageInstance, contexts: &[Vec<usize>]) -> Result<f64> {
    if a.len() != b.len() {
        return domain("neighboring instances must have the same items");
    }
    let mut worst: f64 = 0.0;
    for s in contexts {
        let ga = a.marginal_gains(s)?;
        let gb = b.marginal_gains(s)?;
        worst = worst.max(lp_distance(&ga.gains, &gb.gains, f64::INFINITY)?);
    }
    Ok(worst)
}

/// `max_i |ln a_i − ln b_i|` with `ln 0 − ln 0 := 0`; `+∞` if exactly one
/// side is zero.
pub fn log_linf_extended(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x > 0.0, y > 0.0) {
            (false, false) => 0.0,
            (true, true) => (x.ln() - y.ln()).abs(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Symmetric max-divergence between the selection distributions of two
/// neighbors at `context`, minus its proven bound: `λ·Log-ℓ∞` of the gain
/// vectors for Pow and `2λ·ℓ∞` for Exp. Non-positive when the link holds.
///
/// The Pow bound relies on every gain moving in the same direction, as it
/// does when one record's contents shrink or grow. `None` for other
/// mechanisms, when either side has no positive gain, or when a gain hits
/// zero on one side only (the Pow bound is then infinite).
pub fn privacy_link_slack(
    mech: &MechanismSpec,
    a: &CoverageInstance,
    b: &CoverageInstance,
    context: &[usize],
) -> Result<Option<f64>> {
    let ga = a.marginal_gains(context)?;
    let gb = b.marginal_gains(context)?;
    if ga.gains.iter().all(|&g| g == 0.0) || gb.gains.iter().all(|&g| g == 0.0) {
        return Ok(None);
    }
    let bound = match *mech {
        MechanismSpec::Pow { lambda } => lambda * log_linf_extended(&ga.gains, &gb.gains),
        MechanismSpec::Exp { lambda } => 2.0 * lambda * lp_distance(&ga.gains, &gb.gains, f64::INFINITY)?,
        _ => return Ok(None),
    };
    if !bound.is_finite() {
        return Ok(None);
    }
    let fa = ga.distribution(mech)?;
    let fb = gb.distribution(mech)?;
    let div = renyi_divergence(&fa, &fb, DivergenceOrder::Infinity)
        .max(renyi_divergence(&fb, &fa, DivergenceOrder::Infinity));
    Ok(Some(div - bound))
}

/// Relative loss bound for the power mechanism on `t`-multiplicatively
/// insensitive data: `min{1/e + 2√k·ln d·S∞ / (t·ε·OPT), 1}`.
pub fn pow_error_bound(k: usize, d: usize, s_inf: f64, t: f64, eps: f64, opt: f64) -> f64 {
    let extra = 2.0 * (k as f64).sqrt() * (d as f64).ln() * s_inf / (t * eps * opt);
    (1.0 / std::f64::consts::E + extra).min(1.0)
}

/// The exponential mechanism's counterpart, `min{1/e + k·ln d·S∞ / (ε·OPT), 1}`,
/// with the hidden constant set to 1.
pub fn exp_error_bound(k: usize, d: usize, s_inf: f64, eps: f64, opt: f64) -> f64 {
    let extra = k as f64 * (d as f64).ln() * s_inf / (eps * opt);
    (1.0 / std::f64::consts::E + extra).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_examples() {
        let b = compose_privacy(0.1, 1e-6, 5, 0.01).unwrap();
        assert!((b.eps_total_basic - 0.5).abs() < 1e-15);
        assert!((b.delta_total_basic - 5e-6).abs() < 1e-20);
        let printed = 0.125 + (2.0 * 100f64.ln()).sqrt() * 0.1;
        assert!((b.eps_total_advanced - printed).abs() < 1e-15);
        assert!((b.eps_total_advanced - 0.428_485).abs() < 1e-5);
        assert!((b.delta_total - (0.01 + 5e-6)).abs() < 1e-15);
        assert!(b.eps_advanced(AdvancedComposition::Standard) > 0.0);
        assert!(compose_privacy(0.1, 0.0, 5, 1.5).is_err());
    }

    #[test]
    fn sensitivity_examples() {
        let a = CoverageInstance::new(5, vec![vec![0, 1, 2], vec![2, 3], vec![4]]).unwrap();
        let ctx = vec![vec![], vec![1]];
        assert_eq!(sensitivity_linf(&a, &a, &ctx).unwrap(), 0.0);
        assert!(sensitivity_linf(&a, &a.without_member(0, 1), &ctx).unwrap() <= 1.0);
        let emptied = CoverageInstance::new(5, vec![vec![], vec![2, 3], vec![4]]).unwrap();
        assert_eq!(sensitivity_linf(&a, &emptied, &[vec![]]).unwrap(), 3.0);
    }

    #[test]
    fn pow_bound_beats_exp_bound_for_larger_k() {
        for k in 5..=20 {
            assert!(pow_error_bound(k, 1000, 1.0, 1.0, 1.0, 1e6) < exp_error_bound(k, 1000, 1.0, 1.0, 1e6));
        }
    }
}
