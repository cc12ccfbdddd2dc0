//! A convex loss whose zero set is exactly `{(x, q) : PLSoftMax^δ(x) = q}`:
//! `L = L_ord + L_supp + L_sqr`.
//!
//! * `L_ord` penalizes adjacent inversions of `x` along `q`'s sort order;
//! * `L_supp` penalizes coordinates on the wrong side of the `δ`-band
//!   around `x` at `q`'s top coordinate;
//! * `L_sqr` is the squared distance from `q` to the PLSoftMax piece that
//!   `q`'s own order and support select.

use rand::Rng;

use crate::error::{domain, Result};
use crate::mechanisms::{
    plsoftmax, plsoftmax_piece, sm_apply_transpose, SimplexDistribution, SortPermutation, ValueVector,
    SUPPORT_THRESHOLD,
};
use crate::rng::sub_rng;

/// Hinge arguments closer to zero than this count as kinks.
pub const KINK_MARGIN: f64 = 1e-4;
/// Finite-difference step of [`subgradient_check`].
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct LossInput {
    pub scores: ValueVector,
    pub target: SimplexDistribution,
    pub delta: f64,
}

impl LossInput {
    pub fn new(scores: ValueVector, target: SimplexDistribution, delta: f64) -> Result<Self> {
        if scores.len() != target.len() {
            return domain("scores and target differ in dimension");
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return domain("delta must be positive");
        }
        Ok(Self { scores, target, delta })
    }

    fn with_scores(&self, x: Vec<f64>) -> Self {
        Self {
            scores: ValueVector::new(x).expect("finite scores"),
            target: self.target.clone(),
            delta: self.delta,
        }
    }
}

/// `π_q` (ties by index) and the support size `k_q`.
struct TargetShape {
    perm: SortPermutation,
    k: usize,
    in_support: Vec<bool>,
}

fn shape(q: &SimplexDistribution) -> TargetShape {
    let perm = SortPermutation::descending(q);
    let in_support: Vec<bool> = q.iter().map(|&p| p > SUPPORT_THRESHOLD).collect();
    let k = in_support.iter().filter(|&&s| s).count().max(1);
    TargetShape { perm, k, in_support }
}

/// Adjacent pairs `(π_q(i), π_q(i+1))` that `L_ord` compares. Pairs of two
/// zero-probability coordinates are skipped: their relative order carries
/// no information.
fn ord_pairs(s: &TargetShape) -> impl Iterator<Item = (usize, usize)> + '_ {
    s.perm
        .order()
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|&(a, b)| s.in_support[a] || s.in_support[b])
}

/// `Σ max{x_{π_q(i+1)} − x_{π_q(i)}, 0}` over adjacent pairs.
pub fn loss_ord(input: &LossInput) -> f64 {
    let x = &input.scores;
    ord_pairs(&shape(&input.target)).map(|(a, b)| (x[b] - x[a]).max(0.0)).sum()
}

/// Hinge arguments of `L_supp`, as `(i, top, argument)`.
fn supp_terms(input: &LossInput, s: &TargetShape) -> Vec<(usize, usize, f64)> {
    let x = &input.scores;
    let top = s.perm.order()[0];
    (0..x.len())
        .filter(|&i| i != top)
        .map(|i| {
            let arg = if s.in_support[i] {
                x[top] - x[i] - input.delta
            } else {
                x[i] - x[top] + input.delta
            };
            (i, top, arg)
        })
        .collect()
}

pub fn loss_supp(input: &LossInput) -> f64 {
    supp_terms(input, &shape(&input.target)).iter().map(|t| t.2.max(0.0)).sum()
}

fn sqr_residual(input: &LossInput, s: &TargetShape) -> Vec<f64> {
    let piece = plsoftmax_piece(&input.scores, &s.perm, s.k, input.delta);
    piece.iter().zip(input.target.iter()).map(|(m, q)| m - q).collect()
}

/// `‖q − (1/δ)P⁻¹ SM_(k_q,d) P x − P⁻¹u^(k_q)‖²` with `P` from `π_q`.
pub fn loss_sqr(input: &LossInput) -> f64 {
    sqr_residual(input, &shape(&input.target)).iter().map(|r| r * r).sum()
}

pub fn loss_total(input: &LossInput) -> f64 {
    loss_ord(input) + loss_supp(input) + loss_sqr(input)
}

/// Gradient of [`loss_total`], or `None` when a hinge sits within
/// [`KINK_MARGIN`] of its kink.
pub fn loss_gradient(input: &LossInput) -> Option<Vec<f64>> {
    let s = shape(&input.target);
    let x = &input.scores;
    let d = x.len();
    let mut g = vec![0.0; d];

    for (a, b) in ord_pairs(&s) {
        let arg = x[b] - x[a];
        if arg.abs() < KINK_MARGIN {
            return None;
        }
        if arg > 0.0 {
            g[b] += 1.0;
            g[a] -= 1.0;
        }
    }
    for (i, top, arg) in supp_terms(input, &s) {
        if arg.abs() < KINK_MARGIN {
            return None;
        }
        if arg > 0.0 {
            let sign = if s.in_support[i] { -1.0 } else { 1.0 };
            g[i] += sign;
            g[top] -= sign;
        }
    }
    // 2 Mᵀ(Mx + b − q) with M = (1/δ) Pᵀ SM P.
    let r = sqr_residual(input, &s);
    let back = sm_apply_transpose(s.k, &s.perm.apply(&r));
    for (i, v) in s.perm.apply_inverse(&back).into_iter().enumerate() {
        g[i] += 2.0 * v / input.delta;
    }
    Some(g)
}

/// Max relative error `|a − b| / max(|a|, |b|, 1)` between the analytic
/// gradient and central differences; `None` at a non-differentiable point.
pub fn subgradient_check(input: &LossInput) -> Option<f64> {
    let g = loss_gradient(input)?;
    let x = input.scores.values();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[i] += FD_STEP;
        down[i] -= FD_STEP;
        let fd = (loss_total(&input.with_scores(up)) - loss_total(&input.with_scores(down))) / (2.0 * FD_STEP);
        worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1.0));
    }
    Some(worst)
}

fn random_scores(rng: &mut impl Rng, d: usize, delta: f64) -> Vec<f64> {
    (0..d).map(|_| delta * rng.random_range(-3.0..3.0)).collect()
}

/// A random target with a random support size.
fn random_target(rng: &mut impl Rng, d: usize) -> SimplexDistribution {
    let k = rng.random_range(1..=d);
    let mut w: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let mut idx: Vec<usize> = (0..d).collect();
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), rng);
    for &i in &idx[k..] {
        w[i] = 0.0;
    }
    SimplexDistribution::from_weights(w).expect("positive mass")
}

/// `max L(t·x₁ + (1−t)·x₂) − t·L(x₁) − (1−t)·L(x₂)` over random triples
/// for any loss `f` on `ℝ^d`; trial `i` uses stream `i` of `seed`.
pub fn convexity_probe_with(f: impl Fn(&[f64]) -> f64, d: usize, scale: f64, trials: usize, seed: u64) -> f64 {
    (0..trials)
        .map(|i| {
            let mut rng = sub_rng(seed, i as u64);
            let a = random_scores(&mut rng, d, scale);
            let b = random_scores(&mut rng, d, scale);
            let t: f64 = rng.random();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| t * u + (1.0 - t) * v).collect();
            f(&mid) - t * f(&a) - (1.0 - t) * f(&b)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Convexity violation of `x ↦ L(x; q)` for a fixed target.
pub fn convexity_probe(q: &SimplexDistribution, delta: f64, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let base = LossInput::new(ValueVector::new(vec![0.0; q.len()])?, q.clone(), delta)?;
    Ok(convexity_probe_with(
        |x| loss_total(&base.with_scores(x.to_vec())),
        q.len(),
        delta,
        trials,
        seed,
    ))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ProbeReport {
    pub d: usize,
    pub delta: f64,
    pub draws: usize,
    /// Largest `L(x; PLSoftMax(x))`.
    pub zero_residual: f64,
    /// Smallest loss after moving one unit of mass off PLSoftMax's support.
    pub min_off_support_loss: f64,
    pub convexity_violation: f64,
    pub gradient_error: f64,
    pub gradient_checked: usize,
    pub gradient_skipped: usize,
}

/// Runs every loss probe with `draws` random inputs per probe.
pub fn probe_suite(d: usize, delta: f64, draws: usize, seed: u64) -> Result<ProbeReport> {
    if d < 2 || draws == 0 {
        return domain("need d >= 2 and at least one draw");
    }
    let mut zero_residual: f64 = 0.0;
    let mut min_off: f64 = f64::INFINITY;
    let mut conv: f64 = f64::NEG_INFINITY;
    let mut grad_err: f64 = 0.0;
    let (mut checked, mut skipped) = (0, 0);
    for i in 0..draws {
        let mut rng = sub_rng(seed, i as u64);
        let x = random_scores(&mut rng, d, delta);
        let xv = ValueVector::new(x.clone())?;
        let p = plsoftmax(&xv, delta)?;
        zero_residual = zero_residual.max(loss_total(&LossInput::new(xv.clone(), p.clone(), delta)?));

        // Move all mass onto a coordinate outside the support, if any.
        if let Some(out) = (0..d).find(|&j| p[j] <= SUPPORT_THRESHOLD) {
            let mut moved = p.to_vec();
            moved[out] += 0.5;
            let top = xv.argmax();
            moved[top] -= 0.5f64.min(moved[top]);
            let moved = SimplexDistribution::from_weights(moved)?;
            min_off = min_off.min(loss_total(&LossInput::new(xv.clone(), moved, delta)?));
        }

        let q = random_target(&mut rng, d);
        conv = conv.max(convexity_probe(&q, delta, 10, seed ^ (i as u64).wrapping_mul(0x9e37_79b9))?);
        match subgradient_check(&LossInput::new(xv, q, delta)?) {
            Some(e) => {
                grad_err = grad_err.max(e);
                checked += 1;
            }
            None => skipped += 1,
        }
    }
    Ok(ProbeReport {
        d,
        delta,
        draws,
        zero_residual,
        min_off_support_loss: min_off,
        convexity_violation: conv,
        gradient_error: grad_err,
        gradient_checked: checked,
        gradient_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(x: &[f64], q: &[f64], delta: f64) -> LossInput {
        LossInput::new(
            ValueVector::new(x.to_vec()).unwrap(),
            SimplexDistribution::new(q.to_vec()).unwrap(),
            delta,
        )
        .unwrap()
    }

    #[test]
    fn ord_examples() {
        assert_eq!(loss_ord(&input(&[3.0, 2.0, 1.0], &[0.5, 0.3, 0.2], 1.0)), 0.0);
        assert_eq!(loss_ord(&input(&[0.0, 1.0], &[1.0, 0.0], 1.0)), 1.0);
        let a = loss_ord(&input(&[0.2, 1.0, -0.4], &[0.2, 0.5, 0.3], 1.0));
        let b = loss_ord(&input(&[5.2, 6.0, 4.6], &[0.2, 0.5, 0.3], 1.0));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn supp_examples() {
        assert_eq!(loss_supp(&input(&[0.0, 2.0], &[1.0, 0.0], 1.0)), 3.0);
        assert_eq!(loss_supp(&input(&[0.5, 0.2, 0.4], &[0.4, 0.3, 0.3], 1.0)), 0.0);
        assert_eq!(loss_supp(&input(&[2.0, 0.0], &[1.0, 0.0], 1.0)), 0.0);
    }

    #[test]
    fn sqr_examples() {
        assert_eq!(loss_sqr(&input(&[0.0; 4], &[0.25; 4], 1.0)), 0.0);
        let x = ValueVector::new(vec![0.4, 0.1, 0.35, -2.0]).unwrap();
        let q = plsoftmax(&x, 0.5).unwrap();
        let inp = LossInput::new(x, q, 0.5).unwrap();
        assert!(loss_total(&inp) < 1e-15);
    }

    #[test]
    fn wrong_support_is_penalized() {
        let inp = input(&[0.5, 0.0, -1.0], &[0.5, 0.0, 0.5], 1.0);
        assert!(loss_supp(&inp) > 0.0 && loss_total(&inp) > 0.0);
    }

    #[test]
    fn probe_detects_concave_double() {
        let v = convexity_probe_with(|x| -x.iter().map(|v| v * v).sum::<f64>(), 4, 1.0, 50, 2);
        assert!(v > 0.0);
        let q = SimplexDistribution::new(vec![0.5, 0.3, 0.2, 0.0]).unwrap();
        assert!(convexity_probe(&q, 0.7, 500, 3).unwrap() <= 1e-9);
    }

    #[test]
    fn gradient_matches_differences() {
        let inp = input(&[0.3, -0.2, 0.9, 0.05], &[0.4, 0.35, 0.25, 0.0], 0.8);
        assert!(subgradient_check(&inp).unwrap() <= 1e-4);
        let kink = input(&[0.0, 0.0], &[0.5, 0.5], 1.0);
        assert!(subgradient_check(&kink).is_none());
    }

    /// SM rows sum to zero, so the square term ignores shifts as well.
    #[test]
    fn square_term_is_translation_invariant() {
        let a = input(&[0.3, 0.1], &[0.9, 0.1], 1.0);
        let b = input(&[1.3, 1.1], &[0.9, 0.1], 1.0);
        assert!((loss_sqr(&a) - loss_sqr(&b)).abs() < 1e-12);
    }
}
