//! Distances on value vectors and distributions, and subordinate norms
//! `‖A‖_{p,q} = max_{‖x‖_p = 1} ‖Ax‖_q`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest row count accepted by [`subordinate_norm_exact`].
pub const MAX_EXACT_ROWS: usize = 24;

/// Order `α ∈ [1, ∞]` of a Rényi divergence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DivergenceOrder {
    Finite(f64),
    Infinity,
}

impl DivergenceOrder {
    pub const KL: Self = Self::Finite(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_infinite() && alpha > 0.0 {
            Ok(Self::Infinity)
        } else if alpha >= 1.0 {
            Ok(Self::Finite(alpha))
        } else {
            domain(format!("divergence order must be >= 1, got {alpha}"))
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Finite(a) => a,
            Self::Infinity => f64::INFINITY,
        }
    }
}

/// A `(p, q)` pair of norm exponents, each in `[1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    pub p: f64,
    pub q: f64,
}

impl NormPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        Ok(Self { p, q })
    }
}

/// Hölder conjugate `p / (p - 1)` with `1 ↔ ∞`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        domain(format!("norm exponent must be >= 1, got {p}"))
    }
}

fn norm_unchecked<I: Iterator<Item = f64>>(it: I, p: f64) -> f64 {
    if p.is_infinite() {
        it.map(f64::abs).fold(0.0, f64::max)
    } else if p == 1.0 {
        it.map(f64::abs).sum()
    } else if p == 2.0 {
        it.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        // Scale by the largest entry to avoid overflow for big p.
        let v: Vec<f64> = it.map(f64::abs).collect();
        let m = v.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|a| (a / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub fn lp_norm(x: &[f64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(norm_unchecked(x.iter().copied(), p))
}

pub fn lp_distance(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    if x.len() != y.len() {
        return domain("dimension mismatch");
    }
    Ok(norm_unchecked(x.iter().zip(y).map(|(a, b)| a - b), p))
}

/// `ℓ_p(log x, log y)` for strictly positive vectors.
pub fn log_lp_distance(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return domain("log-lp distance needs strictly positive entries");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    lp_distance(&lx, &ly, p)
}

/// `D_α(x ‖ y)`, possibly `+∞`. Arguments are simplex points
/// (`SimplexDistribution` derefs to a slice).
pub fn renyi_divergence(x: &[f64], y: &[f64], order: DivergenceOrder) -> f64 {
    assert_eq!(x.len(), y.len(), "dimension mismatch");
    let pairs = || x.iter().zip(y.iter()).filter(|(&a, _)| a > 0.0);
    if pairs().any(|(_, &b)| b <= 0.0) {
        return f64::INFINITY;
    }
    let d = match order {
        DivergenceOrder::Infinity => pairs().map(|(a, b)| (a / b).ln()).fold(f64::NEG_INFINITY, f64::max),
        DivergenceOrder::Finite(alpha) if alpha == 1.0 => {
            pairs().map(|(a, b)| a * (a / b).ln()).sum()
        }
        DivergenceOrder::Finite(alpha) => {
            // log Σ a^α b^{1-α} via log-sum-exp.
            let terms: Vec<f64> = pairs()
                .map(|(a, b)| alpha * a.ln() + (1.0 - alpha) * b.ln())
                .collect();
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
            lse / (alpha - 1.0)
        }
    };
    // Exact rounding can produce tiny negatives for x ≈ y.
    d.max(0.0)
}

/// `max_{s ∈ {±1}^t} ‖sᵀA‖_r` with `r = p/(p-1)`, which equals `‖A‖_{p,1}`
/// for even `p` and for `p = ∞`.
pub fn subordinate_norm_exact(a: &DMatrix<f64>, p: f64) -> Result<f64> {
    let even = p.is_finite() && p >= 2.0 && p.fract() == 0.0 && (p as u64).is_multiple_of(2);
    if !(even || p.is_infinite()) {
        return domain(format!("exact norm needs even p or p = inf, got {p}"));
    }
    let rows: Vec<Vec<f64>> = a
        .row_iter()
        .map(|r| r.iter().copied().collect::<Vec<f64>>())
        .filter(|r| r.iter().any(|&v| v != 0.0))
        .collect();
    let t = rows.len();
    if t == 0 {
        return Ok(0.0);
    }
    if t > MAX_EXACT_ROWS {
        return Err(Error::Capacity(format!(
            "{t} nonzero rows exceed the {MAX_EXACT_ROWS}-row enumeration cap; \
             use subordinate_norm_sampled and subordinate_norm_row_bound instead"
        )));
    }
    let r = conjugate(p);
    let n = a.ncols();
    // s and -s give the same norm, so fix s_0 = +1 and Gray-code the rest.
    let mut acc = rows[0].clone();
    for row in &rows[1..] {
        for (v, w) in acc.iter_mut().zip(row) {
            *v += w;
        }
    }
    let mut signs = vec![1.0; t];
    let mut best = norm_unchecked(acc.iter().copied(), r);
    let total: u64 = 1 << (t - 1);
    for g in 1..total {
        let bit = g.trailing_zeros() as usize + 1;
        signs[bit] = -signs[bit];
        let s = 2.0 * signs[bit];
        for j in 0..n {
            acc[j] += s * rows[bit][j];
        }
        // Refresh periodically so incremental rounding cannot accumulate.
        if g % 4096 == 0 {
            for j in 0..n {
                acc[j] = (0..t).map(|i| signs[i] * rows[i][j]).sum();
            }
        }
        best = best.max(norm_unchecked(acc.iter().copied(), r));
    }
    Ok(best)
}

/// Upper bound `(Σ_i ‖a_i‖_{p*}^q)^{1/q}` from Hölder on each row.
pub fn subordinate_norm_row_bound(a: &DMatrix<f64>, p: f64, q: f64) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let r = conjugate(p);
    let row_norms = a.row_iter().map(|row| norm_unchecked(row.iter().copied(), r));
    Ok(norm_unchecked(row_norms, q))
}

/// Lower bound from sampled directions: Gaussian, coordinate, and sign vectors.
pub fn subordinate_norm_sampled(
    a: &DMatrix<f64>,
    p: f64,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let n = a.ncols();
    let ratio = |x: &[f64]| -> f64 {
        let nx = norm_unchecked(x.iter().copied(), p);
        if nx == 0.0 {
            return 0.0;
        }
        let ax = a * nalgebra::DVector::from_column_slice(x);
        norm_unchecked(ax.iter().copied(), q) / nx
    };
    let mut best: f64 = 0.0;
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        best = best.max(ratio(&e));
        e[j] = 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    for _ in 0..trials {
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        best = best.max(ratio(&x));
        for v in x.iter_mut() {
            *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        best = best.max(ratio(&x));
    }
    Ok(best)
}

/// `H_k = Σ_{i=1}^k 1/i`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// `2 min{p + 1, q/(q-1), H_k}`, an upper bound on `‖SM_(k,d)‖_{p,q}`.
pub fn sm_norm_bound(k: usize, p: f64, q: f64) -> f64 {
    2.0 * (p + 1.0).min(conjugate(q)).min(harmonic(k.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{SimplexDistribution, SoftMaxMatrix};
    use approx::assert_abs_diff_eq;

    fn s(ps: &[f64]) -> SimplexDistribution {
        SimplexDistribution::new(ps.to_vec()).unwrap()
    }

    #[test]
    fn lp_examples() {
        assert_eq!(lp_distance(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 0.0);
        assert_eq!(lp_distance(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap(), 2.0);
        assert_eq!(lp_distance(&[3.0, 0.0], &[0.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(lp_distance(&[3.0, 0.0], &[0.0, 4.0], f64::INFINITY).unwrap(), 4.0);
        assert_abs_diff_eq!(lp_distance(&[3.0, 0.0], &[0.0, 4.0], 4.0).unwrap(), 337f64.powf(0.25), epsilon = 1e-12);
        assert!(lp_distance(&[1.0], &[0.0], 0.5).is_err());
    }

    #[test]
    fn log_lp_examples() {
        assert_eq!(log_lp_distance(&[2.0, 3.0], &[2.0, 3.0], 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(log_lp_distance(&[1f64.exp(), 1.0], &[1.0, 1.0], 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(log_lp_distance(&[0.0, 1.0], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn renyi_examples() {
        let u = s(&[0.5, 0.5]);
        for a in [DivergenceOrder::KL, DivergenceOrder::Finite(2.5), DivergenceOrder::Infinity] {
            assert_abs_diff_eq!(renyi_divergence(&u, &u, a), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            renyi_divergence(&s(&[1.0, 0.0]), &u, DivergenceOrder::Infinity),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            renyi_divergence(&u, &s(&[0.25, 0.75]), DivergenceOrder::KL),
            0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln(),
            epsilon = 1e-15
        );
        assert_eq!(
            renyi_divergence(&u, &s(&[1.0, 0.0]), DivergenceOrder::KL),
            f64::INFINITY
        );
        assert!(DivergenceOrder::new(0.5).is_err());
    }

    /// `‖x − y‖₁ ≤ D_∞(x‖y)` does not hold in general; near-uniform pairs
    /// break it. The valid statement is `‖x − y‖₁ ≤ 2(e^{D_∞} − 1)`.
    #[test]
    fn l1_vs_max_divergence_counterexample() {
        let eps = 0.1;
        let x = s(&[0.5 + eps, 0.5 - eps]);
        let y = s(&[0.5, 0.5]);
        let l1 = lp_distance(&x, &y, 1.0).unwrap();
        let dinf = renyi_divergence(&x, &y, DivergenceOrder::Infinity);
        assert!(l1 > dinf);
        assert!(l1 <= 2.0 * dinf.exp_m1());
    }

    #[test]
    fn exact_norm_examples() {
        assert_eq!(subordinate_norm_exact(&DMatrix::zeros(3, 3), 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            subordinate_norm_exact(&DMatrix::identity(2, 2), 2.0).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        let sm = SoftMaxMatrix::new(2, 2).unwrap().to_f64();
        assert_abs_diff_eq!(subordinate_norm_exact(&sm, f64::INFINITY).unwrap(), 2.0, epsilon = 1e-15);
        assert!(subordinate_norm_exact(&sm, 3.0).is_err());
        assert!(matches!(
            subordinate_norm_exact(&DMatrix::identity(25, 25), 2.0),
            Err(Error::Capacity(_))
        ));
    }

    /// Grid search over the unit circle: max ‖x‖₁ subject to ‖x‖₂ = 1.
    #[test]
    fn identity_norm_matches_circle_search() {
        let best = (0..100_000)
            .map(|i| {
                let t = i as f64 / 100_000.0 * std::f64::consts::TAU;
                t.cos().abs() + t.sin().abs()
            })
            .fold(0.0, f64::max);
        let exact = subordinate_norm_exact(&DMatrix::identity(2, 2), 2.0).unwrap();
        assert_abs_diff_eq!(best, exact, epsilon = 1e-9);
    }

    /// ‖A‖_{∞,1} is attained at a vertex of the ∞-ball.
    #[test]
    fn infinity_norm_matches_vertex_enumeration() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, -1.0, 2.0, 0.0, 1.0]);
        let mut best: f64 = 0.0;
        for mask in 0..8u32 {
            let x = nalgebra::DVector::from_fn(3, |j, _| if mask >> j & 1 == 1 { 1.0 } else { -1.0 });
            best = best.max((&a * x).abs().sum());
        }
        assert_abs_diff_eq!(subordinate_norm_exact(&a, f64::INFINITY).unwrap(), best, epsilon = 1e-12);
    }

    #[test]
    fn row_bound_examples() {
        assert_abs_diff_eq!(
            subordinate_norm_row_bound(&DMatrix::identity(2, 2), 2.0, 2.0).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(subordinate_norm_row_bound(&DMatrix::zeros(2, 2), 2.0, 2.0).unwrap(), 0.0);
        let sm = SoftMaxMatrix::new(4, 4).unwrap().to_f64();
        let lower = subordinate_norm_sampled(&sm, 2.0, 2.0, 2000, 7).unwrap();
        assert!(subordinate_norm_row_bound(&sm, 2.0, 2.0).unwrap() >= lower);
    }

    #[test]
    fn sampled_examples() {
        assert_eq!(subordinate_norm_sampled(&DMatrix::zeros(3, 3), 2.0, 2.0, 10, 1).unwrap(), 0.0);
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            assert_abs_diff_eq!(
                subordinate_norm_sampled(&DMatrix::identity(4, 4), p, p, 10, 1).unwrap(),
                1.0,
                epsilon = 1e-12
            );
        }
        assert!(subordinate_norm_sampled(&DMatrix::identity(2, 2), 2.0, 2.0, 0, 1).is_err());
    }

    #[test]
    fn sm_bound_examples() {
        assert_eq!(sm_norm_bound(1, 2.0, 1.0), 2.0);
        assert_eq!(sm_norm_bound(1000, 2.0, 2.0), 4.0);
        assert_eq!(sm_norm_bound(2, f64::INFINITY, 1.0), 3.0);
    }
}
