//! Empirical Lipschitz constants, the matching theoretical bounds, and the
//! lower-bound witness pairs.
//!
//! An estimate is a maximum of `d₂(f(x), f(y)) / d₁(x, y)` over sampled
//! pairs, so it is always a lower bound on the true constant. Three pair
//! families are drawn per trial:
//!
//! * independent random pairs;
//! * local perturbations `x, x + h·v` with `h ∈ {1e-2, 1e-4, 1e-6}`;
//! * pairs straddling a PLSoftMax seam: the active-count surface
//!   `x_j = max(x) − δ` or a change in sort order.
//!
//! For the exponential mechanism, the single-active-coordinate witness is
//! evaluated as well.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::distances::{conjugate, harmonic, lp_distance, log_lp_distance, renyi_divergence, DivergenceOrder};
use crate::error::{domain, Error, Result};
use crate::mechanisms::{MechanismSpec, SoftMax, SortPermutation, ValueVector};
use crate::report::serialize_extended;
use crate::rng::sub_rng;

/// Local perturbation sizes.
pub const LOCAL_STEPS: [f64; 3] = [1e-2, 1e-4, 1e-6];
/// Half-width of a seam-straddling pair.
pub const STRADDLE_HALF_WIDTH: f64 = 5e-7;
/// Finite-difference step of the exponential witness.
pub const WITNESS_STEP: f64 = 1e-4;

/// A distance on inputs or outputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    Lp(f64),
    /// `ℓ_p` between coordinatewise logarithms.
    LogLp(f64),
    Renyi(DivergenceOrder),
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match *self {
            Metric::Lp(p) => lp_distance(a, b, p),
            Metric::LogLp(p) => log_lp_distance(a, b, p),
            Metric::Renyi(order) => Ok(renyi_divergence(a, b, order)),
        }
    }
}

fn exponent_name(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        p.to_string()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Metric::Lp(p) => write!(f, "l{}", exponent_name(p)),
            Metric::LogLp(p) => write!(f, "logl{}", exponent_name(p)),
            Metric::Renyi(DivergenceOrder::Infinity) => f.write_str("dinf"),
            Metric::Renyi(DivergenceOrder::Finite(a)) if a == 1.0 => f.write_str("kl"),
            Metric::Renyi(DivergenceOrder::Finite(a)) => write!(f, "renyi{a}"),
        }
    }
}

/// Accepts `l1`, `l2`, `linf`, `logl2`, `kl`, `dinf`, `renyi2`, ...
impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let exponent = |t: &str| -> Result<f64> {
            let p = if t == "inf" {
                f64::INFINITY
            } else {
                t.parse::<f64>()
                    .map_err(|_| Error::Domain(format!("unknown metric `{s}`")))?
            };
            if p >= 1.0 {
                Ok(p)
            } else {
                domain(format!("metric exponent must be >= 1 in `{s}`"))
            }
        };
        match s {
            "kl" => Ok(Metric::Renyi(DivergenceOrder::KL)),
            "dinf" => Ok(Metric::Renyi(DivergenceOrder::Infinity)),
            _ => {
                if let Some(t) = s.strip_prefix("logl") {
                    Ok(Metric::LogLp(exponent(t)?))
                } else if let Some(t) = s.strip_prefix("renyi") {
                    Ok(Metric::Renyi(DivergenceOrder::new(exponent(t)?)?))
                } else if let Some(t) = s.strip_prefix('l') {
                    Ok(Metric::Lp(exponent(t)?))
                } else {
                    domain(format!("unknown metric `{s}`"))
                }
            }
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    #[serde(serialize_with = "serialize_extended")]
    pub max_ratio: f64,
    /// `None` only when no pair had positive domain distance.
    pub witness: Option<WitnessPair>,
    pub trials: usize,
    pub pairs: usize,
    pub domain_metric: Metric,
    pub range_metric: Metric,
}

/// Natural input scale of a mechanism: `δ` for the piecewise-linear ones,
/// `1/λ` for exponential families, 1 otherwise.
fn input_scale(mech: &dyn SoftMax) -> f64 {
    match mech.spec() {
        Some(MechanismSpec::Exp { lambda }) | Some(MechanismSpec::Pow { lambda }) => 1.0 / lambda,
        Some(MechanismSpec::PlSoftMax { delta }) | Some(MechanismSpec::LogPlSoftMax { delta }) => delta,
        _ => 1.0,
    }
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    // Spread over two decades around the natural scale so pieces with
    // every active count get visited.
    let s = scale * 10f64.powf(rng.random_range(-1.0..1.0));
    (0..d).map(|_| s * rng.random_range(-1.0..1.0)).collect()
}

fn unit_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    if rng.random::<bool>() {
        let mut v = vec![0.0; d];
        v[rng.random_range(0..d)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        v
    } else {
        (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

/// Pairs for one trial, in additive coordinates.
fn trial_pairs(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut pairs = Vec::with_capacity(2 + LOCAL_STEPS.len());
    pairs.push((random_point(rng, d, scale), random_point(rng, d, scale)));

    let x = random_point(rng, d, scale);
    for h in LOCAL_STEPS {
        let v = unit_direction(rng, d);
        let y = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        pairs.push((x.clone(), y));
    }

    if d >= 2 {
        let x = random_point(rng, d, scale);
        let perm = SortPermutation::descending(&x);
        let top = x[perm.order()[0]];
        let rank = rng.random_range(1..d);
        let j = perm.order()[rank];
        let w = STRADDLE_HALF_WIDTH;
        // Across the active-count seam.
        let (mut a, mut b) = (x.clone(), x.clone());
        a[j] = top - scale + w;
        b[j] = top - scale - w;
        pairs.push((a, b));
        // Across an order change with the next-higher coordinate.
        let above = x[perm.order()[rank - 1]];
        let (mut a, mut b) = (x.clone(), x);
        a[j] = above + w;
        b[j] = above - w;
        pairs.push((a, b));
    }
    pairs
}

struct Best {
    ratio: f64,
    pair: Option<(Vec<f64>, Vec<f64>)>,
}

impl Best {
    fn none() -> Self {
        Best { ratio: 0.0, pair: None }
    }

    /// Keeps the larger ratio; on ties the earlier candidate wins.
    fn merge(self, other: Best) -> Best {
        if other.pair.is_some() && (self.pair.is_none() || other.ratio > self.ratio) {
            other
        } else {
            self
        }
    }
}

/// Range distance over domain distance; `None` when the inputs coincide.
pub fn pair_ratio(
    mech: &dyn SoftMax,
    x: &[f64],
    y: &[f64],
    domain_metric: Metric,
    range_metric: Metric,
) -> Result<Option<f64>> {
    let dx = domain_metric.distance(x, y)?;
    if dx == 0.0 {
        return Ok(None);
    }
    let fx = mech.evaluate(&ValueVector::new(x.to_vec())?)?;
    let fy = mech.evaluate(&ValueVector::new(y.to_vec())?)?;
    Ok(Some(range_metric.distance(&fx, &fy)? / dx))
}

fn to_positive(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(f64::exp).collect()
}

pub fn empirical_lipschitz(
    mech: &dyn SoftMax,
    d: usize,
    domain_metric: Metric,
    range_metric: Metric,
    trials: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    let scale = input_scale(mech);
    let positive = matches!(domain_metric, Metric::LogLp(_))
        || mech.spec().is_some_and(|s| s.multiplicative());
    let prepare = |(a, b): (Vec<f64>, Vec<f64>)| {
        if positive {
            (to_positive(a), to_positive(b))
        } else {
            (a, b)
        }
    };
    let run_pairs = |pairs: Vec<(Vec<f64>, Vec<f64>)>| -> Result<(Best, usize)> {
        let mut best = Best::none();
        let n = pairs.len();
        for pair in pairs {
            let (x, y) = prepare(pair);
            if let Some(r) = pair_ratio(mech, &x, &y, domain_metric, range_metric)? {
                best = best.merge(Best { ratio: r, pair: Some((x, y)) });
            }
        }
        Ok((best, n))
    };

    let per_trial: Vec<(Best, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = sub_rng(seed, t as u64);
            run_pairs(trial_pairs(&mut rng, d, scale))
        })
        .collect::<Result<_>>()?;

    let mut extra = Vec::new();
    if let Some(MechanismSpec::Exp { lambda }) = mech.spec() {
        if d >= 2 {
            let (x, y) = exp_witness_pair(d, lambda);
            extra.push((x, y));
        }
    }
    let (extra_best, extra_n) = run_pairs(extra)?;

    let mut best = Best::none();
    let mut pairs = extra_n;
    for (b, n) in per_trial {
        best = best.merge(b);
        pairs += n;
    }
    best = best.merge(extra_best);
    Ok(LipschitzEstimate {
        max_ratio: best.ratio,
        witness: best.pair.map(|(x, y)| WitnessPair { x, y }),
        trials,
        pairs,
        domain_metric,
        range_metric,
    })
}

/// The proven Lipschitz constant for `(mech, domain, range)`, or `+∞` when
/// no bound is claimed.
///
/// PLSoftMax under `(ℓ_p, ℓ_q)` gets `(2/δ)·min{p+1, q/(q−1), H_d}`; the
/// harmonic number replaces `log d`, which is too small for small `d`
/// (at `d = 2`, `(ℓ∞, ℓ1)` needs `2/δ > (2/δ)·log 2`). The exponential
/// mechanism gets `2λ` into any Rényi divergence. Pow and LogPLSoftMax are
/// the same maps on log-inputs, so they inherit the bounds under Log-ℓ_p.
pub fn theoretical_bound(mech: &MechanismSpec, d: usize, domain_metric: Metric, range_metric: Metric) -> f64 {
    let pl = |delta: f64, p: f64, q: f64| (2.0 / delta) * (p + 1.0).min(conjugate(q)).min(harmonic(d));
    match (*mech, domain_metric, range_metric) {
        (MechanismSpec::Exp { lambda }, Metric::Lp(_), Metric::Renyi(_)) => 2.0 * lambda,
        (MechanismSpec::Pow { lambda }, Metric::LogLp(_), Metric::Renyi(_)) => 2.0 * lambda,
        (MechanismSpec::PlSoftMax { delta }, Metric::Lp(p), Metric::Lp(q)) => pl(delta, p, q),
        (MechanismSpec::LogPlSoftMax { delta }, Metric::LogLp(p), Metric::Lp(q)) => pl(delta, p, q),
        _ => f64::INFINITY,
    }
}

/// A witness pair with the floor its ratio must meet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub floor: f64,
}

/// `x = 0`, `y = (2δ, 0, …, 0)`. Any δ-approximate permutation-invariant
/// soft-max has `KL(f(y) ‖ f(x)) ≥ (log d − 2)/2` here.
pub fn kl_lb_witness(d: usize, delta: f64) -> Result<Witness> {
    if d < 4 {
        return domain(format!("KL witness needs d >= 4, got {d}"));
    }
    if !(delta > 0.0) {
        return domain("delta must be positive");
    }
    let mut y = vec![0.0; d];
    y[0] = 2.0 * delta;
    Ok(Witness {
        x: vec![0.0; d],
        y,
        floor: ((d as f64).ln() - 2.0) / 2.0,
    })
}

fn exp_witness_pair(d: usize, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let z = (d as f64).ln() / lambda;
    let mut x = vec![0.0; d];
    x[0] = z;
    let mut y = x.clone();
    y[0] = z + WITNESS_STEP;
    (x, y)
}

/// `x = (z, 0, …)`, `y = (z + h, 0, …)` with `z = log(d)/λ`, where the
/// exponential mechanism's ℓ1 change rate is `2λd(d−1)/(2d−1)² ≈ λ/2`.
pub fn exp_l1_lb_witness(d: usize, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if d <= 10 {
        return domain(format!("exponential witness needs d > 10, got {d}"));
    }
    if !(lambda > 0.0) {
        return domain("lambda must be positive");
    }
    Ok(exp_witness_pair(d, lambda))
}

/// Closed-form rate of the exponential witness.
pub fn exp_witness_rate(d: usize, lambda: f64) -> f64 {
    let d = d as f64;
    2.0 * lambda * d * (d - 1.0) / (2.0 * d - 1.0).powi(2)
}

/// `x = 0`, `y_i = 2/d` on the first half. Sparsemax moves `ℓ1` distance 1
/// here, giving ratio `(d/2)^{1−1/q}` against the floor `½·d^{1−1/q}`.
pub fn sparsegen_lb_witness(d: usize, q: f64) -> Result<Witness> {
    if d == 0 || !d.is_multiple_of(2) {
        return domain(format!("sparsegen witness needs even d, got {d}"));
    }
    if !(q >= 1.0) {
        return domain("q must be >= 1");
    }
    let df = d as f64;
    let y = (0..d).map(|i| if i < d / 2 { 2.0 / df } else { 0.0 }).collect();
    let tail = if q.is_infinite() { 1.0 } else { 1.0 - 1.0 / q };
    Ok(Witness {
        x: vec![0.0; d],
        y,
        floor: 0.5 * df.powf(tail),
    })
}

fn probe_pair(d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![1.0; d];
    let mut y = vec![1.0; d];
    x[0] = 2.0;
    y[1] = 2.0;
    (x, y)
}

/// `(ℓ∞, ℓ1)` ratios at `(c·x₀, c·y₀)` for each scale `c`. Scale-invariant
/// mechanisms give ratios growing like `1/c`, so no Lipschitz constant exists.
pub fn multiplicative_lb_probe(mech: &MechanismSpec, d: usize, scales: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !mech.multiplicative() {
        return domain(format!("{mech} is not a multiplicative mechanism"));
    }
    if d < 2 {
        return domain("probe needs d >= 2");
    }
    let (x0, y0) = probe_pair(d);
    scales
        .iter()
        .map(|&c| {
            if !(c > 0.0) {
                return domain("scales must be positive");
            }
            let x: Vec<f64> = x0.iter().map(|v| c * v).collect();
            let y: Vec<f64> = y0.iter().map(|v| c * v).collect();
            let r = pair_ratio(mech, &x, &y, Metric::Lp(f64::INFINITY), Metric::Lp(1.0))?;
            Ok((c, r.unwrap_or(0.0)))
        })
        .collect()
}

/// Same measurement as [`multiplicative_lb_probe`] but shifting the pair by
/// `c·1`; translation-invariant mechanisms give a constant ratio.
pub fn translation_probe(mech: &dyn SoftMax, d: usize, shifts: &[f64]) -> Result<Vec<(f64, f64)>> {
    if d < 2 {
        return domain("probe needs d >= 2");
    }
    let (x0, y0) = probe_pair(d);
    shifts
        .iter()
        .map(|&c| {
            let x: Vec<f64> = x0.iter().map(|v| c + v).collect();
            let y: Vec<f64> = y0.iter().map(|v| c + v).collect();
            let r = pair_ratio(mech, &x, &y, Metric::Lp(f64::INFINITY), Metric::Lp(1.0))?;
            Ok((c, r.unwrap_or(0.0)))
        })
        .collect()
}

/// Largest slope of `f₁` along the two-option slice `x₁ + x₂ = a`, over
/// `x₁ ∈ [a/2, a/2 + 2δ]` sampled at `steps + 1` points.
///
/// A δ-approximate symmetric mechanism must climb from 1/2 to at least 3/4
/// on this segment, so the slope is at least `1/(8δ)`.
pub fn two_option_slope(mech: &dyn SoftMax, a: f64, delta: f64, steps: usize) -> Result<f64> {
    if steps == 0 || !(delta > 0.0) {
        return domain("need steps >= 1 and delta > 0");
    }
    let width = 2.0 * delta / steps as f64;
    let f1 = |i: usize| -> Result<f64> {
        let x1 = a / 2.0 + width * i as f64;
        Ok(mech.evaluate(&ValueVector::new(vec![x1, a - x1])?)?[0])
    };
    let mut prev = f1(0)?;
    let mut best: f64 = 0.0;
    for i in 1..=steps {
        let cur = f1(i)?;
        best = best.max((cur - prev).abs() / width);
        prev = cur;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{sparsemax, SimplexDistribution};

    struct Constant;

    impl SoftMax for Constant {
        fn evaluate(&self, x: &ValueVector) -> Result<SimplexDistribution> {
            Ok(SimplexDistribution::point_mass(x.len(), 0))
        }

        fn label(&self) -> String {
            "constant".into()
        }
    }

    #[test]
    fn metric_names_round_trip() {
        for s in ["l1", "l2", "linf", "l3.5", "logl2", "loglinf", "kl", "dinf", "renyi2"] {
            assert_eq!(s.parse::<Metric>().unwrap().to_string(), s);
        }
        assert!("l0.5".parse::<Metric>().is_err());
        assert!("hamming".parse::<Metric>().is_err());
    }

    #[test]
    fn constant_mechanism_has_zero_estimate() {
        let est = empirical_lipschitz(&Constant, 5, Metric::Lp(2.0), Metric::Lp(1.0), 50, 3).unwrap();
        assert_eq!(est.max_ratio, 0.0);
    }

    #[test]
    fn estimate_is_deterministic_and_consistent() {
        let m = MechanismSpec::plsoftmax(0.5).unwrap();
        let a = empirical_lipschitz(&m, 6, Metric::Lp(2.0), Metric::Lp(1.0), 200, 11).unwrap();
        let b = empirical_lipschitz(&m, 6, Metric::Lp(2.0), Metric::Lp(1.0), 200, 11).unwrap();
        assert_eq!(a, b);
        let w = a.witness.as_ref().unwrap();
        let r = pair_ratio(&m, &w.x, &w.y, a.domain_metric, a.range_metric).unwrap().unwrap();
        assert!((r - a.max_ratio).abs() <= 1e-9);
    }

    #[test]
    fn plsoftmax_under_max_divergence_is_unbounded() {
        let m = MechanismSpec::plsoftmax(0.5).unwrap();
        let est = empirical_lipschitz(&m, 4, Metric::Lp(2.0), Metric::Renyi(DivergenceOrder::Infinity), 50, 1).unwrap();
        assert_eq!(est.max_ratio, f64::INFINITY);
        assert!(est.witness.is_some());
        assert!(serde_json::to_string(&est).unwrap().contains("\"max_ratio\":\"inf\""));
    }

    #[test]
    fn bound_examples() {
        let e = MechanismSpec::exp(3.0).unwrap();
        assert_eq!(theoretical_bound(&e, 10, Metric::Lp(2.0), Metric::Renyi(DivergenceOrder::KL)), 6.0);
        let p = MechanismSpec::plsoftmax(0.5).unwrap();
        assert_eq!(theoretical_bound(&p, 100, Metric::Lp(2.0), Metric::Lp(2.0)), 8.0);
        let corner = theoretical_bound(&p, 16, Metric::Lp(f64::INFINITY), Metric::Lp(1.0));
        assert!((corner - 4.0 * harmonic(16)).abs() < 1e-12);
        assert_eq!(theoretical_bound(&MechanismSpec::Sparsemax, 4, Metric::Lp(1.0), Metric::Lp(1.0)), f64::INFINITY);
    }

    #[test]
    fn witness_examples() {
        let w = kl_lb_witness(4, 1.0).unwrap();
        assert_eq!(w.y, vec![2.0, 0.0, 0.0, 0.0]);
        assert!((w.floor - (4f64.ln() - 2.0) / 2.0).abs() < 1e-15);
        assert!(kl_lb_witness(3, 1.0).is_err());
        assert!(exp_l1_lb_witness(10, 1.0).is_err());

        let w = sparsegen_lb_witness(4, 1.0).unwrap();
        let r = pair_ratio(&MechanismSpec::Sparsemax, &w.x, &w.y, Metric::Lp(1.0), Metric::Lp(1.0)).unwrap().unwrap();
        assert!((r - 1.0).abs() < 1e-12 && w.floor == 0.5);
        let w = sparsegen_lb_witness(4, 2.0).unwrap();
        let r = pair_ratio(&MechanismSpec::Sparsemax, &w.x, &w.y, Metric::Lp(2.0), Metric::Lp(1.0)).unwrap().unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12 && (w.floor - 1.0).abs() < 1e-15);
        assert!(sparsegen_lb_witness(5, 1.0).is_err());
        let s = sparsemax(&ValueVector::new(w.y.clone()).unwrap()).unwrap();
        assert_eq!(s.probs(), w.y.as_slice());
    }

    #[test]
    fn exp_witness_ratio_scales_with_lambda() {
        let measure = |lambda: f64| {
            let (x, y) = exp_l1_lb_witness(100, lambda).unwrap();
            let m = MechanismSpec::exp(lambda).unwrap();
            pair_ratio(&m, &x, &y, Metric::Lp(2.0), Metric::Lp(1.0)).unwrap().unwrap()
        };
        let r1 = measure(1.0);
        assert!((0.49..=0.51).contains(&r1));
        assert!((measure(4.0) / r1 - 4.0).abs() < 1e-3);
        assert!((exp_witness_rate(100, 1.0) - r1).abs() < 1e-3);
    }

    #[test]
    fn probes_show_scale_and_translation_behaviour() {
        let pow = MechanismSpec::pow(1.0).unwrap();
        let r = multiplicative_lb_probe(&pow, 4, &[1.0, 0.1, 0.01]).unwrap();
        for w in r.windows(2) {
            assert!((w[1].1 / w[0].1 - 10.0).abs() < 1e-6);
        }
        let lpl = MechanismSpec::log_plsoftmax(1.0).unwrap();
        let r = multiplicative_lb_probe(&lpl, 4, &[1.0, 0.1, 0.01]).unwrap();
        assert!((r[2].1 / r[0].1 - 100.0).abs() < 1e-6);
        assert!(multiplicative_lb_probe(&MechanismSpec::exp(1.0).unwrap(), 4, &[1.0]).is_err());

        let exp = MechanismSpec::exp(1.0).unwrap();
        let r = translation_probe(&exp, 4, &[0.0, 10.0, -7.5]).unwrap();
        assert!(r.iter().all(|(_, v)| (v - r[0].1).abs() < 1e-9));
    }

    #[test]
    fn slope_probe_meets_floor() {
        let delta = 0.3;
        let pl = MechanismSpec::plsoftmax(delta).unwrap();
        let s = two_option_slope(&pl, 1.0, delta, 400).unwrap();
        assert!((s - 1.0 / delta).abs() < 1e-6);
        let e = MechanismSpec::exp(2f64.ln() / delta).unwrap();
        assert!(two_option_slope(&e, 1.0, delta, 400).unwrap() >= 1.0 / (8.0 * delta));
    }
}
