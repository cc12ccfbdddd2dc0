//! Monotone submodular maximization (set coverage) under a cardinality
//! constraint, with a greedy loop whose selection step is any soft-max.

mod manipulation;
mod privacy;

use std::io::BufRead;
use std::path::Path;

use itertools::Itertools;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample_weighted;
use rand::Rng;
use rand_distr::Zipf;

use crate::error::{domain, Error, Result};
use crate::mechanisms::{SimplexDistribution, SoftMax, ValueVector};
use crate::rng::sub_rng;

pub use manipulation::{
    frontier, manipulation_test, matched_margins, rising_branch, write_manipulation_csv, FrontierPoint, ManipulationRow,
    ManipulationSummary,
};
pub use privacy::{
    compose_privacy, exp_error_bound, log_linf_extended, pow_error_bound, privacy_link_slack,
    sensitivity_linf, AdvancedComposition, PrivacyBudget,
};

/// Largest number of subsets [`brute_force_opt`] will enumerate.
pub const BRUTE_FORCE_CAP: u128 = 1_000_000;

/// A family of sets over the universe `0..universe_size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageInstance {
    universe_size: usize,
    sets: Vec<Vec<u32>>,
    bits: Vec<Vec<u64>>,
}

fn words(universe: usize) -> usize {
    universe.div_ceil(64)
}

impl CoverageInstance {
    /// Duplicate ids within a set are merged.
    pub fn new(universe_size: usize, sets: Vec<Vec<u32>>) -> Result<Self> {
        if sets.len() < 2 {
            return domain(format!("need at least 2 sets, got {}", sets.len()));
        }
        let w = words(universe_size);
        let mut clean = Vec::with_capacity(sets.len());
        let mut bits = Vec::with_capacity(sets.len());
        for (i, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            let mut b = vec![0u64; w];
            for &e in &s {
                if e as usize >= universe_size {
                    return domain(format!("set {i} has element {e} outside universe {universe_size}"));
                }
                b[e as usize / 64] |= 1 << (e % 64);
            }
            clean.push(s);
            bits.push(b);
        }
        Ok(Self {
            universe_size,
            sets: clean,
            bits,
        })
    }

    /// One set per non-blank line, whitespace-separated element ids. The
    /// universe is `0..=max id` unless given.
    pub fn from_reader<R: BufRead>(reader: R, universe_size: Option<usize>) -> Result<Self> {
        let mut sets = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let set = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u32>().map_err(|_| Error::Parse {
                        line: n + 1,
                        msg: format!("`{tok}` is not a non-negative integer id"),
                    })
                })
                .collect::<Result<Vec<u32>>>()?;
            sets.push(set);
        }
        let max_id = sets.iter().flatten().max().map_or(0, |&m| m as usize + 1);
        Self::new(universe_size.unwrap_or(max_id), sets)
    }

    pub fn load(path: impl AsRef<Path>, universe_size: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file), universe_size)
    }

    /// Synthetic stand-in for a co-authorship family: Zipf-distributed set
    /// sizes, with elements drawn from a Zipf popularity profile so large
    /// sets overlap heavily.
    pub fn synthetic(d: usize, universe_size: usize, seed: u64) -> Result<Self> {
        if universe_size < 4 {
            return domain("universe must have at least 4 elements");
        }
        let mut rng = sub_rng(seed, 0);
        let max_size = (universe_size / 4).max(1);
        let sizes = Zipf::new(max_size as f64, 1.1).map_err(|e| Error::Domain(e.to_string()))?;
        let popularity: Vec<f64> = (0..universe_size).map(|e| 1.0 / ((e + 1) as f64).powf(0.7)).collect();
        let order = {
            // Shuffle which ids are popular so id order carries no signal.
            let mut ids: Vec<usize> = (0..universe_size).collect();
            rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut rng);
            ids
        };
        let sets = (0..d)
            .map(|_| {
                let size = rng.sample(sizes) as usize;
                let picked = sample_weighted(&mut rng, universe_size, |e| popularity[e], size)
                    .expect("weights are positive and finite");
                picked.into_iter().map(|r| order[r] as u32).collect()
            })
            .collect();
        Self::new(universe_size, sets)
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    /// The instance with `element` removed from set `set` only.
    pub fn without_member(&self, set: usize, element: u32) -> Self {
        let mut sets = self.sets.clone();
        sets[set].retain(|&e| e != element);
        Self::new(self.universe_size, sets).expect("removal keeps the instance valid")
    }

    /// The instance with each ground element kept for which `keep` holds.
    pub fn restricted(&self, mut keep: impl FnMut(u32) -> bool) -> Self {
        let dropped: Vec<bool> = (0..self.universe_size as u32).map(|e| !keep(e)).collect();
        let sets = self
            .sets
            .iter()
            .map(|s| s.iter().copied().filter(|&e| !dropped[e as usize]).collect())
            .collect();
        Self::new(self.universe_size, sets).expect("restriction keeps the instance valid")
    }

    fn check(&self, s: &[usize]) -> Result<()> {
        match s.iter().find(|&&v| v >= self.sets.len()) {
            Some(v) => domain(format!("item {v} out of range (d = {})", self.sets.len())),
            None => Ok(()),
        }
    }

    fn union(&self, s: &[usize]) -> Vec<u64> {
        let mut acc = vec![0u64; words(self.universe_size)];
        for &v in s {
            for (a, b) in acc.iter_mut().zip(&self.bits[v]) {
                *a |= b;
            }
        }
        acc
    }

    /// `|⋃_{v ∈ s} sets[v]|`.
    pub fn coverage_value(&self, s: &[usize]) -> Result<usize> {
        self.check(s)?;
        Ok(popcount(&self.union(s)))
    }

    /// Gains `h(S ∪ {v}) − h(S)` for every item `v ∉ S`, in index order.
    pub fn marginal_gains(&self, s: &[usize]) -> Result<MarginalGains> {
        self.check(s)?;
        let covered = self.union(s);
        let mut in_s = vec![false; self.sets.len()];
        for &v in s {
            in_s[v] = true;
        }
        let (items, gains) = (0..self.sets.len())
            .filter(|&v| !in_s[v])
            .map(|v| {
                let g: u32 = self.bits[v]
                    .iter()
                    .zip(&covered)
                    .map(|(b, c)| (b & !c).count_ones())
                    .sum();
                (v, g as f64)
            })
            .unzip();
        Ok(MarginalGains { items, gains })
    }
}

fn popcount(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

/// Marginal gains over the items not yet chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalGains {
    pub items: Vec<usize>,
    pub gains: Vec<f64>,
}

impl MarginalGains {
    /// The selection distribution a soft-max assigns over `items`; uniform
    /// when no item adds anything (every choice is then value-equivalent).
    pub fn distribution(&self, mech: &dyn SoftMax) -> Result<SimplexDistribution> {
        if self.gains.iter().all(|&g| g == 0.0) {
            return Ok(SimplexDistribution::uniform(self.gains.len()));
        }
        mech.evaluate(&ValueVector::new(self.gains.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionTrace {
    pub chosen: Vec<usize>,
    /// Distribution over the remaining items (in index order) at each step.
    pub step_distributions: Vec<SimplexDistribution>,
    /// Coverage after each step.
    pub objective_values: Vec<usize>,
}

impl SelectionTrace {
    pub fn objective(&self) -> usize {
        self.objective_values.last().copied().unwrap_or(0)
    }
}

fn check_k(inst: &CoverageInstance, k: usize) -> Result<()> {
    if k > inst.len() {
        return domain(format!("k = {k} exceeds the {} available items", inst.len()));
    }
    Ok(())
}

/// Argmax greedy; ties go to the lowest index.
pub fn greedy(inst: &CoverageInstance, k: usize) -> Result<SelectionTrace> {
    check_k(inst, k)?;
    let mut trace = SelectionTrace {
        chosen: Vec::with_capacity(k),
        step_distributions: Vec::with_capacity(k),
        objective_values: Vec::with_capacity(k),
    };
    for _ in 0..k {
        let mg = inst.marginal_gains(&trace.chosen)?;
        let best = ValueVector::new(mg.gains.clone())?.argmax();
        trace.step_distributions.push(SimplexDistribution::point_mass(mg.items.len(), best));
        trace.chosen.push(mg.items[best]);
        trace.objective_values.push(inst.coverage_value(&trace.chosen)?);
    }
    Ok(trace)
}

/// Greedy where step `i` samples from `mech` applied to the gains of the
/// remaining items. Randomness comes from stream 0 of `seed`.
pub fn private_greedy(inst: &CoverageInstance, k: usize, mech: &dyn SoftMax, seed: u64) -> Result<SelectionTrace> {
    check_k(inst, k)?;
    let mut rng = sub_rng(seed, 0);
    let mut trace = SelectionTrace {
        chosen: Vec::with_capacity(k),
        step_distributions: Vec::with_capacity(k),
        objective_values: Vec::with_capacity(k),
    };
    for _ in 0..k {
        let mg = inst.marginal_gains(&trace.chosen)?;
        let dist = mg.distribution(mech)?;
        let pick = WeightedIndex::new(dist.probs())
            .map_err(|e| Error::Domain(format!("bad selection weights: {e}")))?
            .sample(&mut rng);
        trace.chosen.push(mg.items[pick]);
        trace.step_distributions.push(dist);
        trace.objective_values.push(inst.coverage_value(&trace.chosen)?);
    }
    Ok(trace)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive optimum over all `k`-subsets; first maximizer in
/// lexicographic order.
pub fn brute_force_opt(inst: &CoverageInstance, k: usize) -> Result<(usize, Vec<usize>)> {
    check_k(inst, k)?;
    let count = binomial(inst.len(), k);
    if count > BRUTE_FORCE_CAP {
        return Err(Error::Capacity(format!(
            "C({}, {k}) = {count} subsets exceeds the cap of {BRUTE_FORCE_CAP}",
            inst.len()
        )));
    }
    let mut best = (0, Vec::new());
    let mut found = false;
    for combo in (0..inst.len()).combinations(k) {
        let v = popcount(&inst.union(&combo));
        if !found || v > best.0 {
            best = (v, combo);
            found = true;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::MechanismSpec;

    fn inst(sets: &[&[u32]]) -> CoverageInstance {
        let u = sets.iter().flat_map(|s| s.iter()).max().map_or(1, |&m| m as usize + 1);
        CoverageInstance::new(u, sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn coverage_examples() {
        let c = inst(&[&[1, 2], &[2, 3]]);
        assert_eq!(c.coverage_value(&[]).unwrap(), 0);
        assert_eq!(c.coverage_value(&[0, 1]).unwrap(), 3);
        assert!(c.coverage_value(&[2]).is_err());
    }

    #[test]
    fn gains_examples() {
        let c = inst(&[&[0, 1, 2], &[2], &[3, 4]]);
        assert_eq!(c.marginal_gains(&[]).unwrap().gains, vec![3.0, 1.0, 2.0]);
        let mg = c.marginal_gains(&[0]).unwrap();
        assert_eq!(mg.items, vec![1, 2]);
        assert_eq!(mg.gains, vec![0.0, 2.0]);
    }

    #[test]
    fn loader_reports_line_numbers() {
        let c = CoverageInstance::from_reader("0 1 2\n\n2 3\n".as_bytes(), None).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.universe_size(), 4);
        match CoverageInstance::from_reader("0 1\n\n2 x\n".as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(CoverageInstance::from_reader("0 1\n-1\n".as_bytes(), None).is_err());
    }

    #[test]
    fn greedy_examples() {
        let c = inst(&[&[0, 1], &[2, 3], &[4, 5]]);
        assert_eq!(greedy(&c, 2).unwrap().chosen, vec![0, 1]);
        let all = greedy(&c, 3).unwrap();
        assert_eq!(all.objective(), 6);
        assert_eq!(brute_force_opt(&c, 3).unwrap().0, 6);
        assert_eq!(brute_force_opt(&c, 1).unwrap(), (2, vec![0]));
        assert!(greedy(&c, 4).is_err());
    }

    #[test]
    fn pow_first_pick_matches_arithmetic() {
        let c = inst(&[&[0, 1], &[2], &[3]]);
        let t = private_greedy(&c, 1, &MechanismSpec::pow(1.0).unwrap(), 9).unwrap();
        assert_eq!(t.step_distributions[0].probs(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn zero_gains_fall_back_to_uniform() {
        let c = inst(&[&[0], &[0], &[0]]);
        let t = private_greedy(&c, 2, &MechanismSpec::pow(2.0).unwrap(), 1).unwrap();
        assert_eq!(t.step_distributions[1].probs(), &[0.5, 0.5]);
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = CoverageInstance::synthetic(30, 200, 5).unwrap();
        assert_eq!(a, CoverageInstance::synthetic(30, 200, 5).unwrap());
        assert_ne!(a, CoverageInstance::synthetic(30, 200, 6).unwrap());
        assert!(a.sets().iter().all(|s| !s.is_empty()));
    }

    #[test]
    fn brute_force_respects_cap() {
        let sets: Vec<Vec<u32>> = (0..40).map(|i| vec![i]).collect();
        let c = CoverageInstance::new(40, sets).unwrap();
        assert!(matches!(brute_force_opt(&c, 10), Err(Error::Capacity(_))));
        assert_eq!(binomial(30, 5), 142_506);
    }
}
