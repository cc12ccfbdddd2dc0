use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use super::{greedy, private_greedy, CoverageInstance};
use crate::distances::lp_distance;
use crate::error::{domain, Result};
use crate::mechanisms::MechanismSpec;
use crate::report::fmt_float;
use crate::rng::sub_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ManipulationRow {
    pub mechanism: String,
    pub param: Option<f64>,
    pub seed: u64,
    pub obj_ratio: f64,
    pub l1_dist: f64,
    pub linf_dist: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManipulationSummary {
    pub rows: Vec<ManipulationRow>,
    pub avg_obj_ratio: f64,
    pub avg_l1_dist: f64,
    pub avg_linf_dist: f64,
}

/// For each seed: drop every ground element independently with
/// probability `drop_prob` (stream 1 of the seed), compare the exact
/// first-pick distributions on the original and perturbed instances, and
/// run the private greedy on the original (stream 0) to get its objective
/// relative to the argmax greedy.
pub fn manipulation_test(
    inst: &CoverageInstance,
    k: usize,
    mech: &MechanismSpec,
    drop_prob: f64,
    seeds: &[u64],
) -> Result<ManipulationSummary> {
    if !(0.0..1.0).contains(&drop_prob) {
        return domain(format!("drop probability must lie in [0, 1), got {drop_prob}"));
    }
    if seeds.is_empty() {
        return domain("need at least one seed");
    }
    let baseline = greedy(inst, k)?.objective() as f64;
    let original = inst.marginal_gains(&[])?.distribution(mech)?;
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = sub_rng(seed, 1);
            let perturbed = inst.restricted(|_| rng.random::<f64>() >= drop_prob);
            let moved = perturbed.marginal_gains(&[])?.distribution(mech)?;
            let run = private_greedy(inst, k, mech, seed)?;
            Ok(ManipulationRow {
                mechanism: mech.name().to_string(),
                param: mech.parameter(),
                seed,
                obj_ratio: if baseline > 0.0 { run.objective() as f64 / baseline } else { 1.0 },
                l1_dist: lp_distance(&original, &moved, 1.0)?,
                linf_dist: lp_distance(&original, &moved, f64::INFINITY)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    Ok(ManipulationSummary {
        avg_obj_ratio: rows.iter().map(|r| r.obj_ratio).sum::<f64>() / n,
        avg_l1_dist: rows.iter().map(|r| r.l1_dist).sum::<f64>() / n,
        avg_linf_dist: rows.iter().map(|r| r.linf_dist).sum::<f64>() / n,
        rows,
    })
}

/// One point of a robustness/quality curve: mean ℓ1 movement of the first
/// pick against the median objective ratio over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub param: f64,
    pub avg_l1: f64,
    pub median_obj: f64,
}

/// Sweeps a mechanism family over `params`, one point per parameter.
pub fn frontier(
    inst: &CoverageInstance,
    k: usize,
    family: impl Fn(f64) -> Result<MechanismSpec>,
    params: &[f64],
    drop_prob: f64,
    seeds: &[u64],
) -> Result<Vec<FrontierPoint>> {
    params
        .iter()
        .map(|&param| {
            let s = manipulation_test(inst, k, &family(param)?, drop_prob, seeds)?;
            let mut objs: Vec<f64> = s.rows.iter().map(|r| r.obj_ratio).collect();
            objs.sort_by(f64::total_cmp);
            let n = objs.len();
            let median = if n % 2 == 1 { objs[n / 2] } else { (objs[n / 2 - 1] + objs[n / 2]) / 2.0 };
            Ok(FrontierPoint { param, avg_l1: s.avg_l1_dist, median_obj: median })
        })
        .collect()
}

/// Prefix of a parameter sweep up to its most sensitive point. Past that the
/// mechanism collapses onto the argmax and sensitivity falls again, so the
/// curve is no longer a trade-off.
pub fn rising_branch(points: &[FrontierPoint]) -> &[FrontierPoint] {
    match (0..points.len()).max_by(|&a, &b| points[a].avg_l1.total_cmp(&points[b].avg_l1)) {
        Some(i) => &points[..=i],
        None => points,
    }
}

fn interpolate(curve: &[FrontierPoint], l1: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (lo, hi) = (a.avg_l1.min(b.avg_l1), a.avg_l1.max(b.avg_l1));
        if !(lo..=hi).contains(&l1) {
            return None;
        }
        let t = if b.avg_l1 != a.avg_l1 { (l1 - a.avg_l1) / (b.avg_l1 - a.avg_l1) } else { 0.0 };
        Some(a.median_obj + t * (b.median_obj - a.median_obj))
    })
}

/// Objective margins of `a` over `b` at matched ℓ1 distance: every point of
/// either rising branch that falls inside the other's range is compared with
/// the other curve linearly interpolated there.
pub fn matched_margins(a: &[FrontierPoint], b: &[FrontierPoint]) -> Vec<f64> {
    let (a, b) = (rising_branch(a), rising_branch(b));
    let mut out: Vec<f64> = b.iter().filter_map(|p| Some(interpolate(a, p.avg_l1)? - p.median_obj)).collect();
    out.extend(a.iter().filter_map(|p| Some(p.median_obj - interpolate(b, p.avg_l1)?)));
    out
}

/// Writes rows as `mechanism,param,seed,obj_ratio,l1_dist,linf_dist`.
pub fn write_manipulation_csv<W: Write>(out: W, rows: &[ManipulationRow], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(["mechanism", "param", "seed", "obj_ratio", "l1_dist", "linf_dist"])?;
    }
    for r in rows {
        w.write_record([
            r.mechanism.clone(),
            r.param.map(fmt_float).unwrap_or_default(),
            r.seed.to_string(),
            fmt_float(r.obj_ratio),
            fmt_float(r.l1_dist),
            fmt_float(r.linf_dist),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_drops_means_no_movement() {
        let inst = CoverageInstance::synthetic(12, 80, 3).unwrap();
        let m = MechanismSpec::exp(0.5).unwrap();
        let s = manipulation_test(&inst, 3, &m, 0.0, &[1, 2, 3]).unwrap();
        assert!(s.rows.iter().all(|r| r.l1_dist == 0.0 && r.linf_dist == 0.0));
    }

    #[test]
    fn argmax_distances_are_zero_or_two() {
        let inst = CoverageInstance::synthetic(12, 80, 3).unwrap();
        let s = manipulation_test(&inst, 3, &MechanismSpec::Argmax, 0.2, &(0..20).collect::<Vec<_>>()).unwrap();
        assert!(s.rows.iter().all(|r| r.l1_dist == 0.0 || r.l1_dist == 2.0));
        assert!(s.rows.iter().all(|r| r.obj_ratio == 1.0));
    }

    #[test]
    fn rising_branch_and_matching() {
        let pt = |param, avg_l1, median_obj| FrontierPoint { param, avg_l1, median_obj };
        let a = vec![pt(1.0, 0.1, 0.5), pt(2.0, 0.3, 0.9), pt(3.0, 0.2, 1.0)];
        assert_eq!(rising_branch(&a).len(), 2);
        let b = vec![pt(1.0, 0.2, 0.6)];
        let m = matched_margins(&a, &b);
        assert_eq!(m.len(), 1);
        assert!((m[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn csv_is_deterministic() {
        let inst = CoverageInstance::synthetic(10, 60, 1).unwrap();
        let m = MechanismSpec::pow(2.0).unwrap();
        let render = || {
            let s = manipulation_test(&inst, 2, &m, 0.05, &[4, 5]).unwrap();
            let mut buf = Vec::new();
            write_manipulation_csv(&mut buf, &s.rows, true).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render();
        assert_eq!(a, render());
        assert!(a.starts_with("mechanism,param,seed,obj_ratio,l1_dist,linf_dist\npow,2,4,"));
    }
}
