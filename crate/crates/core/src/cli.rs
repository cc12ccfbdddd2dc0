//! Command-line experiment runner.
//!
//! Every subcommand writes CSV (default) or JSON to `--out` or stdout, and
//! exits with 0 when all checks it performs pass, 1 with a JSON failure
//! summary on stderr when some check fails, and 2 on bad input.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::auctions::{
    ic_audit, ic_epsilon_for, reserve_grid, soft_maximizer, worst_case_revenue_check, write_audit_csv,
    AuctionInstance, DEFAULT_DEVIATION_POINTS,
};
use crate::distances::{lp_distance, subordinate_norm_exact, subordinate_norm_row_bound, subordinate_norm_sampled};
use crate::error::{domain, Error, Result};
use crate::loss::probe_suite;
use crate::mechanisms::{
    additive_gap, multiplicative_gap, worst_case_support_ok, MechanismSpec, RationalMatrix, SoftMaxMatrix,
    ValueVector, SUPPORT_THRESHOLD,
};
use crate::report::{fmt_float, serialize_extended};
use crate::rng::sub_rng;
use crate::smoothness::{
    empirical_lipschitz, exp_l1_lb_witness, kl_lb_witness, pair_ratio, sparsegen_lb_witness, theoretical_bound,
    Metric,
};
use crate::submodular::{
    brute_force_opt, greedy, manipulation_test, matched_margins, privacy_link_slack, write_manipulation_csv,
    CoverageInstance, FrontierPoint, ManipulationRow,
};

/// Slack allowed when comparing a measured quantity with a proven bound.
pub const CHECK_TOLERANCE: f64 = 1e-9;

const SEED_HELP: &str = "\
Seeds: a comma list (1,2,3), a half-open range (0..100) or an inclusive
range (1..=5). Each seed is a master seed s; a routine that needs
randomness for its c-th unit of work (trial, draw, sampling step) uses
ChaCha8 seeded from s and switched to stream c. Private greedy uses
stream 0, record drops in the manipulation test stream 1, auction price
sampling stream 0. Output is identical for any thread count.";

#[derive(Debug, Parser)]
#[command(name = "softmax-lab", version, about = "Soft-max mechanism experiments", after_help = SEED_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate mechanisms on value vectors and report gaps.
    Eval(EvalArgs),
    /// Estimate Lipschitz constants and compare with proven bounds.
    Lipschitz(LipschitzArgs),
    /// Private greedy coverage and the manipulation frontier.
    Submodular(SubmodularArgs),
    /// Reserve-price auctions with soft-max price selection.
    Auction(AuctionArgs),
    /// Probe the PLSoftMax classification loss.
    Lossfn(LossArgs),
    /// Run a fast battery of checks across every module.
    Selftest(Output),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Mechanism selection shared by the subcommands.
///
/// `--mech` takes a full spec (`exp:lambda=2`, `plsoftmax:delta=1`,
/// `sparsemax`) or a bare family name, which is expanded over every value
/// of `--lambda` (exp, pow) or `--delta` (plsoftmax, logplsoftmax).
#[derive(Debug, Args)]
pub struct MechArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub mech: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
}

type Family = fn(f64) -> Result<MechanismSpec>;

impl MechArgs {
    pub fn resolve(&self) -> Result<Vec<MechanismSpec>> {
        let mut out = Vec::new();
        for m in &self.mech {
            let m = m.trim();
            let (values, build): (&[f64], Family) = match m {
                "exp" => (&self.lambda, MechanismSpec::exp),
                "pow" => (&self.lambda, MechanismSpec::pow),
                "plsoftmax" => (&self.delta, MechanismSpec::plsoftmax),
                "logplsoftmax" => (&self.delta, MechanismSpec::log_plsoftmax),
                _ => {
                    out.push(m.parse()?);
                    continue;
                }
            };
            if values.is_empty() {
                let key = if matches!(m, "exp" | "pow") { "--lambda" } else { "--delta" };
                return domain(format!("bare mechanism `{m}` needs {key}"));
            }
            for &v in values {
                out.push(build(v)?);
            }
        }
        Ok(out)
    }
}

/// A non-empty list of seeds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

impl FromStr for Seeds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |e: std::num::ParseIntError| Error::Domain(format!("bad seed list `{s}`: {e}"));
        let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
            (a.trim().parse().map_err(bad)?..=b.trim().parse().map_err(bad)?).collect()
        } else if let Some((a, b)) = s.split_once("..") {
            (a.trim().parse().map_err(bad)?..b.trim().parse().map_err(bad)?).collect()
        } else {
            s.split(',').map(|t| t.trim().parse().map_err(bad)).collect::<Result<_>>()?
        };
        if seeds.is_empty() {
            return domain(format!("seed list `{s}` is empty"));
        }
        Ok(Seeds(seeds))
    }
}

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub mechs: MechArgs,
    /// Inline comma-separated values.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "x_file", required_unless_present = "x_file")]
    pub x: Option<String>,
    /// File with one vector per line (commas or whitespace; `#` comments).
    #[arg(long)]
    pub x_file: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct LipschitzArgs {
    #[command(flatten)]
    pub mechs: MechArgs,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Domain:range metric pairs, e.g. `l2:l1,linf:l1,l2:dinf,logl2:kl`.
    #[arg(long, value_delimiter = ',', default_value = "l2:l1")]
    pub metrics: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, value_parser = parse_seeds, default_value = "0")]
    pub seeds: Seeds,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SubmodularArgs {
    #[command(flatten)]
    pub mechs: MechArgs,
    /// Set-family file: one set per line, whitespace-separated element ids.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generate an instance from this seed instead of reading one.
    #[arg(long)]
    pub synthetic: Option<u64>,
    /// Number of sets in a synthetic instance.
    #[arg(long, default_value_t = 30)]
    pub d: usize,
    #[arg(long, default_value_t = 200)]
    pub universe: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.001)]
    pub drop_prob: f64,
    #[arg(long, value_parser = parse_seeds, default_value = "0..100")]
    pub seeds: Seeds,
    /// Write one row per (mechanism, seed) instead of one per mechanism.
    #[arg(long)]
    pub per_seed: bool,
    /// Fail unless Pow beats Exp on average at matched ℓ1 distance.
    #[arg(long)]
    pub check_dominance: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct AuctionArgs {
    #[command(flatten)]
    pub mechs: MechArgs,
    /// Auction JSON: `{"H": 1.0, "k": 2, "bids": [0.9, 0.4, 0.7]}`.
    #[arg(long)]
    pub input: PathBuf,
    /// Geometric price step of the reserve grid.
    #[arg(long, default_value_t = 0.25)]
    pub price_step: f64,
    /// Lowest price considered.
    #[arg(long, default_value_t = 0.1)]
    pub floor: f64,
    #[arg(long, value_parser = parse_seeds, default_value = "0")]
    pub seeds: Seeds,
    /// Run the exact incentive audit and check its gain against ε.
    #[arg(long)]
    pub audit: bool,
    #[arg(long, default_value_t = DEFAULT_DEVIATION_POINTS)]
    pub points: usize,
    /// Where to write the audit table (CSV).
    #[arg(long)]
    pub audit_out: Option<PathBuf>,
    /// Check the worst-case revenue floor for PLSoftMax selections.
    #[arg(long)]
    pub worst_case: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Probe {
    Zero,
    Convexity,
    Gradient,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Random inputs per probe.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, value_parser = parse_seeds, default_value = "0")]
    pub seeds: Seeds,
    /// Probes whose thresholds decide the exit code (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub probes: Vec<Probe>,
    #[command(flatten)]
    pub output: Output,
}

/// A failed check, reported in the exit summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub detail: String,
}

fn failure(check: impl Into<String>, detail: impl Into<String>) -> Failure {
    Failure { check: check.into(), detail: detail.into() }
}

trait Record: Serialize {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<R: Record>(rows: &[R], output: &Output) -> Result<()> {
    let mut w = open_output(&output.out)?;
    match output.format {
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(R::HEADER)?;
            for r in rows {
                c.write_record(r.fields())?;
            }
            c.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

// ---- eval ----

#[derive(Serialize)]
struct EvalRow {
    mechanism: String,
    x: Vec<f64>,
    probs: Vec<f64>,
    additive_gap: f64,
    multiplicative_gap: Option<f64>,
    support: usize,
    /// Whether the worst-case support condition holds (PLSoftMax only).
    worst_case_ok: Option<bool>,
}

impl Record for EvalRow {
    const HEADER: &'static [&'static str] =
        &["mechanism", "x", "probs", "additive_gap", "multiplicative_gap", "support", "worst_case_ok"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.mechanism.clone(),
            join(&self.x),
            join(&self.probs),
            fmt_float(self.additive_gap),
            opt(self.multiplicative_gap),
            self.support.to_string(),
            self.worst_case_ok.map(|b| b.to_string()).unwrap_or_default(),
        ]
    }
}

fn parse_vector(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|e| Error::Parse { line: lineno, msg: format!("`{t}`: {e}") })
        })
        .collect()
}

/// Reads one vector per non-empty, non-comment line.
pub fn read_vectors<R: BufRead>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v = parse_vector(body, i + 1)?;
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::Parse { line: i + 1, msg: format!("non-finite value {bad}") });
        }
        out.push(v);
    }
    if out.is_empty() {
        return domain("no vectors in input");
    }
    Ok(out)
}

fn cmd_eval(a: &EvalArgs) -> Result<Vec<Failure>> {
    let mechs = a.mechs.resolve()?;
    let vectors = match (&a.x, &a.x_file) {
        (Some(x), _) => vec![parse_vector(x, 1)?],
        (None, Some(p)) => read_vectors(BufReader::new(File::open(p)?))?,
        (None, None) => return domain("need --x or --x-file"),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for x in vectors {
        let xv = ValueVector::new(x)?;
        for m in &mechs {
            let p = m.evaluate(&xv)?;
            let mult = if xv.iter().all(|&v| v > 0.0) { Some(multiplicative_gap(&xv, &p)?) } else { None };
            let worst_case_ok = match *m {
                MechanismSpec::PlSoftMax { delta } => Some(worst_case_support_ok(&xv, &p, delta)),
                _ => None,
            };
            if worst_case_ok == Some(false) {
                failures.push(failure("worst_case_support", format!("{m} at {:?}", xv.to_vec())));
            }
            rows.push(EvalRow {
                mechanism: m.to_string(),
                x: xv.to_vec(),
                support: p.iter().filter(|&&v| v > SUPPORT_THRESHOLD).count(),
                additive_gap: additive_gap(&xv, &p),
                multiplicative_gap: mult,
                probs: p.to_vec(),
                worst_case_ok,
            });
        }
    }
    emit(&rows, &a.output)?;
    Ok(failures)
}

// ---- lipschitz ----

#[derive(Serialize)]
struct LipschitzRow {
    mechanism: String,
    d: usize,
    domain: String,
    range: String,
    seed: u64,
    trials: usize,
    pairs: usize,
    #[serde(serialize_with = "serialize_extended")]
    estimate: f64,
    #[serde(serialize_with = "serialize_extended")]
    bound: f64,
    within_bound: bool,
    witness_x: Vec<f64>,
    witness_y: Vec<f64>,
}

impl Record for LipschitzRow {
    const HEADER: &'static [&'static str] = &[
        "mechanism", "d", "domain", "range", "seed", "trials", "pairs", "estimate", "bound", "within_bound",
        "witness_x", "witness_y",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.mechanism.clone(),
            self.d.to_string(),
            self.domain.clone(),
            self.range.clone(),
            self.seed.to_string(),
            self.trials.to_string(),
            self.pairs.to_string(),
            fmt_float(self.estimate),
            fmt_float(self.bound),
            self.within_bound.to_string(),
            join(&self.witness_x),
            join(&self.witness_y),
        ]
    }
}

fn parse_metric_pair(s: &str) -> Result<(Metric, Metric)> {
    let Some((a, b)) = s.split_once(':') else {
        return domain(format!("metric pair must look like `l2:l1`, got `{s}`"));
    };
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn cmd_lipschitz(a: &LipschitzArgs) -> Result<Vec<Failure>> {
    if a.d < 2 {
        return domain("--d must be at least 2");
    }
    let mechs = a.mechs.resolve()?;
    let pairs = a.metrics.iter().map(|s| parse_metric_pair(s)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for m in &mechs {
        for &(dm, rm) in &pairs {
            let bound = theoretical_bound(m, a.d, dm, rm);
            for &seed in &a.seeds.0 {
                let est = empirical_lipschitz(m, a.d, dm, rm, a.trials, seed)?;
                let ok = est.max_ratio <= bound + CHECK_TOLERANCE;
                if !ok {
                    failures.push(failure(
                        "lipschitz_bound",
                        format!("{m} ({dm}, {rm}) seed {seed}: {} > {}", fmt_float(est.max_ratio), fmt_float(bound)),
                    ));
                }
                let (wx, wy) = est.witness.map(|w| (w.x, w.y)).unwrap_or_default();
                rows.push(LipschitzRow {
                    mechanism: m.to_string(),
                    d: a.d,
                    domain: dm.to_string(),
                    range: rm.to_string(),
                    seed,
                    trials: est.trials,
                    pairs: est.pairs,
                    estimate: est.max_ratio,
                    bound,
                    within_bound: ok,
                    witness_x: wx,
                    witness_y: wy,
                });
            }
        }
    }
    emit(&rows, &a.output)?;
    Ok(failures)
}

// ---- submodular ----

#[derive(Serialize)]
struct FrontierRow {
    mechanism: String,
    param: Option<f64>,
    seeds: usize,
    avg_obj_ratio: f64,
    median_obj_ratio: f64,
    avg_l1_dist: f64,
    avg_linf_dist: f64,
}

impl Record for FrontierRow {
    const HEADER: &'static [&'static str] =
        &["mechanism", "param", "seeds", "avg_obj_ratio", "median_obj_ratio", "avg_l1_dist", "avg_linf_dist"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.mechanism.clone(),
            opt(self.param),
            self.seeds.to_string(),
            fmt_float(self.avg_obj_ratio),
            fmt_float(self.median_obj_ratio),
            fmt_float(self.avg_l1_dist),
            fmt_float(self.avg_linf_dist),
        ]
    }
}

#[derive(Serialize)]
struct SeedRow<'a> {
    mechanism: &'a str,
    param: Option<f64>,
    seed: u64,
    obj_ratio: f64,
    l1_dist: f64,
    linf_dist: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn cmd_submodular(a: &SubmodularArgs) -> Result<Vec<Failure>> {
    let mechs = a.mechs.resolve()?;
    let inst = match (&a.input, a.synthetic) {
        (Some(p), _) => CoverageInstance::load(p, None)?,
        (None, Some(seed)) => CoverageInstance::synthetic(a.d, a.universe, seed)?,
        (None, None) => return domain("need --input or --synthetic"),
    };
    let mut frontier_rows = Vec::new();
    let mut all_rows: Vec<ManipulationRow> = Vec::new();
    let mut curves: Vec<(&'static str, FrontierPoint)> = Vec::new();
    for m in &mechs {
        let s = manipulation_test(&inst, a.k, m, a.drop_prob, &a.seeds.0)?;
        let med = median(s.rows.iter().map(|r| r.obj_ratio).collect());
        if let Some(param) = m.parameter() {
            curves.push((m.name(), FrontierPoint { param, avg_l1: s.avg_l1_dist, median_obj: med }));
        }
        frontier_rows.push(FrontierRow {
            mechanism: m.name().to_string(),
            param: m.parameter(),
            seeds: s.rows.len(),
            avg_obj_ratio: s.avg_obj_ratio,
            median_obj_ratio: med,
            avg_l1_dist: s.avg_l1_dist,
            avg_linf_dist: s.avg_linf_dist,
        });
        all_rows.extend(s.rows);
    }

    let mut failures = Vec::new();
    if a.check_dominance {
        let curve = |name: &str| -> Vec<FrontierPoint> {
            let mut c: Vec<FrontierPoint> =
                curves.iter().filter(|(n, _)| *n == name).map(|(_, p)| p.clone()).collect();
            c.sort_by(|x, y| x.param.total_cmp(&y.param));
            c
        };
        let margins = matched_margins(&curve("pow"), &curve("exp"));
        if margins.is_empty() {
            failures.push(failure("pow_dominance", "no matched l1 distances between pow and exp sweeps"));
        } else {
            let mean = margins.iter().sum::<f64>() / margins.len() as f64;
            if !(mean > 0.0) {
                failures.push(failure("pow_dominance", format!("mean matched margin {}", fmt_float(mean))));
            }
        }
    }

    if a.per_seed {
        match a.output.format {
            Format::Csv => {
                let mut w = open_output(&a.output.out)?;
                write_manipulation_csv(&mut w, &all_rows, true)?;
                w.flush()?;
            }
            Format::Json => {
                let rows: Vec<SeedRow> = all_rows
                    .iter()
                    .map(|r| SeedRow {
                        mechanism: &r.mechanism,
                        param: r.param,
                        seed: r.seed,
                        obj_ratio: r.obj_ratio,
                        l1_dist: r.l1_dist,
                        linf_dist: r.linf_dist,
                    })
                    .collect();
                let mut w = open_output(&a.output.out)?;
                serde_json::to_writer_pretty(&mut w, &rows)?;
                writeln!(w)?;
                w.flush()?;
            }
        }
    } else {
        emit(&frontier_rows, &a.output)?;
    }
    Ok(failures)
}

// ---- auction ----

#[derive(Serialize)]
struct AuctionRow {
    mechanism: String,
    seed: u64,
    chosen_price: f64,
    revenue: f64,
    anonymous_opt: f64,
    selection: Vec<f64>,
    epsilon: Option<f64>,
    max_gain_normalized: Option<f64>,
    ic_ok: Option<bool>,
    worst_case_ok: Option<bool>,
}

impl Record for AuctionRow {
    const HEADER: &'static [&'static str] = &[
        "mechanism", "seed", "chosen_price", "revenue", "anonymous_opt", "selection", "epsilon",
        "max_gain_normalized", "ic_ok", "worst_case_ok",
    ];
    fn fields(&self) -> Vec<String> {
        let b = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
        vec![
            self.mechanism.clone(),
            self.seed.to_string(),
            fmt_float(self.chosen_price),
            fmt_float(self.revenue),
            fmt_float(self.anonymous_opt),
            join(&self.selection),
            opt(self.epsilon),
            opt(self.max_gain_normalized),
            b(self.ic_ok),
            b(self.worst_case_ok),
        ]
    }
}

fn cmd_auction(a: &AuctionArgs) -> Result<Vec<Failure>> {
    let mechs = a.mechs.resolve()?;
    let inst = AuctionInstance::load(&a.input)?;
    let grid = reserve_grid(inst.h, a.price_step, a.floor)?;
    let opt_rev = crate::auctions::anonymous_opt(&inst);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut audit_rows = Vec::new();
    for m in &mechs {
        let (epsilon, gain) = if a.audit {
            let eps = ic_epsilon_for(m, &grid)?;
            let audit = ic_audit(&inst, &grid, m, a.points)?;
            if audit.max_gain_normalized > eps + CHECK_TOLERANCE {
                failures.push(failure(
                    "ic_audit",
                    format!("{m}: gain {} > eps {}", fmt_float(audit.max_gain_normalized), fmt_float(eps)),
                ));
            }
            audit_rows.extend(audit.rows);
            (Some(eps), Some(audit.max_gain_normalized))
        } else {
            (None, None)
        };
        let worst = match *m {
            MechanismSpec::PlSoftMax { delta } if a.worst_case => {
                let ok = worst_case_revenue_check(&inst, &grid, m, delta)?;
                if !ok {
                    failures.push(failure("worst_case_revenue", m.to_string()));
                }
                Some(ok)
            }
            _ => None,
        };
        for &seed in &a.seeds.0 {
            let o = soft_maximizer(&inst, &grid, m, seed)?;
            rows.push(AuctionRow {
                mechanism: m.to_string(),
                seed,
                chosen_price: o.chosen_price,
                revenue: o.revenue,
                anonymous_opt: opt_rev,
                selection: o.selection_distribution.to_vec(),
                epsilon,
                max_gain_normalized: gain,
                ic_ok: gain.zip(epsilon).map(|(g, e)| g <= e + CHECK_TOLERANCE),
                worst_case_ok: worst,
            });
        }
    }
    emit(&rows, &a.output)?;
    if let Some(p) = &a.audit_out {
        write_audit_csv(BufWriter::new(File::create(p)?), &audit_rows)?;
    }
    Ok(failures)
}

// ---- lossfn ----

/// Thresholds for the loss probes.
pub const ZERO_RESIDUAL_MAX: f64 = 1e-12;
pub const CONVEXITY_MAX: f64 = 1e-9;
pub const GRADIENT_MAX: f64 = 1e-4;

#[derive(Serialize)]
struct LossRow {
    seed: u64,
    d: usize,
    delta: f64,
    draws: usize,
    zero_residual: f64,
    #[serde(serialize_with = "serialize_extended")]
    min_off_support_loss: f64,
    convexity_violation: f64,
    gradient_error: f64,
    gradient_checked: usize,
    gradient_skipped: usize,
    pass: bool,
}

impl Record for LossRow {
    const HEADER: &'static [&'static str] = &[
        "seed", "d", "delta", "draws", "zero_residual", "min_off_support_loss", "convexity_violation",
        "gradient_error", "gradient_checked", "gradient_skipped", "pass",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.d.to_string(),
            fmt_float(self.delta),
            self.draws.to_string(),
            fmt_float(self.zero_residual),
            fmt_float(self.min_off_support_loss),
            fmt_float(self.convexity_violation),
            fmt_float(self.gradient_error),
            self.gradient_checked.to_string(),
            self.gradient_skipped.to_string(),
            self.pass.to_string(),
        ]
    }
}

fn cmd_lossfn(a: &LossArgs) -> Result<Vec<Failure>> {
    let probes = if a.probes.is_empty() { vec![Probe::Zero, Probe::Convexity, Probe::Gradient] } else { a.probes.clone() };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &seed in &a.seeds.0 {
        let r = probe_suite(a.d, a.delta, a.trials, seed)?;
        let mut pass = true;
        for p in &probes {
            let (ok, what) = match p {
                Probe::Zero => (
                    r.zero_residual <= ZERO_RESIDUAL_MAX && r.min_off_support_loss > 0.0,
                    format!("residual {}, off-support {}", fmt_float(r.zero_residual), fmt_float(r.min_off_support_loss)),
                ),
                Probe::Convexity => (
                    r.convexity_violation <= CONVEXITY_MAX,
                    format!("violation {}", fmt_float(r.convexity_violation)),
                ),
                Probe::Gradient => {
                    (r.gradient_error <= GRADIENT_MAX, format!("error {}", fmt_float(r.gradient_error)))
                }
            };
            if !ok {
                pass = false;
                failures.push(failure(format!("loss_{p:?}").to_lowercase(), format!("seed {seed}: {what}")));
            }
        }
        rows.push(LossRow {
            seed,
            d: r.d,
            delta: r.delta,
            draws: r.draws,
            zero_residual: r.zero_residual,
            min_off_support_loss: r.min_off_support_loss,
            convexity_violation: r.convexity_violation,
            gradient_error: r.gradient_error,
            gradient_checked: r.gradient_checked,
            gradient_skipped: r.gradient_skipped,
            pass,
        });
    }
    emit(&rows, &a.output)?;
    Ok(failures)
}

// ---- selftest ----

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    status: &'static str,
    detail: String,
}

impl Record for CheckRow {
    const HEADER: &'static [&'static str] = &["check", "status", "detail"];
    fn fields(&self) -> Vec<String> {
        vec![self.check.to_string(), self.status.to_string(), self.detail.clone()]
    }
}

type Check = (&'static str, fn() -> Result<(bool, String)>);

fn check_matrices() -> Result<(bool, String)> {
    let mut ok = true;
    for d in 2..=16 {
        for k in 2..=d {
            let lhs = SoftMaxMatrix::new(k - 1, d)?;
            let rhs = SoftMaxMatrix::new(k, d)?.as_rational()
                * &(&(&RationalMatrix::identity(d) + &RationalMatrix::unit(d, k - 1, 0))
                    - &RationalMatrix::unit(d, k - 1, k - 1));
            ok &= lhs.as_rational() == &rhs;
        }
    }
    Ok((ok, "recursion identity for 2 <= k <= d <= 16".into()))
}

fn check_simplex() -> Result<(bool, String)> {
    use rand::Rng;
    let mut rng = sub_rng(0, 0);
    let mut ok = true;
    for _ in 0..2000 {
        let d = rng.random_range(2..=32);
        let delta = [0.1, 1.0, 10.0][rng.random_range(0..3)];
        let x = ValueVector::new((0..d).map(|_| rng.random_range(-10.0..10.0)).collect())?;
        let p = MechanismSpec::plsoftmax(delta)?.evaluate(&x)?;
        ok &= (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && p.iter().all(|&v| v >= 0.0);
        ok &= worst_case_support_ok(&x, &p, delta);
    }
    Ok((ok, "2000 random PLSoftMax outputs".into()))
}

fn check_lipschitz() -> Result<(bool, String)> {
    let m = MechanismSpec::plsoftmax(1.0)?;
    let (dm, rm) = (Metric::Lp(2.0), Metric::Lp(1.0));
    let est = empirical_lipschitz(&m, 6, dm, rm, 300, 0)?;
    let bound = theoretical_bound(&m, 6, dm, rm);
    Ok((est.max_ratio <= bound + CHECK_TOLERANCE, format!("{} <= {}", fmt_float(est.max_ratio), fmt_float(bound))))
}

fn check_norms() -> Result<(bool, String)> {
    let mut ok = true;
    for d in 2..=6 {
        for k in 1..=d {
            let a = SoftMaxMatrix::new(k, d)?.to_f64();
            let exact = subordinate_norm_exact(&a, 2.0)?;
            ok &= subordinate_norm_sampled(&a, 2.0, 1.0, 200, 0)? <= exact + CHECK_TOLERANCE;
            ok &= exact <= subordinate_norm_row_bound(&a, 2.0, 1.0)? + CHECK_TOLERANCE;
        }
    }
    Ok((ok, "sampled <= exact <= row bound for d <= 6".into()))
}

fn check_witnesses() -> Result<(bool, String)> {
    let lambda = 1.0;
    let (x, y) = exp_l1_lb_witness(100, lambda)?;
    let r = pair_ratio(&MechanismSpec::exp(lambda)?, &x, &y, Metric::Lp(2.0), Metric::Lp(1.0))?.unwrap_or(0.0);
    let mut ok = (0.49 * lambda..=0.51 * lambda).contains(&r);
    let w = kl_lb_witness(64, 1.0)?;
    let e = MechanismSpec::exp(64f64.ln())?;
    let (fx, fy) = (e.evaluate(&ValueVector::new(w.x.clone())?)?, e.evaluate(&ValueVector::new(w.y.clone())?)?);
    ok &= crate::distances::renyi_divergence(&fy, &fx, crate::distances::DivergenceOrder::KL) >= w.floor;
    let s = sparsegen_lb_witness(16, 2.0)?;
    let sr = pair_ratio(&MechanismSpec::Sparsemax, &s.x, &s.y, Metric::Lp(2.0), Metric::Lp(1.0))?.unwrap_or(0.0);
    ok &= sr >= s.floor;
    Ok((ok, format!("exp rate {}", fmt_float(r))))
}

fn check_submodular() -> Result<(bool, String)> {
    let inst = CoverageInstance::synthetic(12, 80, 1)?;
    let g = greedy(&inst, 3)?.objective() as f64;
    let (opt, _) = brute_force_opt(&inst, 3)?;
    let mut ok = g >= (1.0 - (-1.0f64).exp()) * opt as f64;
    let m = MechanismSpec::pow(1.0)?;
    for e in inst.sets()[0].iter().take(5) {
        let b = inst.without_member(0, *e);
        ok &= privacy_link_slack(&m, &inst, &b, &[])?.is_none_or(|s| s <= CHECK_TOLERANCE);
    }
    Ok((ok, format!("greedy {g} vs opt {opt}")))
}

fn check_auction() -> Result<(bool, String)> {
    let inst = AuctionInstance::unlimited(1.0, vec![0.9, 0.55, 0.3])?;
    let grid = reserve_grid(1.0, 0.25, 0.2)?;
    let m = MechanismSpec::plsoftmax(4.0)?;
    let eps = ic_epsilon_for(&m, &grid)?;
    let gain = ic_audit(&inst, &grid, &m, 41)?.max_gain_normalized;
    let ok = gain <= eps + CHECK_TOLERANCE && worst_case_revenue_check(&inst, &grid, &m, 4.0)?;
    Ok((ok, format!("gain {} <= eps {}", fmt_float(gain), fmt_float(eps))))
}

fn check_loss() -> Result<(bool, String)> {
    let r = probe_suite(4, 1.0, 100, 0)?;
    let ok = r.zero_residual <= ZERO_RESIDUAL_MAX
        && r.convexity_violation <= CONVEXITY_MAX
        && r.gradient_error <= GRADIENT_MAX;
    Ok((ok, format!("gradient error {}", fmt_float(r.gradient_error))))
}

fn check_distances() -> Result<(bool, String)> {
    let (x, y) = ([0.5, 0.5], [0.9, 0.1]);
    let l1 = lp_distance(&x, &y, 1.0)?;
    let dinf = crate::distances::renyi_divergence(&x, &y, crate::distances::DivergenceOrder::Infinity);
    Ok((l1 <= 2.0 * dinf.exp_m1() + CHECK_TOLERANCE, format!("l1 {} vs D_inf {}", fmt_float(l1), fmt_float(dinf))))
}

const CHECKS: &[Check] = &[
    ("softmax_matrix", check_matrices),
    ("simplex_worst_case", check_simplex),
    ("lipschitz_bound", check_lipschitz),
    ("norm_sandwich", check_norms),
    ("witnesses", check_witnesses),
    ("distances", check_distances),
    ("submodular", check_submodular),
    ("auction", check_auction),
    ("loss", check_loss),
];

fn cmd_selftest(output: &Output) -> Result<Vec<Failure>> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (name, f) in CHECKS {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, e.to_string()),
        };
        if !ok {
            failures.push(failure(*name, detail.clone()));
        }
        rows.push(CheckRow { check: name, status: if ok { "PASS" } else { "FAIL" }, detail });
    }
    emit(&rows, output)?;
    Ok(failures)
}

/// Runs a parsed command, returning the checks that failed.
pub fn execute(cli: &Cli) -> Result<Vec<Failure>> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Lipschitz(a) => cmd_lipschitz(a),
        Command::Submodular(a) => cmd_submodular(a),
        Command::Auction(a) => cmd_auction(a),
        Command::Lossfn(a) => cmd_lossfn(a),
        Command::Selftest(o) => cmd_selftest(o),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(f) if f.is_empty() => 0,
        Ok(f) => {
            let summary = serde_json::json!({ "status": "fail", "failures": f });
            eprintln!("{summary}");
            1
        }
        Err(e) => {
            let summary = serde_json::json!({ "status": "error", "error": e.to_string() });
            eprintln!("{summary}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!("1,2,3".parse::<Seeds>().unwrap().0, vec![1, 2, 3]);
        assert_eq!("0..3".parse::<Seeds>().unwrap().0, vec![0, 1, 2]);
        assert_eq!("2..=3".parse::<Seeds>().unwrap().0, vec![2, 3]);
        assert!("3..3".parse::<Seeds>().is_err());
        assert!("a".parse::<Seeds>().is_err());
    }

    #[test]
    fn bare_families_expand() {
        let m = MechArgs { mech: vec!["exp".into(), "sparsemax".into()], lambda: vec![1.0, 2.0], delta: vec![] };
        let r = m.resolve().unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[1], MechanismSpec::exp(2.0).unwrap());
        let m = MechArgs { mech: vec!["plsoftmax".into()], lambda: vec![], delta: vec![] };
        assert!(m.resolve().is_err());
    }

    #[test]
    fn vector_file_errors_carry_line_numbers() {
        let src = "# header\n1, 2\n\n3 x\n";
        match read_vectors(src.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(read_vectors("1,2\n3 4 # c\n".as_bytes()).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn selftest_checks_pass() {
        for (name, f) in CHECKS {
            let (ok, detail) = f().unwrap();
            assert!(ok, "{name}: {detail}");
        }
    }
}
