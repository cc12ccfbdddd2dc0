//! Reserve-price auctions whose reserve is picked by a soft-max over the
//! revenue each grid price would earn, plus an exact ε-IC audit.

use std::io::Write;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mechanisms::{MechanismSpec, SimplexDistribution, SoftMax, ValueVector, SUPPORT_THRESHOLD};
use crate::report::fmt_float;
use crate::rng::sub_rng;

/// Largest bidder count the exact audit accepts.
pub const MAX_AUDIT_BIDDERS: usize = 6;
/// Largest grid the exact audit accepts.
pub const MAX_AUDIT_GRID: usize = 12;
/// Default number of deviation bids on `[0, H]`.
pub const DEFAULT_DEVIATION_POINTS: usize = 101;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionInstance {
    #[serde(rename = "H")]
    pub h: f64,
    /// Items for sale; `k >= n` means unlimited supply.
    #[serde(rename = "k")]
    pub supply_k: usize,
    pub bids: Vec<f64>,
}

impl AuctionInstance {
    pub fn new(h: f64, supply_k: usize, bids: Vec<f64>) -> Result<Self> {
        let inst = Self { h, supply_k, bids };
        inst.validate()?;
        Ok(inst)
    }

    /// Digital goods: as many items as bidders.
    pub fn unlimited(h: f64, bids: Vec<f64>) -> Result<Self> {
        let n = bids.len();
        Self::new(h, n, bids)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return domain("H must be positive and finite");
        }
        if self.bids.is_empty() || self.supply_k == 0 {
            return domain("need at least one bidder and one item");
        }
        if let Some(b) = self.bids.iter().find(|&&b| !(0.0..=self.h).contains(&b)) {
            return domain(format!("bid {b} outside [0, {}]", self.h));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn n(&self) -> usize {
        self.bids.len()
    }

    pub fn unlimited_supply(&self) -> bool {
        self.supply_k >= self.bids.len()
    }

    fn with_bid(&self, bidder: usize, bid: f64) -> Self {
        let mut other = self.clone();
        other.bids[bidder] = bid;
        other
    }
}

/// Descending reserve prices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriceGrid {
    pub prices: Vec<f64>,
    pub delta_price: f64,
    pub floor_alpha: f64,
    pub h: f64,
}

impl PriceGrid {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// `p_i = H(1 − δ)^i` for `i = 1, 2, …`, stopping at the first price `≤ α`.
pub fn reserve_grid(h: f64, delta_price: f64, floor_alpha: f64) -> Result<PriceGrid> {
    if !(delta_price > 0.0 && delta_price <= 0.5) {
        return domain(format!("price step must lie in (0, 1/2], got {delta_price}"));
    }
    if !(floor_alpha > 0.0 && floor_alpha < h) {
        return domain(format!("floor must lie in (0, H), got {floor_alpha}"));
    }
    let mut prices = Vec::new();
    let mut p = h;
    loop {
        p *= 1.0 - delta_price;
        prices.push(p);
        if p <= floor_alpha {
            break;
        }
    }
    Ok(PriceGrid {
        prices,
        delta_price,
        floor_alpha,
        h,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReserveOutcome {
    pub revenue: f64,
    pub allocations: Vec<bool>,
    pub payments: Vec<f64>,
}

/// Posted price `r` under unlimited supply. Otherwise the top
/// `min(k, #{bid ≥ r})` bidders win (ties by index) and each pays
/// `max(r, (k+1)-th highest bid)`.
pub fn revenue_of_reserve(inst: &AuctionInstance, r: f64) -> ReserveOutcome {
    let n = inst.n();
    let mut allocations = vec![false; n];
    let mut payments = vec![0.0; n];
    if inst.unlimited_supply() {
        for (i, &b) in inst.bids.iter().enumerate() {
            if b >= r {
                allocations[i] = true;
                payments[i] = r;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| inst.bids[b].total_cmp(&inst.bids[a]));
        let clearing = order.get(inst.supply_k).map_or(0.0, |&i| inst.bids[i]);
        let price = r.max(clearing);
        for &i in order.iter().take(inst.supply_k) {
            if inst.bids[i] >= r {
                allocations[i] = true;
                payments[i] = price;
            }
        }
    }
    ReserveOutcome {
        revenue: payments.iter().sum(),
        allocations,
        payments,
    }
}

pub fn revenue_vector(inst: &AuctionInstance, grid: &PriceGrid) -> ValueVector {
    let rev = grid.prices.iter().map(|&p| revenue_of_reserve(inst, p).revenue).collect();
    ValueVector::new(rev).expect("revenues are finite")
}

/// Best revenue of a single anonymous posted price (any real price).
pub fn anonymous_opt(inst: &AuctionInstance) -> f64 {
    inst.bids
        .iter()
        .filter(|&&b| b > 0.0)
        .map(|&b| revenue_of_reserve(inst, b).revenue)
        .fold(0.0, f64::max)
}

fn selection(inst: &AuctionInstance, grid: &PriceGrid, mech: &dyn SoftMax) -> Result<SimplexDistribution> {
    let rev = revenue_vector(inst, grid);
    if rev.iter().all(|&v| v == 0.0) {
        // Nobody buys at any price; every choice is equivalent.
        return Ok(SimplexDistribution::uniform(grid.len()));
    }
    mech.evaluate(&rev)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismOutcome {
    pub chosen_price_index: usize,
    pub chosen_price: f64,
    pub selection_distribution: SimplexDistribution,
    pub revenue: f64,
    pub allocations: Vec<bool>,
    pub payments: Vec<f64>,
}

/// Picks a grid price from `mech(revenue_vector)` (stream 0 of `seed`) and
/// runs the auction at that reserve.
pub fn soft_maximizer(inst: &AuctionInstance, grid: &PriceGrid, mech: &dyn SoftMax, seed: u64) -> Result<MechanismOutcome> {
    let dist = selection(inst, grid, mech)?;
    let idx = WeightedIndex::new(dist.probs())
        .map_err(|e| Error::Domain(format!("bad selection weights: {e}")))?
        .sample(&mut sub_rng(seed, 0));
    let out = revenue_of_reserve(inst, grid.prices[idx]);
    Ok(MechanismOutcome {
        chosen_price_index: idx,
        chosen_price: grid.prices[idx],
        selection_distribution: dist,
        revenue: out.revenue,
        allocations: out.allocations,
        payments: out.payments,
    })
}

/// `(1/δ − 1)·H`, the largest ℓ1 change of the revenue vector when one
/// bid changes under unlimited supply.
pub fn sensitivity_l1_revenue(grid: &PriceGrid) -> f64 {
    (1.0 / grid.delta_price - 1.0) * grid.h
}

/// `ε = L·S₁(Rev)` with `L = 4/η` for PLSoftMax^η and `2λ` for Exp^λ.
pub fn ic_epsilon_for(mech: &MechanismSpec, grid: &PriceGrid) -> Result<f64> {
    let l = match *mech {
        MechanismSpec::PlSoftMax { delta } => 4.0 / delta,
        MechanismSpec::Exp { lambda } => 2.0 * lambda,
        other => return domain(format!("no (l1, l1) Lipschitz constant known for {other}")),
    };
    Ok(l * sensitivity_l1_revenue(grid))
}

fn expected_utility(inst: &AuctionInstance, grid: &PriceGrid, mech: &dyn SoftMax, bidder: usize, value: f64) -> Result<f64> {
    let dist = selection(inst, grid, mech)?;
    Ok(grid
        .prices
        .iter()
        .zip(dist.iter())
        .filter(|(_, &p)| p > 0.0)
        .map(|(&price, &p)| {
            let out = revenue_of_reserve(inst, price);
            let u = if out.allocations[bidder] { value - out.payments[bidder] } else { 0.0 };
            p * u
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub bidder: usize,
    pub deviation_bid: f64,
    pub utility_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IcAudit {
    /// Largest gain over truthful bidding, divided by `H`.
    pub max_gain_normalized: f64,
    pub rows: Vec<AuditRow>,
}

/// For each bidder and each of `points` deviation bids evenly spaced on
/// `[0, H]`, the exact expected-utility gain over bidding truthfully.
pub fn ic_audit(inst: &AuctionInstance, grid: &PriceGrid, mech: &dyn SoftMax, points: usize) -> Result<IcAudit> {
    if inst.n() > MAX_AUDIT_BIDDERS || grid.len() > MAX_AUDIT_GRID {
        return Err(Error::Capacity(format!(
            "exact audit supports n <= {MAX_AUDIT_BIDDERS} and grid <= {MAX_AUDIT_GRID}, got n = {} and grid = {}",
            inst.n(),
            grid.len()
        )));
    }
    if points < 2 {
        return domain("deviation grid needs at least 2 points");
    }
    let cells: Vec<(usize, usize)> = (0..inst.n()).flat_map(|i| (0..points).map(move |j| (i, j))).collect();
    let truthful: Vec<f64> = (0..inst.n())
        .map(|i| expected_utility(inst, grid, mech, i, inst.bids[i]))
        .collect::<Result<_>>()?;
    let rows = cells
        .par_iter()
        .map(|&(i, j)| {
            let bid = inst.h * j as f64 / (points - 1) as f64;
            let u = expected_utility(&inst.with_bid(i, bid), grid, mech, i, inst.bids[i])?;
            Ok(AuditRow {
                bidder: i,
                deviation_bid: bid,
                utility_gain: u - truthful[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_gain = rows.iter().map(|r| r.utility_gain).fold(0.0, f64::max);
    Ok(IcAudit {
        max_gain_normalized: max_gain / inst.h,
        rows,
    })
}

pub fn write_audit_csv<W: Write>(out: W, rows: &[AuditRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bidder", "deviation_bid", "utility_gain"])?;
    for r in rows {
        w.write_record([r.bidder.to_string(), fmt_float(r.deviation_bid), fmt_float(r.utility_gain)])?;
    }
    w.flush()?;
    Ok(())
}

/// Every price in the support of `mech(revenue_vector)` earns at least
/// `(1 − δ_price)·max grid revenue − η`.
pub fn worst_case_revenue_check(inst: &AuctionInstance, grid: &PriceGrid, mech: &dyn SoftMax, eta: f64) -> Result<bool> {
    let rev = revenue_vector(inst, grid);
    let dist = selection(inst, grid, mech)?;
    let floor = (1.0 - grid.delta_price) * rev.max() - eta;
    Ok(rev
        .iter()
        .zip(dist.iter())
        .all(|(&r, &p)| p <= SUPPORT_THRESHOLD || r >= floor - 1e-9))
}
