//! Reserve-price selection by a soft-max over grid revenues, with an exact
//! audit of how much any bidder can gain by misreporting.

use softmax_lab::auctions::{
    anonymous_opt, ic_audit, ic_epsilon_for, reserve_grid, soft_maximizer, worst_case_revenue_check, AuctionInstance,
};
use softmax_lab::mechanisms::MechanismSpec;

fn main() -> softmax_lab::Result<()> {
    let inst = AuctionInstance::from_json(r#"{"H": 1.0, "k": 2, "bids": [0.9, 0.35, 0.7, 0.6]}"#)?;
    let grid = reserve_grid(inst.h, 0.25, 0.12)?;
    println!("grid {:?}", grid.prices.iter().map(|p| (p * 1e3).round() / 1e3).collect::<Vec<_>>());
    println!("best anonymous revenue {:.3}", anonymous_opt(&inst));
    for m in [MechanismSpec::plsoftmax(10.0)?, MechanismSpec::exp(0.1)?] {
        let o = soft_maximizer(&inst, &grid, &m, 3)?;
        let audit = ic_audit(&inst, &grid, &m, 101)?;
        println!(
            "{m}: price {:.3} revenue {:.3}; max gain {:.4} <= ε {:.4}",
            o.chosen_price,
            o.revenue,
            audit.max_gain_normalized,
            ic_epsilon_for(&m, &grid)?
        );
        if let MechanismSpec::PlSoftMax { delta } = m {
            println!("  worst-case revenue floor holds: {}", worst_case_revenue_check(&inst, &grid, &m, delta)?);
        }
    }
    Ok(())
}
