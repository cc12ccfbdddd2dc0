//! Evaluate every built-in mechanism on one value vector.
//!
//!     cargo run --example eval_mechanisms -- 3 2.5 1 0.2

use softmax_lab::mechanisms::{additive_gap, multiplicative_gap, MechanismSpec, ValueVector};

fn main() -> softmax_lab::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let x = ValueVector::new(if args.is_empty() { vec![3.0, 2.5, 1.0, 0.2] } else { args })?;
    let mechs = [
        "exp:lambda=2",
        "pow:lambda=2",
        "plsoftmax:delta=1",
        "logplsoftmax:delta=0.5",
        "sparsemax",
        "argmax",
    ];
    println!("x = {:?}", x.values());
    for m in mechs {
        let m: MechanismSpec = m.parse()?;
        let p = m.evaluate(&x)?;
        let mult = if x.iter().all(|&v| v > 0.0) { multiplicative_gap(&x, &p)? } else { f64::NAN };
        println!(
            "{:<24} {:?}  additive gap {:.4}  multiplicative gap {:.4}",
            m.to_string(),
            p.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            additive_gap(&x, &p),
            mult
        );
    }
    Ok(())
}
