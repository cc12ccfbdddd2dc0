//! The PLSoftMax classification loss and its convexity/gradient probes.

use softmax_lab::loss::{loss_ord, loss_sqr, loss_supp, loss_total, probe_suite, LossInput};
use softmax_lab::mechanisms::{plsoftmax, SimplexDistribution, ValueVector};

fn main() -> softmax_lab::Result<()> {
    let x = ValueVector::new(vec![2.0, 1.5, 0.0, -1.0])?;
    let delta = 1.0;
    let targets = [
        ("plsoftmax(x)", plsoftmax(&x, delta)?),
        ("one-hot top", SimplexDistribution::point_mass(4, 0)),
        ("one-hot last", SimplexDistribution::point_mass(4, 3)),
        ("uniform", SimplexDistribution::uniform(4)),
    ];
    for (name, q) in targets {
        let input = LossInput::new(x.clone(), q, delta)?;
        println!(
            "{name:<13} ord {:.4}  supp {:.4}  sqr {:.4}  total {:.4}",
            loss_ord(&input),
            loss_supp(&input),
            loss_sqr(&input),
            loss_total(&input)
        );
    }
    let r = probe_suite(8, delta, 500, 0)?;
    println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
    Ok(())
}
