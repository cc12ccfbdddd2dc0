//! Pairs of inputs that force large output movement.

use softmax_lab::distances::{renyi_divergence, DivergenceOrder};
use softmax_lab::mechanisms::{MechanismSpec, ValueVector};
use softmax_lab::smoothness::{
    exp_l1_lb_witness, exp_witness_rate, kl_lb_witness, multiplicative_lb_probe, pair_ratio, sparsegen_lb_witness,
    translation_probe, Metric,
};

fn main() -> softmax_lab::Result<()> {
    let lambda = 2.0;
    let (x, y) = exp_l1_lb_witness(100, lambda)?;
    let r = pair_ratio(&MechanismSpec::exp(lambda)?, &x, &y, Metric::Lp(2.0), Metric::Lp(1.0))?.unwrap();
    println!("exp ℓ1 witness, d=100, λ={lambda}: ratio {r:.5} (closed form {:.5})", exp_witness_rate(100, lambda));

    let (d, delta) = (1024, 1.0);
    let w = kl_lb_witness(d, delta)?;
    let m = MechanismSpec::exp((d as f64).ln() / delta)?;
    let fx = m.evaluate(&ValueVector::new(w.x.clone())?)?;
    let fy = m.evaluate(&ValueVector::new(w.y.clone())?)?;
    println!("KL witness, d={d}: KL {:.4} >= {:.4}", renyi_divergence(&fy, &fx, DivergenceOrder::KL), w.floor);

    for d in [4, 16, 64] {
        let w = sparsegen_lb_witness(d, 2.0)?;
        let sm = pair_ratio(&MechanismSpec::Sparsemax, &w.x, &w.y, Metric::Lp(2.0), Metric::Lp(1.0))?.unwrap();
        let pl = pair_ratio(&MechanismSpec::plsoftmax(1.0)?, &w.x, &w.y, Metric::Lp(2.0), Metric::Lp(1.0))?.unwrap();
        println!("sparsegen witness d={d}: sparsemax {sm:.3} (floor {:.3}), plsoftmax {pl:.3}", w.floor);
    }

    let scales = [1.0, 0.1, 0.01];
    for m in [MechanismSpec::pow(1.0)?, MechanismSpec::log_plsoftmax(1.0)?] {
        println!("{m} under shrinking scales: {:?}", multiplicative_lb_probe(&m, 4, &scales)?);
    }
    let m = MechanismSpec::plsoftmax(1.0)?;
    println!("{m} under shifts: {:?}", translation_probe(&m, 4, &[0.0, 10.0, 1000.0])?);
    Ok(())
}
