//! Greedy coverage with soft-max selection: objective, privacy accounting,
//! and robustness to dropped records.

use softmax_lab::mechanisms::MechanismSpec;
use softmax_lab::submodular::{
    brute_force_opt, compose_privacy, greedy, manipulation_test, private_greedy, CoverageInstance,
};

fn main() -> softmax_lab::Result<()> {
    let inst = CoverageInstance::synthetic(30, 200, 7)?;
    let k = 5;
    let g = greedy(&inst, k)?;
    let (opt, best) = brute_force_opt(&inst, k)?;
    println!("greedy {} (sets {:?}), optimum {opt} (sets {best:?})", g.objective(), g.chosen);

    for m in ["pow:lambda=2", "exp:lambda=0.5", "plsoftmax:delta=2"] {
        let m: MechanismSpec = m.parse()?;
        let t = private_greedy(&inst, k, &m, 1)?;
        let s = manipulation_test(&inst, k, &m, 0.001, &(0..100).collect::<Vec<_>>())?;
        println!(
            "{:<20} one run {}  mean ratio {:.3}  mean ℓ1 shift {:.2e}",
            m.to_string(),
            t.objective(),
            s.avg_obj_ratio,
            s.avg_l1_dist
        );
    }

    let b = compose_privacy(0.1, 0.0, k, 1e-6)?;
    println!(
        "{k} steps at ε=0.1: basic ε={:.3}, advanced ε={:.3} (δ={:.1e})",
        b.eps_total_basic, b.eps_total_advanced, b.delta_total
    );
    Ok(())
}
