//! Empirical Lipschitz constants next to the proven bounds.

use softmax_lab::mechanisms::MechanismSpec;
use softmax_lab::smoothness::{empirical_lipschitz, theoretical_bound, Metric};

fn main() -> softmax_lab::Result<()> {
    let d = 16;
    let cases = [
        ("plsoftmax:delta=1", "l1", "l1"),
        ("plsoftmax:delta=1", "l2", "l2"),
        ("plsoftmax:delta=1", "l2", "l1"),
        ("plsoftmax:delta=1", "linf", "l1"),
        ("exp:lambda=1", "l2", "dinf"),
        ("exp:lambda=1", "l2", "kl"),
        ("pow:lambda=1", "logl2", "dinf"),
        ("logplsoftmax:delta=1", "logl2", "l1"),
        ("sparsemax", "l2", "l1"),
    ];
    for (m, dm, rm) in cases {
        let m: MechanismSpec = m.parse()?;
        let (dm, rm): (Metric, Metric) = (dm.parse()?, rm.parse()?);
        let est = empirical_lipschitz(&m, d, dm, rm, 2000, 1)?;
        println!(
            "{:<22} ({dm}, {rm}): estimate {:.4}  bound {:.4}",
            m.to_string(),
            est.max_ratio,
            theoretical_bound(&m, d, dm, rm)
        );
    }
    Ok(())
}
