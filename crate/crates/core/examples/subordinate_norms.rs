//! Exact `(ℓp, ℓ1)` norms of the soft-max matrices against sampled lower
//! bounds, the row bound, and the closed-form cap.

use softmax_lab::distances::{sm_norm_bound, subordinate_norm_exact, subordinate_norm_row_bound, subordinate_norm_sampled};
use softmax_lab::mechanisms::SoftMaxMatrix;

fn main() -> softmax_lab::Result<()> {
    println!("{:>3} {:>3} {:>5} {:>9} {:>9} {:>9} {:>9}", "d", "k", "p", "sampled", "exact", "rows", "cap");
    for d in [4, 8, 12] {
        for k in [2, d / 2, d] {
            for p in [2.0, 4.0, f64::INFINITY] {
                let a = SoftMaxMatrix::new(k, d)?.to_f64();
                println!(
                    "{d:>3} {k:>3} {p:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                    subordinate_norm_sampled(&a, p, 1.0, 500, 0)?,
                    subordinate_norm_exact(&a, p)?,
                    subordinate_norm_row_bound(&a, p, 1.0)?,
                    sm_norm_bound(k, p, 1.0),
                );
            }
        }
    }
    Ok(())
}
