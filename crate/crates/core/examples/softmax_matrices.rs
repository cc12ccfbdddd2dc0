//! Print the soft-max matrices for d = 4 and verify the rank-one recursion
//! between consecutive active counts.

use softmax_lab::mechanisms::{RationalMatrix, SoftMaxMatrix};

fn main() -> softmax_lab::Result<()> {
    let d = 4;
    for k in 1..=d {
        println!("SM({k},{d}) =\n{}", SoftMaxMatrix::new(k, d)?.as_rational());
    }
    let eye = RationalMatrix::identity(d);
    for k in 2..=d {
        let step = &(&eye + &RationalMatrix::unit(d, k - 1, 0)) - &RationalMatrix::unit(d, k - 1, k - 1);
        let rhs = SoftMaxMatrix::new(k, d)?.as_rational() * &step;
        let ok = SoftMaxMatrix::new(k - 1, d)?.as_rational() == &rhs;
        println!("SM({},{d}) = SM({k},{d})(I + E_k1 - E_kk): {ok}", k - 1);
    }
    Ok(())
}
