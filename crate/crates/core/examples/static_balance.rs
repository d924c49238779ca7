//! Static balance `x = Ax + c` by plain iteration and by normal-equations descent.
//!
//! ```text
//! cargo run --example static_balance
//! ```

use nalgebra::{DMatrix, DVector};

use ecodyn::balance::{self, StaticOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = DVector::from_vec(vec![10.0, 20.0]);
    let opts = StaticOptions {
        keep_iterates: true,
        ..StaticOptions::default()
    };

    let contraction = DMatrix::from_row_slice(2, 2, &[0.2, 0.3, 0.1, 0.4]);
    let sol = balance::solve_static(&contraction, &c, &opts)?;
    println!(
        "‖A‖ = {}: {:?} in {} iterations, x = {:?}",
        balance::row_sum_norm(&contraction),
        sol.method,
        sol.iterations,
        sol.x.as_slice()
    );
    for (s, x) in sol.iterates.iter().take(5).enumerate() {
        println!("  x_{s} = ({:.6}, {:.6})", x[0], x[1]);
    }

    let expansive = DMatrix::from_row_slice(2, 2, &[0.6, 0.7, 0.9, 0.2]);
    let sol = balance::solve_static(&expansive, &c, &StaticOptions::default())?;
    println!(
        "‖A‖ = {}: {:?} in {} iterations, x = {:?}, residual {:.2e}",
        balance::row_sum_norm(&expansive),
        sol.method,
        sol.iterations,
        sol.x.as_slice(),
        sol.residual
    );
    Ok(())
}
