//! Solvability diagnostics for a few interaction matrices.
//!
//! ```text
//! cargo run --example balance_diagnostics
//! ```

use nalgebra::{DMatrix, DVector};

use ecodyn::balance::{self, BalanceSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        (
            "connected",
            DMatrix::from_row_slice(2, 2, &[0.2, 0.3, 0.1, 0.4]),
        ),
        (
            "one-way",
            DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.0, 0.0]),
        ),
        (
            "column sum above one",
            DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.95, 0.1]),
        ),
        (
            "singular",
            DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
        ),
    ];
    for (name, a) in cases {
        let n = a.nrows();
        let sys = BalanceSystem::constant(a, DVector::zeros(n))?;
        let d = balance::diagnose(&sys, 3);
        println!("{name}: {:?}", d.verdict);
        println!("{}", serde_json::to_string_pretty(&d)?);
    }
    Ok(())
}
