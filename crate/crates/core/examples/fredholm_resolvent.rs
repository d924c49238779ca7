//! Nyström solution, characteristic numbers and resolvent reuse for a Fredholm
//! equation with kernel `t·h + t²·h²`.
//!
//! ```text
//! cargo run --example fredholm_resolvent
//! ```

use ecodyn::fredholm::{self, FredholmError, FredholmProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = FredholmProblem::new(1, |_, _, t, h| t * h + t * t * h * h, |_, t| t)?;

    let numbers = fredholm::characteristic_numbers(&problem, 400, 5)?;
    println!("characteristic numbers: {numbers:?}");

    let sol = fredholm::nystrom_solve(&problem, 401)?;
    println!(
        "λ = 1: φ(1) = {:.8}, condition {:.2}",
        sol.values[0].last().unwrap(),
        sol.condition
    );

    // One factorization serves any number of free terms.
    let resolvent = fredholm::build_resolvent(&problem, 401, 1.0)?;
    let grid = resolvent.grid;
    for (name, f) in [("1", 0), ("t", 1), ("t^2", 2)] {
        let free = vec![grid.points().iter().map(|t| t.powi(f)).collect::<Vec<_>>()];
        let phi = fredholm::apply_resolvent(&resolvent, &free)?;
        println!(
            "free term {name:<4} -> φ(1) = {:.8}",
            phi[0].last().unwrap()
        );
    }

    let near = numbers[0].re * (1.0 + 1e-4);
    match fredholm::nystrom_solve(&problem.clone().with_lambda(near), 400) {
        Err(e @ FredholmError::Critical { .. }) => println!("λ = {near:.6}: {e}"),
        other => println!("λ = {near:.6}: unexpected {other:?}"),
    }
    Ok(())
}
