//! Classical versus variable-coefficient Phillips income paths.
//!
//! The corrected model is a second-order equation with coefficients that decay in
//! time; it is solved by reduction to a Volterra equation and successive
//! approximations, then compared with the constant-coefficient model started from
//! the same data.
//!
//! ```text
//! cargo run --example phillips_corrected
//! ```

use ecodyn::grid::Grid;
use ecodyn::phillips::{self, PhillipsParams};
use ecodyn::volterra::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = PhillipsParams::new(1.0, 1.0, 0.5, 2.0, 1.0, 0.0)?;
    let d = phillips::dimensionless_form(&p);
    println!(
        "alpha = {}, beta = {}, gamma = {}",
        d.alpha, d.beta, d.gamma
    );

    let cfg = SolverConfig {
        nodes: 801,
        tol: 1e-13,
        max_iter: 500,
    };
    let corrected = phillips::solve_corrected(&p, 3.0, &cfg)?;
    println!(
        "{} Picard iterations, equation residual {:.2e}",
        corrected.iterations,
        phillips::equation_residual(&p, &corrected)
    );

    // Same data in dimensional time: Y(0) = y1, Y'(0) = k·Y_τ(1).
    let grid = Grid::new(0.0, 2.0 / p.k, 801)?;
    let (regime, classical) = phillips::classical_solution(&p, p.y1, p.k * p.y1p, &grid);
    println!("classical regime: {regime:?}");
    println!("t      corrected Y   classical Y");
    for k in (0..801).step_by(100) {
        println!(
            "{:<6.2} {:<13.6} {:.6}",
            corrected.t[k], corrected.income[k], classical.income[k]
        );
    }

    let long =
        phillips::solve_corrected_windowed(&p, 101.0, 2.0, &SolverConfig { nodes: 201, ..cfg })?;
    let last = long.tau.len() - 1;
    println!(
        "at tau = {}: Y = {:.4e}, Y'/Y = {:.4}",
        long.tau[last],
        long.income[last],
        long.income_rate[last] / long.income[last]
    );
    Ok(())
}
