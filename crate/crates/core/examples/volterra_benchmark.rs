//! Successive approximations on `φ(t) = 1 + ∫₀ᵗ φ(h) dh`, whose solution is `e^t`.
//!
//! ```text
//! cargo run --example volterra_benchmark
//! ```

use ecodyn::volterra::{self, SolverConfig, VolterraProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = VolterraProblem::new(1, 0.0, 1.0, |_, _, _, _| 1.0, |_, _| 1.0)?;
    println!("nodes  iterations  max error   ratio");
    let mut previous: Option<f64> = None;
    for nodes in [51, 101, 201, 401, 801] {
        let sol = volterra::solve_picard(
            &problem,
            &SolverConfig {
                nodes,
                tol: 1e-13,
                max_iter: 500,
            },
        )?;
        let err = sol.values[0]
            .iter()
            .zip(sol.grid.points())
            .map(|(v, t)| (v - t.exp()).abs())
            .fold(0.0, f64::max);
        let ratio = previous.map_or(String::new(), |p| format!("{:.4}", p / err));
        println!("{nodes:<6} {:<11} {err:<11.3e} {ratio}", sol.iterations);
        previous = Some(err);
    }

    // Two coupled components: φ₁' = φ₂, φ₂' = -φ₁ in integral form.
    let rotation = VolterraProblem::new(
        2,
        0.0,
        std::f64::consts::PI,
        |i, j, _, _| match (i, j) {
            (0, 1) => 1.0,
            (1, 0) => -1.0,
            _ => 0.0,
        },
        |i, _| if i == 0 { 1.0 } else { 0.0 },
    )?;
    let sol = volterra::solve_picard(&rotation, &SolverConfig::default())?;
    let last = sol.grid.len() - 1;
    println!(
        "rotation at t = π: ({:.6}, {:.6}) after {} iterations",
        sol.values[0][last], sol.values[1][last], sol.iterations
    );
    Ok(())
}
