//! Price-balance dynamics for two participants: an initial-value simulation and a
//! forecast between given start and terminal prices.
//!
//! ```text
//! cargo run --example balance_forecast
//! ```

use nalgebra::{DMatrix, DVector};

use ecodyn::balance::{self, BalanceSystem, BvpConfig, MatrixPath, StaticOptions, VectorPath};
use ecodyn::volterra::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DMatrix::from_row_slice(2, 2, &[0.2, 0.3, 0.1, 0.4]);
    let c = DVector::from_vec(vec![10.0, 20.0]);
    let eq = balance::solve_static(&a, &c, &StaticOptions::default())?.x;
    println!("static balance x* = ({:.6}, {:.6})", eq[0], eq[1]);

    let base = BalanceSystem::constant(a, c)?;
    let ivp = base.clone().with_initial(
        DVector::from_vec(vec![20.0, 30.0]),
        DVector::from_vec(vec![5.0, 0.0]),
    )?;
    let tr = balance::simulate_ivp(&ivp, &SolverConfig::default())?;
    println!(
        "simulation: x(1) = {:?}, ODE residual {:.2e}",
        tr.terminal(),
        ivp.ode_residual(&tr)
    );

    let bvp = base.with_start(eq.clone())?.with_terminal(&eq * 1.1)?;
    let fc = balance::forecast_bvp(&bvp, &BvpConfig::default())?;
    println!("forecast to 1.1·x*:");
    for k in (0..fc.t.len()).step_by(40) {
        println!("  t = {:.1}: {:?}", fc.t[k], fc.state_at(k));
    }

    // Interaction coefficients drifting over the period.
    let drifting = MatrixPath::sampled(vec![
        DMatrix::from_row_slice(2, 2, &[0.2, 0.3, 0.1, 0.4]),
        DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.2, 0.3]),
    ])?;
    let cost = VectorPath::constant(DVector::from_vec(vec![10.0, 20.0]))?;
    let sys = BalanceSystem::new(drifting, cost)?
        .with_start(eq.clone())?
        .with_terminal(eq.clone())?;
    let fc = balance::forecast_bvp(&sys, &BvpConfig::default())?;
    let mid = fc.t.len() / 2;
    println!("drifting A, fixed ends: x(0.5) = {:?}", fc.state_at(mid));

    // Three periods, each re-seeded from the previous terminal prices.
    let targets: Vec<DVector<f64>> = [1.05, 1.1, 1.0].iter().map(|f| &eq * *f).collect();
    let chain = balance::forecast_chain(&sys, &targets, &BvpConfig::default())?;
    for k in (0..chain.t.len()).step_by(100) {
        println!("  t = {:.1}: {:?}", chain.t[k], chain.state_at(k));
    }
    Ok(())
}
