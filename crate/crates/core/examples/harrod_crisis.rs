//! Crisis times of the Harrod growth model and its variants.
//!
//! ```text
//! cargo run --example harrod_crisis
//! ```

use ecodyn::grid::Grid;
use ecodyn::harrod::{self, CrisisVariant, GrowthLaw, HarrodParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = HarrodParams::new(0.05, 1.0, 100.0)?
        .with_depreciation(0.08)?
        .with_cumulation(0.1)?;
    println!("savings share s = {}", params.s());

    let year = harrod::discrete_contradiction_year(&params, 1000);
    let est = harrod::contradiction_estimates(&params);
    println!(
        "discrete: first year with accumulated investment >= capital: {year:?} \
         (1/s = {}, geometric estimate {:.2})",
        est.reciprocal_rate, est.geometric
    );

    for variant in [
        CrisisVariant::Base,
        CrisisVariant::Depreciation,
        CrisisVariant::Cumulative,
    ] {
        let report = harrod::crisis_time(&params, variant, None, 1e3)?;
        println!(
            "{variant:?}: t = {:?} ({})",
            report.t_crisis, report.mechanism
        );
    }

    // f(t) = t + t²/40 reaches 1/s = 20 a little before the base crisis.
    let f = |t: f64| t + t * t / 40.0;
    let report = harrod::crisis_time(&params, CrisisVariant::GeneralizedF, Some(&f), 1e3)?;
    println!("GeneralizedF: t = {:.9}", report.t_crisis.unwrap());

    let depreciated = harrod::solve_variant_ivp(
        GrowthLaw::Depreciation,
        &params,
        &Grid::new(0.0, 5.0, 501)?,
        4,
        harrod::DEFAULT_CEILING_FACTOR,
    );
    println!(
        "depreciation ODE: K(5) = {:.6}",
        depreciated.capital.last().unwrap()
    );

    // Integrate the base law up to t = 25 and let the detector stop at the crisis.
    let grid = Grid::new(0.0, 25.0, 2501)?;
    let tr = harrod::solve_variant_ivp(
        GrowthLaw::Base,
        &params,
        &grid,
        4,
        harrod::DEFAULT_CEILING_FACTOR,
    );
    let flag = tr.crisis.expect("crisis inside the horizon");
    println!(
        "base ODE: stopped at node {} (t = {:.2}, {:?}); last K = {:.3e}",
        flag.index,
        flag.t,
        flag.cause,
        tr.capital.last().unwrap()
    );

    let closed = harrod::continuous_trajectory(&params, &Grid::new(0.0, 10.0, 3)?)?;
    let expo = harrod::exponential_baseline(&params, &Grid::new(0.0, 10.0, 3)?);
    println!("t     K (integral form)   K0·e^(st)");
    for k in 0..closed.t.len() {
        println!(
            "{:<5} {:<19.6} {:.6}",
            closed.t[k], closed.capital[k], expo.capital[k]
        );
    }
    Ok(())
}
