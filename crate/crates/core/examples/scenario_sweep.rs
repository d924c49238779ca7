//! Many forecasts from one resolvent: cost and terminal-price variations of a base
//! balance system, then the same sweep through a scenario file.
//!
//! ```text
//! cargo run --example scenario_sweep
//! ```

use nalgebra::{DMatrix, DVector};

use ecodyn::balance::{self, BalanceSystem, BvpConfig, Variation};
use ecodyn::scenario::{self, Format, RunOptions, ScenarioConfig, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DMatrix::from_row_slice(2, 2, &[0.2, 0.3, 0.1, 0.4]);
    let c = DVector::from_vec(vec![10.0, 20.0]);
    let start = DVector::from_vec(vec![26.0, 37.0]);
    let base = BalanceSystem::constant(a, c)?
        .with_start(start.clone())?
        .with_terminal(start)?;

    let variations: Vec<Variation> = (0..5)
        .map(|k| Variation {
            c_scale: Some(0.8 + 0.1 * k as f64),
            ..Variation::default()
        })
        .collect();
    let runs = balance::scenario_sweep(&base, &variations, &BvpConfig::default())?;
    for (v, tr) in variations.iter().zip(&runs) {
        let mid = tr.t.len() / 2;
        println!(
            "c × {:.1}: x(0.5) = {:?}",
            v.c_scale.unwrap(),
            tr.state_at(mid)
        );
    }

    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let cfg = ScenarioConfig::load(&dir.join("balance_forecast.json"))?.validate()?;
    let spec = SweepSpec::load(&dir.join("sweep_c_scale.json"))?;
    let out = std::env::temp_dir().join("ecodyn_sweep_example");
    let outcome = scenario::run_sweep(
        &cfg,
        &spec,
        &RunOptions {
            base_dir: out,
            format: Format::Csv,
        },
    )?;
    println!("{}", outcome.message);
    for path in outcome.artifacts {
        println!("  wrote {}", path.display());
    }
    Ok(())
}
