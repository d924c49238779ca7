//! Economic-dynamics models reduced to integral equations of the second kind.
//!
//! * [`harrod`]: discrete and integral-form Harrod growth, crisis times.
//! * [`phillips`]: classical and variable-coefficient Phillips models.
//! * [`volterra`]: successive approximations for Volterra systems.
//! * [`fredholm`]: Nyström discretization, characteristic numbers and resolvents
//!   for Fredholm systems.
//! * [`balance`]: price-balance models, their initial- and boundary-value dynamics,
//!   scenario sweeps and solvability diagnostics.
//! * [`scenario`]: JSON scenario files, CSV/JSONL output and the `ecodyn` command line.
//!
//! Every capability has a runnable program under `examples/`, e.g.
//! `cargo run --release --example balance_forecast`.

pub mod balance;
pub mod fredholm;
pub mod graph;
pub mod grid;
pub mod harrod;
pub mod ode;
pub mod phillips;
pub mod scenario;
pub mod volterra;
