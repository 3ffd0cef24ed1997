//! Two vesicles passing each other in a shear flow. Pass a directory as the
//! first argument to keep snapshots and diagnostics.

use std::path::PathBuf;

use vesicle2d::driver::{Driver, RunConfig};
use vesicle2d::evolve::Coupling;
use vesicle2d::scenarios::{FlowKind, ScenarioConfig};

fn main() -> vesicle2d::Result<()> {
    let mut cfg = RunConfig::new(ScenarioConfig::new(FlowKind::Shear));
    cfg.discretization.n = 32;
    cfg.scheme.order = 2;
    cfg.scheme.coupling = Coupling::SemiImplicit;
    cfg.scheme.dt = 0.04;
    cfg.scheme.horizon = 12.0;
    cfg.output.dir = std::env::args().nth(1).map(PathBuf::from);
    cfg.output.snapshot_every = 25;

    let mut driver = Driver::new(cfg)?;
    let outcome = driver.run()?;
    for r in outcome.records.iter().step_by(25) {
        println!("t = {:6.2}  gap = {:.4}  e_A = {:.2e}", r.t, r.min_gap_vesicle.unwrap_or(f64::NAN), r.e_a);
    }
    let min_gap = outcome.records.iter().filter_map(|r| r.min_gap_vesicle).fold(f64::INFINITY, f64::min);
    println!("{:?}, minimum gap {min_gap:.4}", outcome.status);
    Ok(())
}
