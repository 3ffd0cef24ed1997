//! Stopping a run half way, saving a checkpoint, and resuming it.
//!
//! The resumed run ends on exactly the same state as an uninterrupted one.

use vesicle2d::driver::{Checkpoint, Driver, RunConfig};
use vesicle2d::scenarios::{FlowKind, ScenarioConfig};

fn config(horizon: f64) -> RunConfig {
    let mut cfg = RunConfig::new(ScenarioConfig::new(FlowKind::Shear));
    cfg.scheme.order = 2;
    cfg.scheme.dt = 0.05;
    cfg.scheme.horizon = horizon;
    cfg
}

fn main() -> vesicle2d::Result<()> {
    let full = Driver::new(config(2.0))?.run()?;

    let mut first = Driver::new(config(1.0))?;
    let half = first.run()?;
    let json = serde_json::to_string(&Checkpoint::capture(&half.state, first.dt(), half.events.len()))?;
    let checkpoint: Checkpoint = serde_json::from_str(&json)?;
    let resumed = Driver::resume(config(2.0), &checkpoint)?.run()?;

    let diff = full
        .state
        .vesicles
        .iter()
        .zip(&resumed.state.vesicles)
        .flat_map(|(a, b)| a.positions().into_iter().zip(b.positions()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    println!("checkpoint is {} bytes; largest position difference after resuming: {diff:e}", json.len());
    Ok(())
}
