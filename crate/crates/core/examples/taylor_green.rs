//! Nine vesicles in a Taylor–Green cell, stepped with explicit and with
//! semi-implicit inter-vesicle coupling from the same close layout.

use std::f64::consts::FRAC_PI_2;

use vesicle2d::driver::{CollisionPolicy, Driver, RunConfig, RunStatus};
use vesicle2d::evolve::Coupling;
use vesicle2d::scenarios::{FlowKind, ScenarioConfig};

fn main() -> vesicle2d::Result<()> {
    for coupling in [Coupling::Explicit, Coupling::SemiImplicit] {
        let mut scenario = ScenarioConfig::new(FlowKind::TaylorGreen);
        scenario.angle = Some(FRAC_PI_2);
        scenario.separation = Some(1.5);
        let mut cfg = RunConfig::new(scenario);
        cfg.discretization.n = 64;
        cfg.scheme.order = 1;
        cfg.scheme.coupling = coupling;
        cfg.scheme.dt = 0.02;
        cfg.scheme.horizon = 1.0;
        cfg.scheme.on_collision = CollisionPolicy::Stop;
        let outcome = Driver::new(cfg)?.run()?;
        let iters: usize = outcome.records.iter().map(|r| r.gmres_iters).sum();
        match outcome.status {
            RunStatus::Collided { step, t } => println!("{coupling:?}: crossing detected at step {step} (t = {t:.2})"),
            s => println!("{coupling:?}: {s:?}, {iters} GMRES iterations in total"),
        }
    }
    Ok(())
}
