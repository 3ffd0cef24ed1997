//! A vesicle squeezed through a constricted tube (coarse resolution).

use vesicle2d::driver::{Driver, RunConfig};
use vesicle2d::evolve::Coupling;
use vesicle2d::scenarios::{ScenarioConfig, WallPreset};

fn main() -> vesicle2d::Result<()> {
    let mut cfg = RunConfig::new(ScenarioConfig::confined(WallPreset::Stenosis));
    cfg.discretization.n = 32;
    cfg.discretization.n_wall = 256;
    cfg.scheme.order = 1;
    cfg.scheme.coupling = Coupling::SemiImplicit;
    cfg.scheme.dt = 0.02;
    cfg.scheme.horizon = 8.0;
    let mut driver = Driver::new(cfg)?;
    let outcome = driver.run()?;
    for r in outcome.records.iter().step_by(50) {
        println!("t = {:5.2}  wall gap = {:.4}  e_A = {:.2e}", r.t, r.min_gap_wall.unwrap_or(f64::NAN), r.e_a);
    }
    let c = &outcome.state.vesicles[0].curve;
    let xmin = c.x.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("{:?}; rearmost point at x = {xmin:.3}, throat ends at x = π", outcome.status);
    Ok(())
}
