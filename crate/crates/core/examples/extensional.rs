//! Two vesicles pushed together by an extensional flow, with and without
//! near-singular integration of their interaction.

use vesicle2d::driver::{Driver, RunConfig};
use vesicle2d::scenarios::{FlowKind, ScenarioConfig};
use vesicle2d::Error;

fn main() -> vesicle2d::Result<()> {
    for near_singular in [true, false] {
        let mut cfg = RunConfig::new(ScenarioConfig::new(FlowKind::Extensional));
        cfg.scheme.dt = 0.04;
        cfg.scheme.horizon = 24.0;
        cfg.scheme.near_singular = near_singular;
        let mut driver = Driver::new(cfg)?;
        let label = if near_singular { "near-singular" } else { "trapezoid" };
        match driver.run() {
            Ok(o) => {
                let r = o.records.last().expect("at least one step");
                println!("{label}: reached t = {:.2}, e_A = {:.3e}, gap = {:.4}", r.t, r.e_a, r.min_gap_vesicle.unwrap_or(f64::NAN));
            }
            Err(e @ Error::TimeStepUnderflow { .. }) => {
                let r = driver.records().last().expect("at least one step");
                println!("{label}: failed after t = {:.2} with e_A = {:.3e} ({e})", r.t, r.e_a);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
