//! Refining N and Δt together on the shear pair and tabulating the errors.

use vesicle2d::driver::{converge, convergence_csv, RunConfig};
use vesicle2d::evolve::Coupling;
use vesicle2d::scenarios::{FlowKind, ScenarioConfig};

fn main() -> vesicle2d::Result<()> {
    let mut cfg = RunConfig::new(ScenarioConfig::new(FlowKind::Shear));
    cfg.discretization.n = 16;
    cfg.scheme.order = 2;
    cfg.scheme.coupling = Coupling::SemiImplicit;
    cfg.scheme.dt = 0.08;
    cfg.scheme.horizon = 4.0;
    let rows = converge(&cfg, 3, None)?;
    print!("{}", convergence_csv(&rows));
    Ok(())
}
