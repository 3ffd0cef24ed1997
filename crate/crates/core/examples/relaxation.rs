//! A single vesicle relaxing in quiescent fluid, with first- and
//! second-order time stepping.

use vesicle2d::driver::{run, RunConfig};
use vesicle2d::evolve::Coupling;
use vesicle2d::scenarios::{FlowKind, ScenarioConfig};

fn main() -> vesicle2d::Result<()> {
    for order in [1, 2] {
        let mut cfg = RunConfig::new(ScenarioConfig::new(FlowKind::Relaxation));
        cfg.discretization.n = 64;
        cfg.scheme.order = order;
        cfg.scheme.coupling = Coupling::SemiImplicit;
        cfg.scheme.dt = 0.01;
        cfg.scheme.horizon = 1.0;
        let outcome = run(cfg)?;
        let (e_a, e_l) = outcome.state.conservation_errors();
        let ra = vesicle2d::geometry::reduced_area(&outcome.state.vesicles[0].curve)?;
        println!("order {order}: reduced area {ra:.6}, e_A = {e_a:.3e}, e_L = {e_l:.3e}");
    }
    Ok(())
}
