//! The containment indicator and the collision test built on it.

use vesicle2d::collision::{detect, indicator_all, DEFAULT_TOLERANCE};
use vesicle2d::geometry::shapes::{circle, ellipse_at};
use vesicle2d::kernels::Vesicle;
use vesicle2d::nearsing::NearParams;

fn main() -> vesicle2d::Result<()> {
    let params = NearParams::default();
    let a = Vesicle::new(circle(64, 1.0, [0.0, 0.0])?, 1.0, 0.1)?;

    for (label, dx) in [("apart", 2.5), ("touching", 2.02), ("overlapping", 1.6)] {
        let b = Vesicle::new(ellipse_at(64, 1.0, 0.6, [dx, 0.0])?, 1.0, 0.1)?;
        let pair = [a.clone(), b];
        let values = indicator_all(&pair, None, &params)?;
        let extreme = values.iter().flatten().fold(0.5f64, |m, v| if (v - 0.5).abs() > (m - 0.5).abs() { *v } else { m });
        let report = detect(&pair, None, &params, DEFAULT_TOLERANCE)?;
        println!(
            "{label:>12}: indicator farthest from 1/2 = {extreme:.6}, collided = {}, offending nodes = {}",
            report.collided,
            report.offending.len()
        );
    }
    Ok(())
}
