//! Crossing and containment detection with the Laplace double-layer indicator.
//!
//! At a vesicle node the indicator sums to ½ from the node's own curve, 1 from
//! every other curve enclosing it, and 1 from the enclosing wall. Nominal
//! values are therefore ½ unconfined and 3/2 confined.

use crate::error::Result;
use crate::geometry::{Curve, GeometryCache};
use crate::kernels::{laplace_indicator_on_curve, DirectSummation, Vesicle, WallSet};
use crate::nearsing::{
    classify_targets, closest_point, near_eval, trapezoid_values, Layer, NearParams, OnCurve, Source,
};

pub const DEFAULT_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OffendingPoint {
    pub vesicle: usize,
    pub node: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CollisionReport {
    pub collided: bool,
    pub offending: Vec<OffendingPoint>,
    pub max_deviation: f64,
}

/// Indicator of `source` at `targets`, near-singular where needed.
fn indicator_from(source: &Source, targets: &[[f64; 2]], params: &NearParams) -> Result<Vec<f64>> {
    let backend = DirectSummation;
    let values = match classify_targets(source, targets, params) {
        Ok(map) => {
            let on = OnCurve::new(source, Layer::Indicator, &[&map])?;
            near_eval(source, Layer::Indicator, &[], &on, &map, &backend)?
        }
        // A stencil that leaves through the curve means the geometry is
        // already tangled; the plain upsampled sum is still decisive there.
        Err(crate::error::Error::StencilCrossing { .. }) => {
            trapezoid_values(Layer::Indicator, &source.up_curve, &source.up_geom, &[], targets, &backend)
        }
        Err(e) => return Err(e),
    };
    Ok(values.into_iter().map(|v| v[0]).collect())
}

/// Indicator value at every vesicle node.
pub fn indicator_all(vesicles: &[Vesicle], walls: Option<&WallSet>, params: &NearParams) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> =
        vesicles.iter().map(|v| laplace_indicator_on_curve(&v.curve, &v.geom)).collect();
    let curves: Vec<(&Curve, &GeometryCache)> = vesicles
        .iter()
        .map(|v| (&v.curve, &v.geom))
        .chain(walls.into_iter().flat_map(|w| w.components.iter().map(|c| (&c.curve, &c.geom))))
        .collect();
    for (q, (curve, geom)) in curves.iter().enumerate() {
        let source = Source::new(curve, geom)?;
        for (p, v) in vesicles.iter().enumerate() {
            if p == q {
                continue;
            }
            let targets: Vec<[f64; 2]> = (0..v.n()).map(|k| v.curve.point(k)).collect();
            for (o, val) in out[p].iter_mut().zip(indicator_from(&source, &targets, params)?) {
                *o += val;
            }
        }
    }
    Ok(out)
}

/// Flags every node whose indicator deviates from the nominal level by more
/// than `tolerance`, upward (crossing) or downward (escape through a wall).
pub fn detect(
    vesicles: &[Vesicle],
    walls: Option<&WallSet>,
    params: &NearParams,
    tolerance: f64,
) -> Result<CollisionReport> {
    let nominal = if walls.is_some() { 1.5 } else { 0.5 };
    let values = indicator_all(vesicles, walls, params)?;
    let mut offending = Vec::new();
    let mut max_deviation = 0.0f64;
    for (p, vals) in values.iter().enumerate() {
        for (k, &value) in vals.iter().enumerate() {
            let dev = (value - nominal).abs();
            // NaN compares false everywhere, so test the negation
            if !(dev <= tolerance) {
                offending.push(OffendingPoint { vesicle: p, node: k, value });
            }
            max_deviation = if dev.is_nan() { f64::NAN } else { max_deviation.max(dev) };
        }
    }
    Ok(CollisionReport { collided: !offending.is_empty(), offending, max_deviation })
}

/// Distance between two curves: nearest node pair, then alternating
/// closest-point projections between the curves.
fn curve_gap(a: &Source, b: &Source) -> f64 {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..a.n() {
        let x = a.curve.point(i);
        for k in 0..b.n() {
            let y = b.curve.point(k);
            let d = (x[0] - y[0]).hypot(x[1] - y[1]);
            if d < best.0 {
                best = (d, i, k);
            }
        }
    }
    let (mut gap, i, mut kb) = best;
    let mut x = a.curve.point(i);
    for _ in 0..100 {
        let Ok(on_b) = closest_point(b, x, kb) else { break };
        let Ok(on_a) = closest_point(a, on_b.x0, nearest_node(a, on_b.x0)) else { break };
        let d = (on_a.x0[0] - on_b.x0[0]).hypot(on_a.x0[1] - on_b.x0[1]);
        if !(d < gap) {
            break;
        }
        let done = gap - d < 1e-15 * gap.max(1.0);
        gap = d;
        if done {
            break;
        }
        x = on_a.x0;
        kb = nearest_node(b, x);
    }
    gap
}

fn nearest_node(s: &Source, x: [f64; 2]) -> usize {
    (0..s.n())
        .min_by(|&i, &j| {
            let di = (s.curve.x[i] - x[0]).hypot(s.curve.y[i] - x[1]);
            let dj = (s.curve.x[j] - x[0]).hypot(s.curve.y[j] - x[1]);
            di.total_cmp(&dj)
        })
        .unwrap_or(0)
}

/// Minimum vesicle–vesicle and vesicle–wall distances.
pub fn min_gaps(vesicles: &[Vesicle], walls: Option<&WallSet>) -> Result<(Option<f64>, Option<f64>)> {
    let sources: Vec<Source> = vesicles.iter().map(|v| Source::new(&v.curve, &v.geom)).collect::<Result<_>>()?;
    let mut ves_gap: Option<f64> = None;
    for p in 0..sources.len() {
        for q in p + 1..sources.len() {
            let d = curve_gap(&sources[p], &sources[q]);
            ves_gap = Some(ves_gap.map_or(d, |g| g.min(d)));
        }
    }
    let mut wall_gap: Option<f64> = None;
    if let Some(w) = walls {
        for c in &w.components {
            let s = Source::new(&c.curve, &c.geom)?;
            for v in &sources {
                let d = curve_gap(v, &s);
                wall_gap = Some(wall_gap.map_or(d, |g| g.min(d)));
            }
        }
    }
    Ok((ves_gap, wall_gap))
}
