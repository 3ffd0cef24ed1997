use std::f64::consts::PI;

use super::{compute_geometry, reduced_area, Curve};
use crate::error::{Error, Result};

pub fn circle(n: usize, radius: f64, center: [f64; 2]) -> Result<Curve> {
    ellipse_at(n, radius, radius, center)
}

/// Ellipse with semi-axes `a` (along x) and `b` (along y) centered at the origin.
///
/// Panics if `n` is not a power of two; use [`ellipse_at`] for a fallible version.
pub fn ellipse(n: usize, a: f64, b: f64) -> Curve {
    ellipse_at(n, a, b, [0.0, 0.0]).expect("node count must be a power of two")
}

pub fn ellipse_at(n: usize, a: f64, b: f64, center: [f64; 2]) -> Result<Curve> {
    let (x, y) = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            (center[0] + a * t.cos(), center[1] + b * t.sin())
        })
        .unzip();
    Curve::new(x, y)
}

/// Ellipse with reduced area `target` and perimeter `2π·scale`, long axis along x.
pub fn shape_with_reduced_area(target: f64, n: usize, scale: f64) -> Result<Curve> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidArgument(format!("reduced area {target} outside (0, 1]")));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("shape scale {scale} must be positive")));
    }
    let ra = |aspect: f64| reduced_area(&ellipse(n, 1.0, aspect));
    let aspect = if target == 1.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (1e-3, 1.0);
        if ra(lo)? > target {
            return Err(Error::InvalidArgument(format!(
                "reduced area {target} too small to resolve with {n} nodes"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ra(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let unit = ellipse_at(n, 1.0, aspect, [0.0, 0.0])?;
    let len = compute_geometry(&unit)?.length;
    let s = 2.0 * PI * scale / len;
    Curve::new(unit.x.iter().map(|v| v * s).collect(), unit.y.iter().map(|v| v * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_target_is_a_circle() {
        let c = shape_with_reduced_area(1.0, 32, 1.0).unwrap();
        for k in 0..32 {
            assert!((c.x[k].hypot(c.y[k]) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn hits_requested_reduced_area() {
        for (target, n) in [(0.65, 64), (0.99, 32), (0.9, 128)] {
            let c = shape_with_reduced_area(target, n, 1.0).unwrap();
            assert!((reduced_area(&c).unwrap() - target).abs() < 1e-8);
            let g = compute_geometry(&c).unwrap();
            assert!((g.length - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range_targets() {
        assert!(shape_with_reduced_area(0.0, 32, 1.0).is_err());
        assert!(shape_with_reduced_area(1.2, 32, 1.0).is_err());
    }
}
