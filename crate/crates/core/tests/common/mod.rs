#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DVector;
use vesicle2d::geometry::{compute_geometry, ellipse, Curve, GeometryCache};
use vesicle2d::nearsing::Source;
use vesicle2d::quadrature::self_slp_matrix;

pub const A: f64 = 1.5;
pub const B: f64 = 1.0;

pub fn extensional(x: [f64; 2]) -> [f64; 2] {
    [x[0], -x[1]]
}

/// `(−log|x| I + x⊗x/|x|²)(1, 1)`
pub fn stokeslet(x: [f64; 2]) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let l = -0.5 * r2.ln();
    let s = x[0] + x[1];
    [l + x[0] * s / r2, l + x[1] * s / r2]
}

/// Single-layer density on the 3:2 ellipse reproducing `field` on the curve.
///
/// Interior fields add `n(n·φ)` to pin the normal component, which the single
/// layer alone leaves undetermined.
pub fn slp_density(n: usize, field: fn([f64; 2]) -> [f64; 2], interior: bool) -> (Curve, GeometryCache, Vec<f64>) {
    let c = ellipse(n, A, B);
    let g = compute_geometry(&c).unwrap();
    let mut a = self_slp_matrix(&c, &g, 1.0).unwrap();
    let mut rhs = DVector::zeros(2 * n);
    for k in 0..n {
        let u = field(c.point(k));
        rhs[k] = u[0];
        rhs[n + k] = u[1];
    }
    if interior {
        for i in 0..n {
            let ni = g.normal(i);
            for j in 0..n {
                let (nj, w) = (g.normal(j), g.weight(j));
                a[(i, j)] += ni[0] * nj[0] * w;
                a[(i, n + j)] += ni[0] * nj[1] * w;
                a[(n + i, j)] += ni[1] * nj[0] * w;
                a[(n + i, n + j)] += ni[1] * nj[1] * w;
            }
        }
    }
    let f = a.lu().solve(&rhs).unwrap();
    (c, g, f.as_slice().to_vec())
}

/// 32 targets at distances spread over `(0.05h, 0.95h)` from the ellipse.
pub fn near_targets(src: &Source, exterior: bool) -> Vec<[f64; 2]> {
    let sign = if exterior { 1.0 } else { -1.0 };
    (0..32)
        .map(|i| {
            let t = 2.0 * PI * (i as f64 + 0.37) / 32.0;
            let nrm = src.normal_at(t);
            let d = sign * src.h * (0.05 + 0.9 * ((i * 7 % 32) as f64) / 32.0);
            [A * t.cos() + d * nrm[0], B * t.sin() + d * nrm[1]]
        })
        .collect()
}

pub fn smooth_density(t: f64) -> [f64; 2] {
    [t.sin().exp(), (2.0 * t).cos() + 0.5 * (3.0 * t).sin()]
}

/// Single layer of `smooth_density` by the trapezoid rule on `n_ref` nodes of
/// the analytic ellipse.
pub fn slp_oracle(x: [f64; 2], n_ref: usize) -> [f64; 2] {
    let dt = 2.0 * PI / n_ref as f64;
    let mut u = [0.0, 0.0];
    for k in 0..n_ref {
        let t = dt * k as f64;
        let r = [x[0] - A * t.cos(), x[1] - B * t.sin()];
        let rho2 = r[0] * r[0] + r[1] * r[1];
        let jac = (A * A * t.sin().powi(2) + B * B * t.cos().powi(2)).sqrt();
        let f = smooth_density(t);
        let lg = -0.5 * rho2.ln();
        let rf = (r[0] * f[0] + r[1] * f[1]) / rho2;
        let w = jac * dt / (4.0 * PI);
        u[0] += w * (lg * f[0] + rf * r[0]);
        u[1] += w * (lg * f[1] + rf * r[1]);
    }
    u
}

pub fn sampled_smooth_density(n: usize) -> Vec<f64> {
    let mut f = vec![0.0; 2 * n];
    for k in 0..n {
        let v = smooth_density(2.0 * PI * k as f64 / n as f64);
        f[k] = v[0];
        f[n + k] = v[1];
    }
    f
}

pub fn max_error(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u[0] - v[0]).abs().max((u[1] - v[1]).abs())).fold(0.0, f64::max)
}

/// Least-squares slope of `−log e` against `log n`.
pub fn fitted_order(ns: &[usize], errs: &[f64]) -> f64 {
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    -sxy / sxx
}
