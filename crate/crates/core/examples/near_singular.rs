//! Layer potentials evaluated close to a 3:2 ellipse.
//!
//! A single-layer density is solved for so that the potential reproduces a
//! known exterior Stokes flow on the boundary; the flow is then recovered at
//! targets inside the near zone with and without the near-singular scheme.

use std::f64::consts::PI;

use nalgebra::DVector;
use vesicle2d::geometry::{compute_geometry, ellipse};
use vesicle2d::kernels::DirectSummation;
use vesicle2d::nearsing::{evaluate_layer, trapezoid_values, Layer, NearParams, Source};
use vesicle2d::quadrature::self_slp_matrix;

/// Stokeslet `(−log|x| + x⊗x/|x|²)(1, 1)` centered inside the ellipse.
fn stokeslet(x: [f64; 2]) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let l = -0.5 * r2.ln();
    let s = x[0] + x[1];
    [l + x[0] * s / r2, l + x[1] * s / r2]
}

fn main() -> vesicle2d::Result<()> {
    println!("{:>5} {:>12} {:>12}", "N", "near", "trapezoid");
    for n in [16, 32, 64, 128, 256] {
        let curve = ellipse(n, 1.5, 1.0);
        let geom = compute_geometry(&curve)?;
        let mut rhs = DVector::zeros(2 * n);
        for k in 0..n {
            let u = stokeslet(curve.point(k));
            rhs[k] = u[0];
            rhs[n + k] = u[1];
        }
        // the Stokeslet is inside, so its flow is an exterior single layer
        let s = self_slp_matrix(&curve, &geom, 1.0)?;
        let density = s.lu().solve(&rhs).expect("single layer is invertible");
        let source = Source::new(&curve, &geom)?;
        let targets: Vec<[f64; 2]> = (0..32)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.37) / 32.0;
                let nrm = source.normal_at(a);
                let d = source.h * (0.05 + 0.9 * ((7 * i) % 32) as f64 / 32.0);
                [1.5 * a.cos() + d * nrm[0], a.sin() + d * nrm[1]]
            })
            .collect();
        let layer = Layer::Slp { mu0: 1.0 };
        let near = evaluate_layer(&source, layer, density.as_slice(), &targets, &NearParams::default())?;
        let trap = trapezoid_values(layer, &curve, &geom, density.as_slice(), &targets, &DirectSummation);
        let err = |v: &[[f64; 2]]| {
            targets
                .iter()
                .zip(v)
                .map(|(x, v)| {
                    let u = stokeslet(*x);
                    (u[0] - v[0]).abs().max((u[1] - v[1]).abs())
                })
                .fold(0.0, f64::max)
        };
        println!("{n:>5} {:>12.3e} {:>12.3e}", err(&near), err(&trap));
    }
    Ok(())
}
