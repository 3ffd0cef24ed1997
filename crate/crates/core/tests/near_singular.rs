mod common;

use common::*;
use vesicle2d::nearsing::{evaluate_layer, Layer, NearParams, Source};

const SLP: Layer = Layer::Slp { mu0: 1.0 };

fn near_error(n: usize, field: fn([f64; 2]) -> [f64; 2], exterior: bool) -> f64 {
    let (c, g, f) = slp_density(n, field, !exterior);
    let src = Source::new(&c, &g).unwrap();
    let targets = near_targets(&src, exterior);
    let v = evaluate_layer(&src, SLP, &f, &targets, &NearParams::default()).unwrap();
    let exact: Vec<[f64; 2]> = targets.iter().map(|&x| field(x)).collect();
    max_error(&v, &exact)
}

#[test]
fn linear_flow_is_reproduced_to_roundoff() {
    for n in [128, 256] {
        let e = near_error(n, extensional, false);
        assert!(e < 1e-12, "N = {n}: {e:e}");
    }
}

#[test]
fn stokeslet_density_converges_at_fifth_order() {
    let ns = [16, 32, 64, 128];
    let errs: Vec<f64> = ns.iter().map(|&n| near_error(n, stokeslet, true)).collect();
    let p = fitted_order(&ns, &errs);
    assert!(p >= 4.5, "order {p}, errors {errs:?}");
}

#[test]
fn smooth_density_matches_overrefined_trapezoid() {
    let ns = [64, 128, 256, 512];
    let mut errs = Vec::new();
    for &n in &ns {
        let c = vesicle2d::geometry::ellipse(n, A, B);
        let g = vesicle2d::geometry::compute_geometry(&c).unwrap();
        let src = Source::new(&c, &g).unwrap();
        let targets = near_targets(&src, true);
        let v = evaluate_layer(&src, SLP, &sampled_smooth_density(n), &targets, &NearParams::default()).unwrap();
        let exact: Vec<[f64; 2]> = targets.iter().map(|&x| slp_oracle(x, 1 << 16)).collect();
        errs.push(max_error(&v, &exact));
    }
    let p = fitted_order(&ns, &errs);
    assert!(p >= 4.5, "order {p}, errors {errs:?}");
}

#[test]
fn no_seam_at_zone_boundary() {
    let (c, g, f) = slp_density(64, stokeslet, false);
    let src = Source::new(&c, &g).unwrap();
    for t in [0.0, 0.3, 1.7, 3.1, 4.0] {
        let nrm = src.normal_at(t);
        let base = [A * f64::cos(t), B * f64::sin(t)];
        let at = |d: f64| [base[0] + d * nrm[0], base[1] + d * nrm[1]];
        let v = evaluate_layer(&src, SLP, &f, &[at(src.h * (1.0 - 1e-9)), at(src.h * (1.0 + 1e-9))], &NearParams::default())
            .unwrap();
        let jump = (v[0][0] - v[1][0]).abs().max((v[0][1] - v[1][1]).abs());
        assert!(jump < 1e-5, "t = {t}: {jump:e}");
    }
}

#[test]
fn near_evaluation_is_linear() {
    let n = 32;
    let c = vesicle2d::geometry::ellipse(n, A, B);
    let g = vesicle2d::geometry::compute_geometry(&c).unwrap();
    let src = Source::new(&c, &g).unwrap();
    let targets = near_targets(&src, true);
    let f1 = sampled_smooth_density(n);
    let f2: Vec<f64> = (0..2 * n).map(|k| (0.7 * k as f64).cos()).collect();
    let comb: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    let layer = Layer::Dlp { prefactor: 1.0 / std::f64::consts::PI, normal_sign: 1.0 };
    let p = NearParams::default();
    let v1 = evaluate_layer(&src, layer, &f1, &targets, &p).unwrap();
    let v2 = evaluate_layer(&src, layer, &f2, &targets, &p).unwrap();
    let v = evaluate_layer(&src, layer, &comb, &targets, &p).unwrap();
    for k in 0..targets.len() {
        for i in 0..2 {
            assert!((v[k][i] - (2.0 * v1[k][i] - 3.0 * v2[k][i])).abs() < 1e-12);
        }
    }
}
