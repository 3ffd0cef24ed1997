use std::f64::consts::PI;
use std::path::Path;

use proptest::prelude::*;
use vesicle2d::driver::{parse_snapshot, snapshot_csv, RunConfig};
use vesicle2d::evolve::{Coupling, SystemState};
use vesicle2d::geometry::{compute_geometry, resample_values, Curve};
use vesicle2d::kernels::Vesicle;
use vesicle2d::nearsing::{evaluate_layer, Layer, NearParams, Source};
use vesicle2d::scenarios::{FlowKind, ScenarioConfig};

/// Star-shaped curve `r(t) = 1 + a cos 2t + b sin 3t` on `n` nodes.
fn star(n: usize, a: f64, b: f64) -> Curve {
    let (x, y) = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let r = 1.0 + a * (2.0 * t).cos() + b * (3.0 * t).sin();
            (r * t.cos(), r * t.sin())
        })
        .unzip();
    Curve::new(x, y).unwrap()
}

fn shape() -> impl Strategy<Value = (f64, f64)> {
    (-0.2..0.2f64, -0.15..0.15f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn geometry_is_invariant_under_rigid_motion((a, b) in shape(), angle in 0.0..2.0 * PI, dx in -5.0..5.0f64, dy in -5.0..5.0f64) {
        let c = star(64, a, b);
        let moved = c.rotated(angle).translated(dx, dy);
        let (g, h) = (compute_geometry(&c).unwrap(), compute_geometry(&moved).unwrap());
        prop_assert!((g.length - h.length).abs() < 1e-12 * g.length);
        prop_assert!((g.area - h.area).abs() < 1e-11 * g.area);
        for k in 0..64 {
            prop_assert!((g.curvature[k] - h.curvature[k]).abs() < 1e-10);
            prop_assert!((g.jacobian[k] - h.jacobian[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn band_limited_samples_survive_resampling(coeffs in prop::collection::vec(-1.0..1.0f64, 10)) {
        let n = 64;
        let f: Vec<f64> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                coeffs.iter().enumerate().map(|(j, c)| c * ((j / 2 + 1) as f64 * t + (j % 2) as f64 * 0.5 * PI).cos()).sum()
            })
            .collect();
        let up = resample_values(&f, 256).unwrap();
        let back = resample_values(&up, n).unwrap();
        for (x, y) in f.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let down = resample_values(&resample_values(&f, 32).unwrap(), n).unwrap();
        for (x, y) in f.iter().zip(&down) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn config_survives_toml(
        n_exp in 4u32..9,
        order in 1u8..3,
        semi in any::<bool>(),
        dt in 1e-4..0.1f64,
        nu in 0.1..10.0f64,
        ra in 0.3..1.0f64,
        seed in any::<u64>(),
    ) {
        let mut s = ScenarioConfig::new(FlowKind::Shear);
        s.nu = nu;
        s.reduced_area = ra;
        s.seed = seed;
        let mut cfg = RunConfig::new(s);
        cfg.discretization.n = 1 << n_exp;
        cfg.scheme.order = order;
        cfg.scheme.coupling = if semi { Coupling::SemiImplicit } else { Coupling::Explicit };
        cfg.scheme.dt = dt;
        let back = RunConfig::from_toml(&cfg.to_toml(), Path::new("generated.toml")).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn snapshot_round_trip_is_exact((a, b) in shape(), sigma in prop::collection::vec(-10.0..10.0f64, 32)) {
        let mut v = Vesicle::new(star(32, a, b), 1.0, 0.1).unwrap();
        v.sigma = sigma.clone();
        let w = Vesicle::new(star(32, b, a).translated(4.0, 0.0), 1.0, 0.1).unwrap();
        let state = SystemState::new(vec![v.clone(), w], None);
        let snap = parse_snapshot(&snapshot_csv(&state), Path::new("snap.csv")).unwrap();
        prop_assert_eq!(snap.vesicles.len(), 2);
        prop_assert!(snap.walls.is_empty());
        let (c, s) = &snap.vesicles[0];
        prop_assert_eq!(&c.x, &v.curve.x);
        prop_assert_eq!(&c.y, &v.curve.y);
        prop_assert_eq!(s, &sigma);
    }

    #[test]
    fn layer_evaluation_is_linear(
        (a, b) in shape(),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
        f1 in prop::collection::vec(-1.0..1.0f64, 64),
        f2 in prop::collection::vec(-1.0..1.0f64, 64),
    ) {
        let c = star(32, a, b);
        let g = compute_geometry(&c).unwrap();
        let src = Source::new(&c, &g).unwrap();
        let targets: Vec<[f64; 2]> = (0..8)
            .map(|k| {
                let d = if k % 2 == 0 { 0.3 } else { 1.5 } * src.h;
                let p = c.point(k * 4);
                let nrm = g.normal(k * 4);
                [p[0] + d * nrm[0], p[1] + d * nrm[1]]
            })
            .collect();
        let comb: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| alpha * x + beta * y).collect();
        let p = NearParams::default();
        let layer = Layer::Slp { mu0: 1.0 };
        let v1 = evaluate_layer(&src, layer, &f1, &targets, &p).unwrap();
        let v2 = evaluate_layer(&src, layer, &f2, &targets, &p).unwrap();
        let v = evaluate_layer(&src, layer, &comb, &targets, &p).unwrap();
        for k in 0..targets.len() {
            for i in 0..2 {
                prop_assert!((v[k][i] - alpha * v1[k][i] - beta * v2[k][i]).abs() < 1e-12);
            }
        }
    }
}
