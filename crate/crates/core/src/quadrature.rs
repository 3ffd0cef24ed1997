//! Trapezoid and hybrid Gauss-trapezoid rules for layer potentials on
//! closed curves.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::spectral::{fourier_derivative, shift, shift_weights};
use crate::geometry::{Curve, GeometryCache};
use crate::kernels::{mat2_apply, stokes_slp_kernel, Mat2};

/// Correction nodes of the order-8 rule for logarithmic endpoint singularities,
/// in units of the grid spacing.
const ALPERT_NODES: [f64; 7] = [
    6.531815708567918e-3,
    9.086744584657729e-2,
    3.967966533375878e-1,
    1.027856640525646,
    1.945288592909266,
    2.980147933889640,
    3.998861349951123,
];
const ALPERT_WEIGHTS: [f64; 7] = [
    2.462194198995203e-2,
    1.701315866854178e-1,
    4.609256358650077e-1,
    7.947291148621895e-1,
    1.008710414337933,
    1.036093649726216,
    1.004787656533285,
];
/// Grid nodes within `ALPERT_SKIP - 1` spacings of the singularity are dropped.
const ALPERT_SKIP: usize = 5;

/// Order-8 hybrid Gauss-trapezoid rule on N periodic nodes.
#[derive(Debug, Clone)]
pub struct AlpertRule {
    pub n: usize,
}

impl AlpertRule {
    pub const MIN_NODES: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::TooFewNodes { n, min: Self::MIN_NODES });
        }
        Ok(Self { n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Number of equispaced nodes kept by the rule.
    pub fn regular_count(&self) -> usize {
        self.n - 2 * ALPERT_SKIP + 1
    }

    /// Number of off-grid correction nodes.
    pub fn correction_count(&self) -> usize {
        2 * ALPERT_NODES.len()
    }

    /// Grid offsets `j` (relative to the singular node) used with weight `h`.
    pub fn regular_offsets(&self) -> std::ops::RangeInclusive<usize> {
        ALPERT_SKIP..=self.n - ALPERT_SKIP
    }

    /// Signed off-grid offsets and their weights, both in units of `h`.
    pub fn corrections(&self) -> impl Iterator<Item = (f64, f64)> {
        ALPERT_NODES
            .iter()
            .zip(ALPERT_WEIGHTS.iter())
            .flat_map(|(&x, &w)| [(x, w), (-x, w)])
    }

    /// Abscissae and weights for a singularity at `t0`; the equispaced nodes come first.
    pub fn abscissae(&self, t0: f64) -> (Vec<f64>, Vec<f64>) {
        let h = self.spacing();
        let mut t: Vec<f64> = self.regular_offsets().map(|j| t0 + j as f64 * h).collect();
        let mut w = vec![h; t.len()];
        for (x, v) in self.corrections() {
            t.push(t0 + x * h);
            w.push(v * h);
        }
        (t, w)
    }

    /// `∫₀^{2π} f` for a periodic `f` with at most a logarithmic singularity at `t0`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, t0: f64) -> f64 {
        let (t, w) = self.abscissae(t0);
        t.iter().zip(&w).map(|(t, w)| w * f(*t)).sum()
    }
}

/// `Σ_k K(x, y_k, n_k) φ_k J_k 2π/N` at each target; `density` stacked `[φ_x; φ_y]`.
pub fn trapezoid_layer(
    kernel: impl Fn([f64; 2], [f64; 2], [f64; 2]) -> Result<Mat2>,
    curve: &Curve,
    geom: &GeometryCache,
    density: &[f64],
    targets: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    let n = curve.len();
    targets
        .iter()
        .map(|&x| {
            let mut acc = [0.0, 0.0];
            for k in 0..n {
                let m = kernel(x, curve.point(k), geom.normal(k))?;
                let v = mat2_apply(&m, [density[k], density[n + k]]);
                let w = geom.weight(k);
                acc[0] += w * v[0];
                acc[1] += w * v[1];
            }
            Ok(acc)
        })
        .collect()
}

/// Dense 2N×2N matrix of the single-layer potential evaluated on its own
/// curve with the Alpert rule; off-grid quantities by trigonometric interpolation.
pub fn self_slp_matrix(curve: &Curve, geom: &GeometryCache, mu0: f64) -> Result<DMatrix<f64>> {
    let n = curve.len();
    let rule = AlpertRule::new(n)?;
    let h = rule.spacing();
    let xa = fourier_derivative(&curve.x, 1)?;
    let ya = fourier_derivative(&curve.y, 1)?;
    let mut mat = DMatrix::zeros(2 * n, 2 * n);
    let mut add = |i: usize, j: usize, k: &Mat2, w: f64| {
        mat[(i, j)] += w * k[0][0];
        mat[(i, n + j)] += w * k[0][1];
        mat[(n + i, j)] += w * k[1][0];
        mat[(n + i, n + j)] += w * k[1][1];
    };
    for i in 0..n {
        let xi = curve.point(i);
        for off in rule.regular_offsets() {
            let j = (i + off) % n;
            let k = stokes_slp_kernel(xi, curve.point(j), mu0)?;
            add(i, j, &k, h * geom.jacobian[j]);
        }
    }
    for (x, v) in rule.corrections() {
        let delta = x * h;
        let sx = shift(&curve.x, delta);
        let sy = shift(&curve.y, delta);
        let sxa = shift(&xa, delta);
        let sya = shift(&ya, delta);
        let weights = shift_weights(n, delta);
        for i in 0..n {
            let jac = sxa[i].hypot(sya[i]);
            let k = stokes_slp_kernel(curve.point(i), [sx[i], sy[i]], mu0)?;
            let base = v * h * jac;
            for (m, wm) in weights.iter().enumerate() {
                add(i, (i + m) % n, &k, base * wm);
            }
        }
    }
    Ok(mat)
}

/// Dense 2N×2N matrix of the double-layer potential on its own curve:
/// trapezoid rule with the diagonal replaced by its limit.
///
/// `prefactor` multiplies `(r·n/ρ²)(r⊗r/ρ²)`; it is `(1−ν)/π` for vesicles.
/// `normal_sign` flips the curve normal (walls use the normal pointing out of the fluid).
pub fn self_dlp_matrix(curve: &Curve, geom: &GeometryCache, prefactor: f64, normal_sign: f64) -> DMatrix<f64> {
    let n = curve.len();
    let mut mat = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let xi = curve.point(i);
        for j in 0..n {
            let w = geom.weight(j);
            let (kxx, kxy, kyy) = if i == j {
                let c = -0.5 * geom.curvature[j] * normal_sign;
                let t = geom.tangent(j);
                (c * t[0] * t[0], c * t[0] * t[1], c * t[1] * t[1])
            } else {
                let r = [xi[0] - curve.x[j], xi[1] - curve.y[j]];
                let rho2 = r[0] * r[0] + r[1] * r[1];
                let c = normal_sign * (r[0] * geom.nx[j] + r[1] * geom.ny[j]) / (rho2 * rho2);
                (c * r[0] * r[0], c * r[0] * r[1], c * r[1] * r[1])
            };
            let s = prefactor * w;
            mat[(i, j)] = s * kxx;
            mat[(i, n + j)] = s * kxy;
            mat[(n + i, j)] = s * kxy;
            mat[(n + i, n + j)] = s * kyy;
        }
    }
    mat
}

/// Rows `nodes` of [`self_slp_matrix`] as a `2R × 2N` matrix: row `r` is the
/// x component at `nodes[r]`, row `R + r` the y component.
pub fn self_slp_rows(curve: &Curve, geom: &GeometryCache, mu0: f64, nodes: &[usize]) -> Result<DMatrix<f64>> {
    let n = curve.len();
    let r = nodes.len();
    let rule = AlpertRule::new(n)?;
    let h = rule.spacing();
    let xa: Vec<f64> = (0..n).map(|k| geom.jacobian[k] * geom.tx[k]).collect();
    let ya: Vec<f64> = (0..n).map(|k| geom.jacobian[k] * geom.ty[k]).collect();
    let shifts: Vec<(f64, Vec<f64>)> = rule.corrections().map(|(x, v)| (v, shift_weights(n, x * h))).collect();
    let mut mat = DMatrix::zeros(2 * r, 2 * n);
    let mut add = |i: usize, j: usize, k: &Mat2, w: f64| {
        mat[(i, j)] += w * k[0][0];
        mat[(i, n + j)] += w * k[0][1];
        mat[(r + i, j)] += w * k[1][0];
        mat[(r + i, n + j)] += w * k[1][1];
    };
    for (row, &i) in nodes.iter().enumerate() {
        let xi = curve.point(i);
        for off in rule.regular_offsets() {
            let j = (i + off) % n;
            let k = stokes_slp_kernel(xi, curve.point(j), mu0)?;
            add(row, j, &k, h * geom.jacobian[j]);
        }
        for (v, weights) in &shifts {
            let mut p = [0.0; 4];
            for (m, wm) in weights.iter().enumerate() {
                let j = (i + m) % n;
                p[0] += wm * curve.x[j];
                p[1] += wm * curve.y[j];
                p[2] += wm * xa[j];
                p[3] += wm * ya[j];
            }
            let k = stokes_slp_kernel(xi, [p[0], p[1]], mu0)?;
            let base = v * h * p[2].hypot(p[3]);
            for (m, wm) in weights.iter().enumerate() {
                add(row, (i + m) % n, &k, base * wm);
            }
        }
    }
    Ok(mat)
}

/// Rows `nodes` of [`self_dlp_matrix`], laid out like [`self_slp_rows`].
pub fn self_dlp_rows(
    curve: &Curve,
    geom: &GeometryCache,
    prefactor: f64,
    normal_sign: f64,
    nodes: &[usize],
) -> DMatrix<f64> {
    let n = curve.len();
    let r = nodes.len();
    let mut mat = DMatrix::zeros(2 * r, 2 * n);
    for (row, &i) in nodes.iter().enumerate() {
        let xi = curve.point(i);
        for j in 0..n {
            let (kxx, kxy, kyy) = if i == j {
                let c = -0.5 * geom.curvature[j] * normal_sign;
                let t = geom.tangent(j);
                (c * t[0] * t[0], c * t[0] * t[1], c * t[1] * t[1])
            } else {
                let d = [xi[0] - curve.x[j], xi[1] - curve.y[j]];
                let rho2 = d[0] * d[0] + d[1] * d[1];
                let c = normal_sign * (d[0] * geom.nx[j] + d[1] * geom.ny[j]) / (rho2 * rho2);
                (c * d[0] * d[0], c * d[0] * d[1], c * d[1] * d[1])
            };
            let s = prefactor * geom.weight(j);
            mat[(row, j)] = s * kxx;
            mat[(row, n + j)] = s * kxy;
            mat[(r + row, j)] = s * kxy;
            mat[(r + row, n + j)] = s * kyy;
        }
    }
    mat
}

pub fn self_slp(curve: &Curve, geom: &GeometryCache, density: &[f64], mu0: f64) -> Result<Vec<f64>> {
    let m = self_slp_matrix(curve, geom, mu0)?;
    Ok((m * nalgebra::DVector::from_column_slice(density)).as_slice().to_vec())
}

pub fn self_dlp(curve: &Curve, geom: &GeometryCache, density: &[f64], nu: f64) -> Vec<f64> {
    let m = self_dlp_matrix(curve, geom, (1.0 - nu) / PI, 1.0);
    (m * nalgebra::DVector::from_column_slice(density)).as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_geometry, ellipse, shapes::circle};
    use crate::kernels::laplace_dlp_kernel;

    /// `−2π Σ_k I_k(c)/k`, the integral of `log|2 sin(t/2)| e^{c cos t}`,
    /// using `log|2 sin(t/2)| = −Σ cos(kt)/k` and the Bessel series of `e^{c cos t}`.
    fn log_exp_cos_integral(c: f64) -> f64 {
        let bessel_i = |k: usize| {
            // I_k(c) = Σ_m (c/2)^{2m+k} / (m! (m+k)!)
            let mut term = (0.5 * c).powi(k as i32) / (1..=k).map(|v| v as f64).product::<f64>();
            let mut sum = term;
            for m in 1..60 {
                term *= (0.5 * c).powi(2) / (m as f64 * (m + k) as f64);
                sum += term;
            }
            sum
        };
        -2.0 * PI * (1..80).map(|k| bessel_i(k) / k as f64).sum::<f64>()
    }

    #[test]
    fn row_subsets_match_full_matrices() {
        let c = ellipse(32, 1.5, 0.7);
        let g = compute_geometry(&c).unwrap();
        let nodes = [0, 5, 31];
        let full = self_slp_matrix(&c, &g, 1.0).unwrap();
        let rows = self_slp_rows(&c, &g, 1.0, &nodes).unwrap();
        let dfull = self_dlp_matrix(&c, &g, 0.3, -1.0);
        let drows = self_dlp_rows(&c, &g, 0.3, -1.0, &nodes);
        for (r, &i) in nodes.iter().enumerate() {
            for j in 0..64 {
                assert!((rows[(r, j)] - full[(i, j)]).abs() < 1e-13);
                assert!((rows[(3 + r, j)] - full[(32 + i, j)]).abs() < 1e-13);
                assert_eq!(drows[(r, j)], dfull[(i, j)]);
                assert_eq!(drows[(3 + r, j)], dfull[(32 + i, j)]);
            }
        }
    }

    #[test]
    fn rule_structure() {
        let r = AlpertRule::new(64).unwrap();
        let (t, w) = r.abscissae(0.0);
        assert_eq!(t.len(), r.regular_count() + r.correction_count());
        assert!(w[..r.regular_count()].iter().all(|w| *w > 0.0));
        assert!((r.integrate(|_| 1.0, 0.3) - 2.0 * PI).abs() < 1e-12);
        assert!(matches!(AlpertRule::new(8), Err(Error::TooFewNodes { .. })));
    }

    #[test]
    fn log_sine_integrates_to_zero() {
        let r = AlpertRule::new(64).unwrap();
        let v = r.integrate(|t| (2.0 * (0.5 * t).sin()).abs().ln(), 0.0);
        assert!(v.abs() < 1e-8, "{v}");
    }

    #[test]
    fn smooth_integrand_matches_trapezoid() {
        let n = 64;
        let r = AlpertRule::new(n).unwrap();
        let trap: f64 = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).cos().exp()).sum::<f64>() * r.spacing();
        assert!((r.integrate(|t| t.cos().exp(), 0.0) - trap).abs() < 1e-10);
    }

    #[test]
    fn log_singular_convergence_order() {
        let exact = log_exp_cos_integral(3.0);
        let f = |t: f64| (2.0 * (0.5 * t).sin()).abs().ln() * (3.0 * t.cos()).exp();
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| (AlpertRule::new(n).unwrap().integrate(f, 0.0) - exact).abs())
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 7.0, "{errs:?}");
        }
    }

    #[test]
    fn trapezoid_layer_basics() {
        let c = ellipse(64, 1.5, 1.0);
        let g = compute_geometry(&c).unwrap();
        let ones = vec![1.0; 128];
        let lap = |x, y, n| Ok([[laplace_dlp_kernel(x, y, n)?, 0.0], [0.0, 0.0]]);
        let v = trapezoid_layer(lap, &c, &g, &ones, &[[0.2, 0.1]]).unwrap();
        assert!((v[0][0] - 1.0).abs() < 1e-10);
        let slp = |x, y, _n| stokes_slp_kernel(x, y, 1.0);
        let v = trapezoid_layer(slp, &c, &g, &vec![0.0; 128], &[[0.2, 0.1]]).unwrap();
        assert_eq!(v[0], [0.0, 0.0]);
    }

    #[test]
    fn slp_of_constant_density_at_circle_center() {
        // −log ρ vanishes at ρ = 1 and ∫ r⊗r ds = π I on the unit circle
        let c = circle(4096, 1.0, [0.0, 0.0]).unwrap();
        let g = compute_geometry(&c).unwrap();
        let mut f = vec![0.7; 4096];
        f.extend(vec![-0.2; 4096]);
        let slp = |x, y, _n| stokes_slp_kernel(x, y, 1.0);
        let v = trapezoid_layer(slp, &c, &g, &f, &[[0.0, 0.0]]).unwrap();
        assert!((v[0][0] - 0.7 / 4.0).abs() < 1e-12 && (v[0][1] + 0.2 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn self_slp_on_circle_matches_split_oracle() {
        // On the unit circle ∫ log ρ ds = 0 and r⊗r/ρ² = ½(I + reflection by
        // the chord angle), whose reflection part integrates to zero; the
        // exact value is c/4 at every node.
        let n = 64;
        let c = circle(n, 1.0, [0.0, 0.0]).unwrap();
        let g = compute_geometry(&c).unwrap();
        let mut f = vec![0.4; n];
        f.extend(vec![1.1; n]);
        let u = self_slp(&c, &g, &f, 1.0).unwrap();
        for i in 0..n {
            assert!((u[i] - 0.4 / 4.0).abs() < 1e-8, "{} {}", u[i], 0.1);
            assert!((u[n + i] - 1.1 / 4.0).abs() < 1e-8);
        }
    }

    #[test]
    fn self_slp_convergence() {
        // density e^{cos α}(1, sin 2α) on a 3:2 ellipse; reference from N = 512
        let sample = |n: usize| {
            let c = ellipse(n, 1.5, 1.0);
            let g = compute_geometry(&c).unwrap();
            let a: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
            let mut f: Vec<f64> = a.iter().map(|t| t.cos().exp()).collect();
            f.extend(a.iter().map(|t| t.cos().exp() * (2.0 * t).sin()));
            self_slp(&c, &g, &f, 1.0).unwrap()
        };
        let fine = sample(512);
        let err = |n: usize| {
            let u = sample(n);
            let stride = 512 / n;
            (0..n)
                .map(|i| (u[i] - fine[i * stride]).abs().max((u[n + i] - fine[512 + i * stride]).abs()))
                .fold(0.0, f64::max)
        };
        let (e32, e64) = (err(32), err(64));
        assert!((e32 / e64).log2() >= 7.0, "{e32} {e64}");
    }

    #[test]
    fn self_dlp_constant_density() {
        let nu = 0.25;
        let c = ellipse(128, 1.5, 1.0);
        let g = compute_geometry(&c).unwrap();
        let mut d = vec![0.6; 128];
        d.extend(vec![-0.3; 128]);
        let u = self_dlp(&c, &g, &d, nu);
        for i in 0..128 {
            assert!((u[i] + (1.0 - nu) * 0.3).abs() < 1e-10);
            assert!((u[128 + i] - (1.0 - nu) * 0.15).abs() < 1e-10);
        }
    }

    #[test]
    fn self_dlp_diagonal_on_unit_circle() {
        let c = circle(32, 1.0, [0.0, 0.0]).unwrap();
        let g = compute_geometry(&c).unwrap();
        let m = self_dlp_matrix(&c, &g, 0.5 / PI, 1.0);
        let t = g.tangent(3);
        let w = g.weight(3);
        assert!((m[(3, 3)] - 0.5 / PI * -0.5 * t[0] * t[0] * w).abs() < 1e-14);
    }

    #[test]
    fn self_dlp_spectral_convergence() {
        // reference at N = 1024
        let nu = 0.0;
        let dens = |t: f64| [(t.sin()).exp(), (2.0 * t).cos()];
        let value_at_zero = |n: usize| {
            let c = ellipse(n, 1.5, 1.0);
            let g = compute_geometry(&c).unwrap();
            let mut d: Vec<f64> = (0..n).map(|k| dens(2.0 * PI * k as f64 / n as f64)[0]).collect();
            d.extend((0..n).map(|k| dens(2.0 * PI * k as f64 / n as f64)[1]));
            let u = self_dlp(&c, &g, &d, nu);
            [u[0], u[n]]
        };
        let reference = value_at_zero(1024);
        let err = |n| {
            let v = value_at_zero(n);
            (v[0] - reference[0]).abs().max((v[1] - reference[1]).abs())
        };
        assert!(err(64) < 1e-4 * err(16));
    }

    #[test]
    fn self_slp_relabeling_equivariance() {
        let n = 32;
        let c = ellipse(n, 1.5, 1.0);
        let g = compute_geometry(&c).unwrap();
        let f: Vec<f64> = (0..2 * n).map(|k| ((k * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let u = self_slp(&c, &g, &f, 1.0).unwrap();
        let cs = c.cyclic_shift(3);
        let gs = compute_geometry(&cs).unwrap();
        let mut fs = Vec::with_capacity(2 * n);
        fs.extend((0..n).map(|k| f[(k + 3) % n]));
        fs.extend((0..n).map(|k| f[n + (k + 3) % n]));
        let us = self_slp(&cs, &gs, &fs, 1.0).unwrap();
        for k in 0..n {
            assert!((us[k] - u[(k + 3) % n]).abs() < 1e-12);
            assert!((us[n + k] - u[n + (k + 3) % n]).abs() < 1e-12);
        }
    }
}
