//! Pointwise Stokes and Laplace kernels, membrane traction operators, and
//! the vesicle and wall data they act on.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{self, arclength_derivative, compute_geometry, Curve, GeometryCache};

pub type Mat2 = [[f64; 2]; 2];

#[inline]
pub fn mat2_apply(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
fn separation(x: [f64; 2], y: [f64; 2]) -> Result<([f64; 2], f64)> {
    let r = [x[0] - y[0], x[1] - y[1]];
    let rho2 = r[0] * r[0] + r[1] * r[1];
    if rho2 == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok((r, rho2))
}

/// `(1/4πμ₀)(−I log ρ + r⊗r/ρ²)`, `r = x − y`.
pub fn stokes_slp_kernel(x: [f64; 2], y: [f64; 2], mu0: f64) -> Result<Mat2> {
    let (r, rho2) = separation(x, y)?;
    let c = 1.0 / (4.0 * PI * mu0);
    let lg = -0.5 * rho2.ln();
    Ok([
        [c * (lg + r[0] * r[0] / rho2), c * r[0] * r[1] / rho2],
        [c * r[0] * r[1] / rho2, c * (lg + r[1] * r[1] / rho2)],
    ])
}

/// `((1−ν)/π)(r·n_y/ρ²)(r⊗r/ρ²)`, `r = x − y`.
pub fn stokes_dlp_kernel(x: [f64; 2], y: [f64; 2], n_y: [f64; 2], nu: f64) -> Result<Mat2> {
    let (r, rho2) = separation(x, y)?;
    let c = (1.0 - nu) / PI * (r[0] * n_y[0] + r[1] * n_y[1]) / (rho2 * rho2);
    Ok([[c * r[0] * r[0], c * r[0] * r[1]], [c * r[0] * r[1], c * r[1] * r[1]]])
}

/// `(1/2π) ∂/∂n_y log|x − y|`.
pub fn laplace_dlp_kernel(x: [f64; 2], y: [f64; 2], n_y: [f64; 2]) -> Result<f64> {
    let (r, rho2) = separation(x, y)?;
    Ok(-(r[0] * n_y[0] + r[1] * n_y[1]) / (2.0 * PI * rho2))
}

/// Stokeslet of strength `lambda` plus rotlet of strength `xi`, both centered at `c`.
///
/// The Stokeslet carries `−log ρ` so that the field is divergence-free.
pub fn stokeslet_rotlet(c: [f64; 2], lambda: [f64; 2], xi: f64, mu0: f64, x: [f64; 2]) -> Result<[f64; 2]> {
    let (r, rho2) = separation(x, c)?;
    let s = stokes_slp_kernel(x, c, mu0)?;
    let u = mat2_apply(&s, lambda);
    Ok([u[0] + xi / mu0 * r[1] / rho2, u[1] - xi / mu0 * r[0] / rho2])
}

pub fn stokeslet_rotlet_eval(
    c: [f64; 2],
    lambda: [f64; 2],
    xi: f64,
    mu0: f64,
    targets: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    targets.iter().map(|&x| stokeslet_rotlet(c, lambda, xi, mu0, x)).collect()
}

/// Evaluator for discrete single-layer sums `Σ_k G(x_i, y_k) q_k`, where `q_k`
/// already includes the quadrature weight.
///
/// Direct summation is the reference; an accelerated backend only has to
/// implement this trait to be usable everywhere a layer is evaluated.
pub trait SummationBackend: std::fmt::Debug + Send + Sync {
    fn slp_sum(&self, sources: &[[f64; 2]], weighted: &[[f64; 2]], targets: &[[f64; 2]], mu0: f64) -> Vec<[f64; 2]>;
}

/// Pairwise evaluation of the Stokes kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectSummation;

impl SummationBackend for DirectSummation {
    fn slp_sum(&self, sources: &[[f64; 2]], weighted: &[[f64; 2]], targets: &[[f64; 2]], mu0: f64) -> Vec<[f64; 2]> {
        let c = 1.0 / (4.0 * PI * mu0);
        targets
            .iter()
            .map(|x| {
                let mut acc = [0.0, 0.0];
                for (y, q) in sources.iter().zip(weighted) {
                    let r = [x[0] - y[0], x[1] - y[1]];
                    let rho2 = r[0] * r[0] + r[1] * r[1];
                    if rho2 == 0.0 {
                        continue;
                    }
                    let lg = -0.5 * rho2.ln();
                    let rq = (r[0] * q[0] + r[1] * q[1]) / rho2;
                    acc[0] += lg * q[0] + rq * r[0];
                    acc[1] += lg * q[1] + rq * r[1];
                }
                [c * acc[0], c * acc[1]]
            })
            .collect()
    }
}

/// The Stokes single layer as three Laplace-type sums,
/// `−Σ log ρ q + Σ (r/ρ²)(x·q) − Σ (r/ρ²)(y·q)`, each of which a Laplace
/// fast multipole method could evaluate. Summed directly here.
#[derive(Debug, Clone, Copy, Default)]
pub struct LaplaceSplitSummation;

impl LaplaceSplitSummation {
    /// `Σ_k charges_k log|x − y_k|` at each target.
    fn log_sum(sources: &[[f64; 2]], charges: &[f64], targets: &[[f64; 2]]) -> Vec<f64> {
        targets
            .iter()
            .map(|x| {
                sources
                    .iter()
                    .zip(charges)
                    .filter_map(|(y, q)| {
                        let rho2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                        (rho2 > 0.0).then(|| 0.5 * q * rho2.ln())
                    })
                    .sum()
            })
            .collect()
    }

    /// `Σ_k charges_k (x − y_k)/|x − y_k|²`, the gradient of the log sum.
    fn gradient_sum(sources: &[[f64; 2]], charges: &[f64], targets: &[[f64; 2]]) -> Vec<[f64; 2]> {
        targets
            .iter()
            .map(|x| {
                let mut acc = [0.0, 0.0];
                for (y, q) in sources.iter().zip(charges) {
                    let r = [x[0] - y[0], x[1] - y[1]];
                    let rho2 = r[0] * r[0] + r[1] * r[1];
                    if rho2 > 0.0 {
                        acc[0] += q * r[0] / rho2;
                        acc[1] += q * r[1] / rho2;
                    }
                }
                acc
            })
            .collect()
    }
}

impl SummationBackend for LaplaceSplitSummation {
    fn slp_sum(&self, sources: &[[f64; 2]], weighted: &[[f64; 2]], targets: &[[f64; 2]], mu0: f64) -> Vec<[f64; 2]> {
        let c = 1.0 / (4.0 * PI * mu0);
        let qx: Vec<f64> = weighted.iter().map(|q| q[0]).collect();
        let qy: Vec<f64> = weighted.iter().map(|q| q[1]).collect();
        let yq: Vec<f64> = sources.iter().zip(weighted).map(|(y, q)| y[0] * q[0] + y[1] * q[1]).collect();
        let lx = Self::log_sum(sources, &qx, targets);
        let ly = Self::log_sum(sources, &qy, targets);
        let gx = Self::gradient_sum(sources, &qx, targets);
        let gy = Self::gradient_sum(sources, &qy, targets);
        let gyq = Self::gradient_sum(sources, &yq, targets);
        targets
            .iter()
            .enumerate()
            .map(|(i, x)| {
                // Σ (r/ρ²)(x·q) = x_1 ∇(Σ q_1 log) + x_2 ∇(Σ q_2 log)
                let xq = [x[0] * gx[i][0] + x[1] * gy[i][0], x[0] * gx[i][1] + x[1] * gy[i][1]];
                [c * (-lx[i] + xq[0] - gyq[i][0]), c * (-ly[i] + xq[1] - gyq[i][1])]
            })
            .collect()
    }
}

/// Dense matrix of `∂/∂s` on N samples: `diag(1/J) D_α`.
pub fn arclength_matrix(geom: &GeometryCache) -> Result<DMatrix<f64>> {
    let n = geom.n;
    let d = geometry::spectral::derivative_matrix(n, 1)?;
    Ok(DMatrix::from_fn(n, n, |i, j| d[i * n + j] / geom.jacobian[i]))
}

/// Linear membrane operators frozen at one geometry.
#[derive(Debug, Clone)]
pub struct MembraneOperators {
    pub n: usize,
    /// `∂/∂s` (N×N).
    pub ds: DMatrix<f64>,
    /// `−κ_b ∂⁴/∂s⁴` acting on one coordinate (N×N).
    pub bending: DMatrix<f64>,
    /// `σ ↦ (σ x_s)_s` (2N×N).
    pub tension: DMatrix<f64>,
    /// `u ↦ x_s·u_s` (N×2N).
    pub inextensibility: DMatrix<f64>,
}

impl MembraneOperators {
    pub fn new(curve: &Curve, geom: &GeometryCache, kappa_b: f64) -> Result<Self> {
        let n = geom.n;
        let ds = arclength_matrix(geom)?;
        let ds2 = &ds * &ds;
        let bending = -kappa_b * (&ds2 * &ds2);
        let xs = arclength_derivative(geom, &curve.x, 1)?;
        let ys = arclength_derivative(geom, &curve.y, 1)?;
        let mut tension = DMatrix::zeros(2 * n, n);
        let mut inextensibility = DMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                tension[(i, j)] = ds[(i, j)] * xs[j];
                tension[(n + i, j)] = ds[(i, j)] * ys[j];
                inextensibility[(i, j)] = xs[i] * ds[(i, j)];
                inextensibility[(i, n + j)] = ys[i] * ds[(i, j)];
            }
        }
        Ok(Self { n, ds, bending, tension, inextensibility })
    }

    /// `f = −κ_b x_ssss + (σ x_s)_s` for stacked positions `[x; y]`.
    pub fn traction(&self, positions: &[f64], sigma: &[f64]) -> Vec<f64> {
        let n = self.n;
        let px = nalgebra::DVectorView::from_slice(&positions[..n], n);
        let py = nalgebra::DVectorView::from_slice(&positions[n..], n);
        let s = nalgebra::DVectorView::from_slice(sigma, n);
        let fx = &self.bending * px;
        let fy = &self.bending * py;
        let ft = &self.tension * s;
        let mut out = Vec::with_capacity(2 * n);
        out.extend((0..n).map(|i| fx[i] + ft[i]));
        out.extend((0..n).map(|i| fy[i] + ft[n + i]));
        out
    }
}

/// Closed membrane with its tension and material parameters.
#[derive(Debug, Clone)]
pub struct Vesicle {
    pub curve: Curve,
    pub geom: GeometryCache,
    pub sigma: Vec<f64>,
    pub nu: f64,
    pub kappa_b: f64,
    pub center: [f64; 2],
}

impl Vesicle {
    pub fn new(curve: Curve, nu: f64, kappa_b: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity contrast {nu} must be positive")));
        }
        if !(kappa_b > 0.0) {
            return Err(Error::InvalidArgument(format!("bending modulus {kappa_b} must be positive")));
        }
        let geom = compute_geometry(&curve)?;
        let center = curve.centroid()?;
        let inside = laplace_indicator(&[(&curve, &geom)], center)?;
        if (inside - 1.0).abs() > 0.25 {
            return Err(Error::InvalidArgument(format!(
                "reference point {center:?} not inside vesicle (indicator {inside})"
            )));
        }
        let sigma = vec![0.0; curve.len()];
        Ok(Self { curve, geom, sigma, nu, kappa_b, center })
    }

    pub fn n(&self) -> usize {
        self.curve.len()
    }

    /// Stacked positions `[x; y]`.
    pub fn positions(&self) -> Vec<f64> {
        let mut v = self.curve.x.clone();
        v.extend_from_slice(&self.curve.y);
        v
    }

    /// Same material, new shape and tension.
    pub fn with_positions(&self, positions: &[f64], sigma: Vec<f64>) -> Result<Self> {
        let n = self.n();
        let curve = Curve::new_unoriented(positions[..n].to_vec(), positions[n..].to_vec())?;
        let geom = compute_geometry(&curve)?;
        let center = curve.centroid()?;
        Ok(Self { curve, geom, sigma, nu: self.nu, kappa_b: self.kappa_b, center })
    }

    pub fn membrane_operators(&self) -> Result<MembraneOperators> {
        MembraneOperators::new(&self.curve, &self.geom, self.kappa_b)
    }

    pub fn traction_jump(&self) -> Result<Vec<f64>> {
        Ok(self.membrane_operators()?.traction(&self.positions(), &self.sigma))
    }

    pub fn alpha(&self) -> f64 {
        0.5 * (1.0 + self.nu)
    }
}

/// One connected component of the solid boundary.
#[derive(Debug, Clone)]
pub struct WallComponent {
    pub curve: Curve,
    pub geom: GeometryCache,
    /// `+1` for the enclosing component, `−1` for inner ones, so that
    /// `normal_sign · n` points out of the fluid.
    pub normal_sign: f64,
    /// Prescribed velocity, stacked `[u; v]`.
    pub velocity: Vec<f64>,
    /// Point inside the component; completion singularities sit here.
    pub center: [f64; 2],
}

impl WallComponent {
    pub fn n(&self) -> usize {
        self.curve.len()
    }

    pub fn signed_normal(&self, k: usize) -> [f64; 2] {
        [self.normal_sign * self.geom.nx[k], self.normal_sign * self.geom.ny[k]]
    }
}

/// Solid walls: component 0 encloses the others.
#[derive(Debug, Clone)]
pub struct WallSet {
    pub components: Vec<WallComponent>,
    /// Double-layer density per component, stacked `[η_x; η_y]`.
    pub eta: Vec<Vec<f64>>,
    pub mu0: f64,
}

impl WallSet {
    /// `curves[0]` is the enclosing component; velocities are stacked `[u; v]`.
    pub fn new(curves: Vec<Curve>, velocities: Vec<Vec<f64>>, mu0: f64) -> Result<Self> {
        if curves.is_empty() || curves.len() != velocities.len() {
            return Err(Error::InvalidArgument("wall needs one velocity per component".into()));
        }
        let mut components = Vec::with_capacity(curves.len());
        for (q, (curve, velocity)) in curves.into_iter().zip(velocities).enumerate() {
            if velocity.len() != 2 * curve.len() {
                return Err(Error::InvalidArgument(format!("wall component {q}: velocity length mismatch")));
            }
            let geom = compute_geometry(&curve)?;
            let center = curve.centroid()?;
            components.push(WallComponent {
                curve,
                geom,
                normal_sign: if q == 0 { 1.0 } else { -1.0 },
                velocity,
                center,
            });
        }
        let outer: Vec<(&Curve, &GeometryCache)> = vec![(&components[0].curve, &components[0].geom)];
        for c in &components[1..] {
            for k in 0..c.n() {
                if laplace_indicator(&outer, c.curve.point(k))? < 0.5 {
                    return Err(Error::InvalidArgument("inner wall component not enclosed by component 0".into()));
                }
            }
        }
        let eta = components.iter().map(|c| vec![0.0; 2 * c.n()]).collect();
        Ok(Self { components, eta, mu0 })
    }

    pub fn total_nodes(&self) -> usize {
        self.components.iter().map(|c| c.n()).sum()
    }

    pub fn inner_count(&self) -> usize {
        self.components.len() - 1
    }

    /// Stokeslet and rotlet strengths for each inner component from `eta`.
    pub fn completion_strengths(&self, eta: &[Vec<f64>]) -> (Vec<[f64; 2]>, Vec<f64>) {
        self.components[1..]
            .iter()
            .zip(&eta[1..])
            .map(|(c, e)| completion_moments(c, e))
            .unzip()
    }
}

/// `λ = (1/2π)∫η ds`, `ξ = (1/2π)∫(y − c)^⊥·η ds` over one component.
pub fn completion_moments(component: &WallComponent, eta: &[f64]) -> ([f64; 2], f64) {
    let n = component.n();
    let (mut lx, mut ly, mut xi) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let w = component.geom.weight(k) / (2.0 * PI);
        let (ex, ey) = (eta[k], eta[n + k]);
        let dx = component.curve.x[k] - component.center[0];
        let dy = component.curve.y[k] - component.center[1];
        lx += w * ex;
        ly += w * ey;
        xi += w * (dy * ex - dx * ey);
    }
    ([lx, ly], xi)
}

/// Sum over `curves` of the Laplace double-layer indicator at an off-curve point.
pub fn laplace_indicator(curves: &[(&Curve, &GeometryCache)], x: [f64; 2]) -> Result<f64> {
    let mut total = 0.0;
    for (curve, geom) in curves {
        for k in 0..curve.len() {
            total += laplace_dlp_kernel(x, curve.point(k), geom.normal(k))? * geom.weight(k);
        }
    }
    Ok(total)
}

/// Indicator of a curve at its own nodes, using the limit `κ/4π` on the diagonal.
pub fn laplace_indicator_on_curve(curve: &Curve, geom: &GeometryCache) -> Vec<f64> {
    let n = curve.len();
    (0..n)
        .map(|i| {
            let xi = curve.point(i);
            (0..n)
                .map(|k| {
                    let v = if k == i {
                        geom.curvature[k] / (4.0 * PI)
                    } else {
                        laplace_dlp_kernel(xi, curve.point(k), geom.normal(k)).unwrap_or(0.0)
                    };
                    v * geom.weight(k)
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ellipse, shapes::circle};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn slp_kernel_values() {
        let c = 1.0 / (4.0 * PI);
        let k = stokes_slp_kernel([1.0, 0.0], [0.0, 0.0], 1.0).unwrap();
        assert!(close(k[0][0], c, 1e-15) && k[0][1] == 0.0 && k[1][1] == 0.0);
        let k = stokes_slp_kernel([0.0, 2.0], [0.0, 0.0], 1.0).unwrap();
        assert!(close(k[0][0], -c * 2f64.ln(), 1e-15));
        assert!(close(k[1][1], c * (1.0 - 2f64.ln()), 1e-15));
        let a = stokes_slp_kernel([0.3, -1.2], [2.0, 0.4], 1.0).unwrap();
        let b = stokes_slp_kernel([2.0, 0.4], [0.3, -1.2], 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0][1], a[1][0]);
        assert!(matches!(stokes_slp_kernel([1.0, 1.0], [1.0, 1.0], 1.0), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn dlp_kernel_values() {
        let k = stokes_dlp_kernel([0.5, 0.2], [0.0, 0.0], [0.6, 0.8], 1.0).unwrap();
        assert!(k.iter().flatten().all(|v| *v == 0.0));
        let k = stokes_dlp_kernel([0.0, 1.0], [0.0, 0.0], [1.0, 0.0], 3.0).unwrap();
        assert!(k.iter().flatten().all(|v| *v == 0.0));
        let k = stokes_dlp_kernel([1.0, 0.0], [0.0, 0.0], [1.0, 0.0], 4.0).unwrap();
        assert!(close(k[0][0], -3.0 / PI, 1e-15) && k[0][1] == 0.0 && k[1][1] == 0.0);
        let k = stokes_dlp_kernel([0.7, -0.4], [0.1, 0.3], [0.6, 0.8], 0.2).unwrap();
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        assert!(det.abs() < 1e-14 && k[0][1] == k[1][0]);
    }

    #[test]
    fn stokeslet_rotlet_values() {
        let u = stokeslet_rotlet([0.0, 0.0], [1.0, 0.0], 0.0, 1.0, [1.0, 0.0]).unwrap();
        assert!(close(u[0], 1.0 / (4.0 * PI), 1e-15) && u[1] == 0.0);
        let u = stokeslet_rotlet([0.0, 0.0], [0.0, 0.0], 1.0, 1.0, [1.0, 0.0]).unwrap();
        assert!(u[0] == 0.0 && close(u[1], -1.0, 1e-15));
    }

    fn divergence(f: impl Fn([f64; 2]) -> [f64; 2], x: [f64; 2], h: f64) -> f64 {
        let dx = (f([x[0] + h, x[1]])[0] - f([x[0] - h, x[1]])[0]) / (2.0 * h);
        let dy = (f([x[0], x[1] + h])[1] - f([x[0], x[1] - h])[1]) / (2.0 * h);
        dx + dy
    }

    #[test]
    fn singular_solutions_are_divergence_free() {
        let pts = [[1.3, -0.7], [-2.1, 0.4], [0.2, 3.3], [4.0, 4.5]];
        for &x in &pts {
            let d = divergence(|p| stokeslet_rotlet([0.1, 0.2], [0.7, -1.1], 0.9, 1.0, p).unwrap(), x, 1e-4);
            assert!(d.abs() < 1e-8, "{d}");
            let d = divergence(
                |p| mat2_apply(&stokes_dlp_kernel(p, [0.1, 0.2], [0.6, 0.8], 0.0).unwrap(), [0.3, 0.5]),
                x,
                1e-4,
            );
            assert!(d.abs() < 1e-8, "{d}");
        }
    }

    #[test]
    fn laplace_split_matches_direct_sum() {
        let sources: Vec<[f64; 2]> = (0..40).map(|k| [(k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()]).collect();
        let weighted: Vec<[f64; 2]> = (0..40).map(|k| [(k as f64).cos(), 0.2 * k as f64 - 3.0]).collect();
        let targets = [[3.0, 0.5], [-0.2, 0.1], [1.1, -2.4]];
        let a = DirectSummation.slp_sum(&sources, &weighted, &targets, 1.3);
        let b = LaplaceSplitSummation.slp_sum(&sources, &weighted, &targets, 1.3);
        for (u, v) in a.iter().zip(&b) {
            assert!((u[0] - v[0]).abs() < 1e-11 && (u[1] - v[1]).abs() < 1e-11);
        }
        let k = stokes_slp_kernel(targets[0], sources[0], 1.3).unwrap();
        let single = DirectSummation.slp_sum(&sources[..1], &weighted[..1], &targets[..1], 1.3);
        let expect = mat2_apply(&k, weighted[0]);
        assert!((single[0][0] - expect[0]).abs() < 1e-14 && (single[0][1] - expect[1]).abs() < 1e-14);
    }

    #[test]
    fn traction_on_circles() {
        let r = 1.7;
        let c = circle(64, r, [0.3, -0.2]).unwrap();
        let mut v = Vesicle::new(c.clone(), 1.0, 0.1).unwrap();
        let f = v.traction_jump().unwrap();
        for k in 0..64 {
            let (xc, yc) = (c.x[k] - 0.3, c.y[k] + 0.2);
            assert!(close(f[k], -0.1 * xc / r.powi(4), 1e-10));
            assert!(close(f[64 + k], -0.1 * yc / r.powi(4), 1e-10));
        }
        v.sigma = vec![-0.1 / (r * r); 64];
        let f = v.traction_jump().unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-10), "equilibrium tension");
        v.kappa_b = 1e-300;
        v.sigma = vec![0.4; 64];
        let f = v.traction_jump().unwrap();
        for k in 0..64 {
            assert!(close(f[k], -0.4 * (c.x[k] - 0.3) / (r * r), 1e-10));
        }
    }

    #[test]
    fn completion_moments_on_unit_circle() {
        let c = circle(64, 1.0, [0.0, 0.0]).unwrap();
        let geom = compute_geometry(&c).unwrap();
        let comp = WallComponent { curve: c.clone(), geom: geom.clone(), normal_sign: -1.0, velocity: vec![0.0; 128], center: [0.0, 0.0] };
        let mut eta = vec![0.3; 64];
        eta.extend(vec![-0.8; 64]);
        let (l, xi) = completion_moments(&comp, &eta);
        assert!(close(l[0], 0.3, 1e-13) && close(l[1], -0.8, 1e-13) && xi.abs() < 1e-13);
        // clockwise unit tangent: y^⊥·t = 1 pointwise
        let mut eta: Vec<f64> = geom.tx.iter().map(|v| -v).collect();
        eta.extend(geom.ty.iter().map(|v| -v));
        let (l, xi) = completion_moments(&comp, &eta);
        assert!(l[0].abs() < 1e-13 && l[1].abs() < 1e-13 && close(xi, 1.0, 1e-13));
        let (l, xi) = completion_moments(&comp, &[0.0; 128]);
        assert!(l == [0.0, 0.0] && xi == 0.0);
    }

    #[test]
    fn indicator_levels() {
        let c = circle(64, 1.0, [0.0, 0.0]).unwrap();
        let g = compute_geometry(&c).unwrap();
        assert!(close(laplace_indicator(&[(&c, &g)], [0.0, 0.0]).unwrap(), 1.0, 1e-12));
        assert!(close(laplace_indicator(&[(&c, &g)], [5.0, 1.0]).unwrap(), 0.0, 1e-12));
        assert!(laplace_indicator_on_curve(&c, &g).iter().all(|v| close(*v, 0.5, 1e-10)));
        let e = ellipse(128, 3.0, 2.0);
        let ge = compute_geometry(&e).unwrap();
        assert!(laplace_indicator_on_curve(&e, &ge).iter().all(|v| close(*v, 0.5, 1e-10)));
    }
}
