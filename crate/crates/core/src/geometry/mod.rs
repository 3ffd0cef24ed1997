//! Closed curves sampled at equispaced parameter values and their
//! spectrally computed geometry.

pub mod io;
pub mod shapes;
pub mod spectral;

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use shapes::{ellipse, shape_with_reduced_area};
pub use spectral::{fourier_derivative, resample_values};

/// Closed curve sampled at `α_k = 2πk/N`, stored as separate coordinate arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    /// Builds a curve and normalizes it to counterclockwise orientation.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let mut curve = Self::new_unoriented(x, y)?;
        let area = curve.signed_area()?;
        if area < 0.0 {
            log::warn!("curve given clockwise (signed area {area:.3e}); reversing traversal");
            curve.reverse();
        }
        Ok(curve)
    }

    /// Builds a curve without touching its orientation.
    pub fn new_unoriented(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "coordinate arrays differ in length ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        spectral::check_power_of_two(x.len())?;
        Ok(Self { x, y })
    }

    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        let (x, y) = points.iter().map(|p| (p[0], p[1])).unzip();
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }

    /// Keeps node 0 and reverses the traversal of the rest.
    pub fn reverse(&mut self) {
        self.x[1..].reverse();
        self.y[1..].reverse();
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| v + dx).collect(),
            y: self.y.iter().map(|v| v + dy).collect(),
        }
    }

    /// Rotation by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let x = self.x.iter().zip(&self.y).map(|(a, b)| c * a - s * b).collect();
        let y = self.x.iter().zip(&self.y).map(|(a, b)| s * a + c * b).collect();
        Self { x, y }
    }

    /// Relabels nodes so that node `k` becomes node `k - shift`.
    pub fn cyclic_shift(&self, shift: usize) -> Self {
        let mut x = self.x.clone();
        let mut y = self.y.clone();
        x.rotate_left(shift % self.len());
        y.rotate_left(shift % self.len());
        Self { x, y }
    }

    /// Mean of the node positions; inside any convex curve.
    pub fn centroid_of_nodes(&self) -> [f64; 2] {
        let n = self.len() as f64;
        [self.x.iter().sum::<f64>() / n, self.y.iter().sum::<f64>() / n]
    }

    /// Area-weighted centroid, inside for star-shaped and near-convex curves.
    pub fn centroid(&self) -> Result<[f64; 2]> {
        let xa = fourier_derivative(&self.x, 1)?;
        let ya = fourier_derivative(&self.y, 1)?;
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for k in 0..self.len() {
            let cross = self.x[k] * ya[k] - self.y[k] * xa[k];
            a += cross;
            cx += self.x[k] * cross;
            cy += self.y[k] * cross;
        }
        // ∮ x (x dy − y dx) = 3 ∫∫ x dA, and ∮ (x dy − y dx) = 2 A
        Ok([2.0 * cx / (3.0 * a), 2.0 * cy / (3.0 * a)])
    }

    fn signed_area(&self) -> Result<f64> {
        let xa = fourier_derivative(&self.x, 1)?;
        let ya = fourier_derivative(&self.y, 1)?;
        let h = 2.0 * PI / self.len() as f64;
        Ok(0.5 * h * (0..self.len()).map(|k| self.x[k] * ya[k] - self.y[k] * xa[k]).sum::<f64>())
    }

    pub fn resample(&self, n_new: usize) -> Result<Self> {
        Ok(Self {
            x: resample_values(&self.x, n_new)?,
            y: resample_values(&self.y, n_new)?,
        })
    }
}

/// Geometric quantities derived spectrally from a [`Curve`].
#[derive(Debug, Clone)]
pub struct GeometryCache {
    pub n: usize,
    pub jacobian: Vec<f64>,
    pub tx: Vec<f64>,
    pub ty: Vec<f64>,
    pub nx: Vec<f64>,
    pub ny: Vec<f64>,
    pub curvature: Vec<f64>,
    pub length: f64,
    pub area: f64,
}

impl GeometryCache {
    pub fn tangent(&self, k: usize) -> [f64; 2] {
        [self.tx[k], self.ty[k]]
    }

    pub fn normal(&self, k: usize) -> [f64; 2] {
        [self.nx[k], self.ny[k]]
    }

    /// Trapezoid weight `J_k · 2π/N` at node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        self.jacobian[k] * 2.0 * PI / self.n as f64
    }

    pub fn max_jacobian(&self) -> f64 {
        self.jacobian.iter().cloned().fold(0.0, f64::max)
    }
}

/// Jacobian, unit tangent, outward normal, curvature, length and area.
pub fn compute_geometry(curve: &Curve) -> Result<GeometryCache> {
    let xa = fourier_derivative(&curve.x, 1)?;
    let ya = fourier_derivative(&curve.y, 1)?;
    let xaa = fourier_derivative(&curve.x, 2)?;
    let yaa = fourier_derivative(&curve.y, 2)?;
    assemble(curve, [&xa, &ya, &xaa, &yaa])
}

/// `curve` resampled to `n_new` points with its geometry.
///
/// Derivatives are taken on the original samples and then resampled, which
/// keeps the roundoff of spectral differentiation at the level of the
/// coarse grid.
pub fn upsample(curve: &Curve, n_new: usize) -> Result<(Curve, GeometryCache)> {
    let up = curve.resample(n_new)?;
    let d = [
        resample_values(&fourier_derivative(&curve.x, 1)?, n_new)?,
        resample_values(&fourier_derivative(&curve.y, 1)?, n_new)?,
        resample_values(&fourier_derivative(&curve.x, 2)?, n_new)?,
        resample_values(&fourier_derivative(&curve.y, 2)?, n_new)?,
    ];
    let geom = assemble(&up, [&d[0], &d[1], &d[2], &d[3]])?;
    Ok((up, geom))
}

fn assemble(curve: &Curve, [xa, ya, xaa, yaa]: [&[f64]; 4]) -> Result<GeometryCache> {
    let n = curve.len();
    let jacobian: Vec<f64> = xa.iter().zip(ya).map(|(a, b)| a.hypot(*b)).collect();
    let jmax = jacobian.iter().cloned().fold(0.0, f64::max);
    let jmin = jacobian.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(jmin >= 1e-12 * jmax) || jmax == 0.0 {
        return Err(Error::DegenerateCurve { min: jmin, max: jmax });
    }
    let tx: Vec<f64> = (0..n).map(|k| xa[k] / jacobian[k]).collect();
    let ty: Vec<f64> = (0..n).map(|k| ya[k] / jacobian[k]).collect();
    let nx = ty.clone();
    let ny: Vec<f64> = tx.iter().map(|v| -v).collect();
    let curvature = (0..n)
        .map(|k| (xa[k] * yaa[k] - ya[k] * xaa[k]) / jacobian[k].powi(3))
        .collect();
    let h = 2.0 * PI / n as f64;
    let length = h * jacobian.iter().sum::<f64>();
    let area = 0.5
        * h
        * (0..n)
            .map(|k| (curve.x[k] * nx[k] + curve.y[k] * ny[k]) * jacobian[k])
            .sum::<f64>();
    if area <= 0.0 {
        return Err(Error::Orientation(area));
    }
    Ok(GeometryCache { n, jacobian, tx, ty, nx, ny, curvature, length, area })
}

/// Applies `∂/∂s = (1/J) ∂/∂α` `order` times.
pub fn arclength_derivative(geom: &GeometryCache, samples: &[f64], order: u32) -> Result<Vec<f64>> {
    if order < 1 {
        return Err(Error::InvalidOrder);
    }
    let mut out = samples.to_vec();
    for _ in 0..order {
        out = fourier_derivative(&out, 1)?;
        for (v, j) in out.iter_mut().zip(&geom.jacobian) {
            *v /= j;
        }
    }
    Ok(out)
}

/// `4πA/L²`.
pub fn reduced_area(curve: &Curve) -> Result<f64> {
    let g = compute_geometry(curve)?;
    Ok(4.0 * PI * g.area / (g.length * g.length))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, r: f64) -> Curve {
        let (x, y) = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                (r * a.cos(), r * a.sin())
            })
            .unzip();
        Curve::new(x, y).unwrap()
    }

    /// Perimeter of the ellipse with semi-axes `a`, `b` by composite Simpson
    /// on the smooth integrand `sqrt(a² sin² t + b² cos² t)`.
    fn ellipse_perimeter_oracle(a: f64, b: f64) -> f64 {
        let m = 20000;
        let h = 2.0 * PI / m as f64;
        let f = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let mut s = f(0.0) + f(2.0 * PI);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn unit_circle_geometry() {
        let g = compute_geometry(&circle(32, 1.0)).unwrap();
        assert!((g.length - 2.0 * PI).abs() < 1e-13);
        assert!((g.area - PI).abs() < 1e-13);
        assert!(g.curvature.iter().all(|k| (k - 1.0).abs() < 1e-12));
        for k in 0..32 {
            let t = g.tangent(k);
            let nrm = g.normal(k);
            assert!(((t[0] * t[0] + t[1] * t[1]) - 1.0).abs() < 1e-12);
            assert!((t[0] * nrm[0] + t[1] * nrm[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_area_and_perimeter() {
        let g = compute_geometry(&ellipse(64, 3.0, 2.0)).unwrap();
        assert!((g.area - 6.0 * PI).abs() < 1e-10);
        assert!((g.length - ellipse_perimeter_oracle(3.0, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn ellipse_perimeter_converges_spectrally() {
        let exact = ellipse_perimeter_oracle(3.0, 2.0);
        let e16 = (compute_geometry(&ellipse(16, 3.0, 2.0)).unwrap().length - exact).abs();
        let e64 = (compute_geometry(&ellipse(64, 3.0, 2.0)).unwrap().length - exact).abs();
        assert!(e64 < 1e-3 * e16);
    }

    #[test]
    fn clockwise_circle_is_rejected_or_reversed() {
        let c = circle(32, 1.0);
        let mut cw = c.clone();
        cw.reverse();
        let raw = Curve::new_unoriented(cw.x.clone(), cw.y.clone()).unwrap();
        assert!(matches!(compute_geometry(&raw), Err(Error::Orientation(_))));
        let fixed = Curve::new(cw.x, cw.y).unwrap();
        assert!((compute_geometry(&fixed).unwrap().area - PI).abs() < 1e-12);
    }

    #[test]
    fn degenerate_curve_is_rejected() {
        let mut c = circle(16, 1.0);
        for v in c.y.iter_mut() {
            *v = 0.0;
        }
        for v in c.x.iter_mut() {
            *v = 0.0;
        }
        let raw = Curve::new_unoriented(c.x, c.y).unwrap();
        assert!(matches!(compute_geometry(&raw), Err(Error::DegenerateCurve { .. })));
    }

    #[test]
    fn arclength_derivatives_on_circles() {
        let c = circle(64, 1.0);
        let g = compute_geometry(&c).unwrap();
        let xss = arclength_derivative(&g, &c.x, 2).unwrap();
        for k in 0..64 {
            assert!((xss[k] + c.x[k]).abs() < 1e-12);
        }
        let c2 = circle(64, 2.0);
        let g2 = compute_geometry(&c2).unwrap();
        let x4 = arclength_derivative(&g2, &c2.x, 4).unwrap();
        let y4 = arclength_derivative(&g2, &c2.y, 4).unwrap();
        for k in 0..64 {
            assert!((x4[k] - c2.x[k] / 16.0).abs() < 1e-11);
            assert!((y4[k] - c2.y[k] / 16.0).abs() < 1e-11);
        }
    }

    #[test]
    fn arclength_first_derivative_is_unit() {
        let c = ellipse(64, 3.0, 2.0);
        let g = compute_geometry(&c).unwrap();
        let xs = arclength_derivative(&g, &c.x, 1).unwrap();
        let ys = arclength_derivative(&g, &c.y, 1).unwrap();
        for k in 0..64 {
            assert!((xs[k].hypot(ys[k]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_resampling_stays_on_circle() {
        let up = circle(32, 1.0).resample(128).unwrap();
        for k in 0..128 {
            assert!((up.x[k].hypot(up.y[k]) - 1.0).abs() < 1e-13);
        }
        let same = circle(32, 1.0).resample(32).unwrap();
        assert_eq!(same, circle(32, 1.0));
    }

    #[test]
    fn band_limited_round_trip() {
        let n = 64;
        let (x, y): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                let r = 2.0 + (1..=5).map(|m| 0.03 * ((m as f64) * a + 0.1 * m as f64).cos()).sum::<f64>();
                (r * a.cos(), r * a.sin())
            })
            .unzip();
        // radius modes 0..5 times cos/sin α keep coordinate modes within ±6 < 16
        let c = Curve::new(x, y).unwrap();
        let back = c.resample(32).unwrap().resample(64).unwrap();
        for k in 0..n {
            assert!((back.x[k] - c.x[k]).abs() < 1e-12);
            assert!((back.y[k] - c.y[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_area_values() {
        assert!((reduced_area(&circle(32, 3.0)).unwrap() - 1.0).abs() < 1e-12);
        let ra = 4.0 * PI * 6.0 * PI / ellipse_perimeter_oracle(3.0, 2.0).powi(2);
        assert!((reduced_area(&ellipse(64, 3.0, 2.0)).unwrap() - ra).abs() < 1e-10);
    }

    #[test]
    fn rigid_motion_and_relabeling_invariance() {
        let c = ellipse(64, 3.0, 2.0);
        let g = compute_geometry(&c).unwrap();
        let moved = c.rotated(0.7).translated(1.3, -4.0);
        let gm = compute_geometry(&moved).unwrap();
        assert!((g.length - gm.length).abs() < 1e-12);
        assert!((g.area - gm.area).abs() < 1e-12);
        for k in 0..64 {
            assert!((g.curvature[k] - gm.curvature[k]).abs() < 1e-12);
        }
        let shifted = compute_geometry(&c.cyclic_shift(1)).unwrap();
        for k in 0..64 {
            assert!((shifted.jacobian[k] - g.jacobian[(k + 1) % 64]).abs() < 1e-13);
            assert!((shifted.curvature[k] - g.curvature[(k + 1) % 64]).abs() < 1e-12);
        }
    }
}
