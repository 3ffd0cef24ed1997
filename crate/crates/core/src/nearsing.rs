//! Layer-potential evaluation at arbitrary targets, accurate up to the curve.
//!
//! Targets farther than the arclength spacing `h = L/N` from a source curve use the
//! trapezoid rule on the curve upsampled to `N^{3/2}` points. Closer targets
//! are reached by 1D Lagrange interpolation along the ray from their closest
//! boundary point, through `m` far-zone stencil points.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::spectral::TrigInterpolant;
use crate::geometry::{upsample, Curve, GeometryCache};
use crate::kernels::{laplace_dlp_kernel, DirectSummation, SummationBackend};
use crate::quadrature::{self_dlp_rows, self_slp_rows};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearParams {
    /// Off-curve stencil points.
    pub m: usize,
    /// On-curve interpolation nodes.
    pub n_int: usize,
    /// Stencil spacing in units of `h`.
    pub spacing_factor: f64,
}

impl Default for NearParams {
    fn default() -> Self {
        Self { m: 6, n_int: 6, spacing_factor: 1.1 }
    }
}

/// Smallest power of two `≥ N^{3/2}`.
pub fn upsampled_count(n: usize) -> usize {
    ((n as f64).powf(1.5).ceil() as usize).next_power_of_two()
}

/// `h = (2π/N) max_k J_k`.
pub fn mesh_spacing(geom: &GeometryCache) -> f64 {
    2.0 * PI / geom.n as f64 * geom.max_jacobian()
}

/// Mean arclength between nodes, `L/N`: the near-zone radius.
pub fn arclength_spacing(geom: &GeometryCache) -> f64 {
    geom.length / geom.n as f64
}

/// Lagrange basis weights of `nodes` at `t`.
pub fn lagrange_weights(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &xj)| (t - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}

/// Which layer potential a source carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layer {
    /// Stokes single layer with viscosity `mu0`.
    Slp { mu0: f64 },
    /// `prefactor·(r·n/ρ²)(r⊗r/ρ²)` with the source normal multiplied by `normal_sign`.
    Dlp { prefactor: f64, normal_sign: f64 },
    /// Laplace double layer of unit density (the containment indicator), value in component 0.
    Indicator,
}

impl Layer {
    /// Limit from the side the (signed) normal points to is `pv + jump·φ`;
    /// from the other side `pv − jump·φ`.
    fn jump(&self) -> f64 {
        match *self {
            Layer::Slp { .. } => 0.0,
            Layer::Dlp { prefactor, .. } => 0.5 * PI * prefactor,
            Layer::Indicator => -0.5,
        }
    }

    fn normal_sign(&self) -> f64 {
        match *self {
            Layer::Dlp { normal_sign, .. } => normal_sign,
            _ => 1.0,
        }
    }
}

/// Uniform bucket grid over the nodes of a curve.
#[derive(Debug, Clone)]
struct NodeGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl NodeGrid {
    fn new(curve: &Curve, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for k in 0..curve.len() {
            buckets.entry(Self::key(curve.point(k), cell)).or_default().push(k);
        }
        Self { cell, buckets }
    }

    fn key(p: [f64; 2], cell: f64) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    /// Nearest node within two cells of `x`, with its distance.
    fn nearest(&self, curve: &Curve, x: [f64; 2]) -> Option<(usize, f64)> {
        let (cx, cy) = Self::key(x, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for dx in -2..=2 {
            for dy in -2..=2 {
                if let Some(nodes) = self.buckets.get(&(cx + dx, cy + dy)) {
                    for &k in nodes {
                        let p = curve.point(k);
                        let d = (p[0] - x[0]).hypot(p[1] - x[1]);
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((k, d));
                        }
                    }
                }
            }
        }
        best
    }
}

/// A source curve frozen for one time step, with its upsampled copy.
#[derive(Debug, Clone)]
pub struct Source {
    pub curve: Curve,
    pub geom: GeometryCache,
    pub up_curve: Curve,
    pub up_geom: GeometryCache,
    /// Near-zone radius.
    pub h: f64,
    /// Largest node spacing, the bucket size of the node grid.
    spacing: f64,
    ix: TrigInterpolant,
    iy: TrigInterpolant,
    grid: NodeGrid,
}

impl Source {
    pub fn new(curve: &Curve, geom: &GeometryCache) -> Result<Self> {
        let (up_curve, up_geom) = upsample(curve, upsampled_count(curve.len()))?;
        let spacing = mesh_spacing(geom);
        Ok(Self {
            curve: curve.clone(),
            geom: geom.clone(),
            up_curve,
            up_geom,
            h: arclength_spacing(geom),
            spacing,
            ix: TrigInterpolant::new(&curve.x),
            iy: TrigInterpolant::new(&curve.y),
            grid: NodeGrid::new(curve, spacing),
        })
    }

    pub fn n(&self) -> usize {
        self.curve.len()
    }

    /// Position and first two α-derivatives at `alpha`.
    fn eval(&self, alpha: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let (x, xa, xaa) = self.ix.eval(alpha);
        let (y, ya, yaa) = self.iy.eval(alpha);
        ([x, y], [xa, ya], [xaa, yaa])
    }

    /// Outward (counterclockwise-curve) unit normal at `alpha`.
    pub fn normal_at(&self, alpha: f64) -> [f64; 2] {
        let (_, d, _) = self.eval(alpha);
        let j = d[0].hypot(d[1]);
        [d[1] / j, -d[0] / j]
    }

    /// Winding number of the upsampled polygon around `p`.
    pub fn winding(&self, p: [f64; 2]) -> i32 {
        let c = &self.up_curve;
        let n = c.len();
        let mut w = 0;
        for k in 0..n {
            let a = c.point(k);
            let b = c.point((k + 1) % n);
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
            if a[1] <= p[1] {
                if b[1] > p[1] && cross > 0.0 {
                    w += 1;
                }
            } else if b[1] <= p[1] && cross < 0.0 {
                w -= 1;
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub alpha: f64,
    pub x0: [f64; 2],
    pub d: f64,
}

/// Newton iteration on `g(α) = ‖x − x(α)‖²` starting from node `k0`.
///
/// Two steps are always taken; up to four more follow while the update is
/// above `1e-14`, which keeps `(x − x₀)·t(α₀)` at roundoff level.
pub fn closest_point(source: &Source, x: [f64; 2], k0: usize) -> Result<ClosestPoint> {
    let mut alpha = 2.0 * PI * k0 as f64 / source.n() as f64;
    for it in 0..6 {
        let (p, d1, d2) = source.eval(alpha);
        let r = [x[0] - p[0], x[1] - p[1]];
        let g1 = -2.0 * (r[0] * d1[0] + r[1] * d1[1]);
        let g2 = 2.0 * (d1[0] * d1[0] + d1[1] * d1[1]) - 2.0 * (r[0] * d2[0] + r[1] * d2[1]);
        if !(g2 > 0.0) {
            return Err(Error::AmbiguousProjection(g2));
        }
        let step = g1 / g2;
        alpha -= step;
        if it >= 1 && step.abs() < 1e-14 {
            break;
        }
    }
    let alpha = alpha.rem_euclid(2.0 * PI);
    let (x0, _, _) = source.eval(alpha);
    Ok(ClosestPoint { alpha, x0, d: (x[0] - x0[0]).hypot(x[1] - x0[1]) })
}

/// Precomputed interpolation data for one near-zone target.
#[derive(Debug, Clone)]
pub struct NearEntry {
    pub closest: ClosestPoint,
    /// Sign of `(x − x₀)·n(α₀)` with the source's outward normal.
    pub side: f64,
    /// Off-curve stencil points `x_1..x_m`.
    pub stencil: Vec<[f64; 2]>,
    /// Upsampled source nodes and weights interpolating on-curve values at `α₀`.
    pub curve_nodes: Vec<usize>,
    pub curve_weights: Vec<f64>,
    /// Weights of `u(x₀), u(x_1), …, u(x_m)` giving `u(x)`.
    pub ray_weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Zone {
    Far,
    Near(NearEntry),
}

/// Near/far classification of a target list with respect to one source.
#[derive(Debug, Clone)]
pub struct NearZoneMap {
    pub h: f64,
    pub targets: Vec<[f64; 2]>,
    pub zones: Vec<Zone>,
}

impl NearZoneMap {
    pub fn near_count(&self) -> usize {
        self.zones.iter().filter(|z| matches!(z, Zone::Near(_))).count()
    }

    /// Upsampled nodes touched by on-curve interpolation, sorted and unique.
    pub fn curve_nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .zones
            .iter()
            .filter_map(|z| match z {
                Zone::Near(e) => Some(e.curve_nodes.iter().copied()),
                Zone::Far => None,
            })
            .flatten()
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }
}

/// Tags every target near (`d < h`) or far and builds stencils for near ones.
pub fn classify_targets(source: &Source, targets: &[[f64; 2]], params: &NearParams) -> Result<NearZoneMap> {
    let h = source.h;
    let n_up = source.up_curve.len();
    let dalpha = 2.0 * PI / source.n() as f64;
    let dalpha_up = 2.0 * PI / n_up as f64;
    let mut zones = Vec::with_capacity(targets.len());
    for (ti, &x) in targets.iter().enumerate() {
        let Some((k0, dnode)) = source.grid.nearest(&source.curve, x) else {
            zones.push(Zone::Far);
            continue;
        };
        if dnode >= 1.2 * source.spacing {
            zones.push(Zone::Far);
            continue;
        }
        let cp = match closest_point(source, x, k0) {
            Ok(cp) if cp.d <= dnode => cp,
            _ => ClosestPoint { alpha: k0 as f64 * dalpha, x0: source.curve.point(k0), d: dnode },
        };
        if cp.d >= h {
            zones.push(Zone::Far);
            continue;
        }
        let nrm = source.normal_at(cp.alpha);
        let r = [x[0] - cp.x0[0], x[1] - cp.x0[1]];
        let dot = r[0] * nrm[0] + r[1] * nrm[1];
        let side = if dot >= 0.0 { 1.0 } else { -1.0 };
        let dir = if cp.d > 1e-14 * h { [r[0] / cp.d, r[1] / cp.d] } else { [side * nrm[0], side * nrm[1]] };
        let step = params.spacing_factor * h;
        let stencil: Vec<[f64; 2]> = (1..=params.m)
            .map(|j| [cp.x0[0] + j as f64 * step * dir[0], cp.x0[1] + j as f64 * step * dir[1]])
            .collect();
        let expected = if side > 0.0 { 0 } else { 1 };
        if stencil.iter().any(|p| source.winding(*p) != expected) {
            return Err(Error::StencilCrossing { target: ti });
        }
        let base = (cp.alpha / dalpha_up).floor() as i64;
        let lo = base - (params.n_int as i64 / 2 - 1);
        let offsets: Vec<i64> = (lo..lo + params.n_int as i64).collect();
        let nodes: Vec<f64> = offsets.iter().map(|&k| k as f64 * dalpha_up).collect();
        let curve_weights = lagrange_weights(&nodes, cp.alpha);
        let curve_nodes = offsets.iter().map(|&k| k.rem_euclid(n_up as i64) as usize).collect();
        let ray: Vec<f64> = (0..=params.m).map(|j| j as f64 * step).collect();
        let ray_weights = lagrange_weights(&ray, cp.d);
        zones.push(Zone::Near(NearEntry { closest: cp, side, stencil, curve_nodes, curve_weights, ray_weights }));
    }
    Ok(NearZoneMap { h, targets: targets.to_vec(), zones })
}

/// Layer values at arbitrary points by the trapezoid rule on `curve`.
///
/// `density` is stacked `[φ_x; φ_y]` on the nodes of `curve` (ignored for the indicator).
pub fn trapezoid_values(
    layer: Layer,
    curve: &Curve,
    geom: &GeometryCache,
    density: &[f64],
    points: &[[f64; 2]],
    backend: &dyn SummationBackend,
) -> Vec<[f64; 2]> {
    let n = curve.len();
    match layer {
        Layer::Slp { mu0 } => {
            let sources: Vec<[f64; 2]> = (0..n).map(|k| curve.point(k)).collect();
            let weighted: Vec<[f64; 2]> =
                (0..n).map(|k| [density[k] * geom.weight(k), density[n + k] * geom.weight(k)]).collect();
            backend.slp_sum(&sources, &weighted, points, mu0)
        }
        Layer::Dlp { prefactor, normal_sign } => points
            .iter()
            .map(|x| {
                let mut acc = [0.0, 0.0];
                for k in 0..n {
                    let r = [x[0] - curve.x[k], x[1] - curve.y[k]];
                    let rho2 = r[0] * r[0] + r[1] * r[1];
                    let rn = normal_sign * (r[0] * geom.nx[k] + r[1] * geom.ny[k]);
                    let rd = r[0] * density[k] + r[1] * density[n + k];
                    let c = prefactor * geom.weight(k) * rn * rd / (rho2 * rho2);
                    acc[0] += c * r[0];
                    acc[1] += c * r[1];
                }
                acc
            })
            .collect(),
        Layer::Indicator => points
            .iter()
            .map(|&x| {
                let v: f64 = (0..n)
                    .map(|k| laplace_dlp_kernel(x, curve.point(k), geom.normal(k)).unwrap_or(0.0) * geom.weight(k))
                    .sum();
                [v, 0.0]
            })
            .collect(),
    }
}

#[derive(Debug, Clone)]
enum OnCurveKind {
    Rows(DMatrix<f64>),
    Fixed(Vec<f64>),
}

/// Principal values of a layer on the upsampled curve, restricted to the
/// nodes that near-zone interpolation touches.
#[derive(Debug, Clone)]
pub struct OnCurve {
    nodes: Vec<usize>,
    kind: OnCurveKind,
}

impl OnCurve {
    pub fn new(source: &Source, layer: Layer, maps: &[&NearZoneMap]) -> Result<Self> {
        let mut nodes: Vec<usize> = maps.iter().flat_map(|m| m.curve_nodes()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let (c, g) = (&source.up_curve, &source.up_geom);
        let kind = match layer {
            _ if nodes.is_empty() => OnCurveKind::Fixed(Vec::new()),
            Layer::Slp { mu0 } => OnCurveKind::Rows(self_slp_rows(c, g, mu0, &nodes)?),
            Layer::Dlp { prefactor, normal_sign } => {
                OnCurveKind::Rows(self_dlp_rows(c, g, prefactor, normal_sign, &nodes))
            }
            Layer::Indicator => OnCurveKind::Fixed(
                nodes
                    .iter()
                    .map(|&i| {
                        let xi = c.point(i);
                        (0..c.len())
                            .map(|k| {
                                let v = if k == i {
                                    g.curvature[k] / (4.0 * PI)
                                } else {
                                    laplace_dlp_kernel(xi, c.point(k), g.normal(k)).unwrap_or(0.0)
                                };
                                v * g.weight(k)
                            })
                            .sum()
                    })
                    .collect(),
            ),
        };
        Ok(Self { nodes, kind })
    }

    /// Values stacked `[u_x; u_y]` over all upsampled nodes; only the needed ones are filled.
    pub fn values(&self, up_density: &[f64]) -> Vec<f64> {
        let nu = up_density.len() / 2;
        let r = self.nodes.len();
        match &self.kind {
            OnCurveKind::Rows(m) => {
                let v = m * DVector::from_column_slice(up_density);
                let mut out = vec![0.0; 2 * nu];
                for (row, &i) in self.nodes.iter().enumerate() {
                    out[i] = v[row];
                    out[nu + i] = v[r + row];
                }
                out
            }
            OnCurveKind::Fixed(f) => {
                let nu = self.nodes.last().map_or(0, |&i| i + 1);
                let mut out = vec![0.0; nu];
                for (&i, &v) in self.nodes.iter().zip(f) {
                    out[i] = v;
                }
                out
            }
        }
    }
}

/// Layer values at the targets of `map`.
///
/// `density` lives on the N source nodes; `on_curve` must cover every
/// near-zone node of `map`.
pub fn near_eval(
    source: &Source,
    layer: Layer,
    density: &[f64],
    on_curve: &OnCurve,
    map: &NearZoneMap,
    backend: &dyn SummationBackend,
) -> Result<Vec<[f64; 2]>> {
    let n = source.n();
    let nu = source.up_curve.len();
    let up_density = match layer {
        Layer::Indicator => Vec::new(),
        _ => {
            let mut d = crate::geometry::resample_values(&density[..n], nu)?;
            d.extend(crate::geometry::resample_values(&density[n..], nu)?);
            d
        }
    };
    let mut points = Vec::new();
    for (x, zone) in map.targets.iter().zip(&map.zones) {
        match zone {
            Zone::Far => points.push(*x),
            Zone::Near(e) => points.extend_from_slice(&e.stencil),
        }
    }
    let values = trapezoid_values(layer, &source.up_curve, &source.up_geom, &up_density, &points, backend);
    let on_curve = if map.near_count() > 0 { on_curve.values(&up_density) } else { Vec::new() };
    let jump = layer.jump();
    let normal_sign = layer.normal_sign();
    let mut out = Vec::with_capacity(map.targets.len());
    let mut cursor = 0;
    for zone in &map.zones {
        match zone {
            Zone::Far => {
                out.push(values[cursor]);
                cursor += 1;
            }
            Zone::Near(e) => {
                let mut u0 = [0.0, 0.0];
                let mut phi0 = [0.0, 0.0];
                for (&k, &w) in e.curve_nodes.iter().zip(&e.curve_weights) {
                    u0[0] += w * on_curve[k];
                    if layer != Layer::Indicator {
                        u0[1] += w * on_curve[nu + k];
                        phi0[0] += w * up_density[k];
                        phi0[1] += w * up_density[nu + k];
                    }
                }
                if layer == Layer::Indicator {
                    phi0 = [1.0, 0.0];
                }
                let s = e.side * normal_sign * jump;
                u0 = [u0[0] + s * phi0[0], u0[1] + s * phi0[1]];
                let mut u = [e.ray_weights[0] * u0[0], e.ray_weights[0] * u0[1]];
                for j in 0..e.stencil.len() {
                    let v = values[cursor + j];
                    u[0] += e.ray_weights[j + 1] * v[0];
                    u[1] += e.ray_weights[j + 1] * v[1];
                }
                cursor += e.stencil.len();
                out.push(u);
            }
        }
    }
    Ok(out)
}

/// Convenience wrapper: classify then evaluate with direct summation.
pub fn evaluate_layer(
    source: &Source,
    layer: Layer,
    density: &[f64],
    targets: &[[f64; 2]],
    params: &NearParams,
) -> Result<Vec<[f64; 2]>> {
    let map = classify_targets(source, targets, params)?;
    let on_curve = OnCurve::new(source, layer, &[&map])?;
    near_eval(source, layer, density, &on_curve, &map, &DirectSummation)
}
