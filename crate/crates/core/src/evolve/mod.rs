//! Time stepping of the coupled vesicle–wall system.
//!
//! Each step freezes the geometry at an extrapolated configuration `x^e`,
//! treats bending and tension implicitly, and couples bodies either from the
//! previous step (explicit) or through one global solve (semi-implicit).

pub mod gmres;
pub mod wall;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::geometry::{Curve, GeometryCache};
use crate::kernels::{DirectSummation, MembraneOperators, SummationBackend, Vesicle, WallSet};
use crate::nearsing::{
    classify_targets, near_eval, trapezoid_values, Layer, NearParams, NearZoneMap, OnCurve, Source,
};
use crate::quadrature::{self_dlp_matrix, self_slp_matrix};

pub use gmres::{gmres, GmresOutcome};
pub use wall::WallOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    /// 1 (backward Euler) or 2 (BDF2).
    pub order: u8,
    pub coupling: Coupling,
    pub dt: f64,
    pub gmres_tol: f64,
    pub gmres_maxit: usize,
    pub preconditioner: bool,
    /// Off: inter-body interactions use the plain N-point trapezoid rule.
    pub near_singular: bool,
    pub near: NearParams,
    pub mu0: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            order: 2,
            coupling: Coupling::SemiImplicit,
            dt: 0.01,
            gmres_tol: 1e-10,
            gmres_maxit: 200,
            preconditioner: true,
            near_singular: true,
            near: NearParams::default(),
            mu0: 1.0,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.order == 1 || self.order == 2) {
            errs.push(format!("order must be 1 or 2, got {}", self.order));
        }
        if !(self.dt > 0.0) {
            errs.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.gmres_tol > 0.0) {
            errs.push(format!("gmres_tol must be positive, got {}", self.gmres_tol));
        }
        if self.gmres_maxit == 0 {
            errs.push("gmres_maxit must be positive".into());
        }
        if !(self.mu0 > 0.0) {
            errs.push(format!("mu0 must be positive, got {}", self.mu0));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Imposed velocity field of an unbounded flow.
pub trait FarField: std::fmt::Debug + Send + Sync {
    fn velocity(&self, x: [f64; 2]) -> [f64; 2];
}

/// Everything that evolves in time.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub time: f64,
    pub step: usize,
    pub vesicles: Vec<Vesicle>,
    /// Membrane velocity from the last step, stacked `[u; v]`.
    pub velocities: Vec<Vec<f64>>,
    /// Positions one step back and the step size that separates them.
    pub previous: Option<(Vec<Vec<f64>>, f64)>,
    pub walls: Option<WallSet>,
    pub lambda: Vec<[f64; 2]>,
    pub xi: Vec<f64>,
    /// Initial `(area, length)` of each vesicle.
    pub reference: Vec<(f64, f64)>,
}

impl SystemState {
    pub fn new(vesicles: Vec<Vesicle>, walls: Option<WallSet>) -> Self {
        let velocities = vesicles.iter().map(|v| vec![0.0; 2 * v.n()]).collect();
        let reference = vesicles.iter().map(|v| (v.geom.area, v.geom.length)).collect();
        let inner = walls.as_ref().map_or(0, |w| w.inner_count());
        Self {
            time: 0.0,
            step: 0,
            vesicles,
            velocities,
            previous: None,
            walls,
            lambda: vec![[0.0; 2]; inner],
            xi: vec![0.0; inner],
            reference,
        }
    }

    /// Largest relative area and length drift over all vesicles.
    pub fn conservation_errors(&self) -> (f64, f64) {
        self.vesicles.iter().zip(&self.reference).fold((0.0f64, 0.0f64), |(ea, el), (v, &(a0, l0))| {
            (ea.max((v.geom.area - a0).abs() / a0), el.max((v.geom.length - l0).abs() / l0))
        })
    }
}

/// Offsets of each body's unknowns in the global vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLayout {
    /// Per vesicle: `[x (2N); σ (N)]`.
    pub vesicle_offsets: Vec<usize>,
    pub vesicle_sizes: Vec<usize>,
    pub wall_offset: usize,
    pub size: usize,
}

impl UnknownLayout {
    pub fn new(nodes: &[usize], wall_size: usize) -> Self {
        let mut vesicle_offsets = Vec::with_capacity(nodes.len());
        let mut off = 0;
        for &n in nodes {
            vesicle_offsets.push(off);
            off += 3 * n;
        }
        Self { vesicle_offsets, vesicle_sizes: nodes.iter().map(|n| 3 * n).collect(), wall_offset: off, size: off + wall_size }
    }

    pub fn vesicle<'a>(&self, v: &'a [f64], p: usize) -> &'a [f64] {
        &v[self.vesicle_offsets[p]..self.vesicle_offsets[p] + self.vesicle_sizes[p]]
    }

    pub fn wall<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[self.wall_offset..]
    }
}

/// What one step did, for diagnostics and the linear-system dump.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub order: u8,
    pub dt: f64,
    pub gmres_iterations: usize,
    pub residuals: Vec<f64>,
    pub rhs: Vec<f64>,
    pub solution: Vec<f64>,
}

fn matvec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// One vesicle's operators at the extrapolated shape.
struct FrozenVesicle {
    n: usize,
    alpha: f64,
    nu: f64,
    curve: Curve,
    geom: GeometryCache,
    ops: MembraneOperators,
    dlp: Option<DMatrix<f64>>,
    block: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    source: Option<Source>,
}

impl FrozenVesicle {
    fn new(v: &Vesicle, mu0: f64, beta: f64, dt: f64, near: bool) -> Result<Self> {
        let n = v.n();
        let alpha = v.alpha();
        let ops = v.membrane_operators()?;
        let slp = self_slp_matrix(&v.curve, &v.geom, mu0)?;
        let dlp = (v.nu != 1.0).then(|| self_dlp_matrix(&v.curve, &v.geom, (1.0 - v.nu) / PI, 1.0));
        let mut bend2 = DMatrix::zeros(2 * n, 2 * n);
        bend2.view_mut((0, 0), (n, n)).copy_from(&ops.bending);
        bend2.view_mut((n, n), (n, n)).copy_from(&ops.bending);
        let mut tl = -(&slp * &bend2);
        for i in 0..2 * n {
            tl[(i, i)] += alpha * beta / dt;
        }
        if let Some(d) = &dlp {
            tl -= (beta / dt) * d;
        }
        let tr = -(&slp * &ops.tension);
        let mut block = DMatrix::zeros(3 * n, 3 * n);
        block.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&tl);
        block.view_mut((0, 2 * n), (2 * n, n)).copy_from(&tr);
        block.view_mut((2 * n, 0), (n, 2 * n)).copy_from(&(beta * &ops.inextensibility));
        let lu = block.clone().lu();
        let source = if near { Some(Source::new(&v.curve, &v.geom)?) } else { None };
        Ok(Self { n, alpha, nu: v.nu, curve: v.curve.clone(), geom: v.geom.clone(), ops, dlp, block, lu, source })
    }

    fn solve(&self, rhs: &[f64], p: usize) -> Result<Vec<f64>> {
        self.lu
            .solve(&DVector::from_column_slice(rhs))
            .map(|v| v.as_slice().to_vec())
            .ok_or_else(|| Error::SingularBlock(format!("vesicle {p}")))
    }
}

/// Velocity contributions gathered from other bodies.
struct Contributions {
    vesicles: Vec<Vec<f64>>,
    /// Indexed like the wall unknowns; completion rows stay zero.
    wall: Vec<f64>,
}

/// All operators of one step.
struct Frozen<'a> {
    ves: Vec<FrozenVesicle>,
    wall: Option<(&'a WallOperator, &'a WallSet)>,
    layout: UnknownLayout,
    /// Targets of each vesicle source: other vesicles' nodes, then wall nodes.
    ves_targets: Vec<Vec<[f64; 2]>>,
    ves_maps: Vec<Option<NearZoneMap>>,
    /// On-curve single and double layer rows of each vesicle source.
    ves_on: Vec<(Option<OnCurve>, Option<OnCurve>)>,
    /// All vesicle nodes, targets of each wall component.
    all_nodes: Vec<[f64; 2]>,
    wall_maps: Vec<Option<NearZoneMap>>,
    wall_on: Vec<Option<OnCurve>>,
    beta: f64,
    dt: f64,
    mu0: f64,
    backend: &'a dyn SummationBackend,
}

fn nodes_of(curve: &Curve) -> impl Iterator<Item = [f64; 2]> + '_ {
    (0..curve.len()).map(|k| curve.point(k))
}

impl<'a> Frozen<'a> {
    fn new(
        shapes: &[Vesicle],
        wall: Option<(&'a WallOperator, &'a WallSet)>,
        cfg: &SchemeConfig,
        beta: f64,
        dt: f64,
        backend: &'a dyn SummationBackend,
    ) -> Result<Self> {
        let ves = shapes
            .iter()
            .map(|v| FrozenVesicle::new(v, cfg.mu0, beta, dt, cfg.near_singular))
            .collect::<Result<Vec<_>>>()?;
        let wall_nodes: Vec<[f64; 2]> =
            wall.map_or(Vec::new(), |(_, ws)| ws.components.iter().flat_map(|c| nodes_of(&c.curve)).collect());
        let all_nodes: Vec<[f64; 2]> = ves.iter().flat_map(|v| nodes_of(&v.curve)).collect();
        let mut ves_targets = Vec::with_capacity(ves.len());
        let mut ves_maps = Vec::with_capacity(ves.len());
        let mut ves_on = Vec::with_capacity(ves.len());
        for (q, vq) in ves.iter().enumerate() {
            let mut t: Vec<[f64; 2]> = Vec::new();
            for (p, vp) in ves.iter().enumerate() {
                if p != q {
                    t.extend(nodes_of(&vp.curve));
                }
            }
            t.extend_from_slice(&wall_nodes);
            let map = match &vq.source {
                Some(s) if !t.is_empty() => Some(classify_targets(s, &t, &cfg.near)?),
                _ => None,
            };
            let on = match (&vq.source, &map) {
                (Some(s), Some(m)) => {
                    let slp = OnCurve::new(s, Layer::Slp { mu0: cfg.mu0 }, &[m])?;
                    let dlp = match vq.dlp {
                        Some(_) => {
                            let layer = Layer::Dlp { prefactor: (1.0 - vq.nu) / PI, normal_sign: 1.0 };
                            Some(OnCurve::new(s, layer, &[m])?)
                        }
                        None => None,
                    };
                    (Some(slp), dlp)
                }
                _ => (None, None),
            };
            ves_targets.push(t);
            ves_maps.push(map);
            ves_on.push(on);
        }
        let wall_maps = match wall {
            Some((op, _)) if cfg.near_singular && !all_nodes.is_empty() => op
                .sources
                .iter()
                .map(|s| classify_targets(s, &all_nodes, &cfg.near).map(Some))
                .collect::<Result<Vec<_>>>()?,
            Some((op, _)) => vec![None; op.sources.len()],
            None => Vec::new(),
        };
        let wall_on = match wall {
            Some((op, ws)) => wall_maps
                .iter()
                .zip(&op.sources)
                .zip(&ws.components)
                .map(|((m, s), c)| {
                    m.as_ref()
                        .map(|m| OnCurve::new(s, Layer::Dlp { prefactor: 1.0 / PI, normal_sign: c.normal_sign }, &[m]))
                        .transpose()
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let nodes: Vec<usize> = ves.iter().map(|v| v.n).collect();
        let layout = UnknownLayout::new(&nodes, wall.map_or(0, |(op, _)| op.size));
        Ok(Self { ves, wall, layout, ves_targets, ves_maps, ves_on, all_nodes, wall_maps, wall_on, beta, dt, mu0: cfg.mu0, backend })
    }

    #[allow(clippy::too_many_arguments)]
    fn eval(
        &self,
        source: Option<&Source>,
        curve: &Curve,
        geom: &GeometryCache,
        layer: Layer,
        density: &[f64],
        on_curve: Option<&OnCurve>,
        map: Option<&NearZoneMap>,
        targets: &[[f64; 2]],
    ) -> Result<Vec<[f64; 2]>> {
        match (source, map, on_curve) {
            (Some(s), Some(m), Some(on)) => near_eval(s, layer, density, on, m, self.backend),
            _ => Ok(trapezoid_values(layer, curve, geom, density, targets, self.backend)),
        }
    }

    fn empty_contributions(&self) -> Contributions {
        Contributions {
            vesicles: self.ves.iter().map(|v| vec![0.0; 2 * v.n]).collect(),
            wall: vec![0.0; self.wall.map_or(0, |(op, _)| op.size)],
        }
    }

    /// Adds `S_q f_q + D_q u_q` of every vesicle `q` at all other bodies.
    fn add_vesicle_sources(&self, f: Option<&[Vec<f64>]>, u: &[Vec<f64>], out: &mut Contributions) -> Result<()> {
        for (q, vq) in self.ves.iter().enumerate() {
            let targets = &self.ves_targets[q];
            if targets.is_empty() {
                continue;
            }
            let map = self.ves_maps[q].as_ref();
            let src = vq.source.as_ref();
            let mut vals = vec![[0.0, 0.0]; targets.len()];
            let mut add = |v: Vec<[f64; 2]>| {
                for (a, b) in vals.iter_mut().zip(v) {
                    a[0] += b[0];
                    a[1] += b[1];
                }
            };
            let (on_slp, on_dlp) = &self.ves_on[q];
            if let Some(f) = f {
                let layer = Layer::Slp { mu0: self.mu0 };
                add(self.eval(src, &vq.curve, &vq.geom, layer, &f[q], on_slp.as_ref(), map, targets)?);
            }
            if vq.dlp.is_some() {
                let layer = Layer::Dlp { prefactor: (1.0 - vq.nu) / PI, normal_sign: 1.0 };
                add(self.eval(src, &vq.curve, &vq.geom, layer, &u[q], on_dlp.as_ref(), map, targets)?);
            }
            let mut cursor = 0;
            for (p, vp) in self.ves.iter().enumerate() {
                if p == q {
                    continue;
                }
                let dst = &mut out.vesicles[p];
                for k in 0..vp.n {
                    dst[k] += vals[cursor + k][0];
                    dst[vp.n + k] += vals[cursor + k][1];
                }
                cursor += vp.n;
            }
            if let Some((op, ws)) = self.wall {
                for (c, &o) in ws.components.iter().zip(&op.offsets) {
                    let n = c.n();
                    for k in 0..n {
                        out.wall[o + k] += vals[cursor + k][0];
                        out.wall[o + n + k] += vals[cursor + k][1];
                    }
                    cursor += n;
                }
            }
        }
        Ok(())
    }

    /// Adds the wall double layer and completion flow at every vesicle node.
    fn add_wall_sources(&self, w: &[f64], out: &mut Contributions) -> Result<()> {
        let Some((op, ws)) = self.wall else { return Ok(()) };
        if self.all_nodes.is_empty() {
            return Ok(());
        }
        let (eta, lambda, xi) = op.split(w);
        let mut vals = op.completion_velocity(ws, &lambda, &xi, &self.all_nodes)?;
        for (q, c) in ws.components.iter().enumerate() {
            let layer = Layer::Dlp { prefactor: 1.0 / PI, normal_sign: c.normal_sign };
            let v = self.eval(
                Some(&op.sources[q]),
                &c.curve,
                &c.geom,
                layer,
                &eta[q],
                self.wall_on[q].as_ref(),
                self.wall_maps[q].as_ref(),
                &self.all_nodes,
            )?;
            for (a, b) in vals.iter_mut().zip(v) {
                a[0] += b[0];
                a[1] += b[1];
            }
        }
        let mut cursor = 0;
        for (p, vp) in self.ves.iter().enumerate() {
            for k in 0..vp.n {
                out.vesicles[p][k] += vals[cursor + k][0];
                out.vesicles[p][vp.n + k] += vals[cursor + k][1];
            }
            cursor += vp.n;
        }
        Ok(())
    }

    /// Momentum right-hand side shared by both couplings:
    /// `(α/Δt)x⁰ − D x⁰/Δt + u∞(x^e)`, and the inextensibility row `P x⁰`.
    fn local_rhs(&self, p: usize, x0: &[f64], far: Option<&dyn FarField>) -> Vec<f64> {
        let v = &self.ves[p];
        let n = v.n;
        let mut rhs = vec![0.0; 3 * n];
        axpy(&mut rhs[..2 * n], v.alpha / self.dt, x0);
        if let Some(d) = &v.dlp {
            axpy(&mut rhs[..2 * n], -1.0 / self.dt, &matvec(d, x0));
        }
        if let Some(far) = far {
            for k in 0..n {
                let u = far.velocity(v.curve.point(k));
                rhs[k] += u[0];
                rhs[n + k] += u[1];
            }
        }
        rhs[2 * n..].copy_from_slice(&matvec(&v.ops.inextensibility, x0));
        rhs
    }

    fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let m = self.ves.len();
        let mut f = Vec::with_capacity(m);
        let mut u = Vec::with_capacity(m);
        for (p, vp) in self.ves.iter().enumerate() {
            let vv = self.layout.vesicle(v, p);
            f.push(vp.ops.traction(&vv[..2 * vp.n], &vv[2 * vp.n..]));
            u.push(vv[..2 * vp.n].iter().map(|x| self.beta / self.dt * x).collect::<Vec<_>>());
        }
        let mut c = self.empty_contributions();
        self.add_vesicle_sources(Some(&f), &u, &mut c)?;
        if self.wall.is_some() {
            self.add_wall_sources(self.layout.wall(v), &mut c)?;
        }
        let mut out = Vec::with_capacity(self.layout.size);
        for (p, vp) in self.ves.iter().enumerate() {
            let mut r = matvec(&vp.block, self.layout.vesicle(v, p));
            axpy(&mut r[..2 * vp.n], -1.0, &c.vesicles[p]);
            out.extend(r);
        }
        if let Some((op, _)) = self.wall {
            let mut r = op.apply(self.layout.wall(v));
            axpy(&mut r, 1.0, &c.wall);
            out.extend(r);
        }
        Ok(out)
    }

    fn precondition(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(v.len());
        for (p, vp) in self.ves.iter().enumerate() {
            out.extend(vp.solve(self.layout.vesicle(v, p), p)?);
        }
        if let Some((op, _)) = self.wall {
            out.extend(op.solve(self.layout.wall(v))?);
        }
        Ok(out)
    }
}

/// Advances a [`SystemState`] by one step.
#[derive(Debug)]
pub struct Evolver {
    pub cfg: SchemeConfig,
    pub far_field: Option<Arc<dyn FarField>>,
    wall_operator: Option<WallOperator>,
    backend: Box<dyn SummationBackend>,
}

impl Evolver {
    pub fn new(cfg: SchemeConfig, far_field: Option<Arc<dyn FarField>>, walls: Option<&WallSet>) -> Result<Self> {
        cfg.validate()?;
        let wall_operator = walls.map(WallOperator::new).transpose()?;
        Ok(Self { cfg, far_field, wall_operator, backend: Box::new(DirectSummation) })
    }

    pub fn with_backend(mut self, backend: Box<dyn SummationBackend>) -> Self {
        self.backend = backend;
        self
    }

    pub fn wall_operator(&self) -> Option<&WallOperator> {
        self.wall_operator.as_ref()
    }

    /// One step of size `dt`. Order 2 falls back to order 1 when there is no
    /// history at the same step size.
    pub fn step(&self, state: &SystemState, dt: f64) -> Result<(SystemState, StepReport)> {
        let history = state
            .previous
            .as_ref()
            .filter(|(_, h)| self.cfg.order == 2 && (h - dt).abs() <= 1e-12 * dt)
            .map(|(x, _)| x);
        let order = if history.is_some() { 2 } else { 1 };
        let beta = if order == 2 { 1.5 } else { 1.0 };
        let current: Vec<Vec<f64>> = state.vesicles.iter().map(|v| v.positions()).collect();
        let (x0, xe): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match history {
            Some(prev) => current
                .iter()
                .zip(prev)
                .map(|(c, p)| {
                    let x0 = c.iter().zip(p).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
                    let xe = c.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect();
                    (x0, xe)
                })
                .unzip(),
            None => (current.clone(), current.clone()),
        };
        let shapes = state
            .vesicles
            .iter()
            .zip(&xe)
            .map(|(v, x)| v.with_positions(x, v.sigma.clone()))
            .collect::<Result<Vec<_>>>()?;
        let wall = match (&self.wall_operator, &state.walls) {
            (Some(op), Some(ws)) => Some((op, ws)),
            _ => None,
        };
        let frozen = Frozen::new(&shapes, wall, &self.cfg, beta, dt, self.backend.as_ref())?;
        let far = self.far_field.as_deref();
        let layout = frozen.layout.clone();

        let (solution, rhs, iterations, residuals) = match self.cfg.coupling {
            Coupling::Explicit => {
                let f: Vec<Vec<f64>> = state.vesicles.iter().map(|v| v.traction_jump()).collect::<Result<_>>()?;
                let mut c = frozen.empty_contributions();
                frozen.add_vesicle_sources(Some(&f), &state.velocities, &mut c)?;
                let mut w = Vec::new();
                let mut rhs = Vec::with_capacity(layout.size);
                if let Some((op, ws)) = wall {
                    let mut b = op.boundary_rhs(ws);
                    axpy(&mut b, -1.0, &c.wall);
                    w = op.solve(&b)?;
                    frozen.add_wall_sources(&w, &mut c)?;
                    rhs.extend(b);
                }
                let mut sol = Vec::with_capacity(layout.size);
                let mut ves_rhs = Vec::new();
                for p in 0..frozen.ves.len() {
                    let mut r = frozen.local_rhs(p, &x0[p], far);
                    axpy(&mut r[..2 * frozen.ves[p].n], 1.0, &c.vesicles[p]);
                    sol.extend(frozen.ves[p].solve(&r, p)?);
                    ves_rhs.extend(r);
                }
                ves_rhs.extend(rhs);
                sol.extend(w);
                (sol, ves_rhs, 0, Vec::new())
            }
            Coupling::SemiImplicit => {
                let u: Vec<Vec<f64>> = x0.iter().map(|x| x.iter().map(|v| -v / dt).collect()).collect();
                let mut c = frozen.empty_contributions();
                frozen.add_vesicle_sources(None, &u, &mut c)?;
                let mut rhs = Vec::with_capacity(layout.size);
                for p in 0..frozen.ves.len() {
                    let mut r = frozen.local_rhs(p, &x0[p], far);
                    axpy(&mut r[..2 * frozen.ves[p].n], 1.0, &c.vesicles[p]);
                    rhs.extend(r);
                }
                if let Some((op, ws)) = wall {
                    let mut b = op.boundary_rhs(ws);
                    axpy(&mut b, -1.0, &c.wall);
                    rhs.extend(b);
                }
                let n = rhs.len();
                let failure = std::cell::RefCell::new(None);
                let guard = |r: Result<Vec<f64>>| {
                    r.unwrap_or_else(|e| {
                        failure.borrow_mut().get_or_insert(e);
                        vec![0.0; n]
                    })
                };
                let out = if self.cfg.preconditioner {
                    gmres(
                        |v| guard(frozen.matvec(v)),
                        |v| guard(frozen.precondition(v)),
                        &rhs,
                        self.cfg.gmres_tol,
                        self.cfg.gmres_maxit,
                    )
                } else {
                    gmres(|v| guard(frozen.matvec(v)), |v| v.to_vec(), &rhs, self.cfg.gmres_tol, self.cfg.gmres_maxit)
                };
                if let Some(e) = failure.into_inner() {
                    return Err(e);
                }
                if !out.converged {
                    return Err(Error::GmresNotConverged {
                        iterations: out.iterations,
                        residual: out.residuals.last().copied().unwrap_or(f64::NAN),
                    });
                }
                (out.solution, rhs, out.iterations, out.residuals)
            }
        };

        let mut vesicles = Vec::with_capacity(state.vesicles.len());
        let mut velocities = Vec::with_capacity(state.vesicles.len());
        for (p, v) in state.vesicles.iter().enumerate() {
            let n = v.n();
            let sol = layout.vesicle(&solution, p);
            let x = &sol[..2 * n];
            velocities.push(x.iter().zip(&x0[p]).map(|(a, b)| (beta * a - b) / dt).collect());
            vesicles.push(v.with_positions(x, sol[2 * n..].to_vec())?);
        }
        let mut walls = state.walls.clone();
        let (mut lambda, mut xi) = (state.lambda.clone(), state.xi.clone());
        if let (Some(op), Some(ws)) = (&self.wall_operator, walls.as_mut()) {
            let (eta, l, x) = op.split(layout.wall(&solution));
            ws.eta = eta;
            lambda = l;
            xi = x;
        }
        let next = SystemState {
            time: state.time + dt,
            step: state.step + 1,
            vesicles,
            velocities,
            previous: Some((current, dt)),
            walls,
            lambda,
            xi,
            reference: state.reference.clone(),
        };
        let report = StepReport { order, dt, gmres_iterations: iterations, residuals, rhs, solution };
        Ok((next, report))
    }
}
