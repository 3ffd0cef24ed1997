//! Background flows, wall geometries and initial vesicle placements.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::{detect, min_gaps, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::evolve::{FarField, SystemState};
use crate::geometry::{compute_geometry, shape_with_reduced_area, spectral::is_power_of_two, Curve};
use crate::kernels::{Vesicle, WallSet};
use crate::nearsing::{mesh_spacing, NearParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Relaxation,
    Shear,
    Extensional,
    TaylorGreen,
    Confined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallPreset {
    Couette,
    Stenosis,
}

fn d_reduced_area() -> f64 {
    0.65
}
fn d_one() -> f64 {
    1.0
}
fn d_kappa() -> f64 {
    0.1
}
fn d_offset() -> f64 {
    0.1
}
fn d_r_in() -> f64 {
    10.0
}
fn d_r_out() -> f64 {
    20.0
}
fn d_period() -> f64 {
    10.0
}
fn d_profile_width() -> f64 {
    1.5
}
fn d_start() -> f64 {
    -3.0
}

/// The `[scenario]` section of a run configuration.
///
/// Lengths are in units where a vesicle of `scale = 1` has perimeter `2π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: FlowKind,
    /// Required for `kind = "confined"`.
    #[serde(default)]
    pub wall: Option<WallPreset>,
    #[serde(default = "d_reduced_area")]
    pub reduced_area: f64,
    /// Defaults to 1; 0.5 for Taylor–Green so that nine vesicles fit the cell,
    /// 1.22 for the extensional pair (arclength spacing 0.24 at N = 32).
    #[serde(default)]
    pub scale: Option<f64>,
    /// Number of vesicles; each preset has its own default.
    #[serde(default)]
    pub vesicles: Option<usize>,
    /// Viscosity contrast, one value for all vesicles.
    #[serde(default = "d_one")]
    pub nu: f64,
    #[serde(default = "d_kappa")]
    pub kappa_b: f64,
    #[serde(default = "d_one")]
    pub mu0: f64,
    /// Shear rate or extension rate.
    #[serde(default = "d_one")]
    pub rate: f64,
    /// Shear: vertical offset of the left vesicle, in units of `scale`.
    #[serde(default = "d_offset")]
    pub offset: f64,
    /// Shear and extensional: distance between the two centers. Taylor-Green:
    /// distance between rows.
    #[serde(default)]
    pub separation: Option<f64>,
    /// Initial rotation of every vesicle (radians).
    #[serde(default)]
    pub angle: Option<f64>,
    /// Couette radii, inner-cylinder offset and rotation period.
    #[serde(default = "d_r_in")]
    pub r_in: f64,
    #[serde(default = "d_r_out")]
    pub r_out: f64,
    #[serde(default)]
    pub inner_offset: [f64; 2],
    #[serde(default = "d_period")]
    pub period: f64,
    /// Stenosis inlet/outlet Gaussian profile.
    #[serde(default = "d_one")]
    pub profile_amplitude: f64,
    #[serde(default)]
    pub profile_center: f64,
    #[serde(default = "d_profile_width")]
    pub profile_width: f64,
    /// Stenosis: initial x of the vesicle center.
    #[serde(default = "d_start")]
    pub start_x: f64,
    /// Seed for random placements.
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(kind: FlowKind) -> Self {
        toml::from_str(&format!("kind = \"{}\"", kind.name())).expect("defaults deserialize")
    }

    pub fn confined(wall: WallPreset) -> Self {
        Self { wall: Some(wall), ..Self::new(FlowKind::Confined) }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let positive = [
            ("scenario.scale", self.scale()),
            ("scenario.kappa_b", self.kappa_b),
            ("scenario.mu0", self.mu0),
            ("scenario.nu", self.nu),
            ("scenario.profile_width", self.profile_width),
            ("scenario.period", self.period),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                errs.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.reduced_area > 0.0 && self.reduced_area <= 1.0) {
            errs.push(format!("scenario.reduced_area must be in (0, 1], got {}", self.reduced_area));
        }
        match (self.kind, self.wall) {
            (FlowKind::Confined, None) => errs.push("scenario.wall is required for kind = \"confined\"".into()),
            (FlowKind::Confined, Some(WallPreset::Couette)) if !(self.r_out > self.r_in && self.r_in > 0.0) => {
                errs.push(format!("scenario.r_in/r_out must satisfy 0 < r_in < r_out, got {} / {}", self.r_in, self.r_out))
            }
            (k, Some(_)) if k != FlowKind::Confined => {
                errs.push("scenario.wall is only valid with kind = \"confined\"".into())
            }
            _ => {}
        }
        errs
    }

    pub fn scale(&self) -> f64 {
        self.scale.unwrap_or(match self.kind {
            FlowKind::TaylorGreen => 0.5,
            FlowKind::Extensional => 1.22,
            _ => 1.0,
        })
    }
}

impl FlowKind {
    pub fn name(self) -> &'static str {
        match self {
            FlowKind::Relaxation => "relaxation",
            FlowKind::Shear => "shear",
            FlowKind::Extensional => "extensional",
            FlowKind::TaylorGreen => "taylor_green",
            FlowKind::Confined => "confined",
        }
    }
}

/// Analytic background velocity of an unconfined preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundFlow {
    Quiescent,
    /// `(r y, 0)`
    Shear { rate: f64 },
    /// `r (−x, y)`
    Extensional { rate: f64 },
    /// `(sin x cos y, −cos x sin y)`
    TaylorGreen,
}

impl FarField for BackgroundFlow {
    fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            BackgroundFlow::Quiescent => [0.0, 0.0],
            BackgroundFlow::Shear { rate } => [rate * x[1], 0.0],
            BackgroundFlow::Extensional { rate } => [-rate * x[0], rate * x[1]],
            BackgroundFlow::TaylorGreen => [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin()],
        }
    }
}

pub fn background_flow(cfg: &ScenarioConfig) -> Result<BackgroundFlow> {
    Ok(match cfg.kind {
        FlowKind::Relaxation => BackgroundFlow::Quiescent,
        FlowKind::Shear => BackgroundFlow::Shear { rate: cfg.rate },
        FlowKind::Extensional => BackgroundFlow::Extensional { rate: cfg.rate },
        FlowKind::TaylorGreen => BackgroundFlow::TaylorGreen,
        FlowKind::Confined => {
            return Err(Error::InvalidArgument("confined flows are driven by the walls, not a background field".into()))
        }
    })
}

/// Background velocity at `points`; rejects confined presets.
pub fn background_velocity(cfg: &ScenarioConfig, points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let flow = background_flow(cfg)?;
    Ok(points.iter().map(|&p| flow.velocity(p)).collect())
}

/// Far field for the evolver, `None` for confined runs.
pub fn far_field(cfg: &ScenarioConfig) -> Option<Arc<dyn FarField>> {
    background_flow(cfg).ok().map(|f| Arc::new(f) as Arc<dyn FarField>)
}

/// Smallest wall sampling for which near-zone stencils stay inside the stenosis.
pub const STENOSIS_MIN_NODES: usize = 256;

/// Point on the stenosis wall at parameter `theta`.
pub fn stenosis_point(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    let r = (c.powi(8) + s.powi(8)).powf(-0.125);
    let x = 10.0 * r * c;
    let eta = if x.abs() <= PI { (1.0 - 0.6 * x.cos()) / 1.6 } else { 1.0 };
    [x, 3.0 * r * s * eta]
}

/// Stenosis wall sampled at `n` points equally spaced in arclength.
pub fn stenosis_curve(n: usize) -> Result<Curve> {
    let fine = 1 << 16;
    let pts: Vec<[f64; 2]> = (0..=fine).map(|j| stenosis_point(2.0 * PI * j as f64 / fine as f64)).collect();
    let mut cum = vec![0.0; fine + 1];
    for j in 1..=fine {
        cum[j] = cum[j - 1] + (pts[j][0] - pts[j - 1][0]).hypot(pts[j][1] - pts[j - 1][1]);
    }
    let total = cum[fine];
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while cum[j + 1] < s {
            j += 1;
        }
        let t = (s - cum[j]) / (cum[j + 1] - cum[j]);
        out.push(stenosis_point(2.0 * PI * (j as f64 + t) / fine as f64));
    }
    Curve::from_points(&out)
}

/// Wall components and their prescribed velocities for a confined preset.
pub fn wall_geometry(cfg: &ScenarioConfig, n_wall: usize) -> Result<WallSet> {
    if !is_power_of_two(n_wall) {
        return Err(Error::NotPowerOfTwo(n_wall));
    }
    match cfg.wall {
        Some(WallPreset::Couette) => {
            let outer = crate::geometry::shapes::circle(n_wall, cfg.r_out, [0.0, 0.0])?;
            let inner = crate::geometry::shapes::circle(n_wall, cfg.r_in, cfg.inner_offset)?;
            let omega = 2.0 * PI / cfg.period;
            let mut v = vec![0.0; 2 * n_wall];
            for k in 0..n_wall {
                v[k] = -omega * (inner.y[k] - cfg.inner_offset[1]);
                v[n_wall + k] = omega * (inner.x[k] - cfg.inner_offset[0]);
            }
            WallSet::new(vec![outer, inner], vec![vec![0.0; 2 * n_wall], v], cfg.mu0)
        }
        Some(WallPreset::Stenosis) => {
            if n_wall < STENOSIS_MIN_NODES {
                return Err(Error::InvalidArgument(format!(
                    "stenosis needs at least {STENOSIS_MIN_NODES} wall nodes, got {n_wall}"
                )));
            }
            let wall = stenosis_curve(n_wall)?;
            let mut v = vec![0.0; 2 * n_wall];
            for k in 0..n_wall {
                let [x, y] = wall.point(k);
                // Gaussian in y, switched on only near the two open ends
                let end = (-((10.0 - x.abs()) / 0.5).powi(2)).exp();
                v[k] = cfg.profile_amplitude * (-((y - cfg.profile_center) / cfg.profile_width).powi(2)).exp() * end;
            }
            WallSet::new(vec![wall], vec![v], cfg.mu0)
        }
        None => Err(Error::InvalidArgument("scenario has no wall preset".into())),
    }
}

fn place(base: &Curve, angle: f64, center: [f64; 2]) -> Curve {
    base.rotated(angle).translated(center[0], center[1])
}

/// Largest distance from the origin to a node of `c`.
fn radius(c: &Curve) -> f64 {
    (0..c.len()).map(|k| c.x[k].hypot(c.y[k])).fold(0.0, f64::max)
}

/// Vesicle curves of a preset before validation.
pub fn initial_curves(cfg: &ScenarioConfig, n: usize) -> Result<Vec<Curve>> {
    let s = cfg.scale();
    let base = shape_with_reduced_area(cfg.reduced_area, n, s)?;
    let angle = cfg.angle.unwrap_or(0.0);
    Ok(match (cfg.kind, cfg.wall) {
        (FlowKind::Relaxation, _) => {
            let m = cfg.vesicles.unwrap_or(1);
            let spacing = 3.0 * radius(&base);
            (0..m).map(|i| place(&base, angle, [spacing * i as f64, 0.0])).collect()
        }
        (FlowKind::Shear, _) => {
            let d = cfg.separation.unwrap_or(3.5 * s);
            vec![place(&base, angle, [-0.5 * d, cfg.offset * s]), place(&base, angle, [0.5 * d, 0.0])]
        }
        (FlowKind::Extensional, _) => {
            let d = cfg.separation.unwrap_or(2.5 * s);
            let a = cfg.angle.unwrap_or(0.5 * PI);
            vec![place(&base, a, [-0.5 * d, 0.0]), place(&base, a, [0.5 * d, 0.0])]
        }
        (FlowKind::TaylorGreen, _) => {
            // columns one third of the period apart, rows `separation` apart about y = π
            let cell = 2.0 * PI / 3.0;
            let row = cfg.separation.unwrap_or(cell);
            let mut out = Vec::with_capacity(9);
            for j in 0..3 {
                for i in 0..3 {
                    out.push(place(&base, angle, [cell * (i as f64 + 0.5), PI + row * (j as f64 - 1.0)]));
                }
            }
            out
        }
        (FlowKind::Confined, Some(WallPreset::Stenosis)) => {
            // long axis across the tube, 2.3 times the constriction opening
            let height = 2.3 * 1.5;
            let b = shape_with_reduced_area(cfg.reduced_area, n, 1.0)?;
            let half = radius(&b);
            let shape = shape_with_reduced_area(cfg.reduced_area, n, 0.5 * height / half)?;
            vec![place(&shape, cfg.angle.unwrap_or(0.5 * PI), [cfg.start_x, 0.0])]
        }
        (FlowKind::Confined, Some(WallPreset::Couette)) => couette_placement(cfg, &base)?,
        (FlowKind::Confined, None) => return Err(Error::InvalidArgument("scenario.wall missing".into())),
    })
}

/// Rejection sampling of non-overlapping vesicles in the Couette gap.
fn couette_placement(cfg: &ScenarioConfig, base: &Curve) -> Result<Vec<Curve>> {
    let m = cfg.vesicles.unwrap_or(8);
    let a = radius(base);
    let margin = 0.5 * cfg.scale();
    let (lo, hi) = (cfg.r_in + a + margin, cfg.r_out - a - margin);
    if lo >= hi {
        return Err(Error::InvalidArgument("Couette gap too narrow for the vesicle size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(m);
    let mut out = Vec::with_capacity(m);
    let mut attempts = 0;
    while out.len() < m {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::InvalidArgument(format!("could not place {m} vesicles in the Couette gap")));
        }
        // uniform in area over the annulus
        let r = (lo * lo + rng.random::<f64>() * (hi * hi - lo * lo)).sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        let rot = PI * rng.random::<f64>();
        let c = [cfg.inner_offset[0] + r * th.cos(), cfg.inner_offset[1] + r * th.sin()];
        if c[0].hypot(c[1]) > cfg.r_out - a - margin {
            continue;
        }
        if centers.iter().all(|p| (p[0] - c[0]).hypot(p[1] - c[1]) > 2.0 * a + margin) {
            centers.push(c);
            out.push(place(base, rot, c));
        }
    }
    Ok(out)
}

/// Initial state of a preset, rejected if it already collides or any two
/// bodies are closer than one mesh spacing.
pub fn initial_configuration(cfg: &ScenarioConfig, n: usize, n_wall: usize) -> Result<SystemState> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let vesicles = initial_curves(cfg, n)?
        .into_iter()
        .map(|c| Vesicle::new(c, cfg.nu, cfg.kappa_b))
        .collect::<Result<Vec<_>>>()?;
    let walls = match cfg.kind {
        FlowKind::Confined => Some(wall_geometry(cfg, n_wall)?),
        _ => None,
    };
    let report = detect(&vesicles, walls.as_ref(), &NearParams::default(), DEFAULT_TOLERANCE)?;
    if report.collided {
        return Err(Error::InvalidArgument(format!(
            "initial placement collides at {} node(s)",
            report.offending.len()
        )));
    }
    let h = vesicles
        .iter()
        .map(|v| mesh_spacing(&v.geom))
        .chain(walls.iter().flat_map(|w| w.components.iter().map(|c| mesh_spacing(&c.geom))))
        .fold(0.0, f64::max);
    let (gv, gw) = min_gaps(&vesicles, walls.as_ref())?;
    for g in [gv, gw].into_iter().flatten() {
        if g <= h {
            return Err(Error::InvalidArgument(format!("initial gap {g:.3e} is not larger than the mesh spacing {h:.3e}")));
        }
    }
    Ok(SystemState::new(vesicles, walls))
}

/// Total length of the wall, used to check arclength sampling.
pub fn wall_length(c: &Curve) -> Result<f64> {
    Ok(compute_geometry(c)?.length)
}
