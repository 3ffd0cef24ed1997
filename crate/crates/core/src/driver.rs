//! Run configuration, the time loop with collision rollback, and the files a
//! run writes: snapshots, a manifest, JSON-lines diagnostics and checkpoints.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collision::{detect, min_gaps, CollisionReport, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::evolve::{Coupling, Evolver, SchemeConfig, StepReport, SystemState};
use crate::geometry::{spectral::is_power_of_two, Curve};
use crate::kernels::{Vesicle, WallSet};
use crate::nearsing::NearParams;
use crate::quadrature::AlpertRule;
use crate::scenarios::{far_field, initial_configuration, wall_geometry, FlowKind, ScenarioConfig};

fn d_n() -> usize {
    32
}
fn d_n_wall() -> usize {
    256
}
fn d_order() -> u8 {
    1
}
fn d_coupling() -> Coupling {
    Coupling::SemiImplicit
}
fn d_dt() -> f64 {
    0.01
}
fn d_horizon() -> f64 {
    1.0
}
fn d_tol() -> f64 {
    1e-12
}
fn d_maxit() -> usize {
    300
}
fn d_true() -> bool {
    true
}
fn d_collision_tol() -> f64 {
    DEFAULT_TOLERANCE
}
fn d_floor() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    /// Points per vesicle.
    #[serde(default = "d_n")]
    pub n: usize,
    /// Points per wall component.
    #[serde(default = "d_n_wall")]
    pub n_wall: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { n: d_n(), n_wall: d_n_wall() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionPolicy {
    /// Roll back to the last checkpoint and halve the step.
    Halve,
    /// End the run at the first collision.
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(default = "d_order")]
    pub order: u8,
    #[serde(default = "d_coupling")]
    pub coupling: Coupling,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_horizon")]
    pub horizon: f64,
    #[serde(default = "d_tol")]
    pub gmres_tol: f64,
    #[serde(default = "d_maxit")]
    pub gmres_maxit: usize,
    #[serde(default = "d_true")]
    pub preconditioner: bool,
    #[serde(default = "d_true")]
    pub near_singular: bool,
    #[serde(default = "d_policy")]
    pub on_collision: CollisionPolicy,
    #[serde(default = "d_collision_tol")]
    pub collision_tolerance: f64,
    #[serde(default = "d_floor")]
    pub dt_floor: f64,
    /// Stop once the area error exceeds this value.
    #[serde(default)]
    pub max_area_error: Option<f64>,
    /// Near-zone stencil points, on-curve interpolation nodes and stencil
    /// spacing in units of `h`.
    #[serde(default = "d_near_m")]
    pub near_m: usize,
    #[serde(default = "d_near_m")]
    pub near_n_int: usize,
    #[serde(default = "d_spacing")]
    pub spacing_factor: f64,
}

fn d_near_m() -> usize {
    NearParams::default().m
}
fn d_spacing() -> f64 {
    NearParams::default().spacing_factor
}

fn d_policy() -> CollisionPolicy {
    CollisionPolicy::Halve
}

impl Default for SchemeSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Steps between snapshots; 0 writes only the initial and final ones.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub dump_linear_system: bool,
}

/// A whole run, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            scenario,
            discretization: Discretization::default(),
            scheme: SchemeSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every offending field at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = self.scenario.validate();
        let d = &self.discretization;
        if !is_power_of_two(d.n) {
            errs.push(format!("discretization.n must be a power of two, got {}", d.n));
        } else if d.n < AlpertRule::MIN_NODES {
            errs.push(format!("discretization.n must be at least {}, got {}", AlpertRule::MIN_NODES, d.n));
        }
        if self.scenario.kind == FlowKind::Confined && !is_power_of_two(d.n_wall) {
            errs.push(format!("discretization.n_wall must be a power of two, got {}", d.n_wall));
        }
        if let Err(Error::Config(e)) = self.scheme_config().validate() {
            errs.extend(e.into_iter().map(|m| format!("scheme.{m}")));
        }
        let s = &self.scheme;
        if !(s.horizon > 0.0) {
            errs.push(format!("scheme.horizon must be positive, got {}", s.horizon));
        }
        if !(s.collision_tolerance > 0.0 && s.collision_tolerance < 0.5) {
            errs.push(format!("scheme.collision_tolerance must be in (0, 0.5), got {}", s.collision_tolerance));
        }
        if s.near_m < 1 {
            errs.push("scheme.near_m must be at least 1".into());
        }
        if s.near_n_int < 2 || s.near_n_int > d.n {
            errs.push(format!("scheme.near_n_int must lie in [2, n], got {}", s.near_n_int));
        }
        if !(s.spacing_factor > 1.0) {
            errs.push(format!("scheme.spacing_factor must exceed 1, got {}", s.spacing_factor));
        }
        if !(s.dt_floor > 0.0) {
            errs.push(format!("scheme.dt_floor must be positive, got {}", s.dt_floor));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let s = &self.scheme;
        SchemeConfig {
            order: s.order,
            coupling: s.coupling,
            dt: s.dt,
            gmres_tol: s.gmres_tol,
            gmres_maxit: s.gmres_maxit,
            preconditioner: s.preconditioner,
            near_singular: s.near_singular,
            near: NearParams { m: s.near_m, n_int: s.near_n_int, spacing_factor: s.spacing_factor },
            mu0: self.scenario.mu0,
        }
    }
}

/// One line of `diagnostics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub e_a: f64,
    pub e_l: f64,
    pub gmres_iters: usize,
    pub min_gap_vesicle: Option<f64>,
    pub min_gap_wall: Option<f64>,
    /// Collisions and failed steps so far.
    pub collision_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Collided { step: usize, t: f64 },
    AreaErrorExceeded { step: usize, t: f64 },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub state: SystemState,
    pub records: Vec<DiagnosticRecord>,
    pub events: Vec<String>,
}

/// Everything needed to continue a run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub time: f64,
    pub step: usize,
    pub dt: f64,
    pub events: usize,
    pub positions: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub previous: Option<(Vec<Vec<f64>>, f64)>,
    pub eta: Option<Vec<Vec<f64>>>,
    pub lambda: Vec<[f64; 2]>,
    pub xi: Vec<f64>,
    pub reference: Vec<(f64, f64)>,
}

impl Checkpoint {
    pub fn capture(state: &SystemState, dt: f64, events: usize) -> Self {
        Self {
            time: state.time,
            step: state.step,
            dt,
            events,
            positions: state.vesicles.iter().map(|v| v.positions()).collect(),
            sigma: state.vesicles.iter().map(|v| v.sigma.clone()).collect(),
            velocities: state.velocities.clone(),
            previous: state.previous.clone(),
            eta: state.walls.as_ref().map(|w| w.eta.clone()),
            lambda: state.lambda.clone(),
            xi: state.xi.clone(),
            reference: state.reference.clone(),
        }
    }

    pub fn restore(&self, cfg: &RunConfig) -> Result<SystemState> {
        let vesicles = self
            .positions
            .iter()
            .zip(&self.sigma)
            .map(|(x, s)| {
                let n = s.len();
                let c = Curve::new_unoriented(x[..n].to_vec(), x[n..].to_vec())?;
                let mut v = Vesicle::new(c, cfg.scenario.nu, cfg.scenario.kappa_b)?;
                v.sigma = s.clone();
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        let walls = match &self.eta {
            Some(eta) => {
                let mut w = wall_geometry(&cfg.scenario, cfg.discretization.n_wall)?;
                w.eta = eta.clone();
                Some(w)
            }
            None => None,
        };
        Ok(SystemState {
            time: self.time,
            step: self.step,
            vesicles,
            velocities: self.velocities.clone(),
            previous: self.previous.clone(),
            walls,
            lambda: self.lambda.clone(),
            xi: self.xi.clone(),
            reference: self.reference.clone(),
        })
    }
}

/// Snapshot CSV: `body_id,kind,node,x,y,sigma_or_eta`. Wall rows carry `|η|`.
pub fn snapshot_csv(state: &SystemState) -> String {
    let mut out = String::from("body_id,kind,node,x,y,sigma_or_eta\n");
    for (p, v) in state.vesicles.iter().enumerate() {
        for k in 0..v.n() {
            let _ = writeln!(out, "{p},vesicle,{k},{:e},{:e},{:e}", v.curve.x[k], v.curve.y[k], v.sigma[k]);
        }
    }
    if let Some(w) = &state.walls {
        for (q, (c, eta)) in w.components.iter().zip(&w.eta).enumerate() {
            let n = c.n();
            for k in 0..n {
                let mag = eta[k].hypot(eta[n + k]);
                let _ = writeln!(out, "{q},wall,{k},{:e},{:e},{:e}", c.curve.x[k], c.curve.y[k], mag);
            }
        }
    }
    out
}

/// Curves of a snapshot: vesicles (with tensions) and wall components.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub vesicles: Vec<(Curve, Vec<f64>)>,
    pub walls: Vec<Curve>,
}

pub fn parse_snapshot(text: &str, origin: &Path) -> Result<Snapshot> {
    let err = |message: String| Error::Parse { path: origin.to_path_buf(), message };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "body_id,kind,node,x,y,sigma_or_eta" => {}
        Some(h) => return Err(err(format!("unexpected header `{h}`"))),
        None => return Err(err("empty snapshot".into())),
    }
    type Body = (Vec<f64>, Vec<f64>, Vec<f64>);
    let mut ves: Vec<Body> = Vec::new();
    let mut walls: Vec<Body> = Vec::new();
    for (row, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(err(format!("row {row}: expected 6 fields")));
        }
        let id: usize = f[0].parse().map_err(|_| err(format!("row {row}: bad body id")))?;
        let node: usize = f[2].parse().map_err(|_| err(format!("row {row}: bad node index")))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("row {row}: bad number `{s}`")));
        let (x, y, s) = (num(f[3])?, num(f[4])?, num(f[5])?);
        let bodies = match f[1] {
            "vesicle" => &mut ves,
            "wall" => &mut walls,
            k => return Err(err(format!("row {row}: unknown kind `{k}`"))),
        };
        if id > bodies.len() {
            return Err(err(format!("row {row}: body {id} out of order")));
        }
        if id == bodies.len() {
            bodies.push(Default::default());
        }
        let b = &mut bodies[id];
        if node != b.0.len() {
            return Err(err(format!("row {row}: node {node} out of order")));
        }
        b.0.push(x);
        b.1.push(y);
        b.2.push(s);
    }
    let vesicles = ves
        .into_iter()
        .map(|(x, y, s)| Ok((Curve::new_unoriented(x, y)?, s)))
        .collect::<Result<Vec<_>>>()?;
    let walls = walls.into_iter().map(|(x, y, _)| Curve::new(x, y)).collect::<Result<Vec<_>>>()?;
    Ok(Snapshot { vesicles, walls })
}

/// Collision report of a snapshot file.
pub fn check_snapshot(path: &Path, tolerance: f64) -> Result<CollisionReport> {
    let snap = parse_snapshot(&fs::read_to_string(path)?, path)?;
    let vesicles = snap
        .vesicles
        .into_iter()
        .map(|(c, s)| {
            let mut v = Vesicle::new(c, 1.0, 1.0)?;
            v.sigma = s;
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let walls = if snap.walls.is_empty() {
        None
    } else {
        let vel = snap.walls.iter().map(|c| vec![0.0; 2 * c.len()]).collect();
        Some(WallSet::new(snap.walls, vel, 1.0)?)
    };
    detect(&vesicles, walls.as_ref(), &NearParams::default(), tolerance)
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    file: String,
    step: usize,
    time: f64,
    dt: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    snapshots: &'a [ManifestEntry],
}

struct Sink {
    dir: PathBuf,
    diagnostics: BufWriter<File>,
    manifest: Vec<ManifestEntry>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let diagnostics = BufWriter::new(File::create(dir.join("diagnostics.jsonl"))?);
        Ok(Self { dir: dir.to_path_buf(), diagnostics, manifest: Vec::new() })
    }

    fn snapshot(&mut self, cfg: &RunConfig, state: &SystemState, dt: f64) -> Result<()> {
        let file = format!("snapshot_{:06}.csv", state.step);
        fs::write(self.dir.join(&file), snapshot_csv(state))?;
        if self.manifest.last().is_none_or(|m| m.step != state.step) {
            self.manifest.push(ManifestEntry { file, step: state.step, time: state.time, dt });
        }
        let m = Manifest { config: cfg, snapshots: &self.manifest };
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
        Ok(())
    }

    fn record(&mut self, r: &DiagnosticRecord) -> Result<()> {
        serde_json::to_writer(&mut self.diagnostics, r)?;
        self.diagnostics.write_all(b"\n")?;
        Ok(())
    }

    fn checkpoint(&self, c: &Checkpoint) -> Result<()> {
        fs::write(self.dir.join("checkpoint.json"), serde_json::to_string(c)?)?;
        Ok(())
    }

    fn dump(&self, step: usize, report: &StepReport) -> Result<()> {
        let mut s = String::from("index,rhs,solution\n");
        for (i, (b, x)) in report.rhs.iter().zip(&report.solution).enumerate() {
            let _ = writeln!(s, "{i},{b:e},{x:e}");
        }
        fs::write(self.dir.join(format!("linear_system_{step:06}.csv")), s)?;
        let mut r = String::from("iteration,residual\n");
        for (i, v) in report.residuals.iter().enumerate() {
            let _ = writeln!(r, "{i},{v:e}");
        }
        fs::write(self.dir.join(format!("residuals_{step:06}.csv")), r)?;
        Ok(())
    }
}

/// Step failures that a smaller step may cure.
fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::GmresNotConverged { .. }
            | Error::StencilCrossing { .. }
            | Error::DegenerateCurve { .. }
            | Error::Orientation(_)
            | Error::SingularBlock(_)
            | Error::AmbiguousProjection(_)
            | Error::InvalidArgument(_)
    )
}

/// Owns the state of a run and advances it under the collision policy.
pub struct Driver {
    pub config: RunConfig,
    evolver: Evolver,
    state: SystemState,
    checkpoint: Checkpoint,
    dt: f64,
    events: Vec<String>,
    event_count: usize,
    records: Vec<DiagnosticRecord>,
    sink: Option<Sink>,
}

impl Driver {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let state = initial_configuration(&config.scenario, config.discretization.n, config.discretization.n_wall)?;
        Self::with_state(config, state, 0)
    }

    /// Continues from a checkpoint written by an earlier run.
    pub fn resume(config: RunConfig, checkpoint: &Checkpoint) -> Result<Self> {
        config.validate()?;
        let state = checkpoint.restore(&config)?;
        let mut d = Self::with_state(config, state, checkpoint.events)?;
        d.dt = checkpoint.dt;
        d.checkpoint = checkpoint.clone();
        Ok(d)
    }

    pub fn with_state(config: RunConfig, state: SystemState, event_count: usize) -> Result<Self> {
        let evolver = Evolver::new(config.scheme_config(), far_field(&config.scenario), state.walls.as_ref())?;
        if config.scheme.order == 2 && config.scheme.coupling == Coupling::Explicit {
            log::warn!("second-order time stepping with explicit coupling is unstable");
        }
        let dt = config.scheme.dt;
        let sink = config.output.dir.as_deref().map(Sink::new).transpose()?;
        let checkpoint = Checkpoint::capture(&state, dt, event_count);
        Ok(Self { config, evolver, state, checkpoint, dt, events: Vec::new(), event_count, records: Vec::new(), sink })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn records(&self) -> &[DiagnosticRecord] {
        &self.records
    }

    fn rollback(&mut self, reason: String) -> Result<()> {
        self.event_count += 1;
        log::warn!("t = {:.6}: {reason}; restarting from t = {:.6} with dt = {:e}", self.state.time, self.checkpoint.time, self.dt / 2.0);
        self.events.push(reason);
        self.dt /= 2.0;
        if self.dt < self.config.scheme.dt_floor {
            return Err(Error::TimeStepUnderflow { dt: self.dt, floor: self.config.scheme.dt_floor });
        }
        self.state = self.checkpoint.restore(&self.config)?;
        self.state.previous = None;
        Ok(())
    }

    fn remaining(&self) -> f64 {
        self.config.scheme.horizon - self.state.time
    }

    /// Runs to the horizon, or until the collision/error policy stops it.
    pub fn run(&mut self) -> Result<RunOutcome> {
        let tol = 1e-9 * self.config.scheme.dt;
        if let Some(s) = &mut self.sink {
            s.snapshot(&self.config, &self.state, self.dt)?;
        }
        let status = loop {
            if self.remaining() <= tol {
                break RunStatus::Completed;
            }
            // a remainder equal to dt up to roundoff keeps dt, so BDF2 history stays valid
            let dt = if self.remaining() < self.dt * (1.0 - 1e-9) { self.remaining() } else { self.dt };
            let (next, report) = match self.evolver.step(&self.state, dt) {
                Ok(r) => r,
                Err(e) if recoverable(&e) => {
                    if self.config.scheme.on_collision == CollisionPolicy::Stop {
                        self.event_count += 1;
                        self.events.push(format!("step failed: {e}"));
                        break RunStatus::Collided { step: self.state.step + 1, t: self.state.time + dt };
                    }
                    self.rollback(format!("step failed: {e}"))?;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let walls = next.walls.as_ref();
            let report_c = detect(&next.vesicles, walls, &self.evolver.cfg.near, self.config.scheme.collision_tolerance)?;
            if report_c.collided {
                let msg = format!(
                    "collision at t = {:.6}: {} node(s), max deviation {:.3}",
                    next.time,
                    report_c.offending.len(),
                    report_c.max_deviation
                );
                if self.config.scheme.on_collision == CollisionPolicy::Stop {
                    self.event_count += 1;
                    self.events.push(msg);
                    self.state = next;
                    self.push_record(dt, report.gmres_iterations)?;
                    break RunStatus::Collided { step: self.state.step, t: self.state.time };
                }
                self.rollback(msg)?;
                continue;
            }
            if self.config.output.dump_linear_system {
                if let Some(s) = &self.sink {
                    s.dump(next.step, &report)?;
                }
            }
            self.state = next;
            let rec = self.push_record(dt, report.gmres_iterations)?;
            let every = if self.config.scheme.order == 2 { 2 } else { 1 };
            if self.state.step % every == 0 {
                self.checkpoint = Checkpoint::capture(&self.state, self.dt, self.event_count);
                if let Some(s) = &self.sink {
                    s.checkpoint(&self.checkpoint)?;
                }
            }
            let every = self.config.output.snapshot_every;
            if every > 0 && self.state.step % every == 0 {
                if let Some(s) = &mut self.sink {
                    s.snapshot(&self.config, &self.state, self.dt)?;
                }
            }
            if let Some(limit) = self.config.scheme.max_area_error {
                if rec.e_a > limit {
                    break RunStatus::AreaErrorExceeded { step: rec.step, t: rec.t };
                }
            }
        };
        if let Some(s) = &mut self.sink {
            s.snapshot(&self.config, &self.state, self.dt)?;
            s.diagnostics.flush()?;
        }
        Ok(RunOutcome {
            status,
            state: self.state.clone(),
            records: self.records.clone(),
            events: self.events.clone(),
        })
    }

    fn push_record(&mut self, dt: f64, gmres_iters: usize) -> Result<DiagnosticRecord> {
        let (e_a, e_l) = self.state.conservation_errors();
        let (gv, gw) = min_gaps(&self.state.vesicles, self.state.walls.as_ref())?;
        let rec = DiagnosticRecord {
            step: self.state.step,
            t: self.state.time,
            dt,
            e_a,
            e_l,
            gmres_iters,
            min_gap_vesicle: gv,
            min_gap_wall: gw,
            collision_events: self.event_count,
        };
        log::info!("step {} t = {:.5} e_A = {:.3e} e_L = {:.3e} gmres = {}", rec.step, rec.t, e_a, e_l, gmres_iters);
        if let Some(s) = &mut self.sink {
            s.record(&rec)?;
        }
        self.records.push(rec.clone());
        Ok(rec)
    }
}

/// Runs a configuration to completion.
pub fn run(config: RunConfig) -> Result<RunOutcome> {
    Driver::new(config)?.run()
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n: usize,
    pub dt: f64,
    pub e_a: f64,
    pub e_l: f64,
    /// Final minimum vesicle gap, and its error against the finest level.
    pub gap: Option<f64>,
    pub e_gap: Option<f64>,
    /// Orders against the previous level.
    pub order_a: Option<f64>,
    pub order_l: Option<f64>,
}

/// Least-squares slope of `−log e` against `log 2^level`.
pub fn fitted_order(errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        errors.iter().enumerate().map(|(i, e)| (i as f64 * 2f64.ln(), -e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    let mut s = String::from("level,n,dt,e_A,e_L,gap,e_gap,order_A,order_L\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{},{},{},{}",
            r.level,
            r.n,
            r.dt,
            r.e_a,
            r.e_l,
            opt(r.gap),
            opt(r.e_gap),
            opt(r.order_a),
            opt(r.order_l)
        );
    }
    if rows.len() >= 2 {
        let ea: Vec<f64> = rows.iter().map(|r| r.e_a).collect();
        let el: Vec<f64> = rows.iter().map(|r| r.e_l).collect();
        let _ = writeln!(s, "fit,,,,,,,{:e},{:e}", fitted_order(&ea), fitted_order(&el));
    }
    s
}

/// Runs `levels` refinements of `(N, Δt)`, doubling `N` and halving `Δt`.
///
/// The table is rewritten after every level, so a failing level leaves the
/// finished rows on disk.
pub fn converge(config: &RunConfig, levels: usize, out: Option<&Path>) -> Result<Vec<ConvergenceRow>> {
    if levels < 2 {
        return Err(Error::Config(vec![format!("levels must be at least 2, got {levels}")]));
    }
    config.validate()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let mut cfg = config.clone();
        cfg.discretization.n = config.discretization.n << level;
        cfg.scheme.dt = config.scheme.dt / (1 << level) as f64;
        cfg.output.dir = out.map(|d| d.join(format!("level_{level}")));
        cfg.output.snapshot_every = 0;
        let outcome = run(cfg.clone())?;
        let last = outcome.records.last();
        let (e_a, e_l) = outcome.state.conservation_errors();
        let prev = rows.last();
        let order = |e: f64, p: Option<f64>| p.map(|p| (p / e).log2());
        rows.push(ConvergenceRow {
            level,
            n: cfg.discretization.n,
            dt: cfg.scheme.dt,
            e_a,
            e_l,
            gap: last.and_then(|r| r.min_gap_vesicle),
            e_gap: None,
            order_a: order(e_a, prev.map(|r| r.e_a)),
            order_l: order(e_l, prev.map(|r| r.e_l)),
        });
        if let Some(dir) = out {
            fs::write(dir.join("convergence.csv"), convergence_csv(&rows))?;
        }
    }
    if let Some(g_ref) = rows.last().and_then(|r| r.gap) {
        for r in rows.iter_mut() {
            r.e_gap = r.gap.map(|g| (g - g_ref).abs());
        }
    }
    if let Some(dir) = out {
        fs::write(dir.join("convergence.csv"), convergence_csv(&rows))?;
    }
    Ok(rows)
}
