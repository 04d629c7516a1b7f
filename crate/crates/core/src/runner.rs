//! Configuration-driven benchmark runs: build clouds, weights, solve, report.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector2;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernels::{InfluenceFunction, InfluenceKind};
use crate::material::Material;
use crate::operator::{Formulation, GammaWeights};
use crate::pointcloud::{
    build_families, generate_polar_grid, generate_uniform_grid, load_pointcloud, perturb_then_refine, trim_collar,
    FamilyGraph, MetricSpace, Point, PointCloud, Role,
};
use crate::solver::{self, Problem, Solution};
use crate::verification::{rms_error, ConvergenceReport, ExactField, ManufacturedConstants, ReportRow};

/// Prefix of environment variables that override top-level config keys.
pub const ENV_PREFIX: &str = "PDMF_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Manufactured,
    PlateHole,
    PatchTest,
}

impl Benchmark {
    pub fn as_str(self) -> &'static str {
        match self {
            Benchmark::Manufactured => "manufactured",
            Benchmark::PlateHole => "plate_hole",
            Benchmark::PatchTest => "patch_test",
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "manufactured" => Ok(Benchmark::Manufactured),
            "plate_hole" => Ok(Benchmark::PlateHole),
            "patch_test" => Ok(Benchmark::PatchTest),
            other => Err(Error::Validation(format!("unknown benchmark {other:?}"))),
        }
    }
}

/// Point-cloud family; `File` with an empty path takes the ladder from
/// `files`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridKind {
    Uniform,
    Perturbed,
    Polar,
    File(PathBuf),
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridKind::Uniform => f.write_str("uniform"),
            GridKind::Perturbed => f.write_str("perturbed"),
            GridKind::Polar => f.write_str("polar"),
            GridKind::File(p) if p.as_os_str().is_empty() => f.write_str("file"),
            GridKind::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => Ok(GridKind::Uniform),
            "perturbed" => Ok(GridKind::Perturbed),
            "polar" => Ok(GridKind::Polar),
            "file" => Ok(GridKind::File(PathBuf::new())),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(GridKind::File(PathBuf::from(p))),
                _ => Err(Error::Validation(format!("unknown grid {s:?}"))),
            },
        }
    }
}

impl<'de> Deserialize<'de> for GridKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn deserialize_formulation<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Formulation, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

fn deserialize_formulations<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Vec<Formulation>>, D::Error> {
    let v: Option<Vec<String>> = Option::deserialize(d)?;
    v.map(|v| v.iter().map(|s| s.parse().map_err(serde::de::Error::custom)).collect())
        .transpose()
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub youngs: f64,
    pub poisson: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self { youngs: 100_000.0, poisson: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateConfig {
    pub tension: f64,
    pub radius: f64,
    pub size: f64,
}

impl Default for PlateConfig {
    fn default() -> Self {
        Self { tension: 1.0, radius: 1.0, size: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Axes of a sweep; missing axes take the single value of the run config.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, deserialize_with = "deserialize_formulations")]
    pub formulation: Option<Vec<Formulation>>,
    pub order: Option<Vec<usize>>,
    pub delta: Option<Vec<f64>>,
    pub grid: Option<Vec<GridKind>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    #[serde(deserialize_with = "deserialize_formulation")]
    pub formulation: Formulation,
    pub order: usize,
    pub grid: GridKind,
    /// Horizon as a multiple of `h`, or in cells for polar grids.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub seed: u64,
    /// Spacings for uniform and perturbed grids.
    #[serde(default)]
    pub ladder: Vec<f64>,
    /// Cells per direction for polar grids.
    #[serde(default)]
    pub polar_cells: Vec<usize>,
    #[serde(default)]
    pub files: Vec<PathBuf>,
    /// Perturbation standard deviation; defaults to 15% of the base spacing.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub plate: PlateConfig,
    #[serde(default)]
    pub constants: Option<ConstantsConfig>,
    #[serde(default)]
    pub expected_rate: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1) as u64)
                .unwrap_or(0);
            Error::Parse { line, message: e.message().to_string() }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Applies `PDMF_<KEY>` overrides for scalar top-level keys.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else { continue };
            let bad = |what: &str| Error::Validation(format!("{key}={value:?} is not a valid {what}"));
            match name.to_ascii_lowercase().as_str() {
                "benchmark" => self.benchmark = value.parse()?,
                "formulation" => self.formulation = value.parse().map_err(|_| bad("formulation"))?,
                "order" => self.order = value.parse().map_err(|_| bad("order"))?,
                "grid" => self.grid = value.parse()?,
                "delta" => self.delta = Some(value.parse().map_err(|_| bad("horizon"))?),
                "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
                "poisson" => self.material.poisson = value.parse().map_err(|_| bad("Poisson's ratio"))?,
                "youngs" => self.material.youngs = value.parse().map_err(|_| bad("Young's modulus"))?,
                "output" => self.output = Some(PathBuf::from(value)),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn material(&self) -> Result<Material> {
        Material::plane_strain(self.material.youngs, self.material.poisson)
            .map_err(|e| Error::Validation(e.to_string()))
    }

    pub fn exact(&self) -> ExactField {
        match self.benchmark {
            Benchmark::Manufactured => ExactField::Manufactured(
                self.constants
                    .map(|c| ManufacturedConstants { a: c.a, b: c.b, c: c.c, d: c.d })
                    .unwrap_or_default(),
            ),
            Benchmark::PlateHole => ExactField::PlateHole { tension: self.plate.tension, radius: self.plate.radius },
            Benchmark::PatchTest => ExactField::Affine {
                gradient: nalgebra::Matrix2::new(1e-3, 2e-3, -5e-4, 1.5e-3),
                shift: Vector2::new(1e-3, -2e-3),
            },
        }
    }

    /// Horizon multiplier, falling back to the default for grid and order.
    pub fn delta(&self) -> Result<f64> {
        let d = match self.delta {
            Some(d) => d,
            None => default_delta(&self.grid, self.order)?,
        };
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Validation(format!("horizon must be positive, got {d}")));
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.order) {
            return Err(Error::Validation(format!("order must be 1, 2 or 3, got {}", self.order)));
        }
        self.material()?;
        self.delta()?;
        let plate = matches!(self.benchmark, Benchmark::PlateHole);
        match &self.grid {
            GridKind::Uniform | GridKind::Perturbed => {
                if plate {
                    return Err(Error::Validation("plate_hole needs a polar or file grid".into()));
                }
                if self.ladder.is_empty() {
                    return Err(Error::Validation("ladder must list at least one spacing".into()));
                }
                if self.ladder.iter().any(|h| !(*h > 0.0)) {
                    return Err(Error::Validation("ladder spacings must be positive".into()));
                }
            }
            GridKind::Polar => {
                if !plate {
                    return Err(Error::Validation("polar grids are only defined for plate_hole".into()));
                }
                if self.polar_cells.is_empty() {
                    return Err(Error::Validation("polar_cells must list at least one resolution".into()));
                }
            }
            GridKind::File(p) => {
                if p.as_os_str().is_empty() && self.files.is_empty() {
                    return Err(Error::Validation("grid = \"file\" needs a files list".into()));
                }
            }
        }
        if matches!(self.grid, GridKind::Perturbed) {
            for (k, w) in self.ladder.windows(2).enumerate() {
                if (w[1] - 0.5 * w[0]).abs() > 1e-9 * w[0] {
                    return Err(Error::Validation(format!(
                        "perturbed ladders halve the spacing each level; level {} has {}",
                        k + 1,
                        w[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Single-run configs of the sweep cross product, in formulation,
    /// order, delta, grid order.
    pub fn expand_sweep(&self) -> Result<Vec<RunConfig>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![RunConfig { sweep: None, ..self.clone() }]);
        };
        let forms = sweep.formulation.clone().unwrap_or_else(|| vec![self.formulation]);
        let orders = sweep.order.clone().unwrap_or_else(|| vec![self.order]);
        let deltas: Vec<Option<f64>> = match &sweep.delta {
            Some(d) => d.iter().map(|v| Some(*v)).collect(),
            None => vec![self.delta],
        };
        let grids = sweep.grid.clone().unwrap_or_else(|| vec![self.grid.clone()]);
        let mut out = Vec::new();
        for &formulation in &forms {
            for &order in &orders {
                for &delta in &deltas {
                    for grid in &grids {
                        out.push(RunConfig {
                            formulation,
                            order,
                            delta,
                            grid: grid.clone(),
                            sweep: None,
                            ..self.clone()
                        });
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Validation("sweep matrix is empty".into()));
        }
        Ok(out)
    }
}

/// Default horizons per order: square grids in units of `h`, polar grids in
/// cells, imported (triangular) clouds in units of their average spacing.
pub fn default_delta(grid: &GridKind, order: usize) -> Result<f64> {
    let table = match grid {
        GridKind::Uniform | GridKind::Perturbed => [2.5, 3.5, 4.5],
        GridKind::Polar => [1.75, 2.75, 3.75],
        GridKind::File(_) => [2.25, 3.25, 4.25],
    };
    order
        .checked_sub(1)
        .and_then(|k| table.get(k).copied())
        .ok_or_else(|| Error::Validation(format!("order must be 1, 2 or 3, got {order}")))
}

/// One refinement level ready for weights and assembly.
#[derive(Debug, Clone)]
pub struct Level {
    pub cloud: PointCloud,
    pub h: f64,
    /// Absolute horizon in the metric space.
    pub delta: f64,
    pub space: MetricSpace,
}

const SQUARE_LO: f64 = -1.0;
const SQUARE_HI: f64 = 1.0;

/// Builds every level of the configured ladder.
pub fn build_levels(cfg: &RunConfig) -> Result<Vec<Level>> {
    cfg.validate()?;
    let mult = cfg.delta()?;
    let lo = Point::new(SQUARE_LO, SQUARE_LO);
    let hi = Point::new(SQUARE_HI, SQUARE_HI);
    match &cfg.grid {
        GridKind::Uniform => cfg
            .ladder
            .iter()
            .map(|&h| {
                let cloud = generate_uniform_grid(lo, hi, h, mult * h).map_err(as_validation)?;
                Ok(Level { cloud, h, delta: mult * h, space: MetricSpace::Physical })
            })
            .collect(),
        GridKind::Perturbed => {
            let h0 = cfg.ladder[0];
            let base = generate_uniform_grid(lo, hi, h0, mult * h0).map_err(as_validation)?;
            let sigma = cfg.sigma.unwrap_or(0.15 * h0);
            let clouds = perturb_then_refine(&base, sigma, cfg.ladder.len() - 1, cfg.seed).map_err(as_validation)?;
            clouds
                .iter()
                .zip(&cfg.ladder)
                .map(|(c, &h)| {
                    Ok(Level {
                        cloud: trim_collar(c, mult * h)?,
                        h,
                        delta: mult * h,
                        space: MetricSpace::Physical,
                    })
                })
                .collect()
        }
        GridKind::Polar => cfg
            .polar_cells
            .iter()
            .map(|&n| {
                let collar = mult.ceil() as usize;
                let cloud = generate_polar_grid(cfg.plate.radius, cfg.plate.size, n, n, collar)
                    .map_err(as_validation)?;
                let h = cloud.h_avg;
                Ok(Level { cloud, h, delta: mult, space: MetricSpace::Parametric })
            })
            .collect(),
        GridKind::File(p) => {
            let paths: Vec<PathBuf> = if p.as_os_str().is_empty() { cfg.files.clone() } else { vec![p.clone()] };
            paths
                .iter()
                .map(|path| {
                    let cloud = load_pointcloud(path)?;
                    let h = cloud.h_avg;
                    Ok(Level { cloud, h, delta: mult * h, space: MetricSpace::Physical })
                })
                .collect()
        }
    }
}

fn as_validation(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Validation(m),
        other => other,
    }
}

/// Result of solving one level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub level: Level,
    pub families: FamilyGraph,
    pub weights: GammaWeights,
    pub solution: Solution,
    pub exact: Vec<Option<Vector2<f64>>>,
    /// RMS displacement error over bulk nodes, relative to the benchmark's
    /// displacement scale for the plate.
    pub rms: f64,
}

/// Weights for one level.
pub fn level_weights(level: &Level, formulation: Formulation, order: usize) -> Result<(FamilyGraph, GammaWeights)> {
    let families = build_families(&level.cloud, level.delta, level.space)?;
    let influence = InfluenceFunction::new(InfluenceKind::CubicBspline, level.delta)?;
    let weights = GammaWeights::build(&level.cloud, &families, formulation.scheme(), order, &influence)?;
    Ok((families, weights))
}

/// Solves one level with exact Dirichlet data and body force.
pub fn solve_level(level: Level, formulation: Formulation, order: usize, material: Material, exact: ExactField) -> Result<LevelOutcome> {
    let (families, weights) = level_weights(&level, formulation, order)?;
    let cloud = &level.cloud;
    let exact_u: Vec<Option<Vector2<f64>>> = cloud
        .nodes
        .iter()
        .map(|n| match n.role {
            Role::FreeSurface => Ok(None),
            _ => exact.displacement(&n.position, &material).map(Some),
        })
        .collect::<Result<_>>()?;
    let problem = Problem::new(cloud, &families, &weights, material, formulation)?;
    let dirichlet = |p: &Point| exact.displacement(p, &material).unwrap_or_else(|_| Vector2::zeros());
    let body = |p: &Point| exact.body_force(p, &material);
    let solution = solver::solve(&problem, &body, &dirichlet)?;

    let bulk = cloud.ids_with(Role::Bulk);
    let positions: Vec<Point> = cloud.nodes.iter().map(|n| n.position).collect();
    let mut rms = rms_error(&solution.displacement, &|p| dirichlet(p), &positions, &bulk)?;
    if let ExactField::PlateHole { .. } = exact {
        let scale = bulk
            .iter()
            .filter_map(|&i| exact_u[i].map(|u| u.norm()))
            .fold(0.0, f64::max);
        rms /= scale;
    }
    Ok(LevelOutcome { level, families, weights, solution, exact: exact_u, rms })
}

/// Outcome of a full ladder: per-level results or the first failure.
#[derive(Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub levels: Vec<LevelOutcome>,
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn errors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.rms).collect()
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.level.h).collect()
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let cfg = &self.config;
        let delta = match (cfg.delta(), &cfg.grid) {
            (Ok(d), GridKind::Polar) => format!("{d}"),
            (Ok(d), _) => format!("{d}h"),
            (Err(_), _) => String::new(),
        };
        let base = |level: usize, h: f64| ReportRow {
            case: cfg.benchmark.as_str().into(),
            formulation: cfg.formulation.as_str().into(),
            order: cfg.order,
            level,
            h,
            rms: None,
            rate: None,
            grid: cfg.grid.to_string(),
            delta: delta.clone(),
            poisson: cfg.material.poisson,
            seed: cfg.seed,
            status: "ok".into(),
        };
        let mut rows: Vec<ReportRow> = self
            .levels
            .iter()
            .enumerate()
            .map(|(k, l)| ReportRow { rms: Some(l.rms), ..base(k, l.level.h) })
            .collect();
        ConvergenceReport::fill_rates(&mut rows);
        if let Some(e) = &self.error {
            rows.push(ReportRow {
                status: format!("error: {e}"),
                ..base(self.levels.len(), f64::NAN)
            });
        } else if let (Some(expected), true) = (cfg.expected_rate, rows.len() > 1) {
            let last = rows.last_mut().expect("non-empty");
            last.status = match last.rate {
                Some(r) if r >= expected => "pass".into(),
                _ => "fail".into(),
            };
        }
        rows
    }
}

/// Runs the ladder of a single (non-sweep) config. Failures are recorded in
/// the outcome; levels solved before the failure are kept.
pub fn run(cfg: &RunConfig) -> RunOutcome {
    let mut outcome = RunOutcome { config: cfg.clone(), levels: Vec::new(), error: None };
    let material = match cfg.material() {
        Ok(m) => m,
        Err(e) => {
            outcome.error = Some(e);
            return outcome;
        }
    };
    let levels = match build_levels(cfg) {
        Ok(l) => l,
        Err(e) => {
            outcome.error = Some(e);
            return outcome;
        }
    };
    for level in levels {
        match solve_level(level, cfg.formulation, cfg.order, material, cfg.exact()) {
            Ok(l) => outcome.levels.push(l),
            Err(e) => {
                outcome.error = Some(e);
                break;
            }
        }
    }
    outcome
}

/// Runs every cell of the sweep matrix (or the single config).
pub fn sweep(cfg: &RunConfig) -> Result<Vec<RunOutcome>> {
    Ok(cfg.expand_sweep()?.iter().map(run).collect())
}

pub fn report(outcomes: &[RunOutcome]) -> ConvergenceReport {
    ConvergenceReport { rows: outcomes.iter().flat_map(|o| o.rows()).collect() }
}

fn run_tag(cfg: &RunConfig, level: usize) -> String {
    let delta = cfg.delta().map(|d| format!("{d}")).unwrap_or_default();
    let grid = match &cfg.grid {
        GridKind::File(_) => "file".to_string(),
        g => g.to_string(),
    };
    format!("{}_{}_n{}_{}_d{}_L{}", cfg.benchmark.as_str(), cfg.formulation, cfg.order, grid, delta, level)
}

/// Per-node `id,x,y,u1,u2,e1,e2`; free-surface nodes are skipped.
pub fn write_fields<W: Write>(outcome: &LevelOutcome, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["id", "x", "y", "u1", "u2", "e1", "e2"]).map_err(csv_err)?;
    for (i, node) in outcome.level.cloud.nodes.iter().enumerate() {
        let Some(exact) = outcome.exact[i] else { continue };
        let u = outcome.solution.displacement[i];
        let e = u - exact;
        w.write_record([
            node.id.to_string(),
            format!("{:e}", node.position.x),
            format!("{:e}", node.position.y),
            format!("{:e}", u[0]),
            format!("{:e}", u[1]),
            format!("{:e}", e[0]),
            format!("{:e}", e[1]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Bond weights `node,neighbor,family,g1,g2`.
pub fn write_weights<W: Write>(outcome: &LevelOutcome, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["node", "neighbor", "family", "g1", "g2"]).map_err(csv_err)?;
    let fam = &outcome.families;
    let sets = [("kinematic", &fam.kinematic, &outcome.weights.kinematic), ("force", &fam.force, &outcome.weights.force)];
    for i in 0..outcome.level.cloud.len() {
        for (name, lists, weights) in &sets {
            let Some(g) = &weights[i] else { continue };
            for (&j, g) in lists[i].iter().zip(g) {
                w.write_record([i.to_string(), j.to_string(), name.to_string(), format!("{:e}", g[0]), format!("{:e}", g[1])])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Plain-text diagnostics for every run and level.
pub fn write_diagnostics<W: Write>(outcomes: &[RunOutcome], mut out: W) -> Result<()> {
    for o in outcomes {
        let c = &o.config;
        writeln!(
            out,
            "run {} {} order={} grid={} delta={} nu={} seed={}",
            c.benchmark.as_str(),
            c.formulation,
            c.order,
            c.grid,
            c.delta().map(|d| d.to_string()).unwrap_or_default(),
            c.material.poisson,
            c.seed
        )?;
        for (k, l) in o.levels.iter().enumerate() {
            let d = &l.solution.diagnostics;
            let cloud = &l.level.cloud;
            writeln!(
                out,
                "  level {k}: nodes={} bulk={} dirichlet={} free={} h={:.6e} dofs={} nnz={} residual={:.3e} rms={:.6e}",
                cloud.len(),
                cloud.count(Role::Bulk),
                cloud.count(Role::Dirichlet),
                cloud.count(Role::FreeSurface),
                l.level.h,
                d.dofs,
                d.nnz,
                d.relative_residual(),
                l.rms
            )?;
        }
        if let Some(e) = &o.error {
            writeln!(out, "  failed at level {}: {e}", o.levels.len())?;
        }
    }
    Ok(())
}

/// Options of a CLI invocation beyond the config file.
#[derive(Debug, Clone, Default)]
pub struct OutputOptions {
    pub dir: PathBuf,
    pub dump_fields: bool,
    pub dump_weights: bool,
}

/// Writes `report.csv`, `diagnostics.txt`, and the requested dumps.
pub fn write_outputs(outcomes: &[RunOutcome], opts: &OutputOptions) -> Result<()> {
    fs::create_dir_all(&opts.dir)?;
    report(outcomes).write_csv(fs::File::create(opts.dir.join("report.csv"))?)?;
    write_diagnostics(outcomes, fs::File::create(opts.dir.join("diagnostics.txt"))?)?;
    for o in outcomes {
        for (k, l) in o.levels.iter().enumerate() {
            let tag = run_tag(&o.config, k);
            if opts.dump_fields {
                write_fields(l, fs::File::create(opts.dir.join(format!("fields_{tag}.csv")))?)?;
            }
            if opts.dump_weights {
                write_weights(l, fs::File::create(opts.dir.join(format!("weights_{tag}.csv")))?)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
benchmark = "manufactured"
formulation = "ba_rk"
order = 2
grid = "uniform"
ladder = [0.5, 0.25]
"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.formulation, Formulation::BaRk);
        assert_eq!(cfg.delta().unwrap(), 3.5);
        assert_eq!(cfg.material, MaterialConfig::default());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "benchmark = \"manufactured\"\nformulation = \"nope\"\norder = 2\ngrid = \"uniform\"\n";
        match RunConfig::from_toml(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn grid_names_round_trip() {
        for s in ["uniform", "perturbed", "polar", "file", "file:mesh/l1.csv"] {
            assert_eq!(s.parse::<GridKind>().unwrap().to_string(), s);
        }
        assert!("hex".parse::<GridKind>().is_err());
    }

    #[test]
    fn default_horizons() {
        assert_eq!(default_delta(&GridKind::Uniform, 1).unwrap(), 2.5);
        assert_eq!(default_delta(&GridKind::File(PathBuf::new()), 2).unwrap(), 3.25);
        assert_eq!(default_delta(&GridKind::Polar, 3).unwrap(), 3.75);
        assert!(default_delta(&GridKind::Polar, 4).is_err());
    }

    #[test]
    fn env_overrides_scalar_keys() {
        let mut cfg = RunConfig::from_toml(BASE).unwrap();
        cfg.apply_env([
            ("PDMF_ORDER".to_string(), "3".to_string()),
            ("PDMF_FORMULATION".to_string(), "gmls".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ])
        .unwrap();
        assert_eq!((cfg.order, cfg.formulation), (3, Formulation::Gmls));
        assert!(cfg.apply_env([("PDMF_ORDER".to_string(), "x".to_string())]).unwrap_err().is_validation());
    }

    #[test]
    fn validation_rejects_inconsistent_configs() {
        let mut cfg = RunConfig::from_toml(BASE).unwrap();
        cfg.order = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::from_toml(BASE).unwrap();
        cfg.grid = GridKind::Perturbed;
        cfg.ladder = vec![0.2, 0.15];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::from_toml(BASE).unwrap();
        cfg.benchmark = Benchmark::PlateHole;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sweep_is_a_cross_product() {
        let text = format!("{BASE}\n[sweep]\nformulation = [\"rk\", \"ba_rk\"]\ndelta = [2.75, 3.5, 4.25]\n");
        let cfg = RunConfig::from_toml(&text).unwrap();
        let cells = cfg.expand_sweep().unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[4].formulation, Formulation::BaRk);
        assert_eq!(cells[4].delta, Some(3.5));
        let empty = format!("{BASE}\n[sweep]\norder = []\n");
        assert!(RunConfig::from_toml(&empty).unwrap().expand_sweep().is_err());
        let none = RunConfig::from_toml(BASE).unwrap().expand_sweep().unwrap();
        assert_eq!(none.len(), 1);
    }

    #[test]
    fn uniform_ladder_builds_collar_of_one_horizon() {
        let cfg = RunConfig::from_toml(BASE).unwrap();
        let levels = build_levels(&cfg).unwrap();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[1].cloud.count(Role::Bulk), 64);
        assert!((levels[1].delta - 0.875).abs() < 1e-15);
    }
}
