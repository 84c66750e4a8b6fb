//! TOML run configuration. Every section is walked by hand so that unknown
//! keys are rejected and all problems are reported together.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::hysteresis::IgnitionRule;
use crate::initial::{build_initial_data, InitialData, ReactantProfile, SampleTable, TemperatureProfile};
use crate::kinetics::{ScalingKind, ScalingParams};
use crate::shs_sim::DiffusionScheme;
use crate::stability::DispersionProblem;
use crate::waves::PulsatingConfig;

use super::output::{parse_sample_table, read_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    SimulateEps,
    SimulateLimit,
    TravelingWave,
    PulsatingWave,
    Dispersion,
    EpsConvergence,
    Sweep,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::SimulateEps,
        Experiment::SimulateLimit,
        Experiment::TravelingWave,
        Experiment::PulsatingWave,
        Experiment::Dispersion,
        Experiment::EpsConvergence,
        Experiment::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SimulateEps => "simulate-eps",
            Experiment::SimulateLimit => "simulate-limit",
            Experiment::TravelingWave => "traveling-wave",
            Experiment::PulsatingWave => "pulsating-wave",
            Experiment::Dispersion => "dispersion",
            Experiment::EpsConvergence => "eps-convergence",
            Experiment::Sweep => "sweep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub cells: Vec<usize>,
    pub h: f64,
    pub boundary: Boundary,
    /// Coordinate of the left edge of the first axis.
    pub x_origin: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(&self.cells, self.h, self.boundary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub snapshot_every: Option<f64>,
    pub scheme: DiffusionScheme,
    pub strang: bool,
    pub ignition: IgnitionRule,
    pub fixed_point_ignition: bool,
    /// Start limit runs with a held cell at the front, see
    /// [`crate::hysteresis::LimitState::from_front_profile`].
    pub front_start: bool,
    pub audit_residuals: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingSpec {
    pub c0: f64,
    pub m: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSpec {
    pub speeds: Vec<f64>,
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub density: usize,
    pub ode_lambda: f64,
    pub ode_h: f64,
    pub ode_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    pub epsilons: Vec<f64>,
    pub dt_eps: f64,
    pub dt_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    /// Dotted key, e.g. `kinetics.epsilon`.
    pub parameter: String,
    pub values: Vec<Value>,
    /// Metric whose values must strictly decrease along the sweep.
    pub decreasing: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub snapshots: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, snapshots: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub grid: Option<GridSpec>,
    pub kinetics: Option<ScalingParams>,
    pub initial: Option<TemperatureProfile>,
    pub v0: ReactantProfile,
    /// Upper bound `C` of `v⁰`.
    pub v0_max: f64,
    pub numerics: Numerics,
    pub traveling: Option<TravelingSpec>,
    pub pulsating: Option<PulsatingConfig>,
    pub dispersion: Option<DispersionSpec>,
    pub convergence: Option<ConvergenceSpec>,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
    /// SHA-256 of the canonical form of the source table.
    pub hash: String,
    pub source: Table,
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn build_grid(&self) -> Result<Grid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config(vec!["missing [grid] section".into()]))?
            .build()
    }

    pub fn initial_data(&self) -> Result<(Grid, InitialData)> {
        let grid = self.build_grid()?;
        let spec = self.grid.as_ref().expect("grid checked above");
        let temp = self
            .initial
            .as_ref()
            .ok_or_else(|| Error::Config(vec!["missing [initial] section".into()]))?;
        let data = build_initial_data(&grid, temp, &self.v0, spec.x_origin, self.v0_max)?;
        Ok((grid, data))
    }
}

const SECTIONS: [&str; 10] = [
    "grid",
    "kinetics",
    "initial",
    "v0",
    "numerics",
    "traveling",
    "pulsating",
    "dispersion",
    "convergence",
    "sweep",
];

/// Key lookups on one section, remembering which keys were consumed.
struct Section<'a> {
    name: &'a str,
    table: &'a Table,
    seen: BTreeSet<&'a str>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, table: &'a Table) -> Self {
        Self {
            name,
            table,
            seen: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &'a str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.table.get(key)
    }

    fn f64(&mut self, errors: &mut Vec<String>, key: &'a str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                errors.push(format!("{}.{key}: expected a number, got {}", self.name, other.type_str()));
                None
            }
        }
    }

    fn req_f64(&mut self, errors: &mut Vec<String>, key: &'a str) -> Option<f64> {
        let present = self.table.contains_key(key);
        let v = self.f64(errors, key);
        if !present {
            errors.push(format!("{}.{key}: missing required key", self.name));
        }
        v
    }

    fn usize(&mut self, errors: &mut Vec<String>, key: &'a str) -> Option<usize> {
        match self.raw(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            other => {
                errors.push(format!(
                    "{}.{key}: expected a non-negative integer, got {}",
                    self.name,
                    other.type_str()
                ));
                None
            }
        }
    }

    fn bool(&mut self, errors: &mut Vec<String>, key: &'a str) -> Option<bool> {
        match self.raw(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                errors.push(format!("{}.{key}: expected a boolean, got {}", self.name, other.type_str()));
                None
            }
        }
    }

    fn str(&mut self, errors: &mut Vec<String>, key: &'a str) -> Option<&'a str> {
        match self.raw(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                errors.push(format!("{}.{key}: expected a string, got {}", self.name, other.type_str()));
                None
            }
        }
    }

    /// A number or an array of numbers.
    fn f64_list(&mut self, errors: &mut Vec<String>, key: &'a str) -> Option<Vec<f64>> {
        let name = self.name;
        match self.raw(key)? {
            Value::Float(x) => Some(vec![*x]),
            Value::Integer(i) => Some(vec![*i as f64]),
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for (k, item) in items.iter().enumerate() {
                    match item {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(i) => out.push(*i as f64),
                        other => {
                            errors.push(format!("{name}.{key}[{k}]: expected a number, got {}", other.type_str()));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                errors.push(format!("{name}.{key}: expected a number or array, got {}", other.type_str()));
                None
            }
        }
    }

    fn pair(&mut self, errors: &mut Vec<String>, key: &'a str) -> Option<(f64, f64)> {
        let list = self.f64_list(errors, key)?;
        if list.len() != 2 {
            errors.push(format!("{}.{key}: expected two numbers, got {}", self.name, list.len()));
            return None;
        }
        Some((list[0], list[1]))
    }

    fn finish(self, errors: &mut Vec<String>) {
        for key in self.table.keys() {
            if !self.seen.contains(key.as_str()) {
                errors.push(format!("{}.{key}: unknown key", self.name));
            }
        }
    }
}

fn section<'a>(root: &'a Table, name: &str, errors: &mut Vec<String>) -> Option<&'a Table> {
    match root.get(name)? {
        Value::Table(t) => Some(t),
        other => {
            errors.push(format!("[{name}] must be a table, got {}", other.type_str()));
            None
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = read_text(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    parse_config_table(table, base_dir)
}

/// SHA-256 (hex) of the canonical serialisation of a table.
pub fn config_hash(table: &Table) -> String {
    let canonical = toml::to_string(table).unwrap_or_default();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn parse_config_table(table: Table, base_dir: &Path) -> Result<RunConfig> {
    let mut errors = Vec::new();
    for key in table.keys() {
        if key != "experiment" && key != "output" && !SECTIONS.contains(&key.as_str()) {
            errors.push(format!("unknown top-level key or section `{key}`"));
        }
    }
    let experiment = match table.get("experiment") {
        Some(Value::String(s)) => Experiment::from_name(s).or_else(|| {
            errors.push(format!(
                "experiment: unknown experiment `{s}` (expected one of {})",
                Experiment::ALL.map(|e| e.name()).join(", ")
            ));
            None
        }),
        Some(other) => {
            errors.push(format!("experiment: expected a string, got {}", other.type_str()));
            None
        }
        None => {
            errors.push("experiment: missing required key".into());
            None
        }
    };
    let needs = |e: &[Experiment]| experiment.is_some_and(|x| e.contains(&x));
    use Experiment as E;

    let grid = parse_grid(&table, &mut errors, needs(&[E::SimulateEps, E::SimulateLimit, E::EpsConvergence]));
    let kinetics = parse_kinetics(&table, &mut errors, needs(&[E::SimulateEps, E::EpsConvergence]));
    let initial = parse_initial(
        &table,
        base_dir,
        &mut errors,
        needs(&[E::SimulateEps, E::SimulateLimit, E::EpsConvergence]),
    );
    let (v0, v0_max) = parse_v0(&table, base_dir, &mut errors);
    let numerics = parse_numerics(&table, &mut errors, needs(&[E::SimulateEps, E::SimulateLimit]));
    let traveling = parse_traveling(&table, &mut errors, needs(&[E::TravelingWave]));
    let pulsating = parse_pulsating(&table, &v0, &mut errors, needs(&[E::PulsatingWave]));
    let dispersion = parse_dispersion(&table, &mut errors, needs(&[E::Dispersion]));
    let convergence = parse_convergence(&table, &mut errors, needs(&[E::EpsConvergence]));
    let sweep = parse_sweep(&table, &mut errors, needs(&[E::Sweep]));
    let output = parse_output(&table, base_dir, &mut errors);

    // Cross-section checks against the owning modules.
    if let (Some(g), Some(init)) = (&grid, &initial) {
        if let Ok(built) = g.build() {
            if let Err(e) = build_initial_data(&built, init, &v0, g.x_origin, v0_max) {
                match e {
                    Error::Validation(p) => errors.extend(p),
                    other => errors.push(other.to_string()),
                }
            }
        }
    }
    if experiment == Some(E::EpsConvergence) {
        if let Some(g) = &grid {
            if g.cells.len() != 1 {
                errors.push("eps-convergence runs on a 1D grid".into());
            }
        }
        if numerics.t_final.is_none() {
            errors.push("numerics.t_final: missing required key".into());
        }
    }
    if let Some(n) = numerics.dt {
        if !(n > 0.0 && n.is_finite()) {
            errors.push(format!("numerics.dt must be positive, got {n}"));
        }
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let hash = config_hash(&table);
    Ok(RunConfig {
        experiment: experiment.expect("checked above"),
        grid,
        kinetics,
        initial,
        v0,
        v0_max,
        numerics,
        traveling,
        pulsating,
        dispersion,
        convergence,
        sweep,
        output,
        hash,
        source: table,
        base_dir: base_dir.to_path_buf(),
    })
}

fn missing(errors: &mut Vec<String>, name: &str, required: bool) {
    if required {
        errors.push(format!("missing [{name}] section"));
    }
}

/// Largest number of unknowns a configuration may request.
pub const MAX_POINTS: usize = 1 << 24;

fn parse_grid(root: &Table, errors: &mut Vec<String>, required: bool) -> Option<GridSpec> {
    let Some(t) = section(root, "grid", errors) else {
        missing(errors, "grid", required);
        return None;
    };
    let mut s = Section::new("grid", t);
    let cells: Option<Vec<usize>> = match s.raw("cells") {
        Some(Value::Integer(n)) if *n > 0 => Some(vec![*n as usize]),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Integer(n) if *n > 0 => Some(*n as usize),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .filter(|c| (1..=2).contains(&c.len()))
            .or_else(|| {
                errors.push("grid.cells: expected one or two positive integers".into());
                None
            }),
        Some(_) => {
            errors.push("grid.cells: expected a positive integer or an array of them".into());
            None
        }
        None => {
            errors.push("grid.cells: missing required key".into());
            None
        }
    };
    let length = s.f64_list(errors, "length");
    let h_direct = s.f64(errors, "h");
    let boundary = match s.str(errors, "boundary").unwrap_or("neumann") {
        "neumann" => Some(Boundary::Neumann),
        "periodic" => Some(Boundary::Periodic),
        other => {
            errors.push(format!("grid.boundary: expected `neumann` or `periodic`, got `{other}`"));
            None
        }
    };
    let x_origin = s.f64(errors, "x_origin").unwrap_or(0.0);
    s.finish(errors);
    let cells = cells?;
    if cells.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).is_none_or(|n| n > MAX_POINTS) {
        errors.push(format!("grid.cells: at most {MAX_POINTS} cells in total"));
        return None;
    }
    let h = match (length, h_direct) {
        (Some(_), Some(_)) => {
            errors.push("grid: give either `length` or `h`, not both".into());
            return None;
        }
        (Some(len), None) => {
            if len.len() != cells.len() {
                errors.push(format!("grid.length: expected {} values, got {}", cells.len(), len.len()));
                return None;
            }
            let h = len[0] / cells[0] as f64;
            if len.len() == 2 && ((len[1] / cells[1] as f64) - h).abs() > 1e-12 * h.abs() {
                errors.push("grid.length: both axes must share one spacing".into());
                return None;
            }
            h
        }
        (None, Some(h)) => h,
        (None, None) => {
            errors.push("grid: one of `length` or `h` is required".into());
            return None;
        }
    };
    let spec = GridSpec {
        cells,
        h,
        boundary: boundary?,
        x_origin,
    };
    if let Err(e) = spec.build() {
        errors.push(e.to_string());
        return None;
    }
    Some(spec)
}

fn parse_kinetics(root: &Table, errors: &mut Vec<String>, required: bool) -> Option<ScalingParams> {
    let Some(t) = section(root, "kinetics", errors) else {
        missing(errors, "kinetics", required);
        return None;
    };
    let mut s = Section::new("kinetics", t);
    let kind = match s.str(errors, "scaling").unwrap_or("matkowsky-sivashinsky") {
        "ms" | "matkowsky-sivashinsky" => Some(ScalingKind::MatkowskySivashinsky),
        "threshold" => Some(ScalingKind::Threshold),
        other => {
            errors.push(format!(
                "kinetics.scaling: expected `matkowsky-sivashinsky` or `threshold`, got `{other}`"
            ));
            None
        }
    };
    let epsilon = s.req_f64(errors, "epsilon");
    let sigma = s.f64(errors, "sigma");
    let theta_bar = s.f64(errors, "theta_bar");
    let kappa = s.f64(errors, "kappa");
    s.finish(errors);
    let kind = kind?;
    let epsilon = epsilon.unwrap_or(f64::NAN);
    let mut params = match kind {
        ScalingKind::MatkowskySivashinsky => {
            if sigma.is_some() || kappa.is_some() {
                errors.push("kinetics: sigma and kappa apply to the threshold scaling only".into());
            }
            let mut p = ScalingParams::matkowsky_sivashinsky(epsilon);
            if let Some(tb) = theta_bar {
                p.theta_bar = tb;
            }
            p
        }
        ScalingKind::Threshold => ScalingParams::threshold(epsilon, sigma.unwrap_or(0.0), theta_bar.unwrap_or(0.5)),
    };
    if let Some(k) = kappa {
        params.kappa_eps = k;
    }
    let problems = params.problems();
    if problems.is_empty() {
        Some(params)
    } else {
        errors.extend(problems);
        None
    }
}

fn parse_table_columns(
    s: &mut Section<'_>,
    base_dir: &Path,
    errors: &mut Vec<String>,
    value_key: &'static str,
) -> Option<SampleTable> {
    let file = s.str(errors, "file");
    let xs = s.f64_list(errors, "x");
    let vs = s.f64_list(errors, value_key);
    let name = s.name;
    match (file, xs, vs) {
        (Some(f), None, None) => {
            let path = base_dir.join(f);
            match read_text(&path) {
                Ok(text) => parse_sample_table(&text)
                    .map_err(|e| errors.push(format!("{name}.file {}: {e}", path.display())))
                    .ok(),
                Err(e) => {
                    errors.push(format!("{name}.file {}: {e}", path.display()));
                    None
                }
            }
        }
        (None, Some(x), Some(v)) => SampleTable::new(x, v)
            .map_err(|e| errors.push(format!("{name}: {e}")))
            .ok(),
        _ => {
            errors.push(format!("{name}: a table needs either `file` or both `x` and `{value_key}`"));
            None
        }
    }
}

fn parse_initial(root: &Table, base_dir: &Path, errors: &mut Vec<String>, required: bool) -> Option<TemperatureProfile> {
    let Some(t) = section(root, "initial", errors) else {
        missing(errors, "initial", required);
        return None;
    };
    let mut s = Section::new("initial", t);
    let profile = s.str(errors, "profile");
    let out = match profile {
        Some("uniform") => s.req_f64(errors, "value").map(|value| TemperatureProfile::Uniform { value }),
        Some(kind @ ("step" | "smooth-front")) => {
            let x0 = s.req_f64(errors, "x0");
            let width = s.req_f64(errors, "width");
            let left = s.req_f64(errors, "left");
            let right = s.req_f64(errors, "right");
            match (x0, width, left, right) {
                (Some(x0), Some(width), Some(left), Some(right)) => {
                    if !(width > 0.0) {
                        errors.push(format!("initial.width must be positive, got {width}"));
                        None
                    } else if kind == "step" {
                        Some(TemperatureProfile::Step { x0, width, left, right })
                    } else {
                        Some(TemperatureProfile::SmoothFront { x0, width, left, right })
                    }
                }
                _ => None,
            }
        }
        Some("planar-wave") => {
            let x0 = s.req_f64(errors, "x0");
            let c = s.req_f64(errors, "c");
            match (x0, c) {
                (Some(x0), Some(c)) if c > 0.0 => Some(TemperatureProfile::PlanarWave { x0, c }),
                (Some(_), Some(c)) => {
                    errors.push(format!("initial.c must be positive, got {c}"));
                    None
                }
                _ => None,
            }
        }
        Some("table") => parse_table_columns(&mut s, base_dir, errors, "u").map(TemperatureProfile::Table),
        Some(other) => {
            errors.push(format!(
                "initial.profile: expected uniform, step, smooth-front, planar-wave or table, got `{other}`"
            ));
            None
        }
        None => {
            errors.push("initial.profile: missing required key".into());
            None
        }
    };
    s.finish(errors);
    out
}

fn parse_v0(root: &Table, base_dir: &Path, errors: &mut Vec<String>) -> (ReactantProfile, f64) {
    let default = ReactantProfile::Constant(1.0);
    let Some(t) = section(root, "v0", errors) else {
        return (default, 1.0);
    };
    let mut s = Section::new("v0", t);
    let profile = match s.str(errors, "profile").unwrap_or("constant") {
        "constant" => s.f64(errors, "value").map(ReactantProfile::Constant).or(Some(default.clone())),
        "sinusoidal" => {
            let mean = s.req_f64(errors, "mean");
            let amplitude = s.f64_list(errors, "amplitude").unwrap_or_else(|| vec![0.0]);
            let frequency = s.f64_list(errors, "frequency").unwrap_or_else(|| vec![1.0]);
            let two = |v: &[f64], key: &str, errors: &mut Vec<String>| -> Option<[f64; 2]> {
                match v.len() {
                    1 => Some([v[0], 0.0]),
                    2 => Some([v[0], v[1]]),
                    n => {
                        errors.push(format!("v0.{key}: expected one or two values, got {n}"));
                        None
                    }
                }
            };
            match (mean, two(&amplitude, "amplitude", errors), two(&frequency, "frequency", errors)) {
                (Some(mean), Some(amplitude), Some(frequency)) => Some(ReactantProfile::Sinusoidal {
                    mean,
                    amplitude,
                    frequency,
                }),
                _ => None,
            }
        }
        "table" => parse_table_columns(&mut s, base_dir, errors, "v").map(ReactantProfile::Table),
        other => {
            errors.push(format!("v0.profile: expected constant, sinusoidal or table, got `{other}`"));
            None
        }
    };
    let max = s.f64(errors, "max");
    s.finish(errors);
    let profile = profile.unwrap_or(default);
    let natural = match &profile {
        ReactantProfile::Constant(c) => *c,
        ReactantProfile::Sinusoidal { mean, amplitude, .. } => mean + amplitude[0].abs() + amplitude[1].abs(),
        ReactantProfile::Table(t) => t.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    let bound = max.unwrap_or(natural);
    if !(bound.is_finite() && bound >= 0.0) {
        errors.push(format!("v0.max must be finite and non-negative, got {bound}"));
    }
    (profile, bound)
}

fn parse_numerics(root: &Table, errors: &mut Vec<String>, required: bool) -> Numerics {
    let mut out = Numerics {
        dt: None,
        t_final: None,
        snapshot_every: None,
        scheme: DiffusionScheme::BackwardEuler,
        strang: false,
        ignition: IgnitionRule::Pinned,
        fixed_point_ignition: false,
        front_start: false,
        audit_residuals: false,
    };
    let Some(t) = section(root, "numerics", errors) else {
        missing(errors, "numerics", required);
        return out;
    };
    let mut s = Section::new("numerics", t);
    out.dt = if required { s.req_f64(errors, "dt") } else { s.f64(errors, "dt") };
    out.t_final = if required {
        s.req_f64(errors, "t_final")
    } else {
        s.f64(errors, "t_final")
    };
    out.snapshot_every = s.f64(errors, "snapshot_every");
    match s.str(errors, "scheme") {
        None | Some("backward-euler") => {}
        Some("crank-nicolson") => out.scheme = DiffusionScheme::CrankNicolson,
        Some(other) => errors.push(format!(
            "numerics.scheme: expected backward-euler or crank-nicolson, got `{other}`"
        )),
    }
    out.strang = s.bool(errors, "strang").unwrap_or(false);
    match s.str(errors, "ignition") {
        None | Some("pinned") => {}
        Some("instant") => out.ignition = IgnitionRule::Instant,
        Some(other) => errors.push(format!("numerics.ignition: expected pinned or instant, got `{other}`")),
    }
    out.fixed_point_ignition = s.bool(errors, "fixed_point_ignition").unwrap_or(false);
    out.front_start = s.bool(errors, "front_start").unwrap_or(false);
    out.audit_residuals = s.bool(errors, "audit_residuals").unwrap_or(false);
    s.finish(errors);
    if let Some(t) = out.t_final {
        if !(t >= 0.0 && t.is_finite()) {
            errors.push(format!("numerics.t_final must be non-negative, got {t}"));
        }
    }
    if let Some(e) = out.snapshot_every {
        if !(e > 0.0) {
            errors.push(format!("numerics.snapshot_every must be positive, got {e}"));
        }
    }
    out
}

fn parse_traveling(root: &Table, errors: &mut Vec<String>, required: bool) -> Option<TravelingSpec> {
    let Some(t) = section(root, "traveling", errors) else {
        missing(errors, "traveling", required);
        return None;
    };
    let mut s = Section::new("traveling", t);
    let c0 = s.req_f64(errors, "c0");
    let m = s.req_f64(errors, "m");
    let s_min = s.f64(errors, "s_min");
    let s_max = s.f64(errors, "s_max").unwrap_or(1.0);
    let samples = s.usize(errors, "samples").unwrap_or(401);
    s.finish(errors);
    let (c0, m) = (c0?, m?);
    let mut ok = true;
    if !(c0 > 0.0 && c0.is_finite()) {
        errors.push(format!("traveling.c0 must be positive, got {c0}"));
        ok = false;
    }
    if !(m > 0.0 && m.is_finite()) {
        errors.push(format!("traveling.m must be positive, got {m}"));
        ok = false;
    }
    let s_min = s_min.unwrap_or(-2.0 * c0 * m - 2.0);
    if !(s_min < s_max) || !(2..=MAX_POINTS).contains(&samples) {
        errors.push(format!("traveling: need s_min < s_max and between two and {MAX_POINTS} samples"));
        ok = false;
    }
    ok.then_some(TravelingSpec {
        c0,
        m,
        s_min,
        s_max,
        samples,
    })
}

fn parse_pulsating(
    root: &Table,
    v0: &ReactantProfile,
    errors: &mut Vec<String>,
    required: bool,
) -> Option<PulsatingConfig> {
    let Some(t) = section(root, "pulsating", errors) else {
        missing(errors, "pulsating", required);
        return None;
    };
    let mut s = Section::new("pulsating", t);
    let c = s.req_f64(errors, "c");
    let m = s.req_f64(errors, "m");
    let nx = s.usize(errors, "nx").unwrap_or(64);
    let ns = s.usize(errors, "ns").unwrap_or(2000);
    let half_length = s.f64(errors, "half_length");
    let tolerance = s.f64(errors, "tolerance");
    let max_periods = s.usize(errors, "max_periods");
    let shooting = s.bool(errors, "shooting");
    let front_fraction = s.f64(errors, "front_fraction");
    let seed = s.f64(errors, "seed_perturbation");
    let descent = s.f64(errors, "descent_width");
    let trial = s.f64(errors, "trial_time");
    let direction = s.f64_list(errors, "e");
    s.finish(errors);
    if let Some(e) = direction {
        if e.first() != Some(&1.0) || e.iter().skip(1).any(|&x| x != 0.0) {
            errors.push(format!("pulsating.e: only the first axis direction (1, 0) is supported, got {e:?}"));
        }
    }
    if nx == 0 {
        errors.push("pulsating.nx must be positive".into());
        return None;
    }
    if nx.checked_mul(ns).is_none_or(|n| n > MAX_POINTS) {
        errors.push(format!("pulsating: nx * ns must be at most {MAX_POINTS}"));
        return None;
    }
    let samples: Vec<f64> = (0..nx).map(|j| v0.eval(j as f64 / nx as f64, 0.0)).collect();
    let mut cfg = PulsatingConfig::new(c?, m?, samples, ns);
    cfg.half_length = half_length;
    if let Some(x) = tolerance {
        cfg.tolerance = x;
    }
    if let Some(x) = max_periods {
        cfg.max_periods = x;
    }
    if let Some(x) = shooting {
        cfg.shooting = x;
    }
    if let Some(x) = front_fraction {
        cfg.front_fraction = x;
    }
    if let Some(x) = seed {
        cfg.seed_perturbation = x;
    }
    if let Some(x) = descent {
        cfg.descent_width = x;
    }
    cfg.trial_time = trial;
    match crate::waves::validate_pulsating(&cfg) {
        Ok(()) => Some(cfg),
        Err(Error::Validation(p)) => {
            errors.extend(p.into_iter().map(|p| format!("pulsating: {p}")));
            None
        }
        Err(e) => {
            errors.push(format!("pulsating: {e}"));
            None
        }
    }
}

fn parse_dispersion(root: &Table, errors: &mut Vec<String>, required: bool) -> Option<DispersionSpec> {
    let Some(t) = section(root, "dispersion", errors) else {
        missing(errors, "dispersion", required);
        return None;
    };
    let mut s = Section::new("dispersion", t);
    let speeds = s.f64_list(errors, "c");
    let re = s.pair(errors, "re").unwrap_or((0.0, 8.0));
    let im = s.pair(errors, "im").unwrap_or((-8.0, 8.0));
    let density = s.usize(errors, "density").unwrap_or(32);
    let ode_lambda = s.f64(errors, "ode_lambda").unwrap_or(1.0);
    let ode_h = s.f64(errors, "ode_h").unwrap_or(1e-3);
    let ode_length = s.f64(errors, "ode_length");
    s.finish(errors);
    let Some(speeds) = speeds else {
        errors.push("dispersion.c: missing required key".into());
        return None;
    };
    let before = errors.len();
    if speeds.is_empty() {
        errors.push("dispersion.c: need at least one speed".into());
    }
    for &c in &speeds {
        if let Err(Error::Validation(p)) = DispersionProblem::new(c, re, im) {
            errors.extend(p.into_iter().map(|p| format!("dispersion: {p}")));
        }
    }
    if density < 32 {
        errors.push(format!("dispersion.density must be at least 32, got {density}"));
    }
    if ode_lambda == 0.0 || !ode_lambda.is_finite() {
        errors.push("dispersion.ode_lambda must be finite and nonzero".into());
    }
    if !(ode_h > 0.0) {
        errors.push(format!("dispersion.ode_h must be positive, got {ode_h}"));
    }
    if let (Some(len), Some(&c)) = (ode_length, speeds.first()) {
        if !(len >= 10.0 / c) {
            errors.push(format!("dispersion.ode_length must be at least 10/c = {}, got {len}", 10.0 / c));
        }
    }
    (errors.len() == before).then_some(DispersionSpec {
        speeds,
        re,
        im,
        density,
        ode_lambda,
        ode_h,
        ode_length,
    })
}

fn parse_convergence(root: &Table, errors: &mut Vec<String>, required: bool) -> Option<ConvergenceSpec> {
    let Some(t) = section(root, "convergence", errors) else {
        missing(errors, "convergence", required);
        return None;
    };
    let mut s = Section::new("convergence", t);
    let epsilons = s.f64_list(errors, "epsilons");
    let dt_eps = s.req_f64(errors, "dt_eps");
    let dt_limit = s.req_f64(errors, "dt_limit");
    s.finish(errors);
    let Some(epsilons) = epsilons else {
        errors.push("convergence.epsilons: missing required key".into());
        return None;
    };
    let before = errors.len();
    if epsilons.iter().any(|&e| !(e > 0.0)) {
        errors.push("epsilon must be positive in convergence.epsilons".into());
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        errors.push("convergence.epsilons must be strictly decreasing".into());
    }
    let (dt_eps, dt_limit) = (dt_eps?, dt_limit?);
    if !(dt_eps > 0.0 && dt_limit > 0.0) {
        errors.push("convergence time steps must be positive".into());
    }
    (errors.len() == before).then_some(ConvergenceSpec {
        epsilons,
        dt_eps,
        dt_limit,
    })
}

fn parse_sweep(root: &Table, errors: &mut Vec<String>, required: bool) -> Option<SweepSpec> {
    let Some(t) = section(root, "sweep", errors) else {
        missing(errors, "sweep", required);
        return None;
    };
    let mut s = Section::new("sweep", t);
    let experiment = s.str(errors, "experiment");
    let parameter = s.str(errors, "parameter");
    let values = match s.raw("values") {
        Some(Value::Array(v)) => Some(v.clone()),
        Some(other) => {
            errors.push(format!("sweep.values: expected an array, got {}", other.type_str()));
            None
        }
        None => {
            errors.push("sweep.values: missing required key".into());
            None
        }
    };
    let decreasing = s.str(errors, "decreasing").map(str::to_owned);
    s.finish(errors);
    let experiment = match experiment {
        Some(name) => match Experiment::from_name(name) {
            Some(Experiment::Sweep) => {
                errors.push("sweep.experiment: sweeps cannot nest".into());
                None
            }
            Some(e) => Some(e),
            None => {
                errors.push(format!("sweep.experiment: unknown experiment `{name}`"));
                None
            }
        },
        None => {
            errors.push("sweep.experiment: missing required key".into());
            None
        }
    };
    let parameter = match parameter {
        Some(p) if p.split('.').count() == 2 && SECTIONS.contains(&p.split('.').next().unwrap_or("")) => {
            Some(p.to_owned())
        }
        Some(p) => {
            errors.push(format!("sweep.parameter: expected `section.key`, got `{p}`"));
            None
        }
        None => {
            errors.push("sweep.parameter: missing required key".into());
            None
        }
    };
    Some(SweepSpec {
        experiment: experiment?,
        parameter: parameter?,
        values: values?,
        decreasing,
    })
}

fn parse_output(root: &Table, base_dir: &Path, errors: &mut Vec<String>) -> OutputSpec {
    let Some(t) = section(root, "output", errors) else {
        return OutputSpec::default();
    };
    let mut s = Section::new("output", t);
    let dir = s.str(errors, "dir").map(|d| base_dir.join(d));
    let snapshots = s.bool(errors, "snapshots").unwrap_or(true);
    s.finish(errors);
    OutputSpec { dir, snapshots }
}

/// The configuration of one sweep point: the base table with the swept key
/// replaced and the experiment set to the swept experiment.
pub fn sweep_point(cfg: &RunConfig, value: &Value) -> Result<RunConfig> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["not a sweep configuration".into()]))?;
    let mut table = cfg.source.clone();
    table.remove("sweep");
    table.insert("experiment".into(), Value::String(sweep.experiment.name().into()));
    let (sec, key) = sweep.parameter.split_once('.').expect("validated at parse time");
    let entry = table.entry(sec.to_owned()).or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(key.to_owned(), value.clone());
        }
        _ => return Err(Error::Config(vec![format!("[{sec}] is not a table")])),
    }
    parse_config_table(table, &cfg.base_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "simulate-eps"
[grid]
cells = 64
length = 1.0
[kinetics]
epsilon = 0.1
[initial]
profile = "step"
x0 = 0.5
width = 0.2
left = 0.5
right = -0.5
[numerics]
dt = 1e-3
t_final = 0.1
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config_str(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.experiment, Experiment::SimulateEps);
        assert_eq!(cfg.kinetics.unwrap().epsilon, 0.1);
        assert_eq!(cfg.hash.len(), 64);
        let (grid, data) = cfg.initial_data().unwrap();
        assert_eq!(grid.len(), 64);
        assert_eq!(data.v0, vec![1.0; 64]);
    }

    #[test]
    fn negative_epsilon_is_reported() {
        let text = MINIMAL.replace("epsilon = 0.1", "epsilon = -1");
        let err = parse_config_str(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("epsilon must be positive"), "{err}");
    }

    #[test]
    fn threshold_with_zero_kappa_is_rejected() {
        let text = MINIMAL.replace(
            "epsilon = 0.1",
            "epsilon = 0.1\nscaling = \"threshold\"\nsigma = 0.9\nkappa = 0.0",
        );
        let err = parse_config_str(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("kappa(eps)"), "{err}");
    }

    #[test]
    fn all_errors_are_collected() {
        let text = MINIMAL
            .replace("epsilon = 0.1", "epsilon = -1\nbogus = 3")
            .replace("dt = 1e-3", "dt = \"fast\"");
        match parse_config_str(&text, Path::new(".")).unwrap_err() {
            Error::Config(p) => {
                assert!(p.iter().any(|e| e.contains("epsilon")));
                assert!(p.iter().any(|e| e.contains("kinetics.bogus: unknown key")));
                assert!(p.iter().any(|e| e.contains("numerics.dt: expected a number")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = parse_config_str(MINIMAL, Path::new(".")).unwrap();
        let b = parse_config_str(&MINIMAL.replace("cells = 64", "cells   =   64 # comment"), Path::new(".")).unwrap();
        assert_eq!(a.hash, b.hash);
    }

    #[test]
    fn sweep_points_override_one_key() {
        let text = format!(
            "{}\n[sweep]\nexperiment = \"simulate-eps\"\nparameter = \"kinetics.epsilon\"\nvalues = [0.2, 0.05]\n",
            MINIMAL.replace("\"simulate-eps\"", "\"sweep\"")
        );
        let cfg = parse_config_str(&text, Path::new(".")).unwrap();
        let point = sweep_point(&cfg, &Value::Float(0.05)).unwrap();
        assert_eq!(point.experiment, Experiment::SimulateEps);
        assert_eq!(point.kinetics.unwrap().epsilon, 0.05);
        assert!(sweep_point(&cfg, &Value::Float(-0.05)).is_err());
    }
}
