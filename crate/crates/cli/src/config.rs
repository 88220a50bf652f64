//! Scenario configuration: JSON schema, defaults, validation and input loading.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use settomo::jsa::{CouplingParams, KernelFile, PhaseMatchingFunction, PumpProfile};
use settomo::{
    build_jsa_pump_phasematch, gaussian_jsa, Field1D, InterferometerSettings, JointAmplitude, MeasurementRecord,
    ModeGrid, NoiseParams, SeedProfile,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Jsa,
    Schmidt,
    Direct,
    Interf,
    Reconstruct,
    NoiseSweep,
    GainSweep,
    OracleCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Jsa,
        Scenario::Schmidt,
        Scenario::Direct,
        Scenario::Interf,
        Scenario::Reconstruct,
        Scenario::NoiseSweep,
        Scenario::GainSweep,
        Scenario::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Jsa => "jsa",
            Scenario::Schmidt => "schmidt",
            Scenario::Direct => "direct",
            Scenario::Interf => "interf",
            Scenario::Reconstruct => "reconstruct",
            Scenario::NoiseSweep => "noise-sweep",
            Scenario::GainSweep => "gain-sweep",
            Scenario::OracleCheck => "oracle-check",
        }
    }

    fn needs_kernel(self) -> bool {
        self != Scenario::OracleCheck
    }

    fn needs_seed(self) -> bool {
        !matches!(self, Scenario::Jsa | Scenario::Schmidt | Scenario::OracleCheck)
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scenario '{s}'"))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: f64,
    pub span: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { center: 0.0, span: 16.0, n: 32 }
    }
}

impl GridSpec {
    fn build(&self) -> settomo::Result<ModeGrid> {
        ModeGrid::new(self.center, self.span, self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMatchShape {
    Gaussian,
    Sinc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum KernelSpec {
    Gaussian {
        sigma_plus: f64,
        sigma_minus: f64,
        #[serde(default)]
        chirp: f64,
    },
    PumpPhasematch {
        #[serde(default)]
        pump_center: f64,
        pump_sigma: f64,
        #[serde(default)]
        chirp: f64,
        #[serde(default = "default_pm_shape")]
        phasematch: PhaseMatchShape,
        pm_width: f64,
    },
    File {
        path: String,
    },
}

fn default_pm_shape() -> PhaseMatchShape {
    PhaseMatchShape::Gaussian
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Gaussian { sigma_plus: 0.8, sigma_minus: 2.0, chirp: 0.5 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CouplingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default)]
    pub gain_phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_amp: Option<f64>,
}

pub const DEFAULT_GAIN: f64 = 0.01;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SeedSpec {
    Flat {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    Gaussian {
        #[serde(default)]
        center: f64,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    Point {
        k0: f64,
        intensity: f64,
    },
    File {
        path: String,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Flat { amplitude: 1.0, phase: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Exact,
    Lowgain,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    /// `None` means the grid conjugate to the kernel grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec { model: None, sigma: None, eta: None, file: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Sigma,
    Eta,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub delta_eta: f64,
    #[serde(default)]
    pub delta_sigma: f64,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default = "default_sweep")]
    pub sweep: Vec<f64>,
    #[serde(default = "default_axis")]
    pub axis: SweepAxis,
}

fn default_mc() -> usize {
    1000
}

fn default_sweep() -> Vec<f64> {
    vec![0.0, 0.01, 0.03, 0.1, 0.3, 1.0]
}

fn default_axis() -> SweepAxis {
    SweepAxis::Both
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            delta_eta: 0.0,
            delta_sigma: 0.0,
            mc_samples: default_mc(),
            sweep: default_sweep(),
            axis: default_axis(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleSpec {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_max_gain")]
    pub max_gain: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_trials() -> usize {
    100
}
fn default_max_n() -> usize {
    8
}
fn default_max_gain() -> f64 {
    2.0
}
fn default_tolerance() -> f64 {
    1e-8
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            trials: default_trials(),
            max_n: default_max_n(),
            max_gain: default_max_gain(),
            tolerance: default_tolerance(),
        }
    }
}

fn default_gains() -> Vec<f64> {
    (0..7).map(|i| 1e-3 * 10f64.powf(i as f64 / 3.0)).collect()
}
fn default_reg_eps() -> f64 {
    settomo::reconstruction::DEFAULT_REG_EPS
}
fn default_trunc() -> f64 {
    settomo::DEFAULT_TRUNCATION_TOL
}
fn default_n_modes() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub seed_beam: SeedSpec,
    #[serde(default)]
    pub interferometer: InterferometerSettings,
    #[serde(default)]
    pub record: RecordSpec,
    #[serde(default = "default_reg_eps")]
    pub reg_eps: f64,
    #[serde(default = "default_trunc")]
    pub truncation_tol: f64,
    #[serde(default = "default_n_modes")]
    pub n_modes_out: usize,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_gains")]
    pub gains: Vec<f64>,
    #[serde(default)]
    pub oracle: OracleSpec,
}

/// One problem found in a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

struct Issues<'a> {
    text: &'a str,
    list: Vec<ConfigIssue>,
}

impl Issues<'_> {
    /// Report against the last key of `path`, located by its first quoted
    /// occurrence in the file.
    fn push(&mut self, path: &str, message: impl Into<String>) {
        let key = path.rsplit('.').next().unwrap_or(path);
        let key = key.split('[').next().unwrap_or(key);
        let line = self.line_of(key);
        self.list.push(ConfigIssue { path: path.to_string(), line, message: message.into() });
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        if key.is_empty() {
            return None;
        }
        let needle = format!("\"{key}\"");
        self.text.find(&needle).map(|pos| self.text[..pos].matches('\n').count() + 1)
    }
}

fn allowed_keys(path: &str, obj: &serde_json::Map<String, Value>) -> Option<Vec<&'static str>> {
    let tag = obj.get("type").and_then(Value::as_str);
    Some(match path {
        "" => vec![
            "schema_version",
            "scenario",
            "rng_seed",
            "grid",
            "kernel",
            "coupling",
            "seed_beam",
            "interferometer",
            "record",
            "reg_eps",
            "truncation_tol",
            "n_modes_out",
            "noise",
            "gains",
            "oracle",
        ],
        "grid" | "record.sigma" | "record.eta" => vec!["center", "span", "n"],
        "kernel" => match tag {
            Some("gaussian") => vec!["type", "sigma_plus", "sigma_minus", "chirp"],
            Some("pump-phasematch") => vec!["type", "pump_center", "pump_sigma", "chirp", "phasematch", "pm_width"],
            Some("file") => vec!["type", "path"],
            _ => return None,
        },
        "coupling" => vec!["gain", "gain_phase", "chi", "pump_amp"],
        "seed_beam" => match tag {
            Some("flat") => vec!["type", "amplitude", "phase"],
            Some("gaussian") => vec!["type", "center", "width", "amplitude", "phase"],
            Some("point") => vec!["type", "k0", "intensity"],
            Some("file") => vec!["type", "path"],
            _ => return None,
        },
        "interferometer" => vec!["q_sigma", "q_eta", "theta"],
        "record" => vec!["model", "sigma", "eta", "file"],
        "noise" => vec!["delta_eta", "delta_sigma", "mc_samples", "sweep", "axis"],
        "oracle" => vec!["trials", "max_n", "max_gain", "tolerance"],
        _ => return None,
    })
}

fn walk_keys(value: &Value, path: &str, issues: &mut Issues<'_>) {
    let Value::Object(obj) = value else { return };
    let Some(allowed) = allowed_keys(path, obj) else { return };
    for (k, v) in obj {
        let child = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        if allowed.contains(&k.as_str()) {
            walk_keys(v, &child, issues);
        } else {
            issues.push(&child, format!("unknown key '{k}'"));
        }
    }
}

/// Everything a scenario needs, loaded and checked up front.
pub struct Inputs {
    pub scenario: Scenario,
    pub config: Config,
    pub base_dir: PathBuf,
    pub kernel: Option<JointAmplitude>,
    /// Whether the config named a kernel explicitly (as opposed to the default).
    pub kernel_given: bool,
    pub coupling: CouplingParams,
    pub coupling_given: bool,
    pub seed: Option<SeedProfile>,
    pub record: Option<MeasurementRecord>,
}

impl Inputs {
    pub fn gain(&self) -> f64 {
        self.coupling.gain
    }

    pub fn kernel(&self) -> &JointAmplitude {
        self.kernel.as_ref().expect("scenario requires a kernel")
    }

    pub fn seed(&self) -> &SeedProfile {
        self.seed.as_ref().expect("scenario requires a seed")
    }

    pub fn noise(&self, delta_eta: f64, delta_sigma: f64, seed_offset: u64) -> NoiseParams {
        NoiseParams::new(delta_eta, delta_sigma, self.config.noise.mc_samples, self.config.rng_seed.wrapping_add(seed_offset))
    }
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}

/// Parse, check and load. All problems are returned together.
pub fn load(
    text: &str,
    base_dir: &Path,
    scenario: Option<Scenario>,
    seed_override: Option<u64>,
) -> Result<Inputs, Vec<ConfigIssue>> {
    let mut issues = Issues { text, list: Vec::new() };
    let raw: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            issues.list.push(ConfigIssue { path: "<file>".into(), line: Some(e.line()), message: e.to_string() });
            return Err(issues.list);
        }
    };
    if !raw.is_object() {
        issues.push("", "config must be a JSON object");
        return Err(issues.list);
    }
    walk_keys(&raw, "", &mut issues);
    if raw.get("schema_version").is_none() {
        issues.push("schema_version", "missing required key");
    }
    let mut config: Config = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => {
            if raw.get("schema_version").is_some() || !e.to_string().contains("schema_version") {
                issues.list.push(ConfigIssue { path: "<schema>".into(), line: Some(e.line()), message: e.to_string() });
            }
            return Err(issues.list);
        }
    };
    if let Some(s) = seed_override {
        config.rng_seed = s;
    }
    if config.schema_version != SCHEMA_VERSION {
        issues.push("schema_version", format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", config.schema_version));
    }

    let named = match (&config.scenario, scenario) {
        (Some(s), cmd) => match s.parse::<Scenario>() {
            Ok(parsed) => {
                if let Some(c) = cmd {
                    if c != parsed {
                        issues.push("scenario", format!("config is for '{parsed}' but '{c}' was requested"));
                    }
                }
                Some(parsed)
            }
            Err(m) => {
                issues.push("scenario", m);
                cmd
            }
        },
        (None, cmd) => cmd,
    };
    // Without a named scenario every input is checked.
    let check_all = named.is_none();
    let scenario = named.unwrap_or(Scenario::Jsa);

    check_numbers(&config, scenario, &mut issues);

    let coupling_given = raw.get("coupling").is_some();
    let coupling = build_coupling(&config.coupling, &mut issues);

    let kernel_given = raw.get("kernel").is_some();
    let mut kernel = None;
    if scenario.needs_kernel() || kernel_given {
        kernel = build_kernel(&config, raw.get("grid").is_some(), base_dir, &mut issues);
    }
    let mut seed = None;
    if scenario.needs_seed() || check_all {
        if let Some(j) = &kernel {
            seed = build_seed(&config.seed_beam, j.grid_i(), base_dir, &mut issues);
        }
    }
    let mut record = None;
    if let Some(path) = &config.record.file {
        if scenario != Scenario::Reconstruct && !check_all {
            issues.push("record.file", format!("a record file is only used by 'reconstruct', not '{scenario}'"));
        }
        match read_json::<MeasurementRecord>(&resolve(base_dir, path)) {
            Ok(r) => record = Some(r),
            Err(m) => issues.push("record.file", m),
        }
    }
    if scenario == Scenario::Reconstruct {
        let gain = if coupling_given { coupling.map(|c| c.gain) } else { record.as_ref().map(|r| r.gain_used).or(Some(DEFAULT_GAIN)) };
        if gain.is_some_and(|g| g <= 0.0) {
            issues.push("coupling.gain", "reconstruction needs gain > 0");
        }
    }

    if !issues.list.is_empty() {
        issues.list.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        return Err(issues.list);
    }
    let mut coupling = coupling.expect("validated");
    if scenario == Scenario::Reconstruct && !coupling_given {
        if let Some(r) = &record {
            coupling = CouplingParams::new(r.gain_used, 0.0).expect("record gain validated");
        }
    }
    Ok(Inputs {
        scenario,
        config,
        base_dir: base_dir.to_path_buf(),
        kernel,
        kernel_given,
        coupling,
        coupling_given,
        seed,
        record,
    })
}

fn check_numbers(c: &Config, scenario: Scenario, issues: &mut Issues<'_>) {
    if !(c.reg_eps.is_finite() && c.reg_eps >= 0.0) {
        issues.push("reg_eps", format!("must be ≥ 0, got {}", c.reg_eps));
    }
    if !(0.0..1.0).contains(&c.truncation_tol) {
        issues.push("truncation_tol", format!("must lie in [0, 1), got {}", c.truncation_tol));
    }
    let n = &c.noise;
    if !finite_nonneg(n.delta_eta) {
        issues.push("noise.delta_eta", format!("must be ≥ 0, got {}", n.delta_eta));
    }
    if !finite_nonneg(n.delta_sigma) {
        issues.push("noise.delta_sigma", format!("must be ≥ 0, got {}", n.delta_sigma));
    }
    if n.mc_samples == 0 {
        issues.push("noise.mc_samples", "must be ≥ 1");
    }
    if n.sweep.iter().any(|d| !finite_nonneg(*d)) {
        issues.push("noise.sweep", "jitter variances must be ≥ 0");
    }
    if scenario == Scenario::NoiseSweep && n.sweep.is_empty() {
        issues.push("noise.sweep", "needs at least one value");
    }
    let s = &c.interferometer;
    if ![s.q_sigma, s.q_eta, s.theta].iter().all(|v| v.is_finite()) {
        issues.push("interferometer", "delays and phase must be finite");
    }
    if scenario == Scenario::GainSweep {
        if c.gains.len() < 2 {
            issues.push("gains", "a gain sweep needs at least two gains");
        }
        if c.gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            issues.push("gains", "sweep gains must be > 0");
        }
    }
    let o = &c.oracle;
    if o.trials == 0 {
        issues.push("oracle.trials", "must be ≥ 1");
    }
    if !(2..=settomo::oracle::MAX_MODES).contains(&o.max_n) {
        issues.push("oracle.max_n", format!("must lie in 2..={}", settomo::oracle::MAX_MODES));
    }
    if !finite_nonneg(o.max_gain) {
        issues.push("oracle.max_gain", "must be ≥ 0");
    }
    if !(o.tolerance > 0.0) {
        issues.push("oracle.tolerance", "must be > 0");
    }
    for (name, g) in [("record.sigma", c.record.sigma), ("record.eta", c.record.eta)] {
        if let Some(g) = g {
            if let Err(e) = g.build() {
                issues.push(name, e.to_string());
            }
        }
    }
}

fn build_coupling(c: &CouplingSpec, issues: &mut Issues<'_>) -> Option<CouplingParams> {
    let result = match (c.gain, c.chi, c.pump_amp) {
        (g, Some(chi), Some(amp)) => {
            let p = CouplingParams { gain: g.unwrap_or(chi * amp), gain_phase: c.gain_phase, chi: Some(chi), pump_amp: Some(amp) };
            p.validate().map(|_| p)
        }
        (_, Some(_), None) | (_, None, Some(_)) => {
            issues.push("coupling", "chi and pump_amp must be given together");
            return None;
        }
        (g, None, None) => CouplingParams::new(g.unwrap_or(DEFAULT_GAIN), c.gain_phase),
    };
    match result {
        Ok(p) => Some(p),
        Err(e) => {
            let field = if c.gain.is_some_and(|g| !finite_nonneg(g)) { "coupling.gain" } else { "coupling" };
            issues.push(field, format!("{e} (CouplingParams invariant)"));
            None
        }
    }
}

fn build_kernel(c: &Config, grid_given: bool, base: &Path, issues: &mut Issues<'_>) -> Option<JointAmplitude> {
    let grid = match c.grid.build() {
        Ok(g) => g,
        Err(e) => {
            issues.push("grid", e.to_string());
            return None;
        }
    };
    let built = match &c.kernel {
        KernelSpec::Gaussian { sigma_plus, sigma_minus, chirp } => gaussian_jsa(*sigma_plus, *sigma_minus, *chirp, grid, grid),
        KernelSpec::PumpPhasematch { pump_center, pump_sigma, chirp, phasematch, pm_width } => {
            PumpProfile::gaussian(&grid, &grid, *pump_center, *pump_sigma, *chirp).and_then(|pump| {
                let pm = match phasematch {
                    PhaseMatchShape::Gaussian => PhaseMatchingFunction::gaussian_difference(grid, grid, *pm_width),
                    PhaseMatchShape::Sinc => PhaseMatchingFunction::sinc_difference(grid, grid, *pm_width),
                }?;
                build_jsa_pump_phasematch(&pump, &pm)
            })
        }
        KernelSpec::File { path } => {
            return match read_json::<KernelFile>(&resolve(base, path)) {
                Ok(f) => {
                    if grid_given && !(f.amplitude.grid_s().same_as(&grid) && f.amplitude.grid_i().same_as(&grid)) {
                        issues.push("grid", "grid differs from the grid stored in the kernel file");
                    }
                    Some(f.amplitude)
                }
                Err(m) => {
                    issues.push("kernel.path", m);
                    None
                }
            };
        }
    };
    match built {
        Ok(j) => Some(j),
        Err(e) => {
            issues.push("kernel", format!("{}: {e}", e.name()));
            None
        }
    }
}

fn build_seed(spec: &SeedSpec, grid: &ModeGrid, base: &Path, issues: &mut Issues<'_>) -> Option<SeedProfile> {
    let built = match spec {
        SeedSpec::Flat { amplitude, phase } => {
            if !(amplitude.is_finite() && phase.is_finite()) {
                issues.push("seed_beam.amplitude", "amplitude and phase must be finite");
                return None;
            }
            Ok(SeedProfile::flat(*grid, C64::from_polar(*amplitude, *phase)))
        }
        SeedSpec::Gaussian { center, width, amplitude, phase } => {
            SeedProfile::gaussian(*grid, *center, *width, C64::from_polar(*amplitude, *phase))
        }
        SeedSpec::Point { k0, intensity } => SeedProfile::single_point(*grid, *k0, *intensity),
        SeedSpec::File { path } => match read_json::<Field1D>(&resolve(base, path)) {
            Ok(f) if f.grid().same_as(grid) => SeedProfile::new(f),
            Ok(_) => {
                issues.push("seed_beam.path", "seed grid differs from the kernel's idler grid");
                return None;
            }
            Err(m) => {
                issues.push("seed_beam.path", m);
                return None;
            }
        },
    };
    match built {
        Ok(s) if s.max_abs() > 0.0 => Some(s),
        Ok(_) => {
            issues.push("seed_beam", "seed amplitude is zero everywhere");
            None
        }
        Err(e) => {
            issues.push("seed_beam", format!("{}: {e}", e.name()));
            None
        }
    }
}

/// Record grids: configured, or conjugate to the kernel grid.
pub fn record_grids(inputs: &Inputs) -> (ModeGrid, ModeGrid) {
    let natural = inputs.kernel().grid_s().conjugate();
    let r = &inputs.config.record;
    let build = |g: Option<GridSpec>| g.map(|g| g.build().expect("validated")).unwrap_or(natural);
    (build(r.sigma), build(r.eta))
}
