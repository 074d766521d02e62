//! Run-configuration loading.
//!
//! Configurations are TOML files with dotted sections.  Every extraction
//! error names the full dotted path of the offending field, and config
//! errors map to the dedicated exit code so scripted callers can tell a
//! bad configuration from a failed run.

use std::path::{Path, PathBuf};

use kwe_core::evolution::StepController;
use kwe_core::field::{Extrapolation, SpectralForm};
use kwe_core::grid::FrequencyGrid;
use kwe_core::params::ModelParams;
use kwe_core::resonance::ResonanceQuad;
use toml::Value;

/// A failure with the exit code it should produce.
#[derive(Debug)]
pub enum AppError {
    /// Bad configuration or command line: exit 64, message names the field.
    Config(String),
    /// Failure while running a valid configuration: exit 1.
    Runtime(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        AppError::Runtime(msg.into())
    }
}

pub type AppResult<T> = Result<T, AppError>;

/// A parsed configuration with the command-line overrides already applied.
#[derive(Debug, Clone)]
pub struct Config {
    root: Value,
    pub experiment: String,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Config {
    /// Load a TOML file and apply the optional command-line overrides.
    pub fn load(
        path: &Path,
        experiment_override: Option<&str>,
        out_override: Option<&Path>,
        seed_override: Option<u64>,
    ) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            AppError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
        Self::from_value(Value::Table(table), experiment_override, out_override, seed_override)
    }

    /// Build from an already-parsed TOML value (used by sweep children).
    pub fn from_value(
        root: Value,
        experiment_override: Option<&str>,
        out_override: Option<&Path>,
        seed_override: Option<u64>,
    ) -> AppResult<Self> {
        if !root.is_table() {
            return Err(AppError::config("config root must be a table"));
        }
        let top = Section::new(&root, "");
        let experiment = match experiment_override {
            Some(e) => e.to_string(),
            None => top
                .opt_str("experiment")?
                .ok_or_else(|| {
                    AppError::config(
                        "missing field: experiment (give it in the config or on the command line)",
                    )
                })?
                .to_string(),
        };
        let seed = match seed_override {
            Some(s) => s,
            None => top.u64_or("seed", 0)?,
        };
        let out_dir = match out_override {
            Some(p) => p.to_path_buf(),
            None => {
                let dir = match top.opt_section("output")? {
                    Some(out) => out.str_or("dir", "out")?.to_string(),
                    None => "out".to_string(),
                };
                PathBuf::from(dir)
            }
        };
        Ok(Self {
            root,
            experiment,
            seed,
            out_dir,
        })
    }

    /// The raw configuration value (for echoing and hashing).
    pub fn raw(&self) -> &Value {
        &self.root
    }

    pub fn top(&self) -> Section<'_> {
        Section::new(&self.root, "")
    }

    /// A required top-level section.
    pub fn section(&self, name: &str) -> AppResult<Section<'_>> {
        self.top().section(name)
    }

    /// An optional top-level section (missing = all defaults).
    pub fn opt_section(&self, name: &str) -> AppResult<Option<Section<'_>>> {
        self.top().opt_section(name)
    }

    // ----- domain objects ------------------------------------------------

    pub fn model_params(&self) -> AppResult<ModelParams> {
        let sec = self.section("params")?;
        let beta = sec.f64("beta")?;
        let p0 = sec.u64_or("p0", 2)? as u32;
        let epsilon = sec.f64_or("epsilon", 0.0)?;
        ModelParams::new(beta, p0, epsilon)
            .map_err(|e| AppError::config(format!("params: {e}")))
    }

    pub fn grid(&self) -> AppResult<FrequencyGrid> {
        let sec = self.section("grid")?;
        let lo = sec.f64("omega_min")?;
        let hi = sec.f64("omega_max")?;
        let nodes = sec.u64("nodes")? as usize;
        FrequencyGrid::log_uniform(lo, hi, nodes)
            .map_err(|e| AppError::config(format!("grid: {e}")))
    }

    pub fn quadrature(&self, params: &ModelParams) -> AppResult<ResonanceQuad> {
        let (ppd, order) = match self.opt_section("quadrature")? {
            Some(sec) => (
                sec.u64_or("panels_per_decade", 3)? as usize,
                sec.u64_or("order", 10)? as usize,
            ),
            None => (3, 10),
        };
        ResonanceQuad::build(params, ppd, order)
            .map_err(|e| AppError::config(format!("quadrature: {e}")))
    }

    pub fn controller(&self) -> AppResult<StepController> {
        let mut c = StepController::default();
        if let Some(sec) = self.opt_section("controller")? {
            c.dt_init = sec.f64_or("dt_init", c.dt_init)?;
            c.safety = sec.f64_or("safety", c.safety)?;
            c.dt_min = sec.f64_or("dt_min", c.dt_min)?;
            c.dt_max = sec.f64_or("dt_max", c.dt_max)?;
            c.positivity_floor = sec.f64_or("positivity_floor", c.positivity_floor)?;
            c.tol_rk = sec.f64_or("tol_rk", c.tol_rk)?;
        }
        c.validate()
            .map_err(|e| AppError::config(format!("controller: {e}")))?;
        Ok(c)
    }
}

/// Parse a storage-form name, mapping failures to config errors.
pub fn parse_form(text: &str, path: &str) -> AppResult<SpectralForm> {
    SpectralForm::parse(text).map_err(|e| AppError::config(format!("{path}: {e}")))
}

/// Parse an extrapolation-rule name, mapping failures to config errors.
pub fn parse_extrapolation(text: &str, path: &str) -> AppResult<Extrapolation> {
    Extrapolation::parse(text).map_err(|e| AppError::config(format!("{path}: {e}")))
}

/// A view of one TOML table with the dotted path that leads to it.
#[derive(Debug, Clone, Copy)]
pub struct Section<'a> {
    value: &'a Value,
    path: &'a str,
}

impl<'a> Section<'a> {
    pub fn new(value: &'a Value, path: &'a str) -> Self {
        Self { value, path }
    }

    fn dotted(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.value.as_table().and_then(|t| t.get(key))
    }

    fn require(&self, key: &str) -> AppResult<&'a Value> {
        self.get(key)
            .ok_or_else(|| AppError::config(format!("missing field: {}", self.dotted(key))))
    }

    pub fn section(&self, key: &str) -> AppResult<Section<'a>> {
        match self.get(key) {
            Some(v) if v.is_table() => Ok(Section::new(v, leak_path(self.dotted(key)))),
            Some(_) => Err(AppError::config(format!(
                "field {} must be a table",
                self.dotted(key)
            ))),
            None => Err(AppError::config(format!(
                "missing section: {}",
                self.dotted(key)
            ))),
        }
    }

    pub fn opt_section(&self, key: &str) -> AppResult<Option<Section<'a>>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => Ok(Some(self.section(key)?)),
        }
    }

    pub fn f64(&self, key: &str) -> AppResult<f64> {
        as_f64(self.require(key)?, &self.dotted(key))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> AppResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_f64(v, &self.dotted(key)),
        }
    }

    pub fn u64(&self, key: &str) -> AppResult<u64> {
        as_u64(self.require(key)?, &self.dotted(key))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> AppResult<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_u64(v, &self.dotted(key)),
        }
    }

    pub fn str(&self, key: &str) -> AppResult<&'a str> {
        as_str(self.require(key)?, &self.dotted(key))
    }

    pub fn str_or(&self, key: &str, default: &'a str) -> AppResult<&'a str> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_str(v, &self.dotted(key)),
        }
    }

    pub fn opt_str(&self, key: &str) -> AppResult<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => Ok(Some(as_str(v, &self.dotted(key))?)),
        }
    }

    pub fn f64_array(&self, key: &str) -> AppResult<Vec<f64>> {
        let path = self.dotted(key);
        let arr = self
            .require(key)?
            .as_array()
            .ok_or_else(|| AppError::config(format!("field {path} must be an array")))?;
        arr.iter().map(|v| as_f64(v, &path)).collect()
    }

    pub fn f64_array_or(&self, key: &str, default: &[f64]) -> AppResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(_) => self.f64_array(key),
        }
    }

    pub fn str_array_or(&self, key: &str, default: &[&str]) -> AppResult<Vec<String>> {
        let path = self.dotted(key);
        match self.get(key) {
            None => Ok(default.iter().map(|s| s.to_string()).collect()),
            Some(v) => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| AppError::config(format!("field {path} must be an array")))?;
                arr.iter()
                    .map(|v| as_str(v, &path).map(str::to_string))
                    .collect()
            }
        }
    }

    pub fn array(&self, key: &str) -> AppResult<&'a [Value]> {
        let path = self.dotted(key);
        self.require(key)?
            .as_array()
            .map(Vec::as_slice)
            .ok_or_else(|| AppError::config(format!("field {path} must be an array")))
    }
}

fn as_f64(v: &Value, path: &str) -> AppResult<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(AppError::config(format!("field {path} must be a number"))),
    }
}

fn as_u64(v: &Value, path: &str) -> AppResult<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(AppError::config(format!(
            "field {path} must be a nonnegative integer"
        ))),
    }
}

fn as_str<'a>(v: &'a Value, path: &str) -> AppResult<&'a str> {
    v.as_str()
        .ok_or_else(|| AppError::config(format!("field {path} must be a string")))
}

/// Dotted paths live in error messages and section views; a handful of
/// short strings per run, interned for the process lifetime so sections
/// can stay `Copy`.
fn leak_path(path: String) -> &'static str {
    Box::leak(path.into_boxed_str())
}

/// Deep-merge `over` onto `base`: tables merge recursively, every other
/// value replaces.
pub fn merge_value(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge_value(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}
