//! Configuration-driven runs: build the forward data, run one reconstruction and
//! write `field.csv`, `field.pgm` (or the chain files) and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bayes::{self, BayesModel, ChainConfig, Posterior, DEFAULT_PRIOR_SD, DEFAULT_SUPPORT_ORDER};
use crate::born::{add_noise_with, assemble_multistatic, born_smallness, NoiseKind, DEFAULT_RULE_ORDER};
use crate::disk::{disk_multistatic, rhs_point_source, DiskMedium, DEFAULT_QUAD_POINTS, DEFAULT_TRUNCATION};
use crate::error::{Error, Result};
use crate::field::IndicatorField;
use crate::geometry::{
    make_grid, make_sensor_array, Bounds, Point, RefractiveIndex, SamplingGrid, ScattererSpec, Shape, MAX_RULE_ORDER,
    MIN_RULE_ORDER,
};
use crate::linalg::Regime;
use crate::music::{build_music_with_tol, music_field, DEFAULT_RANK_TOL};
use crate::sampling::{
    default_eps_sequence, fm_field, fm_mlsm_equivalence_check, mlsm_field, FilterKind, FilterSpec, PicardData,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    BornMusic,
    DiskFm,
    DiskMlsm,
    Bayes,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub count: usize,
    pub radius: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { count: 32, radius: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    pub a: Complex64,
    pub n: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub delta: f64,
    pub seed: u64,
    pub kind: NoiseKind,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            delta: 0.0,
            seed: 0,
            kind: NoiseKind::Complex,
        }
    }
}

/// ε sweep of the MLSM value at a few probe points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceConfig {
    pub probes: Vec<Point>,
    #[serde(default = "default_eps_sequence")]
    pub eps_sequence: Vec<f64>,
    #[serde(default = "default_sweep_filter")]
    pub filter: FilterKind,
    /// Partial Picard sum length; defaults to the retained spectrum.
    #[serde(default)]
    pub m_terms: Option<usize>,
}

fn default_sweep_filter() -> FilterKind {
    FilterKind::Tikhonov
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    /// Reconstructed support `D̂`.
    pub support: Shape,
    #[serde(default = "default_support_order")]
    pub rule_order: usize,
    /// Spread of `η` about `γ`; defaults to the diameter of the support.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_prior_sd")]
    pub prior_sd: f64,
    #[serde(default = "one")]
    pub proposal_scale: f64,
    #[serde(default)]
    pub chain: ChainConfig,
    /// Sample the reduction `η ≡ γ` instead of the joint posterior.
    #[serde(default)]
    pub collapsed: bool,
}

fn default_support_order() -> usize {
    DEFAULT_SUPPORT_ORDER
}

fn default_prior_sd() -> f64 {
    DEFAULT_PRIOR_SD
}

fn one() -> f64 {
    1.0
}

fn default_rule_order() -> usize {
    DEFAULT_RULE_ORDER
}

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

fn default_quad_points() -> usize {
    DEFAULT_QUAD_POINTS
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default)]
    pub sensors: SensorConfig,
    #[serde(default)]
    pub scatterers: Vec<ScattererSpec>,
    #[serde(default = "default_rule_order")]
    pub rule_order: usize,
    #[serde(default)]
    pub disk: Option<DiskConfig>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    /// Defaults to a 101×101 square at 0.9 of the measurement radius.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Defaults to the regime implied by the disk medium.
    #[serde(default)]
    pub regime: Option<Regime>,
    /// MLSM filter; defaults to a spectral cutoff at the numerical rank.
    #[serde(default)]
    pub filter: Option<FilterSpec>,
    /// MUSIC signal-space dimension; defaults to the numerical rank of `NN*`.
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default)]
    pub equivalence: Option<EquivalenceConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub bayes: Option<BayesConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Json {
            context: "invalid experiment config".into(),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Json {
            context: "config is not valid JSON".into(),
            source: e,
        })?;
        Self::from_value(v)
    }

    /// Sets the noise seed and, for Bayesian runs, the chain seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.noise.seed = seed;
        if let Some(b) = self.bayes.as_mut() {
            b.chain.seed = seed;
        }
    }

    fn is_disk(&self) -> bool {
        matches!(self.mode, Mode::DiskFm | Mode::DiskMlsm)
    }

    fn measurement_radius(&self) -> f64 {
        if self.is_disk() {
            crate::disk::MEASUREMENT_RADIUS
        } else {
            self.sensors.radius
        }
    }

    /// Structural checks; everything rejected here exits as a configuration error.
    pub fn validate(&self) -> Result<()> {
        let c = |r: Result<()>| r.map_err(|e| config_err(e.to_string()));
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(config_err(format!("k must be positive, got {}", self.k)));
        }
        if !(self.noise.delta >= 0.0) || !self.noise.delta.is_finite() {
            return Err(config_err(format!(
                "noise delta must be >= 0, got {}",
                self.noise.delta
            )));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(config_err(format!(
                "rank_tol must lie in (0, 1), got {}",
                self.rank_tol
            )));
        }
        if let Some(g) = &self.grid {
            c(make_grid(g.bounds, g.nx, g.ny).map(|_| ()))?;
        }
        if let Some(f) = &self.filter {
            if !(f.eps() > 0.0) || !f.eps().is_finite() {
                return Err(config_err(format!("filter eps must be positive, got {}", f.eps())));
            }
        }
        let unused = |name: &str, present: bool| {
            if present {
                Err(config_err(format!("`{name}` does not apply to mode {:?}", self.mode)))
            } else {
                Ok(())
            }
        };
        match self.mode {
            Mode::BornMusic | Mode::Bayes => {
                unused("disk", self.disk.is_some())?;
                unused("equivalence", self.equivalence.is_some())?;
                unused("regime", self.regime.is_some())?;
                unused("filter", self.filter.is_some())?;
                if self.mode == Mode::BornMusic {
                    unused("bayes", self.bayes.is_some())?;
                } else {
                    unused("rank", self.rank.is_some())?;
                }
                if self.sensors.count < 2 || !(self.sensors.radius > 0.0) {
                    return Err(config_err("need at least 2 sensors on a circle of positive radius"));
                }
                if self.scatterers.is_empty() {
                    return Err(config_err("at least one scatterer is required"));
                }
                if !(MIN_RULE_ORDER..=MAX_RULE_ORDER).contains(&self.rule_order) {
                    return Err(config_err(format!(
                        "rule_order {} outside [{MIN_RULE_ORDER}, {MAX_RULE_ORDER}]",
                        self.rule_order
                    )));
                }
                let arr = make_sensor_array(self.sensors.count, self.sensors.radius)
                    .map_err(|e| config_err(e.to_string()))?;
                for s in &self.scatterers {
                    c(s.validate())?;
                    if arr.points().iter().any(|&p| s.region().contains(p)) {
                        return Err(config_err(format!("scatterer {:?} overlaps the sensors", s.shape)));
                    }
                }
                if let Some(r) = self.rank {
                    if r > self.sensors.count {
                        return Err(config_err(format!(
                            "rank {r} exceeds sensor count {}",
                            self.sensors.count
                        )));
                    }
                }
                if self.mode == Mode::Bayes {
                    let b = self
                        .bayes
                        .as_ref()
                        .ok_or_else(|| config_err("mode bayes needs a `bayes` section"))?;
                    if self.noise.delta == 0.0 {
                        return Err(config_err("mode bayes needs noise.delta > 0 for the likelihood"));
                    }
                    c(b.chain.validate())?;
                    if !(b.prior_sd > 0.0) || !(b.proposal_scale > 0.0) {
                        return Err(config_err("prior_sd and proposal_scale must be positive"));
                    }
                    c(BayesModel::new(b.support.clone(), b.rule_order, self.k, b.h).map(|_| ()))?;
                    if arr.points().iter().any(|&p| b.support.contains(p)) {
                        return Err(config_err("bayes support overlaps the sensors"));
                    }
                }
            }
            Mode::DiskFm | Mode::DiskMlsm => {
                unused("scatterers", !self.scatterers.is_empty())?;
                unused("bayes", self.bayes.is_some())?;
                unused("rank", self.rank.is_some())?;
                if self.mode == Mode::DiskFm {
                    unused("filter", self.filter.is_some())?;
                    unused("equivalence", self.equivalence.is_some())?;
                }
                let d = self
                    .disk
                    .ok_or_else(|| config_err("disk modes need a `disk` section"))?;
                let medium = DiskMedium {
                    a: d.a,
                    n: d.n,
                    k: self.k,
                };
                c(medium.validate())?;
                if self.quad_points < 2 * self.truncation + 2 {
                    return Err(config_err(format!(
                        "truncation M = {} exceeds quad_points/2 - 1 = {} (quad_points = {})",
                        self.truncation,
                        (self.quad_points / 2).saturating_sub(1),
                        self.quad_points
                    )));
                }
                if self.regime.is_none() && medium.regime().is_none() {
                    return Err(config_err(format!(
                        "no sign condition holds for a = {}, n = {}; set `regime` explicitly",
                        d.a, d.n
                    )));
                }
                if let Some(eq) = &self.equivalence {
                    let s = &eq.eps_sequence;
                    if s.is_empty() || s.iter().any(|e| !(*e > 0.0)) || s.windows(2).any(|w| !(w[1] < w[0])) {
                        return Err(config_err(
                            "equivalence.eps_sequence must be positive and strictly decreasing",
                        ));
                    }
                    if let Some(p) = eq.probes.iter().find(|p| p.norm() >= crate::disk::MEASUREMENT_RADIUS) {
                        return Err(config_err(format!(
                            "probe ({}, {}) is outside the measurement circle",
                            p.x, p.y
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sampling_grid(&self) -> Result<SamplingGrid> {
        match &self.grid {
            Some(g) => make_grid(g.bounds, g.nx, g.ny),
            None => make_grid(Bounds::square(0.9 * self.measurement_radius()), 101, 101),
        }
    }

    fn medium(&self) -> Result<DiskMedium> {
        let d = self.disk.ok_or_else(|| config_err("missing `disk` section"))?;
        DiskMedium::new(d.a, d.n, self.k)
    }

    fn regime(&self) -> Result<Regime> {
        match self.regime {
            Some(r) => Ok(r),
            None => self.medium()?.regime().ok_or_else(|| config_err("no regime applies")),
        }
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// RFC 7396 merge patch: objects merge key by key, `null` deletes, anything else replaces.
pub fn merge_patch(target: &mut Value, patch: &Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    merge_patch(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        (t, p) => *t = p.clone(),
    }
}

pub const PRESETS: [&str; 6] = ["figure1", "figure2", "figure3", "figure45", "figure6", "figure7"];

fn square_json(half: f64) -> Value {
    json!({"kind": "rectangle", "min": {"x": -half, "y": -half}, "max": {"x": half, "y": half}})
}

fn quadratic_index() -> Value {
    serde_json::to_value(RefractiveIndex::quadratic_in_x()).unwrap_or(Value::Null)
}

/// Built-in configurations as `(subdirectory, config)` pairs; an empty name
/// writes straight into the output directory.
pub fn preset(name: &str) -> Result<Vec<(String, Value)>> {
    let born = |scatterers: Value| {
        json!({
            "mode": "born-music",
            "k": 1.0,
            "sensors": {"count": 32, "radius": 1.0},
            "scatterers": scatterers,
            "grid": {"bounds": {"xmin": -0.9, "xmax": 0.9, "ymin": -0.9, "ymax": 0.9}, "nx": 101, "ny": 101},
            "noise": {"delta": 0.02, "seed": 1}
        })
    };
    let disk = |mode: &str, a: [f64; 2], n: [f64; 2], regime: &str| {
        json!({
            "mode": mode,
            "k": 1.0,
            "disk": {"a": a, "n": n},
            "truncation": 20,
            "quad_points": 64,
            "regime": regime,
            "grid": {"bounds": {"xmin": -1.8, "xmax": 1.8, "ymin": -1.8, "ymax": 1.8}, "nx": 101, "ny": 101}
        })
    };
    let bayes = |half: f64| {
        json!({
            "mode": "bayes",
            "k": 1.0,
            "sensors": {"count": 32, "radius": 1.0},
            "scatterers": [{"shape": square_json(0.2), "index": quadratic_index()}],
            "noise": {"delta": 0.15, "seed": 1},
            "bayes": {"support": square_json(half), "chain": {"iterations": 20000, "burn_in": 5000, "thinning": 1, "seed": 1}}
        })
    };
    let ellipse = json!({"kind": "ellipse", "center": {"x": 0.5, "y": -0.5}, "a": 0.2, "b": 0.1});
    let runs = match name {
        "figure1" => vec![(
            String::new(),
            born(json!([
                {"shape": {"kind": "disk", "center": {"x": -0.5, "y": 0.5}, "radius": 0.2},
                 "index": {"kind": "constant", "value": [5.0, 0.0]}},
                {"shape": ellipse, "index": {"kind": "constant", "value": [5.0, 0.0]}}
            ])),
        )],
        "figure2" => vec![(
            String::new(),
            born(json!([{"shape": ellipse, "index": {"kind": "constant", "value": [2.0, 1.0]}}])),
        )],
        "figure3" => vec![(
            String::new(),
            born(json!([{"shape": square_json(0.2), "index": quadratic_index()}])),
        )],
        "figure45" => vec![("exact".into(), bayes(0.2)), ("inflated".into(), bayes(0.265))],
        "figure6" => vec![
            ("fm".into(), disk("disk-fm", [0.5, 0.0], [5.0, 0.0], "nonabsorbing")),
            ("mlsm".into(), disk("disk-mlsm", [0.5, 0.0], [5.0, 0.0], "nonabsorbing")),
        ],
        "figure7" => vec![
            (
                "fm".into(),
                disk("disk-fm", [3.0, -1.0], [0.25, 2.0], "absorbing_conjugate"),
            ),
            (
                "mlsm".into(),
                disk("disk-mlsm", [3.0, -1.0], [0.25, 2.0], "absorbing_conjugate"),
            ),
        ],
        other => {
            return Err(config_err(format!(
                "unknown preset `{other}`; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(runs)
}

/// What a run produced, echoed into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub outputs: Vec<String>,
    pub details: Value,
}

fn write_field(field: &IndicatorField, dir: &Path, outputs: &mut Vec<String>) -> Result<()> {
    field.write_csv(&dir.join("field.csv"))?;
    field.write_pgm(&dir.join("field.pgm"))?;
    outputs.extend(["field.csv".to_string(), "field.pgm".to_string()]);
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Json {
        context: format!("serializing {}", path.display()),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs one configuration and writes its files plus `manifest.json` into `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut outputs = Vec::new();
    let details = match cfg.mode {
        Mode::BornMusic => {
            let sensors = make_sensor_array(cfg.sensors.count, cfg.sensors.radius)?;
            let clean = assemble_multistatic(&cfg.scatterers, &sensors, cfg.k, cfg.rule_order)?;
            let data = add_noise_with(&clean, cfg.noise.delta, cfg.noise.seed, cfg.noise.kind)?;
            let model = build_music_with_tol(&data, cfg.rank, cfg.rank_tol)?;
            let field = music_field(&model, &cfg.sampling_grid()?)?;
            write_field(&field, dir, &mut outputs)?;
            json!({
                "rank": model.rank(),
                "nn_eigenvalues": model.eig().values(),
                "born_smallness": born_smallness(&cfg.scatterers, &sensors, cfg.k, cfg.rule_order)?,
                "argmax": field.argmax(),
            })
        }
        Mode::DiskFm | Mode::DiskMlsm => {
            let medium = cfg.medium()?;
            let regime = cfg.regime()?;
            let clean = disk_multistatic(&medium, cfg.truncation, cfg.quad_points)?;
            let data = add_noise_with(&clean, cfg.noise.delta, cfg.noise.seed, cfg.noise.kind)?;
            let picard = PicardData::from_operator(&data.data, regime)?;
            let grid = cfg.sampling_grid()?;
            let mut details = json!({
                "regime": regime,
                "retained": picard.retained(),
                "lambda_max": picard.lambda1(),
                "lambda_min": picard.eig().values().iter().cloned().fold(f64::INFINITY, f64::min),
            });
            if cfg.mode == Mode::DiskFm {
                write_field(&fm_field(&picard, &data.sensors, cfg.k, &grid)?, dir, &mut outputs)?;
            } else {
                let filter = cfg.filter.unwrap_or_else(|| picard.cutoff_at_numerical_rank());
                write_field(
                    &mlsm_field(&picard, &data.sensors, cfg.k, &grid, &filter)?,
                    dir,
                    &mut outputs,
                )?;
                details["filter"] = serde_json::to_value(filter).unwrap_or(Value::Null);
                if let Some(eq) = &cfg.equivalence {
                    let m = eq.m_terms.unwrap_or(picard.retained());
                    let reports = eq
                        .probes
                        .iter()
                        .map(|&z| {
                            let phi = rhs_point_source(z, cfg.k, &data.sensors)?;
                            let r = fm_mlsm_equivalence_check(&picard, &phi, m, &eq.eps_sequence, eq.filter)?;
                            Ok(json!({"probe": z, "report": r, "growth": r.growth(), "last_step_change": r.last_step_change()}))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    write_json(&dir.join("equivalence.json"), &Value::Array(reports))?;
                    outputs.push("equivalence.json".into());
                }
            }
            details
        }
        Mode::Bayes => {
            let b = cfg
                .bayes
                .as_ref()
                .ok_or_else(|| config_err("missing `bayes` section"))?;
            let sensors = make_sensor_array(cfg.sensors.count, cfg.sensors.radius)?;
            let clean = assemble_multistatic(&cfg.scatterers, &sensors, cfg.k, cfg.rule_order)?;
            let readings = bayes::noisy_readings(&clean, cfg.noise.delta, cfg.noise.seed)?;
            let mut model = BayesModel::new(b.support.clone(), b.rule_order, cfg.k, b.h)?;
            model.prior_sd = b.prior_sd;
            model.proposal_scale = b.proposal_scale;
            model.chain = b.chain;
            let summary = if b.collapsed {
                bayes::run_mh_collapsed(&model, &readings)?
            } else {
                bayes::run_mh(&model, &readings)?
            };
            summary.write_chain_csv(&dir.join("chain.csv"))?;
            let post = Posterior::new(&model, &readings)?;
            let (cf_mean, cf_sd) = if b.collapsed {
                post.collapsed_closed_form()
            } else {
                let g = post.closed_form()?;
                (g.mean[0], g.sd(0))
            };
            let mut s = summary.summary_json();
            s["closed_form_mean"] = json!(cf_mean);
            s["closed_form_sd"] = json!(cf_sd);
            write_json(&dir.join("summary.json"), &s)?;
            outputs.extend(["chain.csv".to_string(), "summary.json".to_string()]);
            json!({
                "h": model.h,
                "nodes": model.nodes(),
                "likelihood_sd": readings.delta(),
                "born_smallness": born_smallness(&cfg.scatterers, &sensors, cfg.k, cfg.rule_order)?,
                "summary": s,
            })
        }
    };
    let report = RunReport {
        mode: cfg.mode,
        outputs,
        details,
    };
    let manifest = json!({
        "config": cfg,
        "config_sha256": cfg.hash(),
        "git_describe": option_env!("NEARFIELD_GIT_DESCRIBE"),
        "version": env!("CARGO_PKG_VERSION"),
        "parallel": cfg!(feature = "parallel"),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "mode": report.mode,
        "outputs": report.outputs,
        "details": report.details,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(report)
}

/// Resolves preset and overrides into the list of runs. The overrides are
/// merged into every run of the preset.
pub fn resolve(
    preset_name: Option<&str>,
    overrides: Option<&Value>,
    seed: Option<u64>,
) -> Result<Vec<(String, ExperimentConfig)>> {
    let mut runs = match preset_name {
        Some(p) => preset(p)?,
        None => vec![(String::new(), Value::Object(Default::default()))],
    };
    if preset_name.is_none() && overrides.is_none() {
        return Err(config_err("nothing to run: give a config file, a preset, or both"));
    }
    runs.iter_mut()
        .map(|(name, v)| {
            if let Some(o) = overrides {
                merge_patch(v, o);
            }
            let mut cfg = ExperimentConfig::from_value(v.take())?;
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            Ok((std::mem::take(name), cfg))
        })
        .collect()
}
