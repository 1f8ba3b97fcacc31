//! Scenario configuration files.
//!
//! Configs are TOML: top-level `schema_version` and `seed`, then one table
//! per concern. Every physical quantity carries its unit in the key name,
//! every key is optional (omitted keys fall back to the shipped presets),
//! and unknown keys are rejected with their line and column. See
//! `presets/annotated.toml` for a complete annotated example.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use coilbed::control::{Method, MethodParams};
use coilbed::experiments::{FitSelection, NoiseBurst, StepScenario, SysIdScenario};
use coilbed::magnetics::{GridAxis, GridSpec, HelmholtzPair, UniformityMode};
use coilbed::plant::{AcComponent, DisturbanceSpec, PlantModel, SensorSpec, TargetProfile};
use coilbed::presets::{self, SnrPreset, StepPreset};
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("config `{path}`: unsupported schema_version {found} (this build reads {SCHEMA_VERSION})")]
    Schema { path: String, found: u32 },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub seed: Option<u64>,
    #[serde(default)]
    pub coil: CoilSection,
    #[serde(default)]
    pub field_map: FieldMapSection,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub sensor: SensorSection,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub sysid: SysIdSection,
    #[serde(default)]
    pub step: StepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilSection {
    pub side_mm: Option<f64>,
    /// Omitted: the optimal spacing for `side_mm`.
    pub spacing_mm: Option<f64>,
    pub turns: Option<u32>,
    pub current_a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridPreset {
    /// Single point at the centre.
    Origin,
    /// 41 points along z from −d to +d.
    #[default]
    ZLine,
    /// 5 × 5 points on the mid-plane spanning ±0.3·d.
    #[value(name = "plane25")]
    Plane25,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub min_mm: f64,
    pub max_mm: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapSection {
    pub grid: Option<GridPreset>,
    /// Explicit axes override `grid` when all three are present.
    pub x: Option<AxisSection>,
    pub y: Option<AxisSection>,
    pub z: Option<AxisSection>,
    pub uniformity: Option<UniformityMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitChoice {
    #[default]
    ByDirection,
    Ascending,
    Descending,
    Custom,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub fit: Option<FitChoice>,
    pub fit_k_ut_per_v: Option<f64>,
    pub fit_b_ut: Option<f64>,
    pub v_min_v: Option<f64>,
    pub v_max_v: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorModel {
    Hmc5883l,
    Rm3100,
    Ideal,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    pub model: Option<SensorModel>,
    pub noise_sigma_nt: Option<f64>,
    pub quantization_step_nt: Option<f64>,
    pub sample_rate_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcSection {
    pub amplitude_nt: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub dc_offset_nt: Option<f64>,
    pub gaussian_sigma_nt: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub ac: Vec<AcSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
pub enum ParamPreset {
    /// The set matching the SNR (10 dB below 20 dB, else 30 dB).
    #[serde(rename = "table4")]
    #[value(name = "table4")]
    Table4,
    /// The 30 dB set regardless of SNR.
    #[serde(rename = "table4-0")]
    #[value(name = "table4-0")]
    Table4Zero,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmsSection {
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvsSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlmsSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub m: Option<f64>,
    pub n_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub phi: Option<f64>,
    pub c: Option<f64>,
    pub mu_b: Option<f64>,
    pub gamma_o: Option<f64>,
    pub t_o: Option<u32>,
    pub b_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub preset: Option<ParamPreset>,
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub lms: LmsSection,
    #[serde(default)]
    pub svs: SvsSection,
    #[serde(default)]
    pub atlms: AtlmsSection,
    #[serde(default)]
    pub convex: ConvexSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SysIdSection {
    pub snr_db: Option<f64>,
    pub order: Option<usize>,
    pub iterations: Option<usize>,
    pub trials: Option<usize>,
    /// Set `burst_len = 0` to disable the noise burst.
    pub burst_at_iter: Option<usize>,
    pub burst_len: Option<usize>,
    pub burst_gain: Option<f64>,
    pub true_weights: Option<Vec<f64>>,
    pub initial_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// 0 → 120 μT.
    #[serde(rename = "table7-up")]
    #[value(name = "table7-up")]
    Table7Up,
    /// 120 μT → 0.
    #[serde(rename = "table7-down")]
    #[value(name = "table7-down")]
    Table7Down,
    Constant,
    StepUp,
    StepDown,
    RampUp,
    File,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub profile: Option<ProfileKind>,
    pub from_nt: Option<f64>,
    pub to_nt: Option<f64>,
    pub level_nt: Option<f64>,
    pub switch_time_s: Option<f64>,
    pub ramp_s: Option<f64>,
    /// Two-column CSV `t_s,target_nT` for `profile = "file"`, relative to
    /// the config file.
    pub file: Option<PathBuf>,
    pub duration_s: Option<f64>,
    pub settle_time_s: Option<f64>,
    pub band_fraction: Option<f64>,
    pub regressor_gain: Option<f64>,
    pub trials: Option<usize>,
    pub initial_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Also write per-step controller diagnostics.
    pub diagnostics: Option<bool>,
}

/// A parsed config and the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    pub base_dir: PathBuf,
}

pub fn parse(text: &str, origin: &str) -> Result<Config, ConfigError> {
    let config: Config =
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::Schema { path: origin.to_string(), found: config.schema_version });
    }
    Ok(config)
}

pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let config = parse(&text, &path.display().to_string())?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base_dir })
}

impl Default for Loaded {
    fn default() -> Self {
        Self { config: Config { schema_version: SCHEMA_VERSION, ..Default::default() }, base_dir: PathBuf::new() }
    }
}

impl Loaded {
    pub fn pair(&self) -> Result<HelmholtzPair, ConfigError> {
        let c = &self.config.coil;
        let base = presets::TESTBED_PAIR;
        let side = c.side_mm.map_or(base.side, |mm| mm / 1000.0);
        let spacing = match (c.spacing_mm, c.side_mm) {
            (Some(mm), _) => mm / 1000.0,
            (None, Some(_)) => {
                coilbed::coilopt::optimal_spacing(side).map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
            (None, None) => base.spacing,
        };
        let pair = HelmholtzPair {
            side,
            spacing,
            turns: c.turns.unwrap_or(base.turns),
            current: c.current_a.unwrap_or(base.current),
        };
        pair.validate().map_err(|e| ConfigError::Invalid(format!("[coil] {e}")))?;
        Ok(pair)
    }

    pub fn grid(&self, pair: &HelmholtzPair) -> Result<GridSpec, ConfigError> {
        let f = &self.config.field_map;
        let axis = |a: AxisSection| GridAxis { min: a.min_mm / 1000.0, max: a.max_mm / 1000.0, count: a.count };
        if let (Some(x), Some(y), Some(z)) = (f.x, f.y, f.z) {
            let g = GridSpec { x: axis(x), y: axis(y), z: axis(z) };
            if g.is_empty() {
                return Err(ConfigError::Invalid("[field_map] axis counts must be at least 1".into()));
            }
            return Ok(g);
        }
        if f.x.is_some() || f.y.is_some() || f.z.is_some() {
            return Err(ConfigError::Invalid("[field_map] give all of x, y and z axes or none".into()));
        }
        Ok(grid_preset(f.grid.unwrap_or_default(), pair))
    }

    pub fn uniformity_mode(&self) -> UniformityMode {
        self.config.field_map.uniformity.unwrap_or_default()
    }

    pub fn seed(&self, cli: Option<u64>) -> Option<u64> {
        cli.or(self.config.seed)
    }

    /// Parameters for `method` at `snr`, starting from the chosen preset and
    /// applying `[controller.*]` overrides.
    pub fn method_params(&self, method: Method, base: MethodParams) -> MethodParams {
        let c = &self.config.controller;
        match base {
            MethodParams::Lms(mut p) => {
                if let Some(v) = c.lms.mu {
                    p.mu = v;
                }
                MethodParams::Lms(p)
            }
            MethodParams::Svs(mut p) => {
                p.alpha = c.svs.alpha.unwrap_or(p.alpha);
                p.beta = c.svs.beta.unwrap_or(p.beta);
                MethodParams::Svs(p)
            }
            MethodParams::Atlms(mut p) => {
                p.alpha = c.atlms.alpha.unwrap_or(p.alpha);
                p.beta = c.atlms.beta.unwrap_or(p.beta);
                p.m = c.atlms.m.unwrap_or(p.m);
                p.n_scale = c.atlms.n_scale.unwrap_or(p.n_scale);
                MethodParams::Atlms(p)
            }
            MethodParams::Convex(mut p) => {
                let o = &c.convex;
                p.alpha = o.alpha.unwrap_or(p.alpha);
                p.beta = o.beta.unwrap_or(p.beta);
                p.sigma = o.sigma.unwrap_or(p.sigma);
                p.phi = o.phi.unwrap_or(p.phi);
                p.c = o.c.unwrap_or(p.c);
                p.mu_b = o.mu_b.unwrap_or(p.mu_b);
                p.gamma_o = o.gamma_o.unwrap_or(p.gamma_o);
                p.t_o = o.t_o.unwrap_or(p.t_o);
                p.b_limit = o.b_limit.unwrap_or(p.b_limit);
                debug_assert_eq!(method, Method::Convex);
                MethodParams::Convex(p)
            }
        }
    }

    pub fn methods(&self, cli: &[Method]) -> Vec<Method> {
        if !cli.is_empty() {
            return cli.to_vec();
        }
        self.config.controller.methods.clone().unwrap_or_else(|| Method::ALL.to_vec())
    }

    /// SNR preset: explicit `--preset`/`[controller] preset`, else the one
    /// nearest the SNR.
    pub fn snr_preset(&self, cli: Option<ParamPreset>, snr_db: f64) -> SnrPreset {
        match cli.or(self.config.controller.preset) {
            Some(ParamPreset::Table4Zero) => SnrPreset::Db30,
            Some(ParamPreset::Table4) | None => SnrPreset::nearest(snr_db),
        }
    }

    pub fn sysid_scenario(&self, snr_db: f64, seed: Option<u64>) -> Result<SysIdScenario, ConfigError> {
        let s = &self.config.sysid;
        let base = SysIdScenario::default();
        let order = s.order.unwrap_or(base.order);
        let fit = |v: &Option<Vec<f64>>, dflt: Vec<f64>| -> Vec<f64> {
            v.clone().unwrap_or_else(|| if dflt.len() == order { dflt } else { vec![0.0; order] })
        };
        let burst_len = s.burst_len.unwrap_or(10);
        let scn = SysIdScenario {
            snr_db,
            order,
            n_iters: s.iterations.unwrap_or(base.n_iters),
            burst: (burst_len > 0).then(|| NoiseBurst {
                at: s.burst_at_iter.unwrap_or(2500),
                len: burst_len,
                gain: s.burst_gain.unwrap_or(10.0),
            }),
            true_weights: fit(&s.true_weights, base.true_weights.clone()),
            initial_weights: fit(&s.initial_weights, base.initial_weights.clone()),
            signal_power: base.signal_power,
            trials: s.trials.unwrap_or(base.trials),
            seed: seed.unwrap_or(base.seed),
        };
        scn.validate().map_err(|e| ConfigError::Invalid(format!("[sysid] {e}")))?;
        Ok(scn)
    }

    pub fn sysid_snr(&self, cli: Option<f64>) -> f64 {
        cli.or(self.config.sysid.snr_db).unwrap_or(30.0)
    }

    fn profile(&self, kind: ProfileKind) -> Result<TargetProfile, ConfigError> {
        let s = &self.config.step;
        let need =
            |v: Option<f64>, key: &str| v.ok_or_else(|| ConfigError::Invalid(format!("[step] profile needs `{key}`")));
        let switch = s.switch_time_s.unwrap_or(presets::STEP_SWITCH_S);
        let profile = match kind {
            ProfileKind::Table7Up => StepPreset::Up.profile(),
            ProfileKind::Table7Down => StepPreset::Down.profile(),
            ProfileKind::Constant => TargetProfile::Constant { level_nt: need(s.level_nt, "level_nt")? },
            ProfileKind::StepUp => TargetProfile::StepUp {
                from_nt: need(s.from_nt, "from_nt")?,
                to_nt: need(s.to_nt, "to_nt")?,
                switch_time_s: switch,
            },
            ProfileKind::StepDown => TargetProfile::StepDown {
                from_nt: need(s.from_nt, "from_nt")?,
                to_nt: need(s.to_nt, "to_nt")?,
                switch_time_s: switch,
            },
            ProfileKind::RampUp => TargetProfile::RampUp {
                from_nt: need(s.from_nt, "from_nt")?,
                to_nt: need(s.to_nt, "to_nt")?,
                switch_time_s: switch,
                ramp_s: need(s.ramp_s, "ramp_s")?,
            },
            ProfileKind::File => {
                let rel = s
                    .file
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("[step] profile = \"file\" needs `file`".into()))?;
                let path = self.base_dir.join(rel);
                TargetProfile::FromFile { samples: read_profile_csv(&path)? }
            }
        };
        profile.validate().map_err(|e| ConfigError::Invalid(format!("[step] {e}")))?;
        Ok(profile)
    }

    /// Profiles to run: the CLI `--preset` wins, then `[step] profile`, else
    /// both shipped step profiles.
    pub fn step_profiles(&self, cli: Option<ProfileKind>) -> Result<Vec<(String, TargetProfile)>, ConfigError> {
        let kinds = match cli.or(self.config.step.profile) {
            Some(k) => vec![k],
            None => vec![ProfileKind::Table7Up, ProfileKind::Table7Down],
        };
        kinds.into_iter().map(|k| Ok((profile_name(k).to_string(), self.profile(k)?))).collect()
    }

    pub fn step_scenario(
        &self,
        profile: TargetProfile,
        method: Method,
        seed: Option<u64>,
    ) -> Result<StepScenario, ConfigError> {
        let params = self.method_params(method, presets::step_params(method));
        let mut scn = StepScenario::shielded(profile, params);
        let s = &self.config.step;
        scn.duration_s = s.duration_s.unwrap_or(scn.duration_s);
        scn.settle_time_s = s.settle_time_s.unwrap_or(scn.settle_time_s);
        scn.band_fraction = s.band_fraction.unwrap_or(scn.band_fraction);
        scn.regressor_gain = s.regressor_gain.unwrap_or(scn.regressor_gain);
        scn.trials = s.trials.unwrap_or(scn.trials);
        if let Some(w) = &s.initial_weights {
            scn.initial_weights = w.clone();
        }
        if let Some(seed) = seed {
            scn.seed = seed;
        }

        let p = &self.config.plant;
        scn.fit_selection = match p.fit.unwrap_or_default() {
            FitChoice::ByDirection => FitSelection::ByDirection,
            choice => {
                let base = match choice {
                    FitChoice::Ascending | FitChoice::Custom => PlantModel::ASCENDING_FIT,
                    _ => PlantModel::DESCENDING_FIT,
                };
                scn.plant.fit_k = base.0;
                scn.plant.fit_b = base.1;
                FitSelection::Fixed
            }
        };
        if p.fit == Some(FitChoice::Custom) {
            scn.plant.fit_k = p
                .fit_k_ut_per_v
                .ok_or_else(|| ConfigError::Invalid("[plant] custom fit needs fit_k_ut_per_v".into()))?;
            scn.plant.fit_b =
                p.fit_b_ut.ok_or_else(|| ConfigError::Invalid("[plant] custom fit needs fit_b_ut".into()))?;
        } else if p.fit_k_ut_per_v.is_some() || p.fit_b_ut.is_some() {
            return Err(ConfigError::Invalid("[plant] fit_k_ut_per_v/fit_b_ut need fit = \"custom\"".into()));
        }
        scn.plant.v_min = p.v_min_v.unwrap_or(scn.plant.v_min);
        scn.plant.v_max = p.v_max_v.unwrap_or(scn.plant.v_max);

        let s = &self.config.sensor;
        let mut sensor = match s.model.unwrap_or(SensorModel::Hmc5883l) {
            SensorModel::Hmc5883l => SensorSpec::HMC5883L,
            SensorModel::Rm3100 => SensorSpec::RM3100,
            SensorModel::Ideal => SensorSpec::IDEAL,
        };
        sensor.noise_sigma_nt = s.noise_sigma_nt.unwrap_or(sensor.noise_sigma_nt);
        sensor.quantization_step_nt = s.quantization_step_nt.unwrap_or(sensor.quantization_step_nt);
        sensor.sample_rate_hz = s.sample_rate_hz.unwrap_or(sensor.sample_rate_hz);
        scn.sensor = sensor;

        let d = &self.config.disturbance;
        scn.disturbance = DisturbanceSpec {
            dc_offset_nt: d.dc_offset_nt.unwrap_or(0.0),
            ac_components: d
                .ac
                .iter()
                .map(|a| AcComponent {
                    amplitude_nt: a.amplitude_nt,
                    frequency_hz: a.frequency_hz,
                    phase_rad: a.phase_rad,
                })
                .collect(),
            gaussian_sigma_nt: d.gaussian_sigma_nt.unwrap_or(0.0),
            seed: d.seed.unwrap_or(0),
        };

        scn.validate().map_err(|e| ConfigError::Invalid(format!("[step] {e}")))?;
        Ok(scn)
    }

    pub fn out_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.config.output.dir.as_ref().map(|d| self.base_dir.join(d)))
            .unwrap_or_else(|| PathBuf::from("coilbed-out"))
    }

    pub fn diagnostics(&self) -> bool {
        self.config.output.diagnostics.unwrap_or(false)
    }
}

pub fn profile_name(kind: ProfileKind) -> &'static str {
    match kind {
        ProfileKind::Table7Up => "table7-up",
        ProfileKind::Table7Down => "table7-down",
        ProfileKind::Constant => "constant",
        ProfileKind::StepUp => "step-up",
        ProfileKind::StepDown => "step-down",
        ProfileKind::RampUp => "ramp-up",
        ProfileKind::File => "file",
    }
}

pub fn grid_preset(preset: GridPreset, pair: &HelmholtzPair) -> GridSpec {
    let d = pair.spacing;
    match preset {
        GridPreset::Origin => GridSpec { x: GridAxis::fixed(0.0), y: GridAxis::fixed(0.0), z: GridAxis::fixed(0.0) },
        GridPreset::ZLine => {
            GridSpec { x: GridAxis::fixed(0.0), y: GridAxis::fixed(0.0), z: GridAxis { min: -d, max: d, count: 41 } }
        }
        GridPreset::Plane25 => {
            let a = GridAxis { min: -0.3 * d, max: 0.3 * d, count: 5 };
            GridSpec { x: a, y: a, z: GridAxis::fixed(0.0) }
        }
    }
}

fn read_profile_csv(path: &Path) -> Result<Vec<(f64, f64)>, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("t_s")) {
            continue;
        }
        let bad = || ConfigError::Invalid(format!("{}:{}: expected `t_s,target_nT`", path.display(), i + 1));
        let (t, v) = line.split_once(',').ok_or_else(bad)?;
        rows.push((t.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = parse("schema_version = 1\n", "inline").unwrap();
        assert!(c.seed.is_none());
    }

    #[test]
    fn unknown_key_reports_location() {
        let err = parse("schema_version = 1\n[coil]\nside_m = 1.0\n", "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("side_m"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn wrong_schema_version() {
        assert!(matches!(parse("schema_version = 2\n", "inline"), Err(ConfigError::Schema { found: 2, .. })));
    }

    #[test]
    fn side_alone_gets_optimal_spacing() {
        let loaded = Loaded {
            config: parse("schema_version = 1\n[coil]\nside_mm = 1000\n", "x").unwrap(),
            ..Default::default()
        };
        let p = loaded.pair().unwrap();
        assert!((p.spacing - 0.5445).abs() < 1e-4);
    }

    fn preset(name: &str) -> Loaded {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
        load(&dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    #[test]
    fn every_shipped_preset_validates() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
        let mut count = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                let l = load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                let pair = l.pair().unwrap();
                l.grid(&pair).unwrap();
                l.sysid_scenario(l.sysid_snr(None), l.seed(None)).unwrap();
                for (_, profile) in l.step_profiles(None).unwrap() {
                    for m in l.methods(&[]) {
                        l.step_scenario(profile.clone(), m, None).unwrap();
                    }
                }
                count += 1;
            }
        }
        assert!(count >= 6);
    }

    #[test]
    fn identification_presets_match_builtins() {
        for (file, own, other) in
            [("table4.toml", SnrPreset::Db10, SnrPreset::Db30), ("table4-0.toml", SnrPreset::Db30, SnrPreset::Db10)]
        {
            let l = preset(file);
            let snr = l.sysid_snr(None);
            assert_eq!(l.snr_preset(None, snr), own);
            assert_eq!(l.sysid_scenario(snr, l.seed(None)).unwrap(), presets::sysid_scenario(own));
            for m in Method::ALL {
                // Every field is spelled out, so the base set must not matter.
                assert_eq!(
                    l.method_params(m, presets::sysid_params(m, other)),
                    presets::sysid_params(m, own),
                    "{file} {m}"
                );
            }
        }
    }

    #[test]
    fn step_presets_match_builtins() {
        for (file, p) in [("table7-up.toml", StepPreset::Up), ("table7-down.toml", StepPreset::Down)] {
            let l = preset(file);
            let profiles = l.step_profiles(None).unwrap();
            assert_eq!(profiles.len(), 1);
            assert_eq!(profiles[0].0, p.name());
            for m in Method::ALL {
                let scn = l.step_scenario(profiles[0].1.clone(), m, l.seed(None)).unwrap();
                assert_eq!(scn, presets::step_scenario(p, m), "{file} {m}");
            }
        }
    }

    #[test]
    fn testbed_preset_matches_builtin() {
        let p = preset("testbed.toml").pair().unwrap();
        let t = presets::TESTBED_PAIR;
        assert!((p.side - t.side).abs() < 1e-12 && (p.spacing - t.spacing).abs() < 1e-12);
        assert_eq!((p.turns, p.current), (t.turns, t.current));
    }

    #[test]
    fn location_preset_targets_north_component() {
        let l = preset("location-north.toml");
        let (_, profile) = l.step_profiles(None).unwrap().remove(0);
        assert_eq!(profile, TargetProfile::Constant { level_nt: presets::LOCATION_FIELD_NT[0] });
    }
}
