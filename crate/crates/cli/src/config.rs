//! Run configuration: TOML file, dotted overrides, and the sanity report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fqh_core::basis::enumerate_basis;
use fqh_core::spectrum::DENSE_DIM_CAP;
use fqh_core::{Lattice, J_MAX_MHZ};
use serde::{Deserialize, Serialize};

/// Shipped defaults, also used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

/// Flux or parameter axis: `{ start, stop, step }` (inclusive) or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range(Range),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Grid::Range(Range { start, stop, step })
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Grid::Range(r) => fqh_core::protocols::linear_grid(r.start, r.stop, r.step).map_err(Into::into),
            Grid::Values(v) if v.is_empty() => bail!("grid has no values"),
            Grid::Values(v) => Ok(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub lx: usize,
    pub ly: usize,
    #[serde(default = "default_j")]
    pub j_mhz: f64,
}

fn default_j() -> f64 {
    J_MAX_MHZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluxConfig {
    pub phi: f64,
}

impl Default for FluxConfig {
    fn default() -> Self {
        Self { phi: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub photons: usize,
    /// Defaults to 1 us, or 1.8 us from three photons up.
    pub duration_us: Option<f64>,
    pub initial_sites: Option<Vec<usize>>,
    pub disorder_mhz: f64,
    pub stage1_fraction: f64,
    pub gap_floor_mhz: f64,
    pub grid_points: usize,
    pub dt_us: f64,
    pub record_every_us: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            photons: 2,
            duration_us: None,
            initial_sites: None,
            disorder_mhz: -15.0,
            stage1_fraction: 0.2,
            gap_floor_mhz: 0.5,
            grid_points: 101,
            dt_us: fqh_core::DEFAULT_DT_US,
            record_every_us: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Absent means noiseless unitary evolution.
    pub t2_us: Option<f64>,
    /// Per-site overrides keyed by site index.
    pub site_t2_us: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    pub detunings_mhz: Grid,
    pub duration_us: f64,
    pub sample_us: f64,
}

impl Default for RabiConfig {
    fn default() -> Self {
        Self { detunings_mhz: Grid::range(-20.0, 20.0, 1.0), duration_us: 0.4, sample_us: 0.002 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbLoopConfig {
    pub phis: Grid,
}

impl Default for AbLoopConfig {
    fn default() -> Self {
        Self { phis: Grid::range(-1.0, 1.0, 0.02) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeflectConfig {
    pub phis: Grid,
    pub duration_us: f64,
    pub sample_us: f64,
}

impl Default for DeflectConfig {
    fn default() -> Self {
        Self { phis: Grid::Values(vec![-0.1, 0.0, 0.1]), duration_us: 0.2, sample_us: 0.002 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ButterflyConfig {
    pub phis: Grid,
    pub t_evolve_us: f64,
    pub dt_sample_us: f64,
}

impl Default for ButterflyConfig {
    fn default() -> Self {
        Self { phis: Grid::range(0.0, 0.5, 0.01), t_evolve_us: 2.0, dt_sample_us: 0.002 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapMapConfig {
    pub photons: usize,
    pub phis: Grid,
    pub disorders_mhz: Grid,
}

impl Default for GapMapConfig {
    fn default() -> Self {
        Self { photons: 2, phis: Grid::range(0.0, 0.5, 0.01), disorders_mhz: Grid::range(-15.0, 0.0, 1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelitySweepConfig {
    pub phis: Grid,
}

impl Default for FidelitySweepConfig {
    fn default() -> Self {
        Self { phis: Grid::range(0.1, 0.4, 0.02) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct G2Config {
    pub photons: usize,
    pub phis: Grid,
    pub small_max: f64,
    pub large_min: f64,
}

impl Default for G2Config {
    fn default() -> Self {
        Self { photons: 2, phis: Grid::range(0.12, 0.32, 0.01), small_max: 1.0, large_min: 2.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurrentFormName {
    Covariant,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurrentsConfig {
    pub photons: usize,
    pub phis: Grid,
    pub form: CurrentFormName,
    /// Also estimate every bond by the isolation fit.
    pub fit: bool,
    pub fit_duration_us: f64,
    pub fit_sample_us: f64,
}

impl Default for CurrentsConfig {
    fn default() -> Self {
        Self {
            photons: 2,
            phis: Grid::Values(vec![0.15, 0.3]),
            form: CurrentFormName::Covariant,
            fit: true,
            fit_duration_us: 0.4,
            fit_sample_us: 0.002,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectGeometry {
    MiddlePair,
    FullRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefectsConfig {
    pub phis: Grid,
    pub v_over_j: Grid,
    pub geometry: DefectGeometry,
    pub duration_us: f64,
}

impl Default for DefectsConfig {
    fn default() -> Self {
        Self {
            phis: Grid::Values(vec![0.15, 0.3]),
            v_over_j: Grid::range(0.0, 5.0, 0.5),
            geometry: DefectGeometry::MiddlePair,
            duration_us: 1.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StredaModeName {
    Ideal,
    Realistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StredaConfig {
    pub photons: usize,
    pub phis: Grid,
    pub mode: StredaModeName,
}

impl Default for StredaConfig {
    fn default() -> Self {
        Self { photons: 2, phis: Grid::range(0.25, 0.32, 0.01), mode: StredaModeName::Ideal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub flux: FluxConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub rabi: RabiConfig,
    #[serde(default)]
    pub ab_loop: AbLoopConfig,
    #[serde(default)]
    pub deflect: DeflectConfig,
    #[serde(default)]
    pub butterfly: ButterflyConfig,
    #[serde(default)]
    pub gap_map: GapMapConfig,
    #[serde(default)]
    pub fidelity_sweep: FidelitySweepConfig,
    #[serde(default)]
    pub g2: G2Config,
    #[serde(default)]
    pub currents: CurrentsConfig,
    #[serde(default)]
    pub defects: DefectsConfig,
    #[serde(default)]
    pub streda: StredaConfig,
}

impl RunConfig {
    /// Parses TOML text and applies `key.path=value` overrides.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return toml::from_str(text).map_err(|e| anyhow!("invalid configuration: {e}"));
        }
        let mut table: toml::Table = toml::from_str(text).map_err(|e| anyhow!("invalid configuration: {e}"))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table).try_into().map_err(|e| anyhow!("invalid configuration after overrides: {e}"))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            None => Self::parse(DEFAULT_CONFIG, overrides),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::parse(&text, overrides).with_context(|| format!("in {}", p.display()))
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is plain data")
    }

    pub fn site_t2(&self) -> Result<BTreeMap<usize, f64>> {
        self.noise
            .site_t2_us
            .iter()
            .map(|(k, v)| {
                let s = k.parse::<usize>().map_err(|_| anyhow!("noise.site_t2_us key `{k}` is not a site index"))?;
                Ok((s, *v))
            })
            .collect()
    }

    /// Schema and physics checks without running anything.
    pub fn validate(&self) -> Report {
        let mut r = Report::default();
        let l = &self.lattice;
        let sites = l.lx * l.ly;
        if l.lx == 0 || l.ly == 0 || sites > 32 {
            r.error(format!("lattice.lx * lattice.ly must lie in 1..=32, got {}x{}", l.lx, l.ly));
        }
        if !(l.j_mhz.is_finite() && l.j_mhz > 0.0) {
            r.error(format!("lattice.j_mhz must be positive, got {}", l.j_mhz));
        } else if l.j_mhz > J_MAX_MHZ {
            r.warn(format!(
                "lattice.j_mhz = {} MHz exceeds the {} MHz hardware coupling cap",
                l.j_mhz, J_MAX_MHZ
            ));
        }

        if let Some(t2) = self.noise.t2_us {
            if !(t2 > 0.0) {
                r.error(format!("noise.t2_us must be positive, got {t2}"));
            }
        }
        match self.site_t2() {
            Err(e) => r.error(e.to_string()),
            Ok(m) => {
                for (s, t2) in m {
                    if s >= sites {
                        r.error(format!("noise.site_t2_us names site {s} outside the {sites}-site lattice"));
                    }
                    if !(t2 > 0.0) {
                        r.error(format!("noise.site_t2_us.{s} must be positive, got {t2}"));
                    }
                }
            }
        }

        let s = &self.schedule;
        if let Some(d) = s.duration_us {
            if !(d > 0.0) {
                r.error(format!("schedule.duration_us must be positive, got {d}"));
            }
        }
        if !(s.stage1_fraction > 0.0 && s.stage1_fraction < 1.0) {
            r.error(format!("schedule.stage1_fraction must lie in (0, 1), got {}", s.stage1_fraction));
        }
        if !(s.gap_floor_mhz > 0.0) {
            r.error("schedule.gap_floor_mhz must be positive".into());
        }
        if s.grid_points < 2 {
            r.error("schedule.grid_points must be at least 2".into());
        }
        if !(s.dt_us > 0.0) {
            r.error("schedule.dt_us must be positive".into());
        }
        if !(s.record_every_us > 0.0) {
            r.error("schedule.record_every_us must be positive".into());
        }
        if let Some(init) = &s.initial_sites {
            if init.len() != s.photons {
                r.error(format!("schedule.initial_sites has {} entries for {} photons", init.len(), s.photons));
            }
            if init.iter().any(|&x| x >= sites) {
                r.error("schedule.initial_sites lists a site outside the lattice".into());
            }
        }

        if let Ok(lat) = Lattice::new(l.lx, l.ly) {
            for (key, n) in [
                ("schedule.photons", s.photons),
                ("gap_map.photons", self.gap_map.photons),
                ("g2.photons", self.g2.photons),
                ("currents.photons", self.currents.photons),
                ("streda.photons", self.streda.photons),
            ] {
                match enumerate_basis(&lat, n) {
                    Err(e) => r.error(format!("{key}: {e}")),
                    Ok(b) if b.dim() > DENSE_DIM_CAP => {
                        r.error(format!("{key}: sector dimension {} exceeds the dense cap {DENSE_DIM_CAP}", b.dim()))
                    }
                    Ok(_) => {}
                }
            }
            if (l.lx, l.ly) != (4, 4) {
                r.warn("g2, currents and streda average over the 4x4 bulk plaquette and will fail on this lattice".into());
            }
        }
        if self.g2.photons < 2 {
            r.error("g2.photons must be at least 2".into());
        }

        let grids = [
            ("rabi.detunings_mhz", &self.rabi.detunings_mhz),
            ("ab_loop.phis", &self.ab_loop.phis),
            ("deflect.phis", &self.deflect.phis),
            ("butterfly.phis", &self.butterfly.phis),
            ("gap_map.phis", &self.gap_map.phis),
            ("gap_map.disorders_mhz", &self.gap_map.disorders_mhz),
            ("fidelity_sweep.phis", &self.fidelity_sweep.phis),
            ("g2.phis", &self.g2.phis),
            ("currents.phis", &self.currents.phis),
            ("defects.phis", &self.defects.phis),
            ("defects.v_over_j", &self.defects.v_over_j),
            ("streda.phis", &self.streda.phis),
        ];
        for (key, g) in grids {
            if let Err(e) = g.values() {
                r.error(format!("{key}: {e}"));
            }
        }
        if matches!(self.streda.phis.values(), Ok(v) if v.len() < 3) {
            r.error("streda.phis needs at least 3 points for the slope fit".into());
        }
        for (key, v) in [
            ("rabi.duration_us", self.rabi.duration_us),
            ("rabi.sample_us", self.rabi.sample_us),
            ("deflect.duration_us", self.deflect.duration_us),
            ("deflect.sample_us", self.deflect.sample_us),
            ("butterfly.t_evolve_us", self.butterfly.t_evolve_us),
            ("butterfly.dt_sample_us", self.butterfly.dt_sample_us),
            ("currents.fit_duration_us", self.currents.fit_duration_us),
            ("currents.fit_sample_us", self.currents.fit_sample_us),
            ("defects.duration_us", self.defects.duration_us),
        ] {
            if !(v > 0.0) {
                r.error(format!("{key} must be positive, got {v}"));
            }
        }
        r
    }
}

/// Sets `a.b.c = value`; the value is read as TOML, falling back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| anyhow!("override `{spec}` is not key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override `{spec}` has an empty key");
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut cur = table;
    for k in parents {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| anyhow!("override `{spec}`: `{k}` is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    fn error(&mut self, m: String) {
        self.errors.push(m);
    }

    fn warn(&mut self, m: String) {
        self.warnings.push(m);
    }

    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        let n = self.warnings.len();
        let plural = if n == 1 { "" } else { "s" };
        if self.is_valid() {
            write!(f, "valid, {n} warning{plural}")
        } else {
            write!(f, "invalid, {} error{}, {n} warning{plural}", self.errors.len(), if self.errors.len() == 1 { "" } else { "s" })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_is_clean() {
        let c = RunConfig::parse(DEFAULT_CONFIG, &[]).unwrap();
        assert_eq!(c.validate().to_string(), "valid, 0 warnings");
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = RunConfig::parse(
            DEFAULT_CONFIG,
            &["lattice.j_mhz=2.5".into(), "streda.mode=realistic".into(), "g2.phis=[0.1, 0.2]".into()],
        )
        .unwrap();
        assert_eq!(c.lattice.j_mhz, 2.5);
        assert_eq!(c.streda.mode, StredaModeName::Realistic);
        assert_eq!(c.g2.phis, Grid::Values(vec![0.1, 0.2]));
    }

    #[test]
    fn grid_forms() {
        assert_eq!(Grid::range(0.0, 0.2, 0.1).values().unwrap().len(), 3);
        assert!(Grid::Values(vec![]).values().is_err());
        assert!(Grid::range(0.0, 1.0, 0.0).values().is_err());
    }
}
