//! Experiment configuration: TOML file layered over a named profile.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bs_schemes::ThroughputMode;
use crate::channel::ChannelParams;
use crate::content::ExponentMode;
use crate::d2d_sim::OutageRule;
use crate::error::{Error, Result};
use crate::geometry::{Environment, PlacementMode};
use crate::scaling_laws::BoundConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// D2D at 2.45 GHz only, no BS fallback.
    D2dMicrowave,
    /// mm-wave, then 2.45 GHz, then BS.
    D2dMultiband,
    /// D2D and BS sharing the 2.1 GHz carrier.
    D2dInband,
    Unicast,
    CodedMulticast,
    Harmonic,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::D2dMicrowave => "d2d_microwave",
            Scheme::D2dMultiband => "d2d_multiband",
            Scheme::D2dInband => "d2d_inband",
            Scheme::Unicast => "unicast",
            Scheme::CodedMulticast => "coded_multicast",
            Scheme::Harmonic => "harmonic",
        }
    }

    pub fn is_d2d(&self) -> bool {
        matches!(self, Scheme::D2dMicrowave | Scheme::D2dMultiband | Scheme::D2dInband)
    }

    /// The four schemes run by `compare`.
    pub const COMPARE: [Scheme; 4] = [
        Scheme::D2dMicrowave,
        Scheme::CodedMulticast,
        Scheme::Harmonic,
        Scheme::Unicast,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// n = 2000, quick enough for CI.
    Desk,
    /// n = 10000.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub length_bits: f64,
    pub blocks: usize,
    /// Per-file broadcast rate; defaults to the playback threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticConfig {
    pub rho1: Vec<f64>,
    /// Cluster sizes for the second regime.
    pub g_c: Vec<f64>,
    pub c_r_bps: f64,
    pub reuse_k: usize,
    /// Fill missing constants with 1 and mark the rows as illustrative.
    pub illustrative_constants: bool,
    #[serde(default)]
    pub constants: BoundConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: Environment,
    pub cell_side: f64,
    pub placement: PlacementMode,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub cache_size: Vec<usize>,
    pub gamma_r: f64,
    pub schemes: Vec<Scheme>,
    pub cluster_side: Vec<f64>,
    /// Alternative to `cluster_side`: clusters per axis, side = cell/Q.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_q: Option<Vec<usize>>,
    /// Common BS spectral efficiency grid, bit/s/Hz.
    pub c_r0: Vec<f64>,
    /// Target outage grid for unicast.
    pub p_o: Vec<f64>,
    /// D2D fraction of the 2.1 GHz band in the in-band scheme.
    pub band_split: Vec<f64>,
    pub threshold_bps: f64,
    pub playback_cap_bps: f64,
    pub harmonic: HarmonicConfig,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    pub throughput_mode: ThroughputMode,
    pub outage_rule: OutageRule,
    pub exponent_mode: ExponentMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_params_file: Option<PathBuf>,
    /// Write per-user throughput for CDFs.
    pub dump_users: bool,
    pub analytic: AnalyticConfig,
}

/// Cluster sides `cell/Q` for each clusters-per-axis count `Q`.
pub fn sides_per_axis(cell_side: f64, qs: impl IntoIterator<Item = usize>) -> Vec<f64> {
    qs.into_iter().map(|q| cell_side / q as f64).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            environment: Environment::Office,
            cell_side: 600.0,
            placement: PlacementMode::UniformRandom,
            n: vec![10_000],
            m: vec![300],
            cache_size: vec![20],
            gamma_r: 0.4,
            schemes: Scheme::COMPARE.to_vec(),
            cluster_side: sides_per_axis(600.0, 4..=20),
            cluster_q: None,
            c_r0: (1..=32).map(|k| k as f64 * 0.25).collect(),
            p_o: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5],
            band_split: vec![0.5],
            threshold_bps: 1e5,
            playback_cap_bps: 2e6,
            harmonic: HarmonicConfig {
                length_bits: 2.7e9,
                blocks: 540,
                rate_bps: None,
            },
            realizations: 20,
            seed: 1,
            bs_budget: None,
            rounds: None,
            throughput_mode: ThroughputMode::WorstCase,
            outage_rule: OutageRule::Unserved,
            exponent_mode: ExponentMode::Paper,
            channel_params_file: None,
            dump_users: false,
            analytic: AnalyticConfig {
                rho1: vec![0.4, 0.5, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
                g_c: vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                c_r_bps: 2e7,
                reuse_k: 4,
                illustrative_constants: true,
                constants: BoundConstants::default(),
            },
        }
    }
}

impl Profile {
    pub fn config(self) -> ExperimentConfig {
        match self {
            Profile::Paper => ExperimentConfig::default(),
            Profile::Desk => ExperimentConfig {
                n: vec![2000],
                realizations: 20,
                cluster_side: sides_per_axis(600.0, 3..=12),
                ..ExperimentConfig::default()
            },
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Accepts either a scalar or a list for grid-valued keys.
fn listify(table: &mut toml::Table) {
    for key in ["n", "m", "cache_size", "cluster_side", "cluster_q", "c_r0", "p_o", "band_split"] {
        if let Some(v) = table.get_mut(key) {
            if !v.is_array() {
                *v = toml::Value::Array(vec![v.clone()]);
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses `text` layered over the profile defaults.
    pub fn from_toml_str(text: &str, profile: Profile) -> Result<Self> {
        let mut base = toml::Table::try_from(profile.config())?;
        let mut over: toml::Table = text.parse()?;
        listify(&mut over);
        merge(&mut base, over);
        Ok(base.try_into()?)
    }

    pub fn read(path: &Path, profile: Profile) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, profile)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn cluster_sides(&self) -> Vec<f64> {
        match &self.cluster_q {
            Some(qs) => sides_per_axis(self.cell_side, qs.iter().copied()),
            None => self.cluster_side.clone(),
        }
    }

    pub fn harmonic_rate(&self) -> f64 {
        self.harmonic.rate_bps.unwrap_or(self.threshold_bps)
    }

    pub fn channel_params(&self) -> Result<ChannelParams> {
        match &self.channel_params_file {
            Some(p) => ChannelParams::read(p),
            None => Ok(ChannelParams::default()),
        }
    }

    /// Keeps only the first value of every grid axis.
    pub fn first_point(&self) -> Self {
        let first = |v: &Vec<f64>| v.iter().take(1).copied().collect::<Vec<_>>();
        let first_u = |v: &Vec<usize>| v.iter().take(1).copied().collect::<Vec<_>>();
        Self {
            n: first_u(&self.n),
            m: first_u(&self.m),
            cache_size: first_u(&self.cache_size),
            cluster_side: first(&self.cluster_sides()),
            cluster_q: None,
            c_r0: first(&self.c_r0),
            p_o: first(&self.p_o),
            band_split: first(&self.band_split),
            ..self.clone()
        }
    }

    /// Every problem found, one message per offending field.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        need(self.cell_side > 0.0, format!("cell_side: must be positive, got {}", self.cell_side));
        need(!self.n.is_empty() && self.n.iter().all(|&v| v > 0), "n: non-empty list of positive counts".into());
        need(!self.m.is_empty() && self.m.iter().all(|&v| v > 0), "m: non-empty list of positive counts".into());
        need(
            !self.cache_size.is_empty() && self.cache_size.iter().all(|&v| v > 0),
            "cache_size: non-empty list of positive counts".into(),
        );
        for &mm in &self.cache_size {
            for &lib in &self.m {
                need(mm < lib, format!("cache_size: M = {mm} must be below m = {lib}"));
            }
        }
        need(
            self.gamma_r > 0.0 && self.gamma_r < 1.0,
            format!("gamma_r: must lie in (0, 1), got {}", self.gamma_r),
        );
        need(!self.schemes.is_empty(), "schemes: at least one scheme".into());
        need(self.realizations > 0, "realizations: must be positive".into());
        need(self.threshold_bps > 0.0, "threshold_bps: must be positive".into());
        need(self.playback_cap_bps > 0.0, "playback_cap_bps: must be positive".into());
        if self.schemes.iter().any(Scheme::is_d2d) {
            let sides = self.cluster_sides();
            need(
                !sides.is_empty() && sides.iter().all(|&s| s > 0.0 && s <= self.cell_side),
                format!("cluster_side: non-empty, each in (0, {}]", self.cell_side),
            );
            if let Some(q) = &self.cluster_q {
                need(q.iter().all(|&v| v > 0), "cluster_q: positive counts".into());
            }
        }
        if self.schemes.iter().any(|s| matches!(s, Scheme::CodedMulticast | Scheme::Harmonic)) {
            need(
                !self.c_r0.is_empty() && self.c_r0.iter().all(|&c| c > 0.0),
                "c_r0: non-empty list of positive values".into(),
            );
        }
        if self.schemes.contains(&Scheme::Unicast) {
            need(
                !self.p_o.is_empty() && self.p_o.iter().all(|&p| p > 0.0 && p < 1.0),
                "p_o: non-empty list of values in (0, 1)".into(),
            );
        }
        if self.schemes.contains(&Scheme::D2dInband) {
            need(
                !self.band_split.is_empty() && self.band_split.iter().all(|&b| b > 0.0 && b < 1.0),
                "band_split: non-empty list of values in (0, 1)".into(),
            );
        }
        if self.schemes.contains(&Scheme::Harmonic) {
            need(
                self.harmonic.length_bits > 0.0 && self.harmonic.blocks > 0,
                "harmonic: length_bits and blocks must be positive".into(),
            );
            need(self.harmonic_rate() > 0.0, "harmonic.rate_bps: must be positive".into());
        }
        need(self.bs_budget != Some(0), "bs_budget: must be positive when set".into());
        need(self.rounds != Some(0), "rounds: must be positive when set".into());
        if let Some(p) = &self.channel_params_file {
            if let Err(e) = ChannelParams::read(p) {
                need(false, format!("channel_params_file: {e}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}
