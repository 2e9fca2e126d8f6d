//! Channel coefficient table.
//!
//! Rows are keyed by (band, scenario, environment, LOS state); a missing key
//! field matches anything and lookups prefer the most specific row. The
//! shipped table lives in `data/channel_params.toml` and any file with the
//! same schema can replace it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Band, LosKind};
use crate::error::{Error, Result};
use crate::geometry::{Environment, Scenario};

pub const CHANNEL_SCHEMA_VERSION: u32 = 1;

const BUILTIN: &str = include_str!("../../data/channel_params.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowKey {
    pub band: Band,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<Environment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<LosKind>,
}

impl RowKey {
    fn matches(&self, band: Band, scenario: Scenario, env: Environment, state: LosKind) -> bool {
        self.band == band
            && self.scenario.is_none_or(|s| s == scenario)
            && self.environment.is_none_or(|e| e == env)
            && self.state.is_none_or(|s| s == state)
    }

    fn specificity(&self) -> u8 {
        self.scenario.is_some() as u8 * 4
            + self.environment.is_some() as u8 * 2
            + self.state.is_some() as u8
    }
}

fn default_d_min() -> f64 {
    1.0
}

/// Pathloss law of one row. Distances in meters, carrier in GHz, heights in
/// meters; every law returns the mean loss in dB plus a shadowing std.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RowModel {
    /// `a1 log10(d) + a2 + a3 log10(fc/5) + wall_db * n_w`
    LogDistance {
        a1: f64,
        a2: f64,
        a3: f64,
        sigma: f64,
        #[serde(default)]
        wall_db: f64,
        #[serde(default = "default_d_min")]
        d_min: f64,
    },
    /// `20 log10(4 pi d0 / lambda) + 10 alpha log10(d / d0)`
    FreeSpaceReference { alpha: f64, sigma: f64, d0: f64 },
    /// Log-distance up to the breakpoint `4 h'_tx h'_rx fc / c` (effective
    /// heights `h - 1`), then
    /// `far_a1 log10(d) + far_a2 + far_h_tx log10(h'_tx) + far_h_rx log10(h'_rx) + far_a3 log10(fc/5)`.
    DualSlope {
        a1: f64,
        a2: f64,
        a3: f64,
        sigma: f64,
        far_a1: f64,
        far_a2: f64,
        far_h_tx: f64,
        far_h_rx: f64,
        far_a3: f64,
        far_sigma: f64,
        #[serde(default = "default_d_min")]
        d_min: f64,
    },
    /// `(a1 + a1_h log10(h_tx)) log10(d) + a2 + a2_h log10(h_tx) + a3 log10(fc/5)`
    HeightNlos {
        a1: f64,
        a1_h: f64,
        a2: f64,
        a2_h: f64,
        a3: f64,
        sigma: f64,
        #[serde(default = "default_d_min")]
        d_min: f64,
    },
    /// Outdoor/indoor penetration on top of a base row evaluated at the full
    /// distance:
    /// `base + extra_db + wall_angle_db (1 - cos theta)^2 + per_meter_in d_in + rx_height_coef h_rx`.
    Penetration {
        base_scenario: Scenario,
        base_state: LosKind,
        extra_db: f64,
        #[serde(default)]
        wall_angle_db: f64,
        per_meter_in: f64,
        #[serde(default)]
        rx_height_coef: f64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRow {
    pub key: RowKey,
    pub model: RowModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Standard deviations (dB) of the rotational body-shadowing term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyShadowing {
    pub d2d_los: f64,
    pub d2d_nlos: f64,
    pub bs_los: f64,
    pub bs_nlos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub schema_version: u32,
    pub noise_figure_db: f64,
    pub noise_psd_dbm_hz: f64,
    /// Floor every realized pathloss at free space for the same distance.
    pub free_space_floor: bool,
    pub body_shadowing: BodyShadowing,
    #[serde(rename = "row")]
    pub rows: Vec<CoefficientRow>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::from_toml_str(BUILTIN).expect("builtin channel table parses")
    }
}

impl ChannelParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: ChannelParams = toml::from_str(text)?;
        if params.schema_version != CHANNEL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: params.schema_version.to_string(),
                expected: CHANNEL_SCHEMA_VERSION.to_string(),
            });
        }
        Ok(params)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    /// Most specific row matching the key, if any.
    pub fn lookup(
        &self,
        band: Band,
        scenario: Scenario,
        env: Environment,
        state: LosKind,
    ) -> Option<&CoefficientRow> {
        self.rows
            .iter()
            .filter(|r| r.key.matches(band, scenario, env, state))
            .max_by_key(|r| r.key.specificity())
    }

    pub fn require(
        &self,
        band: Band,
        scenario: Scenario,
        env: Environment,
        state: LosKind,
    ) -> Result<&CoefficientRow> {
        self.lookup(band, scenario, env, state).ok_or_else(|| {
            Error::MissingPathlossRow(format!("{band:?}/{scenario:?}/{env:?}/{state:?}"))
        })
    }

    /// Checks that every band/scenario/state combination the simulator can
    /// request has a row (including penetration bases).
    pub fn validate(&self) -> Result<()> {
        use Scenario::*;
        let envs = [Environment::Office, Environment::Hotspot];
        let mut needed = Vec::new();
        for env in envs {
            for s in [IndoorA1, OutdoorB1] {
                for st in [LosKind::Los, LosKind::Blos] {
                    needed.push((Band::MmWave38, s, env, st));
                }
            }
            for s in [IndoorA1, IndoorToOutdoorA2, OutdoorB1, OutdoorToIndoorB4] {
                for st in [LosKind::Los, LosKind::Nlos] {
                    needed.push((Band::Ism2_45, s, env, st));
                }
            }
            for s in [BsOutdoorC2, BsIndoorC4] {
                for st in [LosKind::Los, LosKind::Nlos] {
                    needed.push((Band::Cellular2_1, s, env, st));
                }
            }
        }
        for (band, s, env, st) in needed {
            let row = self.require(band, s, env, st)?;
            if let RowModel::Penetration {
                base_scenario,
                base_state,
                ..
            } = row.model
            {
                let base = self.require(band, base_scenario, env, base_state)?;
                if matches!(base.model, RowModel::Penetration { .. }) {
                    return Err(Error::InvalidParameter(format!(
                        "penetration row {band:?}/{s:?} has a penetration base"
                    )));
                }
            }
        }
        Ok(())
    }
}
