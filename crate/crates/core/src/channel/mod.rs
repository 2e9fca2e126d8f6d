//! Link-level propagation: LOS probability, LOS/BLOS/NLOS states with body
//! shadowing, pathloss for every band and scenario, noise and Shannon
//! capacity with interference treated as noise.

pub mod params;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use params::{BodyShadowing, ChannelParams, CoefficientRow, RowKey, RowModel};

use crate::geometry::{Environment, LinkGeometry, Scenario};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "mmwave38")]
    MmWave38,
    #[serde(rename = "ism2_45")]
    Ism2_45,
    #[serde(rename = "cellular2_1")]
    Cellular2_1,
}

impl Band {
    pub fn is_mmwave(&self) -> bool {
        matches!(self, Band::MmWave38)
    }
}

/// Radio parameters of one transmission type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub band: Band,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub tx_power_dbm: f64,
    pub gain_tx_db: f64,
    pub gain_rx_db: f64,
    pub reuse_k: usize,
    /// No link beyond this distance; `None` is unbounded.
    pub max_range: Option<f64>,
}

impl BandConfig {
    pub fn mmwave38() -> Self {
        Self {
            band: Band::MmWave38,
            bandwidth_hz: 800e6,
            carrier_hz: 38e9,
            tx_power_dbm: 20.0,
            gain_tx_db: 9.0,
            gain_rx_db: 9.0,
            reuse_k: 4,
            max_range: Some(80.0),
        }
    }

    pub fn ism2_45() -> Self {
        Self {
            band: Band::Ism2_45,
            bandwidth_hz: 20e6,
            carrier_hz: 2.45e9,
            tx_power_dbm: 20.0,
            gain_tx_db: 12.0,
            gain_rx_db: 0.0,
            reuse_k: 4,
            max_range: Some(100.0),
        }
    }

    pub fn cellular2_1() -> Self {
        Self {
            band: Band::Cellular2_1,
            bandwidth_hz: 20e6,
            carrier_hz: 2.1e9,
            tx_power_dbm: 43.0,
            gain_tx_db: 12.0,
            gain_rx_db: 0.0,
            reuse_k: 3,
            max_range: None,
        }
    }

    /// Microwave D2D sharing the 2.1 GHz cellular carrier.
    pub fn microwave_in_band(bandwidth_hz: f64) -> Self {
        Self {
            carrier_hz: 2.1e9,
            bandwidth_hz,
            ..Self::ism2_45()
        }
    }

    pub fn eirp_dbm(&self) -> f64 {
        self.tx_power_dbm + self.gain_tx_db + self.gain_rx_db
    }

    pub fn received_power_dbm(&self, pathloss_db: f64) -> f64 {
        self.eirp_dbm() - pathloss_db
    }

    /// Bandwidth available to one cell after frequency reuse (cellular only).
    pub fn cell_bandwidth_hz(&self) -> f64 {
        match self.band {
            Band::Cellular2_1 => self.bandwidth_hz / self.reuse_k as f64,
            _ => self.bandwidth_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosKind {
    Los,
    Blos,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    D2d,
    Bs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosState {
    pub kind: LosKind,
    /// Body-shadowing loss in dB (microwave bands only).
    pub body_shadowing_db: f64,
}

/// Distance at which the office LOS formula reaches 1.
fn office_los_knee() -> f64 {
    10f64.powf(0.24 / 0.61)
}

/// LOS probability of the environment (no body blockage).
pub fn los_probability(scenario: Scenario, environment: Environment, d: f64) -> f64 {
    let p = match scenario {
        Scenario::IndoorA1 => match environment {
            Environment::Office => {
                if d <= office_los_knee() {
                    1.0
                } else {
                    let inner = 1.24 - 0.61 * d.log10();
                    1.0 - 0.9 * (1.0 - inner.powi(3)).cbrt()
                }
            }
            Environment::Hotspot => {
                if d <= 10.0 {
                    1.0
                } else {
                    (-(d - 10.0) / 45.0).exp()
                }
            }
        },
        Scenario::OutdoorB1 | Scenario::BsOutdoorC2 => {
            let e = (-d / 36.0).exp();
            (18.0 / d).min(1.0) * (1.0 - e) + e
        }
        Scenario::IndoorToOutdoorA2 | Scenario::OutdoorToIndoorB4 | Scenario::BsIndoorC4 => 0.0,
    };
    p.clamp(0.0, 1.0)
}

pub fn body_sigma(body: &BodyShadowing, kind: LinkKind, state: LosKind) -> f64 {
    match (kind, state) {
        (LinkKind::D2d, LosKind::Los) => body.d2d_los,
        (LinkKind::D2d, _) => body.d2d_nlos,
        (LinkKind::Bs, LosKind::Los) => body.bs_los,
        (LinkKind::Bs, _) => body.bs_nlos,
    }
}

/// Draws the link state. At 38 GHz half of the nominal LOS mass becomes
/// body-obstructed LOS; microwave links instead carry a body-shadowing draw.
pub fn sample_los_state<R: Rng + ?Sized>(
    p_los: f64,
    band: Band,
    kind: LinkKind,
    body: &BodyShadowing,
    rng: &mut R,
) -> LosState {
    let u: f64 = rng.random();
    if band.is_mmwave() {
        let kind = if u < p_los / 2.0 {
            LosKind::Los
        } else if u < p_los {
            LosKind::Blos
        } else {
            LosKind::Nlos
        };
        LosState {
            kind,
            body_shadowing_db: 0.0,
        }
    } else {
        let state = if u < p_los { LosKind::Los } else { LosKind::Nlos };
        let z: f64 = StandardNormal.sample(rng);
        LosState {
            kind: state,
            body_shadowing_db: z * body_sigma(body, kind, state),
        }
    }
}

pub fn free_space_loss_db(d: f64, carrier_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * d.max(1e-3) * carrier_hz / SPEED_OF_LIGHT).log10()
}

/// Deterministic part of a pathloss draw and the standard deviation of its
/// environmental shadowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanLoss {
    pub mean_db: f64,
    pub sigma_db: f64,
}

/// Antenna heights of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heights {
    pub tx: f64,
    pub rx: f64,
}

/// Channel model bound to one environment and antenna heights.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub params: ChannelParams,
    pub environment: Environment,
    pub bs_height: f64,
    pub ms_height: f64,
}

impl Channel {
    pub fn new(params: ChannelParams, environment: Environment, bs_height: f64, ms_height: f64) -> Self {
        Self {
            params,
            environment,
            bs_height,
            ms_height,
        }
    }

    pub fn heights(&self, scenario: Scenario) -> Heights {
        if scenario.is_bs() {
            Heights {
                tx: self.bs_height,
                rx: self.ms_height,
            }
        } else {
            Heights {
                tx: self.ms_height,
                rx: self.ms_height,
            }
        }
    }

    pub fn noise_dbm(&self, bandwidth_hz: f64) -> f64 {
        noise_power_with_psd(bandwidth_hz, self.params.noise_figure_db, self.params.noise_psd_dbm_hz)
    }

    /// Hard no-link rules that do not depend on random draws.
    fn blocked(&self, geom: &LinkGeometry, state: LosKind, band: &BandConfig, bounded: bool) -> bool {
        if bounded && band.max_range.is_some_and(|r| geom.distance > r) {
            return true;
        }
        if band.band.is_mmwave() {
            // Walls and environmental obstruction stop 38 GHz radiation.
            return state == LosKind::Nlos
                || geom.scenario.crosses_exterior_wall()
                || geom.scenario.is_bs()
                || geom.n_w > 0;
        }
        false
    }

    fn eval_row(
        &self,
        row: &CoefficientRow,
        geom: &LinkGeometry,
        band: &BandConfig,
        depth: u8,
    ) -> Option<MeanLoss> {
        let d = geom.distance;
        let fc_ghz = band.carrier_hz / 1e9;
        let freq = (fc_ghz / 5.0).log10();
        let h = self.heights(geom.scenario);
        let out = match row.model {
            RowModel::LogDistance {
                a1,
                a2,
                a3,
                sigma,
                wall_db,
                d_min,
            } => MeanLoss {
                mean_db: a1 * d.max(d_min).log10() + a2 + a3 * freq + wall_db * geom.n_w as f64,
                sigma_db: sigma,
            },
            RowModel::FreeSpaceReference { alpha, sigma, d0 } => {
                let lambda = SPEED_OF_LIGHT / band.carrier_hz;
                MeanLoss {
                    mean_db: 20.0 * (4.0 * std::f64::consts::PI * d0 / lambda).log10()
                        + 10.0 * alpha * (d.max(1e-3) / d0).log10(),
                    sigma_db: sigma,
                }
            }
            RowModel::DualSlope {
                a1,
                a2,
                a3,
                sigma,
                far_a1,
                far_a2,
                far_h_tx,
                far_h_rx,
                far_a3,
                far_sigma,
                d_min,
            } => {
                let (htx, hrx) = ((h.tx - 1.0).max(1e-3), (h.rx - 1.0).max(1e-3));
                let breakpoint = 4.0 * htx * hrx * band.carrier_hz / SPEED_OF_LIGHT;
                let near = |x: f64| a1 * x.max(d_min).log10() + a2 + a3 * freq;
                if d <= breakpoint {
                    MeanLoss {
                        mean_db: near(d),
                        sigma_db: sigma,
                    }
                } else {
                    let far = far_a1 * d.log10()
                        + far_a2
                        + far_h_tx * htx.log10()
                        + far_h_rx * hrx.log10()
                        + far_a3 * freq;
                    // Keeps the mean continuous and non-decreasing across the breakpoint.
                    MeanLoss {
                        mean_db: far.max(near(breakpoint)),
                        sigma_db: far_sigma,
                    }
                }
            }
            RowModel::HeightNlos {
                a1,
                a1_h,
                a2,
                a2_h,
                a3,
                sigma,
                d_min,
            } => {
                let lh = h.tx.log10();
                MeanLoss {
                    mean_db: (a1 + a1_h * lh) * d.max(d_min).log10() + a2 + a2_h * lh + a3 * freq,
                    sigma_db: sigma,
                }
            }
            RowModel::Penetration {
                base_scenario,
                base_state,
                extra_db,
                wall_angle_db,
                per_meter_in,
                rx_height_coef,
                sigma,
            } => {
                if depth > 0 {
                    return None;
                }
                let base_row = self
                    .params
                    .lookup(band.band, base_scenario, self.environment, base_state)?;
                let base_geom = LinkGeometry {
                    scenario: base_scenario,
                    n_w: 0,
                    ..*geom
                };
                let base = self.eval_row(base_row, &base_geom, band, depth + 1)?;
                MeanLoss {
                    mean_db: base.mean_db
                        + extra_db
                        + wall_angle_db * (1.0 - geom.cos_theta).powi(2)
                        + per_meter_in * geom.d_in
                        + rx_height_coef * h.rx,
                    sigma_db: sigma,
                }
            }
        };
        Some(out)
    }

    fn mean_loss(&self, geom: &LinkGeometry, state: LosKind, band: &BandConfig, bounded: bool) -> Option<MeanLoss> {
        if self.blocked(geom, state, band, bounded) {
            return None;
        }
        let row = self
            .params
            .lookup(band.band, geom.scenario, self.environment, state)?;
        self.eval_row(row, geom, band, 0)
    }

    /// Mean pathloss (shadowing averaged out) and shadowing spread, or
    /// `None` when no link is possible.
    pub fn mean_pathloss(&self, geom: &LinkGeometry, state: LosKind, band: &BandConfig) -> Option<MeanLoss> {
        self.mean_loss(geom, state, band, true)
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        geom: &LinkGeometry,
        los: &LosState,
        band: &BandConfig,
        bounded: bool,
        rng: &mut R,
    ) -> Option<f64> {
        let m = self.mean_loss(geom, los.kind, band, bounded)?;
        let z: f64 = StandardNormal.sample(rng);
        let pl = m.mean_db + m.sigma_db * z + los.body_shadowing_db;
        Some(if self.params.free_space_floor {
            pl.max(free_space_loss_db(geom.distance, band.carrier_hz))
        } else {
            pl
        })
    }

    /// One realized pathloss in dB (shadowing and body loss included), or
    /// `None` for no link.
    pub fn pathloss<R: Rng + ?Sized>(
        &self,
        geom: &LinkGeometry,
        los: &LosState,
        band: &BandConfig,
        rng: &mut R,
    ) -> Option<f64> {
        self.draw(geom, los, band, true, rng)
    }

    /// Realized pathloss ignoring the communication range limit, for
    /// interference paths.
    pub fn interference_pathloss<R: Rng + ?Sized>(
        &self,
        geom: &LinkGeometry,
        los: &LosState,
        band: &BandConfig,
        rng: &mut R,
    ) -> Option<f64> {
        self.draw(geom, los, band, false, rng)
    }

    /// Draws a full link realization: LOS state, then pathloss.
    pub fn realize<R: Rng + ?Sized>(
        &self,
        geom: &LinkGeometry,
        band: &BandConfig,
        bounded: bool,
        rng: &mut R,
    ) -> (LosState, Option<f64>) {
        let kind = if geom.scenario.is_bs() { LinkKind::Bs } else { LinkKind::D2d };
        let p = los_probability(geom.scenario, self.environment, geom.distance);
        let los = sample_los_state(p, band.band, kind, &self.params.body_shadowing, rng);
        let pl = self.draw(geom, &los, band, bounded, rng);
        (los, pl)
    }
}

pub fn noise_power_with_psd(bandwidth_hz: f64, noise_figure_db: f64, psd_dbm_hz: f64) -> f64 {
    psd_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Thermal noise power in dBm over `bandwidth_hz` with noise figure `f_n`.
pub fn noise_power(bandwidth_hz: f64, f_n: f64) -> f64 {
    noise_power_with_psd(bandwidth_hz, f_n, -174.0)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Shannon capacity in bit/s with interference treated as noise.
pub fn link_capacity(signal_dbm: f64, interference_mw: f64, noise_dbm: f64, bandwidth_hz: f64) -> f64 {
    let sinr = dbm_to_mw(signal_dbm) / (dbm_to_mw(noise_dbm) + interference_mw);
    capacity_from_sinr(sinr, bandwidth_hz)
}

pub fn capacity_from_sinr(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * sinr.max(0.0).ln_1p() / std::f64::consts::LN_2
}
