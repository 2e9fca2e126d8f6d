//! Base-station-only baselines: conventional unicast, coded multicasting
//! and harmonic broadcasting.
//!
//! Channel terms are evaluated against each user's BS-link law: a mixture
//! over LOS states of normal pathloss (environmental plus body shadowing).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::{body_sigma, los_probability, BandConfig, Channel, LinkKind, LosKind};
use crate::content::ZipfDemand;
use crate::d2d_sim::{SchemePoint, TierCounts};
use crate::error::{Error, Result};
use crate::geometry::{classify_bs, CellLayout, LinkGeometry, NodePlacement};
use crate::rng::stream;

/// Realized BS-to-user link of one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsLink {
    pub geom: LinkGeometry,
    pub pathloss_db: f64,
}

/// Draws every user's BS link. User `u` uses stream `(seed, u)`, so the
/// draws do not depend on which scheme asks for them.
pub fn draw_bs_links(
    layout: &CellLayout,
    channel: &Channel,
    placement: &NodePlacement,
    band: &BandConfig,
    seed: u64,
) -> Vec<BsLink> {
    (0..placement.len())
        .map(|u| {
            let geom = classify_bs(layout, placement.positions[u], placement.locations[u]);
            let mut rng = stream(seed, &[u as u64]);
            let (_, pl) = channel.realize(&geom, band, true, &mut rng);
            BsLink {
                geom,
                pathloss_db: pl.unwrap_or(f64::INFINITY),
            }
        })
        .collect()
}

/// Pathloss law of one BS link: `(weight, mean, sigma)` per LOS state.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMixture {
    components: Vec<(f64, f64, f64)>,
}

impl LossMixture {
    pub fn new(components: Vec<(f64, f64, f64)>) -> Self {
        Self { components }
    }

    pub fn for_link(channel: &Channel, geom: &LinkGeometry, band: &BandConfig) -> Self {
        let p = los_probability(geom.scenario, channel.environment, geom.distance);
        let body = &channel.params.body_shadowing;
        let components = [(LosKind::Los, p), (LosKind::Nlos, 1.0 - p)]
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .filter_map(|(state, w)| {
                let m = channel.mean_pathloss(geom, state, band)?;
                let sb = body_sigma(body, LinkKind::Bs, state);
                Some((w, m.mean_db, m.sigma_db.hypot(sb)))
            })
            .collect();
        Self { components }
    }

    /// `P(PL >= pl)`.
    pub fn exceed_prob(&self, pl: f64) -> f64 {
        let total: f64 = self.components.iter().map(|c| c.0).sum();
        if total <= 0.0 {
            return 1.0;
        }
        let mass: f64 = self
            .components
            .iter()
            .map(|&(w, mu, sigma)| {
                let tail = if sigma > 0.0 {
                    1.0 - Normal::new(mu, sigma).expect("positive sigma").cdf(pl)
                } else if pl <= mu {
                    1.0
                } else {
                    0.0
                };
                w * tail
            })
            .sum();
        (mass / total).clamp(0.0, 1.0)
    }

    /// Pathloss level exceeded with probability `p`, by bisection on the
    /// mixture tail.
    pub fn exceed_quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.components.iter().fold((f64::MAX, f64::MIN), |(lo, hi), c| {
            (lo.min(c.1 - 12.0 * c.2 - 1.0), hi.max(c.1 + 12.0 * c.2 + 1.0))
        });
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let q = self.exceed_prob(mid);
            if (q - p).abs() < 1e-12 {
                return mid;
            }
            if q > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Downlink budget of the serving cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsBudget {
    pub eirp_dbm: f64,
    pub noise_dbm: f64,
    /// Bandwidth after reuse, Hz.
    pub bandwidth_hz: f64,
}

impl BsBudget {
    pub fn new(channel: &Channel, band: &BandConfig) -> Self {
        let bandwidth_hz = band.cell_bandwidth_hz();
        Self {
            eirp_dbm: band.eirp_dbm(),
            noise_dbm: channel.noise_dbm(bandwidth_hz),
            bandwidth_hz,
        }
    }

    /// Spectral efficiency in bit/s/Hz at a pathloss.
    pub fn spectral_efficiency(&self, pathloss_db: f64) -> f64 {
        let snr_db = self.eirp_dbm - pathloss_db - self.noise_dbm;
        (10f64.powf(snr_db / 10.0)).ln_1p() / std::f64::consts::LN_2
    }

    pub fn capacity_bps(&self, pathloss_db: f64) -> f64 {
        self.bandwidth_hz * self.spectral_efficiency(pathloss_db)
    }

    /// Largest pathloss that still supports `c` bit/s/Hz.
    pub fn max_pathloss(&self, c: f64) -> f64 {
        self.eirp_dbm - self.noise_dbm - 10.0 * (c.exp2() - 1.0).log10()
    }
}

/// Max-min fair time sharing: every admitted user receives
/// `1 / sum(1/C_u)`. Returns per-user shares and the common rate.
pub fn equal_rate_allocation(rates: &[f64]) -> (Vec<f64>, f64) {
    let inv: f64 = rates.iter().map(|c| 1.0 / c).sum();
    if rates.is_empty() || !inv.is_finite() || inv <= 0.0 {
        return (vec![0.0; rates.len()], 0.0);
    }
    (rates.iter().map(|c| (1.0 / c) / inv).collect(), 1.0 / inv)
}

/// Admits users by descending rate while the common rate stays at least
/// `threshold` (and within `budget` if set). Returns admitted indices in
/// admission order and the common rate.
pub fn admit_by_rate(rates: &[(usize, f64)], threshold: f64, budget: Option<usize>) -> (Vec<usize>, f64) {
    let mut order: Vec<(usize, f64)> = rates.iter().copied().filter(|r| r.1 > 0.0).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut admitted = Vec::new();
    let mut inv = 0.0;
    for (u, c) in order {
        if budget.is_some_and(|b| admitted.len() >= b) {
            break;
        }
        let next = inv + 1.0 / c;
        if budget.is_none() && 1.0 / next < threshold {
            break;
        }
        inv = next;
        admitted.push(u);
    }
    let rate = if admitted.is_empty() { 0.0 } else { 1.0 / inv };
    (admitted, rate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnicastPlan {
    /// Per-user rate `C_u` in bit/s supported with outage `p_o`.
    pub rates: Vec<f64>,
    /// `rho_u`, zero outside the admitted set.
    pub shares: Vec<f64>,
    pub admitted: Vec<bool>,
    pub p_o: f64,
    /// Common per-user rate including the local caching gain.
    pub throughput: f64,
}

/// Conventional unicast at target outage `p_o` for one realization.
pub fn unicast_plan(
    channel: &Channel,
    band: &BandConfig,
    links: &[BsLink],
    p_o: f64,
    cache_size: usize,
    m: usize,
) -> UnicastPlan {
    let budget = BsBudget::new(channel, band);
    let mut rates = Vec::with_capacity(links.len());
    let mut admitted = Vec::with_capacity(links.len());
    for link in links {
        let law = LossMixture::for_link(channel, &link.geom, band);
        let pl_max = law.exceed_quantile(p_o);
        rates.push(budget.capacity_bps(pl_max));
        admitted.push(link.pathloss_db < pl_max);
    }
    let served: Vec<f64> = rates
        .iter()
        .zip(&admitted)
        .filter(|(_, &a)| a)
        .map(|(&c, _)| c)
        .collect();
    let (served_shares, common) = equal_rate_allocation(&served);
    let mut shares = vec![0.0; links.len()];
    let mut it = served_shares.into_iter();
    for (s, &a) in shares.iter_mut().zip(&admitted) {
        if a {
            *s = it.next().unwrap_or(0.0);
        }
    }
    let miss = 1.0 - (cache_size as f64 / m as f64).min(1.0);
    let throughput = if miss > 0.0 { common / miss } else { common };
    UnicastPlan {
        rates,
        shares,
        admitted,
        p_o,
        throughput,
    }
}

pub fn unicast_point(plan: &UnicastPlan) -> SchemePoint {
    let served = plan.admitted.iter().filter(|&&a| a).count();
    if served == 0 {
        return SchemePoint::all_outage(plan.admitted.len());
    }
    SchemePoint {
        p_o: plan.p_o,
        t_min_bps: plan.throughput,
        tiers: TierCounts {
            bs: served as f64,
            outage: (plan.admitted.len() - served) as f64,
            ..TierCounts::default()
        },
    }
}

fn coded_ntx_integer(n: f64, m: f64, cache: f64) -> f64 {
    n * (1.0 - cache / m) / (1.0 + cache * n / m)
}

/// Equivalent number of file transmissions of coded multicasting.
/// Non-integer `Mn/m` interpolates linearly in `M` between the two
/// neighboring integer points.
pub fn coded_multicast_ntx(n: usize, m: usize, cache: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be positive".into()));
    }
    if !(cache >= 0.0) || cache >= m as f64 {
        return Err(Error::CacheNotBelowLibrary { cache, library: m });
    }
    let (nf, mf) = (n as f64, m as f64);
    let t = cache * nf / mf;
    if (t - t.round()).abs() < 1e-12 {
        return Ok(coded_ntx_integer(nf, mf, t.round() * mf / nf));
    }
    let (t0, t1) = (t.floor(), t.ceil());
    let (m0, m1) = (t0 * mf / nf, t1 * mf / nf);
    let (y0, y1) = (coded_ntx_integer(nf, mf, m0), coded_ntx_integer(nf, mf, m1));
    Ok(y0 + (y1 - y0) * (cache - m0) / (m1 - m0))
}

/// Index of the user farthest from the BS (lowest index on ties).
pub fn worst_case_user(links: &[BsLink]) -> Option<usize> {
    links
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (u, l)| match best {
            Some((_, d)) if d >= l.geom.distance => best,
            _ => Some((u, l.geom.distance)),
        })
        .map(|(u, _)| u)
}

/// How the single-rate broadcast schemes report throughput.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThroughputMode {
    /// Channel term of the farthest user.
    #[default]
    WorstCase,
    /// Channel term averaged over users.
    ServedAverage,
}

fn channel_survival(
    channel: &Channel,
    band: &BandConfig,
    links: &[BsLink],
    pl_max: f64,
    mode: ThroughputMode,
) -> f64 {
    match mode {
        ThroughputMode::WorstCase => worst_case_user(links)
            .map(|u| 1.0 - LossMixture::for_link(channel, &links[u].geom, band).exceed_prob(pl_max))
            .unwrap_or(0.0),
        ThroughputMode::ServedAverage => {
            let s: f64 = links
                .iter()
                .map(|l| 1.0 - LossMixture::for_link(channel, &l.geom, band).exceed_prob(pl_max))
                .sum();
            s / links.len().max(1) as f64
        }
    }
}

/// Coded multicasting at common spectral efficiency `c_r0` (bit/s/Hz).
pub fn coded_multicast_point(
    channel: &Channel,
    band: &BandConfig,
    links: &[BsLink],
    m: usize,
    cache_size: f64,
    c_r0: f64,
    mode: ThroughputMode,
) -> Result<SchemePoint> {
    let n = links.len();
    let ntx = coded_multicast_ntx(n, m, cache_size)?;
    let budget = BsBudget::new(channel, band);
    let pl_max = budget.max_pathloss(c_r0);
    let outage = links.iter().filter(|l| l.pathloss_db >= pl_max).count();
    let rate = if ntx > 0.0 { c_r0 * budget.bandwidth_hz / ntx } else { f64::INFINITY };
    let t = rate * channel_survival(channel, band, links, pl_max, mode);
    if outage == n {
        return Ok(SchemePoint::all_outage(n));
    }
    Ok(SchemePoint {
        p_o: outage as f64 / n as f64,
        t_min_bps: t,
        tiers: TierCounts {
            bs: (n - outage) as f64,
            outage: outage as f64,
            ..TierCounts::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPlan {
    pub length: f64,
    pub delay: f64,
    pub blocks: usize,
    /// Exact harmonic sum `H_P`.
    pub bandwidth_factor: f64,
}

pub fn harmonic_number(p: usize) -> f64 {
    // Summed from the small terms upward for accuracy.
    (1..=p).rev().map(|i| 1.0 / i as f64).sum()
}

pub fn harmonic_plan(length: f64, delay: f64) -> Result<HarmonicPlan> {
    if !(delay > 0.0) || !(length >= delay) {
        return Err(Error::InvalidParameter(format!(
            "harmonic broadcasting needs 0 < tau <= L, got L={length}, tau={delay}"
        )));
    }
    let ratio = length / delay;
    // Absorbs rounding when tau was derived as L/P.
    let blocks = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round()
    } else {
        ratio.ceil()
    } as usize;
    Ok(HarmonicPlan {
        length,
        delay,
        blocks,
        bandwidth_factor: harmonic_number(blocks),
    })
}

impl HarmonicPlan {
    pub fn from_blocks(length: f64, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::InvalidParameter("harmonic block count must be positive".into()));
        }
        harmonic_plan(length, length / blocks as f64)
    }

    /// Number of files `m'` that fit in the broadcast at spectral
    /// efficiency `c_r0`.
    pub fn broadcast_set(&self, c_r0: f64, bandwidth_hz: f64, rate_bps: f64, m: usize) -> usize {
        let fit = (c_r0 * bandwidth_hz / (rate_bps * self.bandwidth_factor)).floor();
        if fit.is_finite() && fit > 0.0 {
            (fit as usize).min(m)
        } else {
            0
        }
    }
}

/// Harmonic broadcasting with per-file rate `rate_bps` at common spectral
/// efficiency `c_r0`. Outage is the analytic per-user average.
#[allow(clippy::too_many_arguments)]
pub fn harmonic_point(
    channel: &Channel,
    band: &BandConfig,
    links: &[BsLink],
    demand: &ZipfDemand,
    plan: &HarmonicPlan,
    rate_bps: f64,
    c_r0: f64,
    mode: ThroughputMode,
) -> SchemePoint {
    let n = links.len();
    let budget = BsBudget::new(channel, band);
    let m_prime = plan.broadcast_set(c_r0, budget.bandwidth_hz, rate_bps, demand.m);
    let file_ok = 1.0 - demand.tail_mass(m_prime);
    let pl_max = budget.max_pathloss(c_r0);
    let p_o = links
        .iter()
        .map(|l| {
            let tail = LossMixture::for_link(channel, &l.geom, band).exceed_prob(pl_max);
            1.0 - file_ok * (1.0 - tail)
        })
        .sum::<f64>()
        / n.max(1) as f64;
    let t = rate_bps * file_ok * channel_survival(channel, band, links, pl_max, mode);
    SchemePoint {
        p_o,
        t_min_bps: if p_o >= 1.0 { 0.0 } else { t },
        tiers: TierCounts {
            bs: n as f64 * (1.0 - p_o),
            outage: n as f64 * p_o,
            ..TierCounts::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::content::{sample_requests, zipf_pmf};
    use crate::geometry::{Environment, Scenario};
    use proptest::prelude::*;

    fn office() -> Channel {
        Channel::new(ChannelParams::default(), Environment::Office, 25.0, 1.5)
    }

    fn c2(d: f64) -> LinkGeometry {
        LinkGeometry {
            distance: d,
            scenario: Scenario::BsOutdoorC2,
            n_w: 0,
            d_in: 0.0,
            cos_theta: 1.0,
        }
    }

    #[test]
    fn ntx_examples() {
        assert_eq!(coded_multicast_ntx(2, 3, 1.5).unwrap(), 0.5);
        assert!((coded_multicast_ntx(4, 2, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((coded_multicast_ntx(3, 3, 1.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(coded_multicast_ntx(7, 5, 0.0).unwrap(), 7.0);
        assert!(coded_multicast_ntx(3, 3, 3.0).is_err());
    }

    proptest! {
        #[test]
        fn ntx_monotone_and_below_integer_points(n in 1usize..60, m in 2usize..40, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let mf = m as f64;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let x = coded_multicast_ntx(n, m, lo * (mf - 1e-9)).unwrap();
            let y = coded_multicast_ntx(n, m, hi * (mf - 1e-9)).unwrap();
            prop_assert!(y <= x + 1e-12);
            prop_assert!(x <= n as f64 + 1e-12 && x >= 0.0);
            let z = coded_multicast_ntx(2 * n, m, lo * (mf - 1e-9)).unwrap();
            prop_assert!(z >= x - 1e-12);
        }

        #[test]
        fn equal_rate_properties(rates in prop::collection::vec(1.0f64..1e8, 1..30), lambda in 0.1f64..10.0) {
            let (shares, t) = equal_rate_allocation(&rates);
            prop_assert!((shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (s, c) in shares.iter().zip(&rates) {
                prop_assert!((s * c - t).abs() <= 1e-9 * t);
            }
            let scaled: Vec<f64> = rates.iter().map(|c| c * lambda).collect();
            let (_, t2) = equal_rate_allocation(&scaled);
            prop_assert!((t2 - lambda * t).abs() <= 1e-9 * t2);
        }

        #[test]
        fn broadcast_set_monotone(c in 0.1f64..10.0, dc in 0.0f64..5.0, r in 1e4f64..1e6, dr in 0.0f64..1e6) {
            let plan = HarmonicPlan::from_blocks(2.7e9, 540).unwrap();
            let b = 20e6 / 3.0;
            let base = plan.broadcast_set(c, b, r, 300);
            prop_assert!(plan.broadcast_set(c + dc, b, r, 300) >= base);
            prop_assert!(plan.broadcast_set(c, b, r + dr, 300) <= base);
        }
    }

    #[test]
    fn equal_rate_examples() {
        let (_, t) = equal_rate_allocation(&[5.0; 4]);
        assert!((t - 5.0 / 4.0).abs() < 1e-15);
        let (a, _) = equal_rate_allocation(&[2.0, 4.0, 4.0]);
        let (b, _) = equal_rate_allocation(&[1.0, 4.0, 4.0]);
        // Halving C_u doubles its share before renormalization.
        assert!(((b[0] / b[1]) / (a[0] / a[1]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn admission_respects_threshold() {
        let rates: Vec<(usize, f64)> = (0..10).map(|u| (u, 1e6 * (u + 1) as f64)).collect();
        let (adm, t) = admit_by_rate(&rates, 5e5, None);
        assert!(t >= 5e5);
        assert_eq!(adm[0], 9);
        let next = rates[9 - adm.len()].1;
        assert!(1.0 / (1.0 / t + 1.0 / next) < 5e5);
        let (adm, _) = admit_by_rate(&rates, 5e5, Some(2));
        assert_eq!(adm, vec![9, 8]);
    }

    #[test]
    fn mixture_tail_matches_normal() {
        let law = LossMixture::new(vec![(1.0, 100.0, 8.0)]);
        assert!((law.exceed_prob(100.0) - 0.5).abs() < 1e-12);
        assert!((law.exceed_prob(108.0) - 0.15865525393145707).abs() < 1e-9);
        let q = law.exceed_quantile(0.05);
        assert!((law.exceed_prob(q) - 0.05).abs() < 1e-9);
        let mix = LossMixture::new(vec![(0.3, 90.0, 4.0), (0.7, 110.0, 8.0)]);
        let q = mix.exceed_quantile(0.1);
        assert!((mix.exceed_prob(q) - 0.1).abs() < 1e-9);
    }

    #[test]
    fn unicast_symmetric_users() {
        let ch = office();
        let band = BandConfig::cellular2_1();
        let links: Vec<BsLink> = (0..8)
            .map(|_| BsLink {
                geom: c2(200.0),
                pathloss_db: 0.0,
            })
            .collect();
        let plan = unicast_plan(&ch, &band, &links, 0.05, 0, 300);
        let c = plan.rates[0];
        assert!(plan.rates.iter().all(|&r| r == c));
        assert!((plan.throughput - c / 8.0).abs() < 1e-9 * c);
        assert!((plan.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let cached = unicast_plan(&ch, &band, &links, 0.05, 20, 300);
        assert!((cached.throughput * (1.0 - 20.0 / 300.0) - plan.throughput).abs() < 1e-6);

        let dead: Vec<BsLink> = links
            .iter()
            .map(|l| BsLink {
                pathloss_db: f64::INFINITY,
                ..*l
            })
            .collect();
        let p = unicast_point(&unicast_plan(&ch, &band, &dead, 0.05, 0, 300));
        assert_eq!((p.t_min_bps, p.p_o), (0.0, 1.0));
    }

    #[test]
    fn unicast_quantile_outage_rate() {
        // Realized outage matches the target when drawn from the same law.
        let ch = office();
        let band = BandConfig::cellular2_1();
        let geom = c2(250.0);
        let trials = 20_000;
        let links: Vec<BsLink> = (0..trials)
            .map(|u| {
                let mut rng = stream(31, &[u]);
                let (_, pl) = ch.realize(&geom, &band, true, &mut rng);
                BsLink {
                    geom,
                    pathloss_db: pl.unwrap(),
                }
            })
            .collect();
        let plan = unicast_plan(&ch, &band, &links, 0.1, 0, 300);
        let out = plan.admitted.iter().filter(|&&a| !a).count() as f64 / trials as f64;
        let sd = (0.1 * 0.9 / trials as f64).sqrt();
        assert!((out - 0.1).abs() < 3.0 * sd, "{out}");
    }

    #[test]
    fn coded_trivial_fixture() {
        let ch = office();
        let mut zero = ch.clone();
        for row in &mut zero.params.rows {
            if let crate::channel::RowModel::HeightNlos { sigma, .. } = &mut row.model {
                *sigma = 0.0;
            }
        }
        zero.params.body_shadowing.bs_nlos = 0.0;
        zero.params.free_space_floor = false;
        let band = BandConfig::cellular2_1();
        // Beyond 18/d LOS region, mostly NLOS; force NLOS by geometry C4-free far user.
        let geom = LinkGeometry {
            scenario: Scenario::BsIndoorC4,
            d_in: 0.0,
            ..c2(300.0)
        };
        let mut sigma_free = zero.clone();
        for row in &mut sigma_free.params.rows {
            if let crate::channel::RowModel::Penetration { sigma, .. } = &mut row.model {
                *sigma = 0.0;
            }
        }
        let mean = sigma_free.mean_pathloss(&geom, LosKind::Nlos, &band).unwrap().mean_db;
        let links = vec![
            BsLink {
                geom,
                pathloss_db: mean
            };
            4
        ];
        let budget = BsBudget::new(&sigma_free, &band);
        let c_r0 = 0.9 * budget.spectral_efficiency(mean);
        let p = coded_multicast_point(&sigma_free, &band, &links, 3, 1.0, c_r0, ThroughputMode::WorstCase).unwrap();
        let r = c_r0 * budget.bandwidth_hz / coded_multicast_ntx(4, 3, 1.0).unwrap();
        assert_eq!(p.p_o, 0.0);
        assert!((p.t_min_bps - r).abs() < 1e-6 * r);
    }

    #[test]
    fn coded_outage_monotone_in_rate() {
        let ch = office();
        let band = BandConfig::cellular2_1();
        let layout = CellLayout::new(Environment::Office, 600.0).unwrap();
        let placement =
            crate::geometry::place_nodes(&layout, 300, crate::geometry::PlacementMode::UniformRandom, 4).unwrap();
        let links = draw_bs_links(&layout, &ch, &placement, &band, 9);
        let mut prev = 0.0;
        for k in 1..30 {
            let p = coded_multicast_point(&ch, &band, &links, 300, 20.0, k as f64 * 0.25, ThroughputMode::WorstCase)
                .unwrap();
            assert!(p.p_o >= prev);
            prev = p.p_o;
        }
    }

    #[test]
    fn coded_outage_matches_analytic_tail() {
        let ch = office();
        let band = BandConfig::cellular2_1();
        let geom = c2(350.0);
        let budget = BsBudget::new(&ch, &band);
        let c_r0 = 4.0;
        let analytic = LossMixture::for_link(&ch, &geom, &band).exceed_prob(budget.max_pathloss(c_r0));
        let trials = 40_000u64;
        let mut outages = 0usize;
        for t in 0..trials {
            let mut rng = stream(77, &[t]);
            let (_, pl) = ch.realize(&geom, &band, true, &mut rng);
            let link = BsLink {
                geom,
                pathloss_db: pl.unwrap(),
            };
            let p = coded_multicast_point(&ch, &band, &[link], 300, 20.0, c_r0, ThroughputMode::WorstCase).unwrap();
            outages += (p.p_o > 0.5) as usize;
        }
        let est = outages as f64 / trials as f64;
        let sd = (analytic * (1.0 - analytic) / trials as f64).sqrt();
        assert!((est - analytic).abs() < 3.0 * sd, "{est} vs {analytic}");
    }

    #[test]
    fn nearer_users_dominate() {
        let ch = office();
        let band = BandConfig::cellular2_1();
        let budget = BsBudget::new(&ch, &band);
        let pl = budget.max_pathloss(3.0);
        let far = LossMixture::for_link(&ch, &c2(400.0), &band).exceed_prob(pl);
        for d in [20.0, 50.0, 120.0, 250.0, 399.0] {
            assert!(LossMixture::for_link(&ch, &c2(d), &band).exceed_prob(pl) <= far);
        }
    }

    #[test]
    fn harmonic_plan_examples() {
        assert_eq!(harmonic_plan(10.0, 10.0).unwrap().bandwidth_factor, 1.0);
        let p4 = harmonic_plan(4.0, 1.0).unwrap();
        assert_eq!(p4.blocks, 4);
        assert!((p4.bandwidth_factor - 25.0 / 12.0).abs() < 1e-15);
        let p = HarmonicPlan::from_blocks(2.7e9, 540).unwrap();
        assert_eq!(p.blocks, 540);
        assert!((p.bandwidth_factor - 6.869710444606268).abs() < 1e-12);
        assert!(p.bandwidth_factor <= 1.0 + (540f64).ln());
        assert!(harmonic_plan(1.0, 2.0).is_err());
    }

    #[test]
    fn harmonic_longer_files_cost_more() {
        let ch = office();
        let band = BandConfig::cellular2_1();
        let demand = zipf_pmf(300, 0.4).unwrap();
        let links = vec![BsLink { geom: c2(300.0), pathloss_db: 100.0 }; 5];
        let mut prev = f64::INFINITY;
        for l in [1e9, 2e9, 4e9, 8e9] {
            let plan = harmonic_plan(l, 5e6).unwrap();
            let p = harmonic_point(&ch, &band, &links, &demand, &plan, 1e5, 6.0, ThroughputMode::WorstCase);
            assert!(p.t_min_bps <= prev);
            prev = p.t_min_bps;
        }
        // Whole library broadcast: no file outage.
        let plan = harmonic_plan(1.0, 1.0).unwrap();
        let p = harmonic_point(&ch, &band, &links, &demand, &plan, 1.0, 2.0, ThroughputMode::WorstCase);
        let tail = LossMixture::for_link(&ch, &c2(300.0), &band).exceed_prob(BsBudget::new(&ch, &band).max_pathloss(2.0));
        assert!((p.p_o - tail).abs() < 1e-12);
    }

    #[test]
    fn harmonic_outage_matches_monte_carlo() {
        let ch = office();
        let band = BandConfig::cellular2_1();
        let demand = zipf_pmf(300, 0.4).unwrap();
        let plan = HarmonicPlan::from_blocks(2.7e9, 540).unwrap();
        let geoms = [c2(150.0), c2(300.0), c2(420.0)];
        let links: Vec<BsLink> = geoms.iter().map(|&g| BsLink { geom: g, pathloss_db: 0.0 }).collect();
        let c_r0 = 6.0;
        let rate = 1e5;
        let analytic = harmonic_point(&ch, &band, &links, &demand, &plan, rate, c_r0, ThroughputMode::WorstCase).p_o;
        let budget = BsBudget::new(&ch, &band);
        let m_prime = plan.broadcast_set(c_r0, budget.bandwidth_hz, rate, 300) as u32;
        let pl_max = budget.max_pathloss(c_r0);
        let trials = 30_000u64;
        let mut out = 0usize;
        let mut rng = stream(5, &[]);
        for t in 0..trials {
            let reqs = sample_requests(&demand, geoms.len(), &mut rng);
            for (u, g) in geoms.iter().enumerate() {
                let mut r = stream(6, &[t, u as u64]);
                let (_, pl) = ch.realize(g, &band, true, &mut r);
                if reqs[u] > m_prime || pl.unwrap() >= pl_max {
                    out += 1;
                }
            }
        }
        let total = (trials as usize * geoms.len()) as f64;
        let est = out as f64 / total;
        let sd = (analytic * (1.0 - analytic) / total).sqrt();
        assert!((est - analytic).abs() < 3.0 * sd, "{est} vs {analytic}");
    }

    #[test]
    fn worst_case_user_is_farthest() {
        let links = vec![
            BsLink { geom: c2(10.0), pathloss_db: 0.0 },
            BsLink { geom: c2(30.0), pathloss_db: 0.0 },
            BsLink { geom: c2(30.0), pathloss_db: 0.0 },
        ];
        assert_eq!(worst_case_user(&links), Some(1));
        assert_eq!(worst_case_user(&[]), None);
    }
}
