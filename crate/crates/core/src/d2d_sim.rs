//! Clustered D2D delivery: cluster grid and reuse coloring, potential-link
//! discovery, round-robin TDMA scheduling with interference treated as
//! noise, and the multi-band delivery cascade.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bs_schemes::{admit_by_rate, BsBudget, BsLink};
use crate::channel::{capacity_from_sinr, dbm_to_mw, BandConfig, Channel};
use crate::content::{CacheAssignment, FileId};
use crate::error::{Error, Result};
use crate::geometry::{classify_d2d, CellLayout, NodePlacement, Point};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGrid {
    pub cell_side: f64,
    pub cluster_side: f64,
    pub per_axis: usize,
    pub reuse_k: usize,
    /// Protocol-model guard factor when `reuse_k` was derived from it.
    pub delta: Option<f64>,
}

/// Reuse factor guaranteeing no co-colored transmitter within `(1+delta)r`.
pub fn analytic_reuse_factor(delta: f64) -> usize {
    let side = (std::f64::consts::SQRT_2 * (1.0 + delta)).ceil() as usize + 1;
    side * side
}

pub fn build_clusters(cell_side: f64, cluster_side: f64, reuse_k: usize) -> Result<ClusterGrid> {
    if !(cluster_side > 0.0) || cluster_side > cell_side {
        return Err(Error::InvalidParameter(format!(
            "cluster_side must lie in (0, {cell_side}], got {cluster_side}"
        )));
    }
    let root = (reuse_k as f64).sqrt().round() as usize;
    if reuse_k == 0 || root * root != reuse_k {
        return Err(Error::NonSquareReuse(reuse_k));
    }
    let per_axis = (cell_side / cluster_side - 1e-9).ceil().max(1.0) as usize;
    Ok(ClusterGrid {
        cell_side,
        cluster_side,
        per_axis,
        reuse_k,
        delta: None,
    })
}

impl ClusterGrid {
    pub fn analytic(cell_side: f64, cluster_side: f64, delta: f64) -> Result<Self> {
        let mut grid = build_clusters(cell_side, cluster_side, analytic_reuse_factor(delta))?;
        grid.delta = Some(delta);
        Ok(grid)
    }

    pub fn cluster_count(&self) -> usize {
        self.per_axis * self.per_axis
    }

    fn axis_index(&self, v: f64) -> usize {
        ((v / self.cluster_side).floor().max(0.0) as usize).min(self.per_axis - 1)
    }

    pub fn cluster_of(&self, p: Point) -> usize {
        self.axis_index(p.x) + self.per_axis * self.axis_index(p.y)
    }

    pub fn color(&self, cluster: usize) -> usize {
        let root = (self.reuse_k as f64).sqrt().round() as usize;
        let (ix, iy) = (cluster % self.per_axis, cluster / self.per_axis);
        ix % root + root * (iy % root)
    }

    /// Members of every cluster, in ascending node order.
    pub fn members(&self, placement: &NodePlacement) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count()];
        for (u, &p) in placement.positions.iter().enumerate() {
            out[self.cluster_of(p)].push(u);
        }
        out
    }

    /// Expected users per cluster for `n` uniformly placed users.
    pub fn expected_cluster_size(&self, n: usize) -> f64 {
        n as f64 * (self.cluster_side / self.cell_side).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSource {
    SelfCache,
    Device(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PotentialLink {
    pub rx: usize,
    pub source: LinkSource,
    pub file: FileId,
    pub cluster: usize,
}

/// One potential link per requester whose file is in its cluster: its own
/// cache, or else the nearest holder (lowest index on ties).
pub fn find_potential_links(
    grid: &ClusterGrid,
    placement: &NodePlacement,
    caches: &CacheAssignment,
    requests: &[FileId],
) -> Vec<PotentialLink> {
    let members = grid.members(placement);
    let mut links = Vec::new();
    for (rx, &file) in requests.iter().enumerate() {
        let cluster = grid.cluster_of(placement.positions[rx]);
        if caches.holds(rx, file) {
            links.push(PotentialLink {
                rx,
                source: LinkSource::SelfCache,
                file,
                cluster,
            });
            continue;
        }
        let here = placement.positions[rx];
        let best = members[cluster]
            .iter()
            .filter(|&&v| v != rx && caches.holds(v, file))
            .map(|&v| (v, here.distance(&placement.positions[v])))
            .fold(None, |best: Option<(usize, f64)>, cand| match best {
                Some(b) if b.1 <= cand.1 => Some(b),
                _ => Some(cand),
            });
        if let Some((tx, _)) = best {
            links.push(PotentialLink {
                rx,
                source: LinkSource::Device(tx),
                file,
                cluster,
            });
        }
    }
    links
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledLink {
    pub cluster: usize,
    pub tx: usize,
    pub rx: usize,
}

/// Links grouped per cluster, preserving input order.
fn per_cluster(grid: &ClusterGrid, links: &[ScheduledLink]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); grid.cluster_count()];
    for (i, l) in links.iter().enumerate() {
        out[l.cluster].push(i);
    }
    out
}

/// Active link indices in round `t`: one per cluster of color `t mod K`.
pub fn active_links(grid: &ClusterGrid, groups: &[Vec<usize>], t: usize) -> Vec<usize> {
    let color = t % grid.reuse_k;
    let slot = t / grid.reuse_k;
    groups
        .iter()
        .enumerate()
        .filter(|(c, g)| !g.is_empty() && grid.color(*c) == color)
        .map(|(_, g)| g[slot % g.len()])
        .collect()
}

pub fn default_rounds(grid: &ClusterGrid, links: &[ScheduledLink]) -> usize {
    let max = per_cluster(grid, links).iter().map(Vec::len).max().unwrap_or(0);
    10 * grid.reuse_k * max.max(1)
}

/// Average rate of every link over `rounds` TDMA rounds. `capacity(l,
/// active)` is the instantaneous rate of link `l` given the active set.
pub fn schedule_and_rate<F>(grid: &ClusterGrid, links: &[ScheduledLink], rounds: usize, mut capacity: F) -> Vec<f64>
where
    F: FnMut(usize, &[usize]) -> f64,
{
    let groups = per_cluster(grid, links);
    let mut sum = vec![0.0; links.len()];
    if rounds == 0 {
        return sum;
    }
    for t in 0..rounds {
        let active = active_links(grid, &groups, t);
        for &l in &active {
            sum[l] += capacity(l, &active);
        }
    }
    sum.iter().map(|s| s / rounds as f64).collect()
}

/// Realized pathlosses between device pairs in one band, drawn lazily. The
/// draw for `(tx, rx)` depends only on the seed and the pair.
pub struct PairChannel<'a> {
    layout: &'a CellLayout,
    channel: &'a Channel,
    placement: &'a NodePlacement,
    band: BandConfig,
    seed: u64,
    cache: HashMap<(usize, usize), Option<f64>>,
}

impl<'a> PairChannel<'a> {
    pub fn new(
        layout: &'a CellLayout,
        channel: &'a Channel,
        placement: &'a NodePlacement,
        band: BandConfig,
        seed: u64,
    ) -> Self {
        Self {
            layout,
            channel,
            placement,
            band,
            seed,
            cache: HashMap::new(),
        }
    }

    pub fn band(&self) -> &BandConfig {
        &self.band
    }

    fn unbounded(&mut self, tx: usize, rx: usize) -> Option<f64> {
        let (layout, channel, placement, band, seed) =
            (self.layout, self.channel, self.placement, self.band, self.seed);
        *self.cache.entry((tx, rx)).or_insert_with(|| {
            let geom = classify_d2d(
                layout,
                placement.positions[tx],
                placement.locations[tx],
                placement.positions[rx],
                placement.locations[rx],
            );
            let mut rng = stream(seed, &[tx as u64, rx as u64]);
            channel.realize(&geom, &band, false, &mut rng).1
        })
    }

    /// Pathloss of a serving link; `None` beyond range or when blocked.
    pub fn link_pathloss(&mut self, tx: usize, rx: usize) -> Option<f64> {
        let d = self.placement.positions[tx].distance(&self.placement.positions[rx]);
        if self.band.max_range.is_some_and(|r| d > r) {
            return None;
        }
        self.unbounded(tx, rx)
    }

    /// Received interference power in mW from `tx` at `rx`.
    pub fn interference_mw(&mut self, tx: usize, rx: usize) -> f64 {
        match self.unbounded(tx, rx) {
            Some(pl) => dbm_to_mw(self.band.received_power_dbm(pl)),
            None => 0.0,
        }
    }

    pub fn noise_dbm(&self) -> f64 {
        self.channel.noise_dbm(self.band.bandwidth_hz)
    }

    /// Interference-free capacity of a serving link.
    pub fn snr_capacity(&mut self, tx: usize, rx: usize) -> f64 {
        match self.link_pathloss(tx, rx) {
            Some(pl) => {
                let snr = dbm_to_mw(self.band.received_power_dbm(pl)) / dbm_to_mw(self.noise_dbm());
                capacity_from_sinr(snr, self.band.bandwidth_hz)
            }
            None => 0.0,
        }
    }

    /// Average rates of `links` under TDMA with co-active interference
    /// (none in the mm-wave band).
    pub fn scheduled_rates(&mut self, grid: &ClusterGrid, links: &[ScheduledLink], rounds: usize) -> Vec<f64> {
        let noise_mw = dbm_to_mw(self.noise_dbm());
        let bw = self.band.bandwidth_hz;
        let interference_free = self.band.band.is_mmwave();
        schedule_and_rate(grid, links, rounds, |l, active| {
            let link = links[l];
            let Some(pl) = self.link_pathloss(link.tx, link.rx) else {
                return 0.0;
            };
            let signal = dbm_to_mw(self.band.received_power_dbm(pl));
            let interference: f64 = if interference_free {
                0.0
            } else {
                active
                    .iter()
                    .filter(|&&j| j != l)
                    .map(|&j| self.interference_mw(links[j].tx, link.rx))
                    .sum()
            };
            capacity_from_sinr(signal / (noise_mw + interference), bw)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    SelfCache,
    MmWave,
    Microwave,
    BaseStation,
    Outage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOutcome {
    pub throughput: Vec<f64>,
    pub tier: Vec<Tier>,
}

impl ScheduleOutcome {
    pub fn all_outage(n: usize) -> Self {
        Self {
            throughput: vec![0.0; n],
            tier: vec![Tier::Outage; n],
        }
    }

    pub fn len(&self) -> usize {
        self.tier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tier.is_empty()
    }

    pub fn is_outage(&self, u: usize) -> bool {
        self.tier[u] == Tier::Outage
    }
}

/// BS fallback of the delivery cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsAccess {
    pub band: BandConfig,
    /// Fixed admission budget; `None` admits while the common rate stays
    /// above the playback threshold.
    pub budget: Option<usize>,
}

/// When a scheduled D2D user counts as served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageRule {
    /// Every potential link that passes its tier test is served at whatever
    /// rate scheduling gives it; outage means the request found no server.
    #[default]
    Unserved,
    /// A scheduled rate below the playback threshold is outage (or falls
    /// through to the BS).
    Threshold,
}

impl OutageRule {
    /// Rate below which a user is counted in outage.
    pub fn cutoff(self, threshold_bps: f64) -> f64 {
        match self {
            OutageRule::Unserved => 0.0,
            OutageRule::Threshold => threshold_bps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeliveryConfig {
    pub mmwave: Option<BandConfig>,
    pub microwave: Option<BandConfig>,
    pub bs: Option<BsAccess>,
    pub threshold_bps: f64,
    pub playback_cap_bps: f64,
    /// Scheduling rounds; `None` uses [`default_rounds`].
    pub rounds: Option<usize>,
    pub outage_rule: OutageRule,
}

/// Inputs shared by every scheme within one realization.
pub struct Network<'a> {
    pub layout: &'a CellLayout,
    pub channel: &'a Channel,
    pub placement: &'a NodePlacement,
}

/// Per-band channel seeds of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelSeeds {
    pub mmwave: u64,
    pub microwave: u64,
}

/// Delivery cascade: own cache, then mm-wave D2D, then microwave D2D, then
/// the BS, else outage. Under [`OutageRule::Threshold`], D2D users whose
/// scheduled rate falls below the threshold fall through to the BS.
pub fn multiband_delivery(
    net: &Network,
    grid: &ClusterGrid,
    links: &[PotentialLink],
    bs_links: Option<&[BsLink]>,
    cfg: &DeliveryConfig,
    seeds: ChannelSeeds,
) -> ScheduleOutcome {
    let n = net.placement.len();
    let mut out = ScheduleOutcome::all_outage(n);
    let mut mm_links = Vec::new();
    let mut uw_links = Vec::new();
    let mut mm = cfg
        .mmwave
        .map(|b| PairChannel::new(net.layout, net.channel, net.placement, b, seeds.mmwave));
    let mut uw = cfg
        .microwave
        .map(|b| PairChannel::new(net.layout, net.channel, net.placement, b, seeds.microwave));

    for link in links {
        let tx = match link.source {
            LinkSource::SelfCache => {
                out.tier[link.rx] = Tier::SelfCache;
                out.throughput[link.rx] = cfg.playback_cap_bps;
                continue;
            }
            LinkSource::Device(tx) => tx,
        };
        let sched = ScheduledLink {
            cluster: link.cluster,
            tx,
            rx: link.rx,
        };
        if mm.as_mut().is_some_and(|c| c.snr_capacity(tx, link.rx) >= cfg.threshold_bps) {
            mm_links.push(sched);
        } else if uw.as_mut().is_some_and(|c| c.snr_capacity(tx, link.rx) >= cfg.threshold_bps) {
            uw_links.push(sched);
        }
    }

    for (chan, set, tier) in [(&mut mm, &mm_links, Tier::MmWave), (&mut uw, &uw_links, Tier::Microwave)] {
        let Some(chan) = chan.as_mut() else { continue };
        if set.is_empty() {
            continue;
        }
        let rounds = cfg.rounds.unwrap_or_else(|| default_rounds(grid, set));
        let rates = chan.scheduled_rates(grid, set, rounds);
        let cutoff = cfg.outage_rule.cutoff(cfg.threshold_bps);
        for (l, r) in set.iter().zip(rates) {
            if r > 0.0 && r >= cutoff {
                out.tier[l.rx] = tier;
                out.throughput[l.rx] = r;
            }
        }
    }

    if let (Some(access), Some(bs_links)) = (cfg.bs, bs_links) {
        let budget = BsBudget::new(net.channel, &access.band);
        let candidates: Vec<(usize, f64)> = (0..n)
            .filter(|&u| out.is_outage(u))
            .map(|u| (u, budget.capacity_bps(bs_links[u].pathloss_db)))
            .collect();
        let (admitted, rate) = admit_by_rate(&candidates, cfg.threshold_bps, access.budget);
        if rate >= cfg.threshold_bps {
            for u in admitted {
                out.tier[u] = Tier::BaseStation;
                out.throughput[u] = rate;
            }
        }
    }
    out
}

/// Mean per-realization service counts by tier.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TierCounts {
    pub self_cache: f64,
    pub mmwave: f64,
    pub microwave: f64,
    pub bs: f64,
    pub outage: f64,
}

/// One point of a throughput-outage tradeoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemePoint {
    pub p_o: f64,
    pub t_min_bps: f64,
    pub tiers: TierCounts,
}

impl SchemePoint {
    pub fn all_outage(n: usize) -> Self {
        Self {
            p_o: 1.0,
            t_min_bps: 0.0,
            tiers: TierCounts {
                outage: n as f64,
                ..TierCounts::default()
            },
        }
    }

    /// Average over realizations, summed in the given order.
    pub fn mean(points: &[SchemePoint]) -> Option<SchemePoint> {
        if points.is_empty() {
            return None;
        }
        let k = points.len() as f64;
        let mut acc = SchemePoint {
            p_o: 0.0,
            t_min_bps: 0.0,
            tiers: TierCounts::default(),
        };
        for p in points {
            acc.p_o += p.p_o;
            acc.t_min_bps += p.t_min_bps;
            acc.tiers.self_cache += p.tiers.self_cache;
            acc.tiers.mmwave += p.tiers.mmwave;
            acc.tiers.microwave += p.tiers.microwave;
            acc.tiers.bs += p.tiers.bs;
            acc.tiers.outage += p.tiers.outage;
        }
        acc.p_o /= k;
        acc.t_min_bps /= k;
        for v in [
            &mut acc.tiers.self_cache,
            &mut acc.tiers.mmwave,
            &mut acc.tiers.microwave,
            &mut acc.tiers.bs,
            &mut acc.tiers.outage,
        ] {
            *v /= k;
        }
        Some(acc)
    }
}

/// Outage fraction and mean throughput of the served users.
pub fn throughput_outage_point(outcome: &ScheduleOutcome, threshold_bps: f64) -> SchemePoint {
    let n = outcome.len();
    let mut tiers = TierCounts::default();
    let mut served = 0usize;
    let mut sum = 0.0;
    for (t, &r) in outcome.tier.iter().zip(&outcome.throughput) {
        if *t == Tier::Outage || r < threshold_bps {
            tiers.outage += 1.0;
            continue;
        }
        served += 1;
        sum += r;
        match t {
            Tier::SelfCache => tiers.self_cache += 1.0,
            Tier::MmWave => tiers.mmwave += 1.0,
            Tier::Microwave => tiers.microwave += 1.0,
            Tier::BaseStation => tiers.bs += 1.0,
            Tier::Outage => unreachable!(),
        }
    }
    if served == 0 {
        return SchemePoint::all_outage(n);
    }
    SchemePoint {
        p_o: (n - served) as f64 / n as f64,
        t_min_bps: sum / served as f64,
        tiers,
    }
}
