//! Parallel, seed-deterministic sweep runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scheme};
use super::output::{ResultRow, UserRow, SCHEMA_VERSION};
use crate::bs_schemes::{
    coded_multicast_point, draw_bs_links, harmonic_point, unicast_plan, unicast_point, BsLink, HarmonicPlan,
};
use crate::channel::{BandConfig, Channel};
use crate::content::{optimal_cache_distribution, place_caches, sample_requests, zipf_pmf, FileId};
use crate::d2d_sim::{
    build_clusters, find_potential_links, multiband_delivery, throughput_outage_point, BsAccess, ChannelSeeds,
    DeliveryConfig, Network, SchemePoint, Tier,
};
use crate::error::{Error, Result};
use crate::geometry::{place_nodes, CellLayout, NodePlacement, DEFAULT_BS_HEIGHT, DEFAULT_MS_HEIGHT};
use crate::rng::{derive_seed, f64_tag, purpose, stream};

/// `(n, m, M)` combination of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Population {
    pub n: usize,
    pub m: usize,
    pub cache_size: usize,
}

/// Scheme-specific sweep coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Operating {
    D2d { cluster_side: f64, band_split: Option<f64> },
    Unicast { p_o: f64 },
    Broadcast { c_r0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub population: Population,
    pub operating: Operating,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub users: Vec<UserRow>,
}

/// Cartesian product of the population grid, `schemes` and each scheme's
/// own operating grid.
pub fn sweep_points(cfg: &ExperimentConfig, schemes: &[Scheme]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &m in &cfg.m {
            for &cache_size in &cfg.cache_size {
                let population = Population { n, m, cache_size };
                for &scheme in schemes {
                    let ops: Vec<Operating> = match scheme {
                        Scheme::D2dMicrowave | Scheme::D2dMultiband => cfg
                            .cluster_sides()
                            .into_iter()
                            .map(|cluster_side| Operating::D2d {
                                cluster_side,
                                band_split: None,
                            })
                            .collect(),
                        Scheme::D2dInband => cfg
                            .band_split
                            .iter()
                            .flat_map(|&s| {
                                cfg.cluster_sides().into_iter().map(move |cluster_side| Operating::D2d {
                                    cluster_side,
                                    band_split: Some(s),
                                })
                            })
                            .collect(),
                        Scheme::Unicast => cfg.p_o.iter().map(|&p_o| Operating::Unicast { p_o }).collect(),
                        Scheme::CodedMulticast | Scheme::Harmonic => {
                            cfg.c_r0.iter().map(|&c_r0| Operating::Broadcast { c_r0 }).collect()
                        }
                    };
                    out.extend(ops.into_iter().map(|operating| SweepPoint {
                        scheme,
                        population,
                        operating,
                    }));
                }
            }
        }
    }
    out
}

struct Context {
    layout: CellLayout,
    channel: Channel,
}

/// Draws shared by every scheme within one realization.
struct Realization {
    placement: NodePlacement,
    requests: Vec<FileId>,
    bs_links: Vec<BsLink>,
}

fn realization(ctx: &Context, cfg: &ExperimentConfig, pop: Population, r: usize) -> Result<Realization> {
    let (n, r) = (pop.n as u64, r as u64);
    let placement = place_nodes(
        &ctx.layout,
        pop.n,
        cfg.placement,
        derive_seed(cfg.seed, &[purpose::PLACEMENT, n, r]),
    )?;
    let demand = zipf_pmf(pop.m, cfg.gamma_r)?;
    let mut rng = stream(cfg.seed, &[purpose::REQUESTS, n, pop.m as u64, f64_tag(cfg.gamma_r), r]);
    let requests = sample_requests(&demand, pop.n, &mut rng);
    let bs_links = draw_bs_links(
        &ctx.layout,
        &ctx.channel,
        &placement,
        &BandConfig::cellular2_1(),
        derive_seed(cfg.seed, &[purpose::BS_CHANNEL, n, r]),
    );
    Ok(Realization {
        placement,
        requests,
        bs_links,
    })
}

/// Expected users per cluster, at least two.
pub fn expected_cluster_size(n: usize, cluster_side: f64, cell_side: f64) -> f64 {
    (n as f64 * cluster_side * cluster_side / (cell_side * cell_side)).max(2.0)
}

fn d2d_delivery(
    scheme: Scheme,
    band_split: Option<f64>,
    cfg: &ExperimentConfig,
) -> (DeliveryConfig, BandConfig) {
    let cellular = BandConfig::cellular2_1();
    let budget = cfg.bs_budget;
    let (mmwave, microwave, bs) = match scheme {
        Scheme::D2dMicrowave => (None, BandConfig::ism2_45(), None),
        Scheme::D2dMultiband => (
            Some(BandConfig::mmwave38()),
            BandConfig::ism2_45(),
            Some(BsAccess { band: cellular, budget }),
        ),
        Scheme::D2dInband => {
            let s = band_split.unwrap_or(0.5);
            let bs_band = BandConfig {
                bandwidth_hz: (1.0 - s) * cellular.bandwidth_hz,
                ..cellular
            };
            (
                None,
                BandConfig::microwave_in_band(s * cellular.bandwidth_hz),
                Some(BsAccess { band: bs_band, budget }),
            )
        }
        _ => unreachable!("not a D2D scheme"),
    };
    let delivery = DeliveryConfig {
        mmwave,
        microwave: Some(microwave),
        bs,
        threshold_bps: cfg.threshold_bps,
        playback_cap_bps: cfg.playback_cap_bps,
        rounds: cfg.rounds,
        outage_rule: cfg.outage_rule,
    };
    (delivery, microwave)
}

fn band_tag(band: &BandConfig) -> u64 {
    f64_tag(band.carrier_hz)
}

fn evaluate(
    ctx: &Context,
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    r: usize,
    want_users: bool,
) -> Result<(SchemePoint, Vec<UserRow>)> {
    let pop = point.population;
    let real = realization(ctx, cfg, pop, r)?;
    let demand = zipf_pmf(pop.m, cfg.gamma_r)?;
    let cellular = BandConfig::cellular2_1();
    let n = pop.n as u64;
    match point.operating {
        Operating::D2d {
            cluster_side,
            band_split,
        } => {
            let (delivery, microwave) = d2d_delivery(point.scheme, band_split, cfg);
            let grid = build_clusters(cfg.cell_side, cluster_side, microwave.reuse_k)?;
            let g_c = expected_cluster_size(pop.n, cluster_side, cfg.cell_side);
            let dist = optimal_cache_distribution(&demand, pop.cache_size, g_c, cfg.exponent_mode)?;
            let mut rng = stream(
                cfg.seed,
                &[
                    purpose::CACHES,
                    n,
                    pop.m as u64,
                    pop.cache_size as u64,
                    f64_tag(cfg.gamma_r),
                    f64_tag(cluster_side),
                    r as u64,
                ],
            );
            let caches = place_caches(&dist, pop.n, pop.cache_size, &mut rng)?;
            let links = find_potential_links(&grid, &real.placement, &caches, &real.requests);
            let net = Network {
                layout: &ctx.layout,
                channel: &ctx.channel,
                placement: &real.placement,
            };
            let d2d_seed = |band: &BandConfig| derive_seed(cfg.seed, &[purpose::D2D_CHANNEL, n, r as u64, band_tag(band)]);
            let seeds = ChannelSeeds {
                mmwave: d2d_seed(&BandConfig::mmwave38()),
                microwave: d2d_seed(&microwave),
            };
            let outcome = multiband_delivery(&net, &grid, &links, Some(&real.bs_links), &delivery, seeds);
            let cutoff = cfg.outage_rule.cutoff(cfg.threshold_bps);
            let users = if want_users {
                outcome
                    .tier
                    .iter()
                    .zip(&outcome.throughput)
                    .enumerate()
                    .map(|(u, (&tier, &t))| UserRow {
                        scheme: point.scheme.as_str().into(),
                        n: pop.n,
                        m: pop.m,
                        cache_size: pop.cache_size,
                        cluster_side,
                        band_split,
                        realization: r,
                        user: u,
                        tier: if t < cutoff { Tier::Outage } else { tier },
                        throughput_bps: t,
                    })
                    .collect()
            } else {
                Vec::new()
            };
            Ok((throughput_outage_point(&outcome, cutoff), users))
        }
        Operating::Unicast { p_o } => {
            let plan = unicast_plan(&ctx.channel, &cellular, &real.bs_links, p_o, pop.cache_size, pop.m);
            Ok((unicast_point(&plan), Vec::new()))
        }
        Operating::Broadcast { c_r0 } => {
            let p = match point.scheme {
                Scheme::CodedMulticast => coded_multicast_point(
                    &ctx.channel,
                    &cellular,
                    &real.bs_links,
                    pop.m,
                    pop.cache_size as f64,
                    c_r0,
                    cfg.throughput_mode,
                )?,
                _ => {
                    let plan = HarmonicPlan::from_blocks(cfg.harmonic.length_bits, cfg.harmonic.blocks)?;
                    harmonic_point(
                        &ctx.channel,
                        &cellular,
                        &real.bs_links,
                        &demand,
                        &plan,
                        cfg.harmonic_rate(),
                        c_r0,
                        cfg.throughput_mode,
                    )
                }
            };
            Ok((p, Vec::new()))
        }
    }
}

fn result_row(cfg: &ExperimentConfig, point: &SweepPoint, mean: SchemePoint) -> ResultRow {
    let (cluster_side, band_split, c_r0) = match point.operating {
        Operating::D2d {
            cluster_side,
            band_split,
        } => (Some(cluster_side), band_split, None),
        Operating::Unicast { .. } => (None, None, None),
        Operating::Broadcast { c_r0 } => (None, None, Some(c_r0)),
    };
    ResultRow {
        schema_version: SCHEMA_VERSION,
        scheme: point.scheme.as_str().into(),
        environment: cfg.environment.as_str().into(),
        n: point.population.n,
        m: point.population.m,
        cache_size: point.population.cache_size,
        gamma_r: cfg.gamma_r,
        cluster_side,
        band_split,
        c_r0,
        p_o: mean.p_o,
        t_min_bps: mean.t_min_bps,
        tier_self: Some(mean.tiers.self_cache),
        tier_mmwave: Some(mean.tiers.mmwave),
        tier_uwave: Some(mean.tiers.microwave),
        tier_bs: Some(mean.tiers.bs),
        tier_outage: Some(mean.tiers.outage),
        realizations: cfg.realizations,
        seed: cfg.seed,
    }
}

/// Runs every sweep point of `schemes` over `cfg.realizations`
/// realizations on `jobs` worker threads (all cores when `None`). Output
/// is identical for any worker count.
pub fn run_experiment(cfg: &ExperimentConfig, schemes: &[Scheme], jobs: Option<usize>) -> Result<RunOutput> {
    cfg.validate()?;
    let ctx = Context {
        layout: CellLayout::new(cfg.environment, cfg.cell_side)?,
        channel: Channel::new(cfg.channel_params()?, cfg.environment, DEFAULT_BS_HEIGHT, DEFAULT_MS_HEIGHT),
    };
    let points = sweep_points(cfg, schemes);
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..cfg.realizations).map(move |r| (i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<(SchemePoint, Vec<UserRow>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, r)| {
                let p = &points[i];
                evaluate(&ctx, cfg, p, r, cfg.dump_users && p.scheme.is_d2d())
            })
            .collect::<Result<_>>()
    })?;
    let mut out = RunOutput::default();
    for (point, chunk) in points.iter().zip(results.chunks(cfg.realizations.max(1))) {
        let per_real: Vec<SchemePoint> = chunk.iter().map(|(p, _)| *p).collect();
        if let Some(mean) = SchemePoint::mean(&per_real) {
            out.rows.push(result_row(cfg, point, mean));
        }
        for (_, users) in chunk {
            out.users.extend(users.iter().cloned());
        }
    }
    Ok(out)
}

/// Best throughput at outage at most `p_target` along one scheme's curve.
/// Points on either side of the target are time-shared linearly.
pub fn frontier_throughput(points: &[(f64, f64)], p_target: f64) -> f64 {
    let mut best: f64 = 0.0;
    for &(p1, t1) in points {
        if p1 <= p_target {
            best = best.max(t1);
            for &(p2, t2) in points {
                if p2 > p_target {
                    let w = (p_target - p1) / (p2 - p1);
                    best = best.max(t1 + w * (t2 - t1));
                }
            }
        }
    }
    best
}

/// `(p_o, t_min_bps)` pairs of the rows matching `scheme`.
pub fn curve(rows: &[ResultRow], scheme: Scheme) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.scheme == scheme.as_str())
        .map(|r| (r.p_o, r.t_min_bps))
        .collect()
}
