//! Zipf demand, the water-filling random caching distribution, random
//! cache placement and the in-cluster hit probability.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// File identifier, 1-based (file 1 is the most popular).
pub type FileId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfDemand {
    pub m: usize,
    pub gamma_r: f64,
    pmf: Vec<f64>,
}

impl ZipfDemand {
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// P_r(f) for a 1-based file id.
    pub fn prob(&self, f: FileId) -> f64 {
        self.pmf[f as usize - 1]
    }

    /// Request mass of files ranked strictly after `m_prime`.
    pub fn tail_mass(&self, m_prime: usize) -> f64 {
        self.pmf.iter().skip(m_prime).sum::<f64>().clamp(0.0, 1.0)
    }
}

pub fn zipf_pmf(m: usize, gamma_r: f64) -> Result<ZipfDemand> {
    if m == 0 {
        return Err(Error::InvalidParameter("library size m must be positive".into()));
    }
    if !(0.0..1.0).contains(&gamma_r) {
        return Err(Error::InvalidParameter(format!(
            "Zipf exponent must lie in [0, 1), got {gamma_r}"
        )));
    }
    let raw: Vec<f64> = (1..=m).map(|f| (f as f64).powf(-gamma_r)).collect();
    let total: f64 = raw.iter().sum();
    Ok(ZipfDemand {
        m,
        gamma_r,
        pmf: raw.into_iter().map(|w| w / total).collect(),
    })
}

/// Exponent used in `z_f = P_r(f)^(1/e)`.
///
/// `Paper` takes `e = M(g_c-1) - 1`, which is the stationary point of the
/// hit objective with `M(g_c-1)` neighbor draws. `NeighborCount` takes
/// `e = M(g_c-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMode {
    #[default]
    Paper,
    NeighborCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachingDistribution {
    pub p_c: Vec<f64>,
    pub nu: f64,
    pub z: Vec<f64>,
    pub support: usize,
    pub cache_size: usize,
    pub g_c: f64,
}

impl CachingDistribution {
    pub fn m(&self) -> usize {
        self.p_c.len()
    }
}

/// Water-filling caching distribution `P_c(f) = [1 - nu/z_f]^+`.
///
/// `g_c` may be fractional (expected users per cluster). With a single
/// neighbor draw (`M(g_c-1) = 1`) the objective is linear and the optimum
/// puts all mass on the most popular file.
pub fn optimal_cache_distribution(
    demand: &ZipfDemand,
    cache_size: usize,
    g_c: f64,
    mode: ExponentMode,
) -> Result<CachingDistribution> {
    if cache_size == 0 {
        return Err(Error::InvalidParameter("cache size M must be positive".into()));
    }
    let m = demand.m;
    let draws = cache_size as f64 * (g_c - 1.0);
    let exponent = match mode {
        ExponentMode::Paper => draws - 1.0,
        ExponentMode::NeighborCount => draws,
    };
    let degenerate = |z: Vec<f64>| {
        let mut p_c = vec![0.0; m];
        p_c[0] = 1.0;
        CachingDistribution {
            p_c,
            nu: 0.0,
            z,
            support: 1,
            cache_size,
            g_c,
        }
    };
    if m == 1 {
        return Ok(degenerate(vec![1.0]));
    }
    if !(draws >= 1.0) || exponent < 0.0 {
        return Err(Error::UndefinedCachingExponent(draws));
    }
    if exponent == 0.0 {
        return Ok(degenerate(vec![0.0; m]));
    }
    let z: Vec<f64> = demand.pmf.iter().map(|p| p.powf(1.0 / exponent)).collect();

    let cap = if demand.gamma_r > 0.0 {
        let guard = (cache_size as f64 / demand.gamma_r * g_c).ceil();
        if guard.is_finite() && guard >= 1.0 {
            (guard as usize).min(m)
        } else {
            m
        }
    } else {
        m
    };

    let mut inv_sum: f64 = z[..cap].iter().map(|v| 1.0 / v).sum();
    let mut support = cap;
    let nu = loop {
        let nu = (support as f64 - 1.0) / inv_sum;
        if support == 1 || 1.0 - nu / z[support - 1] >= 0.0 {
            break nu;
        }
        inv_sum -= 1.0 / z[support - 1];
        support -= 1;
    };
    let p_c = (0..m)
        .map(|f| if f < support { (1.0 - nu / z[f]).max(0.0) } else { 0.0 })
        .collect();
    Ok(CachingDistribution {
        p_c,
        nu,
        z,
        support,
        cache_size,
        g_c,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheAssignment {
    pub caches: Vec<Vec<FileId>>,
}

impl CacheAssignment {
    pub fn holds(&self, node: usize, f: FileId) -> bool {
        self.caches[node].contains(&f)
    }
}

/// Each node draws `cache_size` distinct files from `P_c`, renormalizing the
/// residual mass after every draw.
pub fn place_caches<R: Rng + ?Sized>(
    dist: &CachingDistribution,
    n: usize,
    cache_size: usize,
    rng: &mut R,
) -> Result<CacheAssignment> {
    let positive = dist.p_c.iter().filter(|&&p| p > 0.0).count();
    if cache_size > dist.m() {
        return Err(Error::InvalidParameter(format!(
            "cache size {cache_size} exceeds library size {}",
            dist.m()
        )));
    }
    if cache_size == dist.m() {
        let all: Vec<FileId> = (1..=dist.m() as FileId).collect();
        return Ok(CacheAssignment {
            caches: vec![all; n],
        });
    }
    if cache_size > positive {
        return Err(Error::CacheExceedsSupport {
            cache: cache_size,
            support: positive,
        });
    }
    let support = &dist.p_c[..dist.support.max(positive)];
    let mut caches = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(support.len());
    for _ in 0..n {
        weights.clear();
        weights.extend_from_slice(support);
        let mut remaining: f64 = weights.iter().sum();
        let mut cache = Vec::with_capacity(cache_size);
        for _ in 0..cache_size {
            let target = rng.random::<f64>() * remaining;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            let i = pick.expect("residual mass is positive");
            remaining -= weights[i];
            weights[i] = 0.0;
            // Guards against drift when the residual becomes tiny.
            if remaining <= 0.0 {
                remaining = weights.iter().sum();
            }
            cache.push(i as FileId + 1);
        }
        caches.push(cache);
    }
    Ok(CacheAssignment { caches })
}

pub fn sample_requests<R: Rng + ?Sized>(demand: &ZipfDemand, n: usize, rng: &mut R) -> Vec<FileId> {
    let index = WeightedIndex::new(&demand.pmf).expect("Zipf pmf is a valid weight vector");
    (0..n).map(|_| index.sample(rng) as FileId + 1).collect()
}

/// Probability that a request is found in the caches of the `g_c - 1`
/// other cluster members.
pub fn cluster_hit_probability(dist: &[f64], demand: &ZipfDemand, cache_size: usize, g_c: f64) -> f64 {
    if g_c <= 1.0 {
        return 0.0;
    }
    let draws = cache_size as f64 * (g_c - 1.0);
    demand
        .pmf
        .iter()
        .zip(dist)
        .map(|(pr, pc)| pr * (1.0 - (1.0 - pc).max(0.0).powf(draws)))
        .sum()
}
