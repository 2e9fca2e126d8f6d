//! Experiment configuration, sweep execution and result tables.

pub mod config;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, Profile, Scheme};
pub use output::{ResultRow, UserRow, SCHEMA_VERSION};
pub use run::{curve, frontier_throughput, run_experiment, RunOutput};

use crate::error::Result;
use crate::scaling_laws::{d2d_tradeoff_bound, scaling_summary, BoundConstants, BoundParams, ScalingSummary};

/// Constants actually used for the bound rows.
pub fn bound_constants(cfg: &ExperimentConfig) -> BoundConstants {
    let c = cfg.analytic.constants;
    if !cfg.analytic.illustrative_constants {
        return c;
    }
    let fill = |v: Option<f64>| v.or(Some(1.0));
    let missing = c.a.is_none() || c.b.is_none() || c.d.is_none() || c.a_gamma.is_none();
    BoundConstants {
        a: fill(c.a),
        b: fill(c.b),
        d: fill(c.d),
        a_gamma: fill(c.a_gamma),
        illustrative: c.illustrative || missing,
    }
}

/// Closed-form tradeoff rows, tagged `analytic:<regime>` and suffixed
/// `:illustrative` when placeholder constants were used.
pub fn analytic_rows(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &m in &cfg.m {
        for &cache_size in &cfg.cache_size {
            let params = BoundParams {
                gamma_r: cfg.gamma_r,
                cache_size: cache_size as f64,
                m,
                c_r: cfg.analytic.c_r_bps,
                reuse_k: cfg.analytic.reuse_k,
                rho1: cfg.analytic.rho1.iter().copied().filter(|&r| r >= cfg.gamma_r).collect(),
                g_c: cfg.analytic.g_c.clone(),
                rho2: None,
                constants: bound_constants(cfg),
            };
            for b in d2d_tradeoff_bound(&params)? {
                let mut scheme = format!("analytic:{}", b.regime.as_str());
                if b.illustrative {
                    scheme.push_str(":illustrative");
                }
                for &n in &cfg.n {
                    rows.push(ResultRow {
                        schema_version: SCHEMA_VERSION,
                        scheme: scheme.clone(),
                        environment: cfg.environment.as_str().into(),
                        n,
                        m,
                        cache_size,
                        gamma_r: cfg.gamma_r,
                        cluster_side: None,
                        band_split: None,
                        c_r0: None,
                        p_o: b.p,
                        t_min_bps: b.t,
                        tier_self: None,
                        tier_mmwave: None,
                        tier_uwave: None,
                        tier_bs: None,
                        tier_outage: None,
                        realizations: 0,
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Scaling-order comparison at every population point.
pub fn scaling_summaries(cfg: &ExperimentConfig) -> Vec<((usize, usize, usize), ScalingSummary)> {
    let delay = cfg.harmonic.length_bits / cfg.harmonic.blocks as f64;
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &m in &cfg.m {
            for &c in &cfg.cache_size {
                let s = scaling_summary(n, m, c as f64, cfg.gamma_r, cfg.harmonic.length_bits, delay);
                out.push(((n, m, c), s));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_rows_are_tagged() {
        let cfg = ExperimentConfig::default();
        let rows = analytic_rows(&cfg).unwrap();
        assert!(rows.iter().any(|r| r.scheme == "analytic:r1"));
        assert!(rows.iter().any(|r| r.scheme == "analytic:r2:illustrative"));
        assert!(rows.iter().all(|r| r.tier_bs.is_none() && r.realizations == 0));

        let strict = ExperimentConfig {
            analytic: config::AnalyticConfig {
                illustrative_constants: false,
                ..cfg.analytic.clone()
            },
            ..cfg
        };
        let rows = analytic_rows(&strict).unwrap();
        assert!(rows.iter().all(|r| r.scheme == "analytic:r1"));
    }
}
