//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use d2d_cache::bs_schemes::coded_multicast_ntx;
use d2d_cache::channel::{
    los_probability, noise_power, sample_los_state, Band, BandConfig, Channel, ChannelParams, LinkKind, LosKind,
    LosState,
};
use d2d_cache::content::{cluster_hit_probability, optimal_cache_distribution, zipf_pmf, ExponentMode};
use d2d_cache::d2d_sim::{analytic_reuse_factor, ClusterGrid};
use d2d_cache::geometry::{Environment, LinkGeometry, Scenario};
use d2d_cache::harness::{curve, frontier_throughput, run_experiment, ExperimentConfig, Profile, Scheme};
use d2d_cache::rng::stream;
use rand::Rng;

/// Outage level at which the simulated tradeoffs are compared.
const LOW_OUTAGE: f64 = 0.1;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn coded_multicast_examples() -> Check {
    let a = coded_multicast_ntx(2, 3, 1.5).map_err(|e| e.to_string())?;
    let b = coded_multicast_ntx(4, 2, 1.0).map_err(|e| e.to_string())?;
    ensure(
        a == 0.5 && (b - 2.0 / 3.0).abs() < 1e-12,
        format!("N_TX(2,3,1.5) = {a}, N_TX(4,2,1) = {b}"),
    )
}

fn caching_normalization() -> Check {
    let mut rng = stream(2024, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.random_range(2..=50usize);
        let cache = rng.random_range(1..=5usize.min(m - 1));
        let g_c = rng.random_range(2.0..=20.0);
        let gamma = rng.random_range(0.01..0.99);
        let demand = zipf_pmf(m, gamma).map_err(|e| e.to_string())?;
        let dist = optimal_cache_distribution(&demand, cache, g_c, ExponentMode::Paper)
            .map_err(|e| format!("m={m} M={cache} g_c={g_c} gamma={gamma}: {e}"))?;
        worst = worst.max((dist.p_c.iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst <= 1e-9, format!("max |sum - 1| = {worst:e} over 200 tuples"))
}

/// Best hit probability over the simplex grid with step `1/steps`.
fn grid_best(pr: &[f64], draws: f64, steps: usize) -> f64 {
    let table: Vec<Vec<f64>> = pr
        .iter()
        .map(|&p| {
            (0..=steps)
                .map(|k| p * (1.0 - (1.0 - k as f64 / steps as f64).powf(draws)))
                .collect()
        })
        .collect();
    fn walk(table: &[Vec<f64>], f: usize, left: usize, acc: f64, best: &mut f64) {
        if f + 1 == table.len() {
            *best = best.max(acc + table[f][left]);
            return;
        }
        for k in 0..=left {
            walk(table, f + 1, left - k, acc + table[f][k], best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    walk(&table, 0, steps, 0.0, &mut best);
    best
}

fn caching_optimality() -> Check {
    let mut cases = 0;
    let mut min_margin = f64::INFINITY;
    for m in 1..=5 {
        for g_c in [2.0, 3.0, 4.0] {
            for gamma in [0.2, 0.4, 0.8] {
                let demand = zipf_pmf(m, gamma).map_err(|e| e.to_string())?;
                let dist = optimal_cache_distribution(&demand, 1, g_c, ExponentMode::Paper).map_err(|e| e.to_string())?;
                let ours = cluster_hit_probability(&dist.p_c, &demand, 1, g_c);
                let grid = grid_best(demand.pmf(), g_c - 1.0, 100);
                let margin = ours - grid;
                min_margin = min_margin.min(margin);
                cases += 1;
                if margin < -1e-6 {
                    return Err(format!("m={m} g_c={g_c} gamma={gamma}: {ours} < grid {grid}"));
                }
            }
        }
    }
    Ok(format!("{cases} cases, min margin over grid {min_margin:.2e}"))
}

fn reuse_factor() -> Check {
    let k = analytic_reuse_factor(0.0);
    let grid = ClusterGrid::analytic(600.0, 100.0, 0.0).map_err(|e| e.to_string())?;
    ensure(k == 9 && grid.reuse_k == 9, format!("K = {k} at Delta = 0"))
}

fn unicast_scaling() -> Check {
    let cfg = ExperimentConfig {
        n: vec![500, 1000],
        p_o: vec![0.05],
        realizations: 50,
        schemes: vec![Scheme::Unicast],
        ..Profile::Desk.config()
    };
    let out = run_experiment(&cfg, &cfg.schemes, None).map_err(|e| e.to_string())?;
    let t = |n: usize| out.rows.iter().find(|r| r.n == n).map(|r| r.t_min_bps).unwrap_or(0.0);
    let ratio = t(1000) / t(500);
    ensure(
        (0.45..=0.55).contains(&ratio),
        format!("T(1000)/T(500) = {ratio:.3} ({:.1} / {:.1} bit/s)", t(1000), t(500)),
    )
}

struct Curves {
    d2d_m300_c20: f64,
    d2d_m300_c10: f64,
    d2d_m600_c20: f64,
    coded: f64,
    harmonic: f64,
    unicast: f64,
}

fn desk_curves() -> Result<Curves, String> {
    let desk = Profile::Desk.config();
    let compare = run_experiment(&desk, &Scheme::COMPARE, None).map_err(|e| e.to_string())?;
    let best = |rows: &[d2d_cache::harness::ResultRow], s| frontier_throughput(&curve(rows, s), LOW_OUTAGE);
    let d2d_only = |m: usize, cache: usize| -> Result<f64, String> {
        let cfg = ExperimentConfig {
            m: vec![m],
            cache_size: vec![cache],
            schemes: vec![Scheme::D2dMicrowave],
            ..desk.clone()
        };
        let out = run_experiment(&cfg, &cfg.schemes, None).map_err(|e| e.to_string())?;
        Ok(best(&out.rows, Scheme::D2dMicrowave))
    };
    Ok(Curves {
        d2d_m300_c20: best(&compare.rows, Scheme::D2dMicrowave),
        d2d_m300_c10: d2d_only(300, 10)?,
        d2d_m600_c20: d2d_only(600, 20)?,
        coded: best(&compare.rows, Scheme::CodedMulticast),
        harmonic: best(&compare.rows, Scheme::Harmonic),
        unicast: best(&compare.rows, Scheme::Unicast),
    })
}

fn scheme_ordering(c: &Curves) -> Check {
    ensure(
        c.d2d_m300_c20 >= 2.0 * c.coded && c.coded > c.harmonic && c.coded > c.unicast,
        format!(
            "at p_o <= {LOW_OUTAGE}: d2d {:.0}, coded {:.0}, harmonic {:.0}, unicast {:.1} bit/s (d2d/coded = {:.1})",
            c.d2d_m300_c20,
            c.coded,
            c.harmonic,
            c.unicast,
            c.d2d_m300_c20 / c.coded
        ),
    )
}

fn cache_linearity(c: &Curves) -> Check {
    let ratio = c.d2d_m300_c20 / c.d2d_m300_c10;
    ensure(
        ratio >= 1.8,
        format!(
            "T(M=20)/T(M=10) = {ratio:.3} at p_o = {LOW_OUTAGE} ({:.0} / {:.0} bit/s)",
            c.d2d_m300_c20, c.d2d_m300_c10
        ),
    )
}

fn library_inverse(c: &Curves) -> Check {
    let ratio = c.d2d_m600_c20 / c.d2d_m300_c20;
    ensure(
        (0.35..=0.65).contains(&ratio),
        format!(
            "T(m=600)/T(m=300) = {ratio:.3} at p_o = {LOW_OUTAGE} ({:.0} / {:.0} bit/s)",
            c.d2d_m600_c20, c.d2d_m300_c20
        ),
    )
}

fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn geom(scenario: Scenario, d: f64) -> LinkGeometry {
    LinkGeometry {
        distance: d,
        scenario,
        n_w: 0,
        d_in: 0.0,
        cos_theta: 1.0,
    }
}

fn channel_suite() -> Check {
    let mut notes = Vec::new();
    // The office curve has a cube-root cusp at its knee, so the gap is only
    // required to vanish as the probe narrows.
    for (s, env, b) in [
        (Scenario::IndoorA1, Environment::Office, 10f64.powf(0.24 / 0.61)),
        (Scenario::IndoorA1, Environment::Hotspot, 10.0),
        (Scenario::OutdoorB1, Environment::Office, 18.0),
    ] {
        let gap = |eps: f64| (los_probability(s, env, b - eps) - los_probability(s, env, b + eps)).abs();
        let gaps = [gap(1e-3), gap(1e-6), gap(1e-9), gap(1e-12)];
        if gaps.windows(2).any(|w| w[1] > w[0]) || gaps[3] > 1e-4 {
            return Err(format!("LOS probability gap at {b} m ({s:?}, {env}): {gaps:?}"));
        }
    }
    notes.push("LOS continuous".to_string());

    let mut ch = Channel::new(ChannelParams::default(), Environment::Office, 25.0, 1.5);
    let mm = BandConfig::mmwave38();
    let mut rng = stream(11, &[]);
    for _ in 0..1000 {
        if ch.realize(&geom(Scenario::OutdoorB1, 81.0), &mm, true, &mut rng).1.is_some() {
            return Err("mm-wave link beyond 80 m".into());
        }
    }
    if ch.mean_pathloss(&geom(Scenario::OutdoorB1, 79.0), LosKind::Los, &mm).is_none() {
        return Err("mm-wave LOS link at 79 m missing".into());
    }
    notes.push("mm-wave cut at 80 m".into());

    let n20 = noise_power(20e6, ch.params.noise_figure_db);
    if (n20 - -94.99).abs() > 0.01 {
        return Err(format!("noise power {n20} dBm"));
    }
    notes.push(format!("noise {n20:.3} dBm"));

    let a1 = ch
        .mean_pathloss(&geom(Scenario::IndoorA1, 10.0), LosKind::Los, &BandConfig::ism2_45())
        .ok_or("A1 link missing")?
        .mean_db;
    if (a1 - 59.3).abs() > 0.05 {
        return Err(format!("A1 office LOS 10 m: {a1} dB"));
    }
    notes.push(format!("A1 {a1:.3} dB"));

    ch.params.free_space_floor = false;
    let draws = 100_000;
    let mut worst: f64 = 0.0;
    for (k, (band, s, state, sigma)) in [
        (BandConfig::ism2_45(), Scenario::IndoorA1, LosKind::Los, 3.0),
        (BandConfig::ism2_45(), Scenario::IndoorA1, LosKind::Nlos, 6.0),
        (BandConfig::mmwave38(), Scenario::IndoorA1, LosKind::Los, 9.4),
        (BandConfig::mmwave38(), Scenario::OutdoorB1, LosKind::Blos, 11.0),
        (BandConfig::cellular2_1(), Scenario::BsOutdoorC2, LosKind::Nlos, 8.0),
        (BandConfig::cellular2_1(), Scenario::BsIndoorC4, LosKind::Nlos, 10.0),
    ]
    .into_iter()
    .enumerate()
    {
        let mut rng = stream(99, &[k as u64]);
        let g = geom(s, 60.0);
        let los = LosState {
            kind: state,
            body_shadowing_db: 0.0,
        };
        let x: Vec<f64> = (0..draws)
            .map(|_| ch.pathloss(&g, &los, &band, &mut rng).unwrap_or(f64::NAN))
            .collect();
        worst = worst.max((sample_std(&x) / sigma - 1.0).abs());
    }
    let body = ch.params.body_shadowing;
    for (k, (kind, state, sigma)) in [
        (LinkKind::D2d, LosKind::Los, body.d2d_los),
        (LinkKind::D2d, LosKind::Nlos, body.d2d_nlos),
        (LinkKind::Bs, LosKind::Los, body.bs_los),
        (LinkKind::Bs, LosKind::Nlos, body.bs_nlos),
    ]
    .into_iter()
    .enumerate()
    {
        let mut rng = stream(7, &[k as u64]);
        let p = if state == LosKind::Los { 1.0 } else { 0.0 };
        let x: Vec<f64> = (0..draws)
            .map(|_| sample_los_state(p, Band::Ism2_45, kind, &body, &mut rng).body_shadowing_db)
            .collect();
        worst = worst.max((sample_std(&x) / sigma - 1.0).abs());
    }
    notes.push(format!("worst shadowing std error {:.2}%", worst * 100.0));
    ensure(worst < 0.02, notes.join(", "))
}

fn cli_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("compare.toml");
    std::fs::write(&cfg, "realizations = 3\n").map_err(|e| e.to_string())?;
    let run = |jobs: &str, out: &str| -> Result<Vec<u8>, String> {
        let out_dir = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_d2dsim"))
            .arg("compare")
            .arg("--config")
            .arg(&cfg)
            .args(["--seed", "7", "--jobs", jobs, "--out"])
            .arg(&out_dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stdout).into_owned());
        }
        std::fs::read(out_dir.join("results.csv")).map_err(|e| e.to_string())
    };
    let a = run("1", "a")?;
    let b = run("3", "b")?;
    ensure(
        a == b && !a.is_empty(),
        format!("--jobs 1 vs --jobs 3: {} vs {} bytes, identical = {}", a.len(), b.len(), a == b),
    )
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn main() {
    let mut results: Vec<(&str, Check)> = vec![
        ("coded multicast transmission count", guarded(coded_multicast_examples)),
        ("caching distribution normalization", guarded(caching_normalization)),
        ("caching distribution optimality", guarded(caching_optimality)),
        ("reuse factor", guarded(reuse_factor)),
        ("unicast 1/n scaling", guarded(unicast_scaling)),
    ];
    match catch_unwind(desk_curves) {
        Ok(Ok(c)) => {
            results.push(("scheme ordering at low outage", scheme_ordering(&c)));
            results.push(("cache size linearity", cache_linearity(&c)));
            results.push(("library size inverse law", library_inverse(&c)));
        }
        Ok(Err(e)) => {
            for name in ["scheme ordering at low outage", "cache size linearity", "library size inverse law"] {
                results.push((name, Err(e.clone())));
            }
        }
        Err(_) => {
            for name in ["scheme ordering at low outage", "cache size linearity", "library size inverse law"] {
                results.push((name, Err("simulation panicked".into())));
            }
        }
    }
    results.push(("channel model suite", guarded(channel_suite)));
    results.push(("worker-count determinism", guarded(cli_determinism)));

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
