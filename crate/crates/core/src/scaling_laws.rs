//! Closed-form throughput-outage lower bound of one-hop D2D caching and the
//! scheme-by-scheme scaling comparison.
//!
//! Only dominant terms are evaluated; the vanishing corrections are dropped.

use serde::{Deserialize, Serialize};

use crate::bs_schemes::harmonic_number;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    R1,
    R2,
    R3,
    R4,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::R1 => "r1",
            Regime::R2 => "r2",
            Regime::R3 => "r3",
            Regime::R4 => "r4",
        }
    }
}

/// Constants that have no closed form here. Unset constants make the
/// regimes that need them unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundConstants {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub d: Option<f64>,
    pub a_gamma: Option<f64>,
    /// Set when the values are placeholders rather than derived constants.
    #[serde(default)]
    pub illustrative: bool,
}

impl BoundConstants {
    /// Every constant set to 1 and flagged as illustrative.
    pub fn illustrative() -> Self {
        Self {
            a: Some(1.0),
            b: Some(1.0),
            d: Some(1.0),
            a_gamma: Some(1.0),
            illustrative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub gamma_r: f64,
    pub cache_size: f64,
    pub m: usize,
    /// Link rate `C_r`, bit/s.
    pub c_r: f64,
    pub reuse_k: usize,
    /// `rho_1` values for the first regime, each at least `gamma_r`.
    pub rho1: Vec<f64>,
    /// Cluster sizes for the second regime.
    pub g_c: Vec<f64>,
    /// `None` uses the smallest admissible value.
    pub rho2: Option<f64>,
    pub constants: BoundConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffBound {
    pub regime: Regime,
    pub p: f64,
    pub t: f64,
    pub illustrative: bool,
}

pub fn alpha(gamma_r: f64) -> f64 {
    (1.0 - gamma_r) / (2.0 - gamma_r)
}

pub fn rho2_min(gamma_r: f64, cache_size: f64) -> f64 {
    ((1.0 - gamma_r) / (gamma_r.powf(gamma_r) * cache_size.powf(1.0 - gamma_r))).powf(1.0 / (2.0 - gamma_r))
}

fn check(params: &BoundParams) -> Result<()> {
    if !(params.gamma_r > 0.0 && params.gamma_r < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma_r must lie in (0, 1), got {}", params.gamma_r)));
    }
    if params.m == 0 || !(params.cache_size > 0.0) || params.reuse_k == 0 || !(params.c_r > 0.0) {
        return Err(Error::InvalidParameter("m, M, K and C_r must be positive".into()));
    }
    Ok(())
}

/// First regime over the `rho_1` grid.
pub fn regime1(params: &BoundParams) -> Result<Vec<TradeoffBound>> {
    check(params)?;
    let g = params.gamma_r;
    let scale = params.c_r / params.reuse_k as f64;
    params
        .rho1
        .iter()
        .map(|&rho| {
            if rho < g {
                return Err(Error::InvalidParameter(format!("rho_1 = {rho} is below gamma_r = {g}")));
            }
            Ok(TradeoffBound {
                regime: Regime::R1,
                p: (1.0 - g) * (g - rho).exp(),
                t: scale * params.cache_size / (rho * params.m as f64),
                illustrative: false,
            })
        })
        .collect()
}

/// Second regime over the cluster-size grid; needs constant `A`.
pub fn regime2(params: &BoundParams) -> Result<Vec<TradeoffBound>> {
    check(params)?;
    let a = params.constants.a.ok_or(Error::MissingConstant("A"))?;
    let g = params.gamma_r;
    let (mm, mf) = (params.cache_size, params.m as f64);
    let limit = g * mf / mm;
    let scale = params.c_r * a / params.reuse_k as f64;
    params
        .g_c
        .iter()
        .map(|&gc| {
            if !(gc > 0.0) || gc > limit {
                return Err(Error::InvalidParameter(format!(
                    "g_c = {gc} outside (0, gamma_r m / M = {limit}]"
                )));
            }
            let p = 1.0 - g.powf(g) * (mm * gc / mf).powf(1.0 - g);
            Ok(TradeoffBound {
                regime: Regime::R2,
                p,
                t: scale * mm / (mf * (1.0 - p).powf(1.0 / (1.0 - g))),
                illustrative: params.constants.illustrative,
            })
        })
        .collect()
}

/// Third and fourth regimes as their outage endpoints; need `B`, `D` and
/// `a(gamma_r)`.
pub fn regimes34(params: &BoundParams) -> Result<Vec<TradeoffBound>> {
    check(params)?;
    let c = &params.constants;
    let a_g = c.a_gamma.ok_or(Error::MissingConstant("a(gamma_r)"))?;
    let b = c.b.ok_or(Error::MissingConstant("B"))?;
    let d = c.d.ok_or(Error::MissingConstant("D"))?;
    let g = params.gamma_r;
    let decay = (params.m as f64).powf(-alpha(g));
    let rho2 = params.rho2.unwrap_or_else(|| rho2_min(g, params.cache_size));
    let scale = params.c_r / params.reuse_k as f64;
    let lo3 = 1.0 - g.powf(g) * params.cache_size.powf(1.0 - g) * rho2.powf(1.0 - g) * decay;
    let hi3 = 1.0 - a_g * decay;
    let point = |regime, p: f64, t| TradeoffBound {
        regime,
        p: p.clamp(0.0, 1.0),
        t,
        illustrative: c.illustrative,
    };
    Ok(vec![
        point(Regime::R3, lo3, scale * b * decay),
        point(Regime::R3, hi3, scale * b * decay),
        point(Regime::R4, hi3, scale * d * decay),
        point(Regime::R4, 1.0, scale * d * decay),
    ])
}

/// All regimes whose constants are available, sorted by outage.
pub fn d2d_tradeoff_bound(params: &BoundParams) -> Result<Vec<TradeoffBound>> {
    let mut out = regime1(params)?;
    match regime2(params) {
        Ok(v) => out.extend(v),
        Err(Error::MissingConstant(_)) => {}
        Err(e) => return Err(e),
    }
    match regimes34(params) {
        Ok(v) => out.extend(v),
        Err(Error::MissingConstant(_)) => {}
        Err(e) => return Err(e),
    }
    out.sort_by(|a, b| a.p.total_cmp(&b.p));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub scheme: String,
    pub order: String,
    /// Evaluated order expression.
    pub proxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub rows: Vec<ScalingRow>,
    /// Set when `Mn < m`: the caching gains need `Mn >> m`.
    pub storage_below_library: bool,
}

/// Dominant throughput orders of the four delivery schemes. The harmonic
/// proxy uses the whole library as broadcast set and the exact harmonic
/// sum for `log(L/tau)`.
pub fn scaling_summary(n: usize, m: usize, cache_size: f64, gamma_r: f64, length: f64, delay: f64) -> ScalingSummary {
    let (nf, mf) = (n as f64, m as f64);
    let blocks = (length / delay).ceil().max(1.0) as usize;
    let row = |scheme: &str, order: &str, proxy: f64| ScalingRow {
        scheme: scheme.into(),
        order: order.into(),
        proxy,
    };
    ScalingSummary {
        rows: vec![
            row("d2d", "Theta(M/m)", cache_size / mf),
            row("d2d_high_outage", "Theta(m^-alpha)", mf.powf(-alpha(gamma_r))),
            row("coded_multicast", "Theta(M/m)", cache_size / mf),
            row("unicast", "Theta(1/n)", 1.0 / nf),
            row("unicast_local_cache", "Theta(1/n)", 1.0 / (nf * (1.0 - cache_size / mf).max(f64::MIN_POSITIVE))),
            row("harmonic", "Theta(1/(m' log(L/tau)))", 1.0 / (mf * harmonic_number(blocks))),
        ],
        storage_below_library: cache_size * nf < mf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> BoundParams {
        BoundParams {
            gamma_r: 0.4,
            cache_size: 20.0,
            m: 300,
            c_r: 1e7,
            reuse_k: 4,
            rho1: vec![0.4, 0.6, 1.0, 2.0, 4.0],
            g_c: vec![1.0, 2.0, 4.0, 6.0],
            rho2: None,
            constants: BoundConstants::default(),
        }
    }

    #[test]
    fn regime1_example() {
        let pts = regime1(&params()).unwrap();
        assert_eq!(pts[0].p, 0.6);
        assert!((pts[0].t - 1e7 / 4.0 * 20.0 / (0.4 * 300.0)).abs() < 1e-6);
        let mut doubled = params();
        doubled.cache_size = 40.0;
        for (a, b) in regime1(&params()).unwrap().iter().zip(regime1(&doubled).unwrap()) {
            assert_eq!(a.p, b.p);
            assert!((b.t / a.t - 2.0).abs() < 1e-12);
        }
        let mut bad = params();
        bad.rho1 = vec![0.1];
        assert!(regime1(&bad).is_err());
    }

    #[test]
    fn regime2_needs_constant() {
        assert!(matches!(regime2(&params()), Err(Error::MissingConstant("A"))));
        assert!(matches!(regimes34(&params()), Err(Error::MissingConstant(_))));
        let only_r1 = d2d_tradeoff_bound(&params()).unwrap();
        assert!(only_r1.iter().all(|b| b.regime == Regime::R1));
        let mut p = params();
        p.constants = BoundConstants::illustrative();
        let all = d2d_tradeoff_bound(&p).unwrap();
        assert!(all.iter().any(|b| b.regime == Regime::R2 && b.illustrative));
        assert!(all.iter().any(|b| b.regime == Regime::R4));
        assert!(all.windows(2).all(|w| w[0].p <= w[1].p));
    }

    #[test]
    fn regime2_monotone() {
        let mut p = params();
        p.constants.a = Some(1.0);
        let mut pts = regime2(&p).unwrap();
        pts.sort_by(|a, b| a.p.total_cmp(&b.p));
        assert!(pts.windows(2).all(|w| w[1].t >= w[0].t));
        p.g_c = vec![0.4 * 300.0 / 20.0 + 1.0];
        assert!(regime2(&p).is_err());
    }

    #[test]
    fn alpha_properties() {
        let mut prev = 0.5;
        for i in 1..100 {
            let a = alpha(i as f64 / 100.0);
            assert!(a > 0.0 && a < 0.5 && a < prev);
            prev = a;
        }
    }

    #[test]
    fn summary_table() {
        let s = scaling_summary(10000, 300, 20.0, 0.4, 2.7e9, 2.7e9 / 540.0);
        let get = |k: &str| s.rows.iter().find(|r| r.scheme == k).unwrap();
        assert_eq!(get("unicast").order, "Theta(1/n)");
        assert_eq!(get("coded_multicast").order, "Theta(M/m)");
        assert_eq!(get("d2d").proxy, 20.0 / 300.0);
        assert!(!s.storage_below_library);
        assert!(scaling_summary(10, 300, 20.0, 0.4, 1.0, 1.0).storage_below_library);
    }

    proptest! {
        #[test]
        fn regime1_curve_monotone(g in 0.05f64..0.95, mut rhos in prop::collection::vec(0.0f64..10.0, 2..20)) {
            let mut p = params();
            p.gamma_r = g;
            for r in rhos.iter_mut() {
                *r += g;
            }
            p.rho1 = rhos;
            let mut pts = regime1(&p).unwrap();
            pts.sort_by(|a, b| a.p.total_cmp(&b.p));
            prop_assert!(pts.windows(2).all(|w| w[1].t >= w[0].t - 1e-9));
            p.rho1 = vec![g];
            prop_assert_eq!(regime1(&p).unwrap()[0].p, 1.0 - g);
        }
    }
}
