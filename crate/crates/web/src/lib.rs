//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON string;
//! the page does the drawing.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wigfluct::annulus::{enumerate_nc2, kreweras, through_cycles};
use wigfluct::covariance::conj_covariance;
use wigfluct::ensembles::{solve_law, Ensemble, Preset, RealLaw};
use wigfluct::monte_carlo::run_traces;
use wigfluct::state::{circulant, diagonal_pattern, random_fixed};
use wigfluct::{phi2, DetFamily, LimitState, Monomial, ParamsMap, Polynomial, WignerId, WignerParams, C64};

/// Browser work stays small.
pub const MAX_DIM: usize = 300;
pub const MAX_REPLICATES: usize = 5000;
pub const MAX_POINTS: usize = 12;

#[derive(Serialize)]
struct PairingView {
    pairs: Vec<(usize, usize)>,
    kreweras: Vec<Vec<usize>>,
    through: usize,
    through_cycles: Vec<(Vec<usize>, Vec<usize>)>,
    label: String,
    kreweras_label: String,
}

pub fn pairings_json(m: usize, n: usize) -> Result<String, String> {
    if m == 0 || n == 0 || m + n > MAX_POINTS {
        return Err(format!("need 1 ≤ m, n and m + n ≤ {MAX_POINTS}"));
    }
    let list = enumerate_nc2(m, n).map_err(|e| e.to_string())?;
    let views: Vec<PairingView> = list
        .iter()
        .map(|s| {
            let k = kreweras(s);
            PairingView {
                pairs: s.pairs(),
                kreweras: k.cycles().to_vec(),
                through: s.through_count(),
                through_cycles: through_cycles(&k, m, n).into_iter().map(|c| (c.outer, c.inner)).collect(),
                label: s.to_string(),
                kreweras_label: k.to_string(),
            }
        })
        .collect();
    serde_json::to_string(&views).map_err(|e| e.to_string())
}

/// a0 = diag(1, −1, …), a1 = circulant(½, 1, 0, …, ¼), a2 = a fixed random
/// matrix.
pub fn demo_family(n: usize) -> Result<DetFamily, String> {
    if !(3..=MAX_DIM).contains(&n) {
        return Err(format!("N must be in 3..={MAX_DIM}"));
    }
    let c = |x: f64| C64::new(x, 0.0);
    let mut row = vec![C64::default(); n];
    row[0] = c(0.5);
    row[1] = c(1.0);
    row[n - 1] = c(0.25);
    let mats = vec![
        diagonal_pattern(n, &[c(1.0), c(-1.0)]).map_err(|e| e.to_string())?,
        circulant(n, &row).map_err(|e| e.to_string())?,
        random_fixed(n, 7, 2.0).map_err(|e| e.to_string())?,
    ];
    Ok(DetFamily::unchecked(n, mats))
}

fn parse_pair(p: &str, q: &str) -> Result<(Monomial, Monomial), String> {
    let parse = |s: &str| Monomial::parse(s).map_err(|e| format!("`{s}`: {e}"));
    let (p, q) = (parse(p)?, parse(q)?);
    for m in [&p, &q] {
        if m.labels().iter().any(|id| id.0 != 1) {
            return Err("the demo has a single Wigner matrix, x1".into());
        }
        if m.max_base().is_some_and(|b| b > 2) {
            return Err("the demo family has a0, a1, a2".into());
        }
    }
    Ok((p, q))
}

#[derive(Serialize)]
struct Phi2View {
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
    total_re: f64,
    total_im: f64,
}

pub fn phi2_json(p: &str, q: &str, theta: f64, eta: f64, k4: f64, n: usize) -> Result<String, String> {
    let (p, q) = parse_pair(p, q)?;
    let w = WignerParams::new(theta, eta, k4).map_err(|e| e.to_string())?;
    let state = LimitState::finite(demo_family(n)?);
    let t = phi2(&p, &q, &ParamsMap::from([(WignerId(1), w)]), &state).map_err(|e| e.to_string())?;
    let total = t.total();
    serde_json::to_string(&Phi2View {
        s1: t.s1.re,
        s2: t.s2.re,
        s3: t.s3.re,
        s4: t.s4.re,
        total_re: total.re,
        total_im: total.im,
    })
    .map_err(|e| e.to_string())
}

pub fn ensemble_named(name: &str) -> Result<Ensemble, String> {
    let id = WignerId(1);
    Ok(match name {
        "gue" => Ensemble::preset(id, Preset::Gue),
        "goe" => Ensemble::preset(id, Preset::Goe),
        "rademacher" => Ensemble::preset(id, Preset::Rademacher),
        "mixed" => Ensemble::new(id, solve_law(0.5, 1.0).map_err(|e| e.to_string())?, RealLaw::Gaussian { variance: 1.0 })
            .map_err(|e| e.to_string())?,
        other => return Err(format!("unknown ensemble `{other}`")),
    })
}

#[derive(Serialize)]
struct Histogram {
    /// Centered `Re Tr p`, one per replicate.
    samples: Vec<f64>,
    /// Limiting variance of `Re Tr p`.
    theory_variance: f64,
    sample_variance: f64,
}

pub fn histogram_json(p: &str, ensemble: &str, n: usize, replicates: usize, seed: u64) -> Result<String, String> {
    if !(2..=MAX_REPLICATES).contains(&replicates) {
        return Err(format!("replicates must be in 2..={MAX_REPLICATES}"));
    }
    let (p, _) = parse_pair(p, p)?;
    let ens = ensemble_named(ensemble)?;
    let family = demo_family(n)?;
    let params = ParamsMap::from([(ens.id, ens.params().map_err(|e| e.to_string())?)]);
    let state = LimitState::finite(family.clone());
    // Var(Re Z) = (E|Z|² + Re E[Z²]) / 2
    let poly = Polynomial::monomial(p.clone());
    let abs2 = conj_covariance(&poly, &poly, &params, &state).map_err(|e| e.to_string())?;
    let sq = phi2(&p, &p, &params, &state).map_err(|e| e.to_string())?.total();
    let theory_variance = (abs2.re + sq.re) / 2.0;
    let traces = run_traces(&[p], n, replicates, &[ens], &family, seed).map_err(|e| e.to_string())?;
    let mean = traces.mean(0).re;
    let samples: Vec<f64> = traces.series(0).iter().map(|z| z.re - mean).collect();
    let sample_variance = samples.iter().map(|x| x * x).sum::<f64>() / (replicates as f64 - 1.0);
    serde_json::to_string(&Histogram {
        samples,
        theory_variance,
        sample_variance,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn pairings(m: usize, n: usize) -> Result<String, JsValue> {
    pairings_json(m, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn covariance(p: &str, q: &str, theta: f64, eta: f64, k4: f64, n: usize) -> Result<String, JsValue> {
    phi2_json(p, q, theta, eta, k4, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn histogram(p: &str, ensemble: &str, n: usize, replicates: usize, seed: u64) -> Result<String, JsValue> {
    histogram_json(p, ensemble, n, replicates, seed).map_err(|e| JsValue::from_str(&e))
}
