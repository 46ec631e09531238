//! Monte Carlo estimation of covariances and cumulants of traces.
//!
//! Replicate `r` samples ensemble number `k` from a ChaCha8 stream keyed by
//! the master seed with stream id `(r << 8) | k`, so a replicate's matrices
//! do not depend on which thread computes it. Replicates are collected in
//! index order and every reduction runs sequentially over that order.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, Operand, Work, C64, ZERO};
use crate::state::DetFamily;
use crate::words::{DetWord, Monomial, WignerId};

pub const DEFAULT_BATCHES: usize = 40;
pub const MAX_DIM: usize = 4096;
pub const MAX_ENSEMBLES: usize = 256;
/// Deterministic factors with at most this many nonzeros per row (on
/// average) are multiplied in sparse form.
pub const SPARSE_ROW_FILL: usize = 8;

/// `R` samples of `Tr p(X, A)` for each monomial, replicates in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSamples {
    pub monomials: Vec<String>,
    pub dim: usize,
    pub replicates: usize,
    pub seed: u64,
    /// `values[monomial][replicate]`
    pub values: Vec<Vec<C64>>,
}

impl TraceSamples {
    pub fn series(&self, i: usize) -> &[C64] {
        &self.values[i]
    }

    pub fn mean(&self, i: usize) -> C64 {
        shifted_mean(&self.values[i])
    }
}

/// `ChaCha8` generator for ensemble `k` in replicate `r`.
pub fn replicate_rng(seed: u64, replicate: usize, ensemble: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replicate as u64) << 8) | ensemble as u64);
    rng
}

struct Prepared {
    /// `None` for degree 0: the trace is the constant below.
    slots: Option<Vec<(usize, usize)>>,
    constant: C64,
    square: bool,
}

/// Samples `R` replicates; within a replicate every Wigner id is drawn
/// once and shared by all monomials.
pub fn run_traces(
    monomials: &[Monomial],
    n: usize,
    replicates: usize,
    ensembles: &[Ensemble],
    family: &DetFamily,
    seed: u64,
) -> Result<TraceSamples> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::CapExceeded {
            what: "matrix dimension",
            value: n,
            limit: MAX_DIM,
        });
    }
    if ensembles.len() > MAX_ENSEMBLES {
        return Err(Error::CapExceeded {
            what: "ensembles",
            value: ensembles.len(),
            limit: MAX_ENSEMBLES,
        });
    }
    // replicate indices must fit above the 8 ensemble bits of the stream id
    if replicates as u64 >= 1u64 << 56 {
        return Err(Error::CapExceeded {
            what: "replicates",
            value: replicates,
            limit: usize::try_from(1u64 << 56).unwrap_or(usize::MAX),
        });
    }
    if family.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: family.dim(),
        });
    }
    let index_of: HashMap<WignerId, usize> =
        ensembles.iter().enumerate().map(|(k, e)| (e.id, k)).collect();
    if index_of.len() != ensembles.len() {
        return Err(Error::InvalidArgument("duplicate ensemble id".into()));
    }

    // distinct deterministic factors, shared between monomials
    let mut words: Vec<DetWord> = Vec::new();
    let mut word_index: HashMap<DetWord, usize> = HashMap::new();
    let mut prepared = Vec::with_capacity(monomials.len());
    for p in monomials {
        if p.degree() == 0 {
            let constant = family.eval_word(&p.det_words()[0])?.trace();
            prepared.push(Prepared {
                slots: None,
                constant,
                square: false,
            });
            continue;
        }
        let mut slots = Vec::with_capacity(p.degree());
        for (id, w) in p.labels().iter().zip(p.det_words()) {
            let e = *index_of
                .get(id)
                .ok_or_else(|| Error::UnknownWigner(id.to_string()))?;
            family.check_word(w)?;
            let wi = *word_index.entry(w.clone()).or_insert_with(|| {
                words.push(w.clone());
                words.len() - 1
            });
            slots.push((e, wi));
        }
        let m = slots.len();
        let square = m % 2 == 0 && m >= 4 && slots[..m / 2] == slots[m / 2..];
        prepared.push(Prepared {
            slots: Some(slots),
            constant: ZERO,
            square,
        });
    }
    let operands: Vec<Operand> = words
        .iter()
        .map(|w| family.eval_word(w).map(|m| Operand::from_mat(&m, SPARSE_ROW_FILL)))
        .collect::<Result<_>>()?;
    let used: Vec<bool> = (0..ensembles.len())
        .map(|k| prepared.iter().any(|p| p.slots.iter().flatten().any(|s| s.0 == k)))
        .collect();

    let one_replicate = |r: usize| -> Vec<C64> {
        let xs: Vec<Option<Work>> = ensembles
            .iter()
            .enumerate()
            .map(|(k, e)| used[k].then(|| e.sample_work(n, &mut replicate_rng(seed, r, k))))
            .collect();
        let mut factors: HashMap<(usize, usize), Work> = HashMap::new();
        prepared
            .iter()
            .map(|p| match &p.slots {
                None => p.constant,
                Some(slots) => trace_of(slots, p.square, &xs, &operands, &mut factors),
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<C64>> = {
        use rayon::prelude::*;
        (0..replicates).into_par_iter().map(one_replicate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<C64>> = (0..replicates).map(one_replicate).collect();

    let values = (0..monomials.len())
        .map(|i| rows.iter().map(|row| row[i]).collect())
        .collect();
    Ok(TraceSamples {
        monomials: monomials.iter().map(|m| m.to_string()).collect(),
        dim: n,
        replicates,
        seed,
        values,
    })
}

fn trace_of(
    slots: &[(usize, usize)],
    square: bool,
    xs: &[Option<Work>],
    operands: &[Operand],
    factors: &mut HashMap<(usize, usize), Work>,
) -> C64 {
    let x = |k: usize| xs[k].as_ref().expect("sampled");
    if let [(e, w)] = slots {
        return operands[*w].trace_right(x(*e));
    }
    let mut factor = |s: (usize, usize)| -> Work {
        factors
            .entry(s)
            .or_insert_with(|| operands[s.1].right_apply(x(s.0)))
            .clone()
    };
    let m = slots.len();
    if square {
        // Tr(C C) with C the product over the first half
        let mut c = factor(slots[0]);
        for &s in &slots[1..m / 2] {
            c = c.matmul(&factor(s));
        }
        return c.trace_of_product(&c);
    }
    let mut prod = factor(slots[0]);
    for &s in &slots[1..m - 1] {
        prod = prod.matmul(&factor(s));
    }
    prod.trace_of_product(&factor(slots[m - 1]))
}

/// Mean computed around the first sample, so constant series center to
/// exactly zero.
fn shifted_mean(xs: &[C64]) -> C64 {
    let Some(&x0) = xs.first() else {
        return ZERO;
    };
    let s: CompensatedSum = xs.iter().map(|x| x - x0).collect();
    x0 + s.value() / xs.len() as f64
}

fn centered(xs: &[C64]) -> Vec<C64> {
    let mu = shifted_mean(xs);
    xs.iter().map(|x| x - mu).collect()
}

/// Contiguous, nearly equal batches.
fn batch_ranges(len: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let b = batches.clamp(1, len.max(1));
    (0..b).map(|k| (k * len / b)..((k + 1) * len / b)).collect()
}

/// Standard error of the mean of `ys` from batch means.
fn batch_se(ys: &[C64], batches: usize) -> f64 {
    let ranges = batch_ranges(ys.len(), batches);
    let b = ranges.len();
    if b < 2 {
        return f64::NAN;
    }
    let means: Vec<C64> = ranges
        .iter()
        .map(|r| ys[r.clone()].iter().sum::<C64>() / r.len() as f64)
        .collect();
    spread_se(&means)
}

/// `sd / √b` of a list of batch estimates, complex spread in modulus.
fn spread_se(est: &[C64]) -> f64 {
    let b = est.len() as f64;
    let mu: C64 = est.iter().sum::<C64>() / b;
    let var = est.iter().map(|e| (e - mu).norm_sqr()).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// Covariance without conjugation, `(1/(R−1)) Σ (T_p − T̄_p)(T_q − T̄_q)`,
/// with a batch-means standard error.
pub fn empirical_cov(samples: &TraceSamples, p: usize, q: usize) -> Result<(C64, f64)> {
    empirical_cov_batched(samples.series(p), samples.series(q), DEFAULT_BATCHES)
}

pub fn empirical_cov_batched(a: &[C64], b: &[C64], batches: usize) -> Result<(C64, f64)> {
    let r = a.len();
    if r < 2 {
        return Err(Error::InsufficientReplicates { needed: 2, have: r });
    }
    if b.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: b.len(),
        });
    }
    let (ca, cb) = (centered(a), centered(b));
    let scale = r as f64 / (r as f64 - 1.0);
    let ys: Vec<C64> = ca.iter().zip(&cb).map(|(x, y)| x * y * scale).collect();
    let mut s = CompensatedSum::new();
    // sum in the same factor order for (p,q) and (q,p)
    for (x, y) in ca.iter().zip(&cb) {
        s.add(x * y);
    }
    let est = s.value() / (r as f64 - 1.0);
    if ys.iter().all(|y| *y == ZERO) {
        return Ok((est, 0.0));
    }
    Ok((est, batch_se(&ys, batches)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimate {
    pub order: usize,
    pub value: C64,
    pub std_error: f64,
}

/// Unbiased k-statistics of a single series (complex arithmetic, no
/// conjugation).
pub fn k_statistic(xs: &[C64], order: usize) -> Result<C64> {
    let n = xs.len();
    let needed = order.max(2);
    if n < needed {
        return Err(Error::InsufficientReplicates { needed, have: n });
    }
    let c = centered(xs);
    let nf = n as f64;
    let m = |k: i32| c.iter().map(|x| x.powi(k)).sum::<C64>() / nf;
    Ok(match order {
        1 => shifted_mean(xs),
        2 => m(2) * (nf / (nf - 1.0)),
        3 => m(3) * (nf * nf / ((nf - 1.0) * (nf - 2.0))),
        4 => {
            let (m2, m4) = (m(2), m(4));
            (m4 * (nf + 1.0) - m2 * m2 * (3.0 * (nf - 1.0))) * (nf * nf)
                / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0))
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "cumulant order {order} not supported (1..=4)"
            )))
        }
    })
}

/// Joint third k-statistic `n/((n−1)(n−2)) Σ (x−x̄)(y−ȳ)(z−z̄)`.
pub fn k_statistic_111(x: &[C64], y: &[C64], z: &[C64]) -> Result<C64> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientReplicates { needed: 3, have: n });
    }
    if y.len() != n || z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len().min(z.len()),
        });
    }
    let (cx, cy, cz) = (centered(x), centered(y), centered(z));
    let nf = n as f64;
    let s: C64 = (0..n).map(|i| cx[i] * cy[i] * cz[i]).sum();
    Ok(s * (nf / ((nf - 1.0) * (nf - 2.0))))
}

fn cumulant_batches(r: usize) -> usize {
    (r / 10).clamp(2, DEFAULT_BATCHES)
}

fn require_higher(r: usize, order: usize) -> Result<()> {
    if order >= 3 && r < 100 {
        return Err(Error::InsufficientReplicates { needed: 100, have: r });
    }
    Ok(())
}

/// k-statistics of orders `1..=max_order` with batch standard errors;
/// order 2 is the empirical variance of [`empirical_cov`].
pub fn empirical_cumulants(samples: &TraceSamples, p: usize, max_order: usize) -> Result<Vec<CumulantEstimate>> {
    series_cumulants(samples.series(p), max_order)
}

pub fn series_cumulants(xs: &[C64], max_order: usize) -> Result<Vec<CumulantEstimate>> {
    let r = xs.len();
    require_higher(r, max_order)?;
    let ranges = batch_ranges(r, cumulant_batches(r));
    let mut out = Vec::new();
    for order in 1..=max_order {
        let value = if order == 2 {
            empirical_cov_batched(xs, xs, DEFAULT_BATCHES)?.0
        } else {
            k_statistic(xs, order)?
        };
        let per_batch = ranges
            .iter()
            .map(|rg| k_statistic(&xs[rg.clone()], order))
            .collect::<Result<Vec<_>>>()?;
        out.push(CumulantEstimate {
            order,
            value,
            std_error: spread_se(&per_batch),
        });
    }
    Ok(out)
}

/// Third joint cumulant of `(Z(p), Z(q), Z(s))`.
pub fn mixed_third_cumulant(samples: &TraceSamples, p: usize, q: usize, s: usize) -> Result<CumulantEstimate> {
    let (x, y, z) = (samples.series(p), samples.series(q), samples.series(s));
    let r = x.len();
    require_higher(r, 3)?;
    let value = k_statistic_111(x, y, z)?;
    let per_batch = batch_ranges(r, cumulant_batches(r))
        .into_iter()
        .map(|rg| k_statistic_111(&x[rg.clone()], &y[rg.clone()], &z[rg]))
        .collect::<Result<Vec<_>>>()?;
    Ok(CumulantEstimate {
        order: 3,
        value,
        std_error: spread_se(&per_batch),
    })
}

/// `|κ₃|` and `|κ₄|` each within `5·SE`.
pub fn looks_gaussian(cumulants: &[CumulantEstimate]) -> bool {
    cumulants
        .iter()
        .filter(|c| c.order >= 3)
        .all(|c| c.value.norm() <= 5.0 * c.std_error)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub estimate: C64,
    pub std_error: f64,
    pub theory: C64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Informational: errors never increase along the size list.
    pub monotone: bool,
}

/// Covariance of `(p,q)` at each size, against a fixed theory value.
/// `family_at(n)` builds the deterministic matrices at size `n`.
pub fn convergence_sweep(
    p: &Monomial,
    q: &Monomial,
    sizes: &[usize],
    replicates: usize,
    ensembles: &[Ensemble],
    family_at: impl Fn(usize) -> Result<DetFamily>,
    seed: u64,
    theory: C64,
) -> Result<Sweep> {
    let mut rows = Vec::new();
    for &n in sizes {
        let family = family_at(n)?;
        let samples = run_traces(&[p.clone(), q.clone()], n, replicates, ensembles, &family, seed)?;
        let (estimate, std_error) = empirical_cov(&samples, 0, 1)?;
        rows.push(SweepRow {
            n,
            estimate,
            std_error,
            theory,
            abs_error: (estimate - theory).norm(),
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].abs_error <= w[0].abs_error);
    Ok(Sweep { rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Preset;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_series(r: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..r)
            .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
            .collect()
    }

    #[test]
    fn calibration_on_normal_data() {
        let xs = gaussian_series(20000, 3);
        let (v, se) = empirical_cov_batched(&xs, &xs, DEFAULT_BATCHES).unwrap();
        assert!((v.re - 1.0).abs() <= 4.0 * se, "{v} ± {se}");
        let ks = series_cumulants(&xs, 4).unwrap();
        assert!(looks_gaussian(&ks), "{ks:?}");
        assert_eq!(ks[1].value, v);
    }

    #[test]
    fn k_statistics_known_values() {
        // exponential-like skewed data has clearly positive k3
        let xs: Vec<C64> = (1..=200).map(|i| C64::new((i as f64).ln(), 0.0)).collect();
        assert!(k_statistic(&xs, 3).unwrap().re < 0.0);
        // k-statistics of a small exact sample
        let ys: Vec<C64> = [1.0, 2.0, 4.0, 7.0].iter().map(|&x| C64::new(x, 0.0)).collect();
        // mean 3.5; deviations −2.5, −1.5, 0.5, 3.5
        let k2 = (6.25 + 2.25 + 0.25 + 12.25) / 3.0;
        assert!((k_statistic(&ys, 2).unwrap().re - k2).abs() < 1e-12);
        let m3 = (-15.625 - 3.375 + 0.125 + 42.875) / 4.0;
        assert!((k_statistic(&ys, 3).unwrap().re - m3 * 16.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_monomial_has_zero_variance() {
        let fam = DetFamily::identity(6);
        let e = Ensemble::preset(WignerId(1), Preset::Gue);
        let mons = [Monomial::parse("a0").unwrap(), Monomial::parse("x1").unwrap()];
        let s = run_traces(&mons, 6, 50, &[e], &fam, 1).unwrap();
        assert_eq!(empirical_cov(&s, 0, 0).unwrap(), (ZERO, 0.0));
        assert_eq!(empirical_cov(&s, 0, 1).unwrap().0, ZERO);
        assert_eq!(empirical_cov(&s, 1, 0).unwrap().0, empirical_cov(&s, 0, 1).unwrap().0);
    }

    #[test]
    fn traces_match_direct_products() {
        let n = 7;
        let fam = DetFamily::unchecked(
            n,
            vec![
                crate::state::circulant(n, &[C64::new(0.5, 0.0), C64::new(1.0, 0.0)]).unwrap(),
                crate::state::random_fixed(n, 5, 2.0).unwrap(),
            ],
        );
        let ens = [
            Ensemble::preset(WignerId(1), Preset::Goe),
            Ensemble::preset(WignerId(2), Preset::Gue),
        ];
        let mons: Vec<Monomial> = ["x1 a0", "x1 a0 x2 a1", "x1 a0 x1 a0", "x1 a0 x1 a0 x1 a0 x1 a0", "x2 a1 x1 x2 a0^t"]
            .iter()
            .map(|s| Monomial::parse(s).unwrap())
            .collect();
        let s = run_traces(&mons, n, 3, &ens, &fam, 11).unwrap();
        for r in 0..3 {
            let x1 = ens[0].sample(n, &mut replicate_rng(11, r, 0));
            let x2 = ens[1].sample(n, &mut replicate_rng(11, r, 1));
            for (i, p) in mons.iter().enumerate() {
                let mut prod = crate::linalg::Mat::identity(n);
                for (id, w) in p.labels().iter().zip(p.det_words()) {
                    let x = if id.0 == 1 { &x1 } else { &x2 };
                    prod = prod.matmul_naive(x).matmul_naive(&fam.eval_word(w).unwrap());
                }
                assert!((prod.trace() - s.values[i][r]).norm() < 1e-9, "{p}");
            }
        }
    }

    #[test]
    fn reproducible() {
        let fam = DetFamily::identity(10);
        let e = Ensemble::preset(WignerId(1), Preset::Rademacher);
        let mons = [Monomial::parse("x1 x1 x1").unwrap()];
        let a = run_traces(&mons, 10, 20, &[e.clone()], &fam, 5).unwrap();
        let b = run_traces(&mons, 10, 20, &[e], &fam, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn guards() {
        let fam = DetFamily::identity(4);
        let e = Ensemble::preset(WignerId(1), Preset::Gue);
        let mons = [Monomial::parse("x2").unwrap()];
        assert!(matches!(run_traces(&mons, 4, 5, &[e.clone()], &fam, 0), Err(Error::UnknownWigner(_))));
        assert!(matches!(run_traces(&mons, 5, 5, &[e], &fam, 0), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            series_cumulants(&gaussian_series(50, 1), 4),
            Err(Error::InsufficientReplicates { .. })
        ));
    }
}
