//! Deterministic matrix families and the functionals φ, φ∘ (Hadamard) and
//! φ_t (transpose) evaluated on words.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annulus::{kreweras, through_cycles, AnnularPairing, CyclePermutation};
use crate::error::{Error, Result};
use crate::linalg::{Mat, C64, ONE};
use crate::words::{DetLetter, DetWord};

const NORM_ITERATIONS: usize = 60;

/// Concrete `N×N` deterministic matrices. Products of letters are cached.
#[derive(Debug)]
pub struct DetFamily {
    dim: usize,
    matrices: Vec<Mat>,
    norm_bound: f64,
    words: RwLock<HashMap<DetWord, Arc<Mat>>>,
}

impl Clone for DetFamily {
    fn clone(&self) -> Self {
        DetFamily {
            dim: self.dim,
            matrices: self.matrices.clone(),
            norm_bound: self.norm_bound,
            words: RwLock::new(HashMap::new()),
        }
    }
}

impl DetFamily {
    /// Checks dimensions and `‖A_j‖ ≤ norm_bound` with a power-iteration
    /// estimate.
    pub fn new(dim: usize, matrices: Vec<Mat>, norm_bound: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for m in &matrices {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            let norm = m.op_norm_estimate(NORM_ITERATIONS);
            if norm > norm_bound * (1.0 + 1e-9) {
                return Err(Error::NormBound {
                    norm,
                    bound: norm_bound,
                });
            }
        }
        Ok(DetFamily {
            dim,
            matrices,
            norm_bound,
            words: RwLock::new(HashMap::new()),
        })
    }

    /// No norm check.
    pub fn unchecked(dim: usize, matrices: Vec<Mat>) -> Self {
        DetFamily {
            dim,
            matrices,
            norm_bound: f64::INFINITY,
            words: RwLock::new(HashMap::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.matrices
    }

    pub fn check_word(&self, w: &DetWord) -> Result<()> {
        for l in w.letters() {
            if l.base >= self.matrices.len() {
                return Err(Error::LetterOutOfRange {
                    index: l.base,
                    len: self.matrices.len(),
                });
            }
        }
        Ok(())
    }

    fn letter_matrix(&self, l: &DetLetter) -> Mat {
        let a = &self.matrices[l.base];
        match (l.star, l.transpose) {
            (false, false) => a.clone(),
            (false, true) => a.transpose(),
            (true, false) => a.adjoint(),
            (true, true) => a.conj(),
        }
    }

    /// Matrix of the word, left-to-right product with flags applied.
    pub fn eval_word(&self, w: &DetWord) -> Result<Arc<Mat>> {
        self.check_word(w)?;
        if let Some(m) = self.words.read().expect("cache lock").get(w) {
            return Ok(m.clone());
        }
        let m = match w.letters() {
            [] => Mat::identity(self.dim),
            [l] => self.letter_matrix(l),
            [rest @ .., last] => {
                let prefix = self.eval_word(&DetWord(rest.to_vec()))?;
                prefix.matmul(&self.letter_matrix(last))
            }
        };
        let m = Arc::new(m);
        // idempotent insert: racing threads compute the same value
        self.words
            .write()
            .expect("cache lock")
            .entry(w.clone())
            .or_insert_with(|| m.clone());
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        DetFamily::unchecked(n, vec![Mat::identity(n)])
    }
}

/// `diag(v₀, v₁, …)` with the pattern repeated to length `n`.
pub fn diagonal_pattern(n: usize, pattern: &[C64]) -> Result<Mat> {
    if pattern.is_empty() {
        return Err(Error::InvalidArgument("empty diagonal pattern".into()));
    }
    let values: Vec<C64> = (0..n).map(|i| pattern[i % pattern.len()]).collect();
    Ok(Mat::diagonal(&values))
}

/// `C_{ij} = c_{(j−i) mod n}`; the first row is zero-padded to length `n`.
pub fn circulant(n: usize, first_row: &[C64]) -> Result<Mat> {
    if first_row.is_empty() {
        return Err(Error::InvalidArgument("empty circulant row".into()));
    }
    if first_row.len() > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: first_row.len(),
        });
    }
    Ok(Mat::from_fn(n, |i, j| {
        let k = (j + n - i) % n;
        first_row.get(k).copied().unwrap_or_default()
    }))
}

/// Diagonal projection onto the first `round(fraction·n)` coordinates.
pub fn projection(n: usize, fraction: f64) -> Result<Mat> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "projection fraction {fraction} outside [0,1]"
        )));
    }
    let rank = (fraction * n as f64).round() as usize;
    Ok(Mat::from_fn(n, |i, j| if i == j && i < rank { ONE } else { C64::default() }))
}

/// Seeded complex matrix rescaled to operator norm about `norm_cap / 2`.
pub fn random_fixed(n: usize, seed: u64, norm_cap: f64) -> Result<Mat> {
    if !(norm_cap > 0.0) {
        return Err(Error::InvalidArgument("norm cap must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Mat::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = g.op_norm_estimate(NORM_ITERATIONS).max(f64::MIN_POSITIVE);
    Ok(g.scale(C64::new(0.5 * norm_cap / norm, 0.0)))
}

/// A scalar in JSON: either a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl From<ScalarSpec> for C64 {
    fn from(s: ScalarSpec) -> C64 {
        match s {
            ScalarSpec::Real(x) => C64::new(x, 0.0),
            ScalarSpec::Complex([re, im]) => C64::new(re, im),
        }
    }
}

fn scalars(v: &[ScalarSpec]) -> Vec<C64> {
    v.iter().map(|&s| s.into()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSpec {
    Identity {},
    DiagonalPattern { values: Vec<ScalarSpec> },
    Circulant { first_row: Vec<ScalarSpec> },
    Projection { fraction: f64 },
    Random { seed: u64, norm: f64 },
    /// Row-major; only valid when the requested dimension matches.
    Dense { rows: Vec<Vec<ScalarSpec>> },
}

impl MatrixSpec {
    pub fn build(&self, n: usize) -> Result<Mat> {
        match self {
            MatrixSpec::Identity {} => Ok(Mat::identity(n)),
            MatrixSpec::DiagonalPattern { values } => diagonal_pattern(n, &scalars(values)),
            MatrixSpec::Circulant { first_row } => circulant(n, &scalars(first_row)),
            MatrixSpec::Projection { fraction } => projection(n, *fraction),
            MatrixSpec::Random { seed, norm } => random_fixed(n, *seed, *norm),
            MatrixSpec::Dense { rows } => {
                if rows.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: rows.len(),
                    });
                }
                Mat::from_rows(rows.iter().map(|r| scalars(r)).collect())
            }
        }
    }
}

/// JSON family document. `dim` is the default size; Monte Carlo sweeps
/// rebuild the same recipe at other sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default = "default_norm_bound")]
    pub norm_bound: f64,
    pub matrices: Vec<MatrixSpec>,
}

fn default_norm_bound() -> f64 {
    10.0
}

impl FamilySpec {
    pub fn build(&self, n: usize) -> Result<DetFamily> {
        let mats = self
            .matrices
            .iter()
            .map(|s| s.build(n))
            .collect::<Result<Vec<_>>>()?;
        DetFamily::new(n, mats, self.norm_bound)
    }

    pub fn build_default(&self) -> Result<DetFamily> {
        let n = self
            .dim
            .ok_or_else(|| Error::InvalidArgument("family has no `dim`".into()))?;
        self.build(n)
    }
}

/// User-supplied values of the functionals on words.
#[derive(Clone, Debug, Default)]
pub struct SymbolicTables {
    pub phi: HashMap<DetWord, C64>,
    pub hadamard: HashMap<(DetWord, DetWord), C64>,
}

/// Backend for the limiting functionals.
#[derive(Clone, Debug)]
pub enum LimitState {
    FiniteN(Arc<DetFamily>),
    Symbolic(Arc<SymbolicTables>),
}

impl LimitState {
    pub fn finite(family: DetFamily) -> Self {
        LimitState::FiniteN(Arc::new(family))
    }

    pub fn check_word(&self, w: &DetWord) -> Result<()> {
        match self {
            LimitState::FiniteN(f) => f.check_word(w),
            LimitState::Symbolic(_) => Ok(()),
        }
    }

    /// `φ(w) = (1/N) Tr w(A)`.
    pub fn phi(&self, w: &DetWord) -> Result<C64> {
        if w.is_identity() {
            return Ok(ONE);
        }
        match self {
            LimitState::FiniteN(f) => {
                let m = f.eval_word(w)?;
                Ok(m.trace() / f.dim() as f64)
            }
            LimitState::Symbolic(t) => t
                .phi
                .get(w)
                .copied()
                .ok_or_else(|| Error::MissingSymbol(format!("phi({w})"))),
        }
    }

    /// `φ∘(p,q) = (1/N) Σ_i p(A)_{ii} q(A)_{ii}`.
    pub fn phi_hadamard(&self, p: &DetWord, q: &DetWord) -> Result<C64> {
        match self {
            LimitState::FiniteN(f) => {
                let n = f.dim();
                if p.is_identity() && q.is_identity() {
                    return Ok(ONE);
                }
                let (a, b) = (f.eval_word(p)?, f.eval_word(q)?);
                let s: C64 = (0..n).map(|i| a[(i, i)] * b[(i, i)]).sum();
                Ok(s / n as f64)
            }
            LimitState::Symbolic(t) => {
                if p.is_identity() && q.is_identity() {
                    return Ok(ONE);
                }
                t.hadamard
                    .get(&(p.clone(), q.clone()))
                    .or_else(|| t.hadamard.get(&(q.clone(), p.clone())))
                    .copied()
                    .ok_or_else(|| Error::MissingSymbol(format!("phi_hadamard({p}, {q})")))
            }
        }
    }

    /// `φ_t(p,q) = φ(p qᵗ)`.
    pub fn phi_transpose(&self, p: &DetWord, q: &DetWord) -> Result<C64> {
        self.phi(&p.concat(&q.transpose()))
    }
}

fn word_of(positions: &[usize], letters: &[DetWord]) -> DetWord {
    positions.iter().map(|&i| letters[i - 1].clone()).collect()
}

/// `φ_{K(σ)}(a₁,…,a_{m+n}) = ∏_{cycles c of K(σ)} φ(∏_{i∈c} a_i)`.
pub fn eval_phi_k(sigma: &AnnularPairing, letters: &[DetWord], state: &LimitState) -> Result<C64> {
    eval_phi_perm(&kreweras(sigma), letters, state)
}

/// Product of φ over the cycles of an arbitrary permutation.
pub fn eval_phi_perm(k: &CyclePermutation, letters: &[DetWord], state: &LimitState) -> Result<C64> {
    if letters.len() != k.size() {
        return Err(Error::DimensionMismatch {
            expected: k.size(),
            found: letters.len(),
        });
    }
    let mut acc = ONE;
    for c in k.cycles() {
        acc *= state.phi(&word_of(c, letters))?;
    }
    Ok(acc)
}

/// As [`eval_phi_k`], with each through cycle's factor replaced by
/// `φ∘(outer run, inner run)`. Defined for one or two through strings.
pub fn eval_phi_tilde_k(
    sigma: &AnnularPairing,
    letters: &[DetWord],
    state: &LimitState,
) -> Result<C64> {
    let (m, n) = (sigma.m(), sigma.n());
    let l = sigma.through_count();
    if !(1..=2).contains(&l) {
        return Err(Error::InvalidArgument(format!(
            "tilde functional needs 1 or 2 through strings, got {l}"
        )));
    }
    if letters.len() != m + n {
        return Err(Error::DimensionMismatch {
            expected: m + n,
            found: letters.len(),
        });
    }
    let k = kreweras(sigma);
    let mut acc = ONE;
    for c in k.cycles() {
        let through = c.iter().any(|&i| i <= m) && c.iter().any(|&i| i > m);
        if !through {
            acc *= state.phi(&word_of(c, letters))?;
        }
    }
    for tc in through_cycles(&k, m, n) {
        acc *= state.phi_hadamard(&word_of(&tc.outer, letters), &word_of(&tc.inner, letters))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn basic_functionals() {
        let n = 4;
        let fam = DetFamily::new(
            n,
            vec![
                diagonal_pattern(n, &[c(1.0), c(0.0)]).unwrap(),
                Mat::diagonal(&[c(1.0), c(1.0), c(0.0), c(0.0)]),
                circulant(n, &[c(0.0), c(1.0)]).unwrap(),
            ],
            2.0,
        )
        .unwrap();
        let st = LimitState::finite(fam);
        assert_eq!(st.phi(&DetWord::identity()).unwrap(), ONE);
        assert!(close(st.phi(&DetWord::letter(0)).unwrap(), c(0.5)));
        assert!(close(st.phi_hadamard(&DetWord::letter(0), &DetWord::letter(1)).unwrap(), c(0.25)));
        let s = DetWord::letter(2);
        assert!(close(st.phi(&s).unwrap(), c(0.0)));
        let s4: DetWord = (0..4).map(|_| s.clone()).collect();
        assert!(close(st.phi(&s4).unwrap(), c(1.0)));
        // S Sᵗ = I for a permutation matrix
        assert!(close(st.phi(&s.concat(&s.transpose())).unwrap(), c(1.0)));
        assert!(close(st.phi_transpose(&s, &s).unwrap(), c(1.0)));
        // φ(S S) at N = 4 is 0
        assert!(close(st.phi(&s.concat(&s)).unwrap(), c(0.0)));
    }

    #[test]
    fn norm_bound_enforced() {
        let big = Mat::diagonal(&[c(5.0), c(1.0)]);
        assert!(matches!(DetFamily::new(2, vec![big], 2.0), Err(Error::NormBound { .. })));
    }

    #[test]
    fn missing_letter() {
        let st = LimitState::finite(DetFamily::identity(3));
        assert!(matches!(
            st.phi(&DetWord::letter(4)),
            Err(Error::LetterOutOfRange { .. })
        ));
    }

    #[test]
    fn family_json() {
        let doc = r#"{"dim": 4, "matrices": [
            {"kind": "diagonal_pattern", "values": [1, -1]},
            {"kind": "circulant", "first_row": [[0,0],[1,0]]},
            {"kind": "dense", "rows": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,[0,1]]]}
        ]}"#;
        let spec: FamilySpec = serde_json::from_str(doc).unwrap();
        let fam = spec.build_default().unwrap();
        assert_eq!(fam.len(), 3);
        assert_eq!(fam.matrices()[2][(3, 3)], C64::new(0.0, 1.0));
        let bad = r#"{"dim": 4, "matrices": [{"kind": "identity", "extra": 1}]}"#;
        assert!(serde_json::from_str::<FamilySpec>(bad).is_err());
    }
}
