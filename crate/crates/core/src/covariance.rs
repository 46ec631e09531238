//! Limiting first-order moments and the second-order covariance φ⁽²⁾(p,q)
//! of centered traces.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::annulus::{
    enumerate_nc2_capped, enumerate_nc2_disc, is_non_mixing, is_non_mixing_matching,
    AnnularPairing, DEFAULT_PAIRING_CAP,
};
use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, C64, ONE, ZERO};
use crate::state::{eval_phi_k, eval_phi_perm, eval_phi_tilde_k, LimitState};
use crate::words::{DetWord, Monomial, Polynomial, WignerId};

/// `(θ, η, k₄)`: pseudo-variance `E x₁₂²`, diagonal variance `E x₁₁²`,
/// fourth cumulant `E|x₁₂|⁴ − 2 − |θ|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerParams {
    pub theta: C64,
    pub eta: f64,
    pub k4: f64,
}

impl WignerParams {
    pub fn new(theta: f64, eta: f64, k4: f64) -> Result<Self> {
        let p = WignerParams {
            theta: C64::new(theta, 0.0),
            eta,
            k4,
        };
        p.validate()?;
        Ok(p)
    }

    pub const GUE: WignerParams = WignerParams {
        theta: C64::new(0.0, 0.0),
        eta: 1.0,
        k4: 0.0,
    };

    pub const GOE: WignerParams = WignerParams {
        theta: C64::new(1.0, 0.0),
        eta: 2.0,
        k4: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let t2 = self.theta.norm_sqr();
        let tol = 1e-12;
        if !(self.eta.is_finite() && self.k4.is_finite() && self.theta.re.is_finite() && self.theta.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Wigner parameter".into()));
        }
        if t2 > 1.0 + tol {
            return Err(Error::InvalidArgument(format!("|θ| = {} > 1", t2.sqrt())));
        }
        if self.eta < 0.0 {
            return Err(Error::InvalidArgument(format!("η = {} < 0", self.eta)));
        }
        if self.k4 < -1.0 - t2 - tol {
            return Err(Error::InvalidArgument(format!(
                "k4 = {} below the bound −1 − |θ|² = {}",
                self.k4,
                -1.0 - t2
            )));
        }
        Ok(())
    }
}

pub type ParamsMap = BTreeMap<WignerId, WignerParams>;

/// The four sums making up φ⁽²⁾(p,q).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Phi2Terms {
    /// Plain Kreweras term.
    pub s1: C64,
    /// Transpose term, weighted by θ over the through strings.
    pub s2: C64,
    /// Fourth-cumulant term over pairings with two through strings.
    pub s3: C64,
    /// `(η − 1 − θ)` term over pairings with one through string.
    pub s4: C64,
}

impl Phi2Terms {
    pub fn total(&self) -> C64 {
        self.s1 + self.s2 + self.s3 + self.s4
    }
}

fn lookup(params: &ParamsMap, id: WignerId) -> Result<&WignerParams> {
    params
        .get(&id)
        .ok_or_else(|| Error::UnknownWigner(id.to_string()))
}

fn check_monomial(p: &Monomial, params: &ParamsMap, state: &LimitState) -> Result<()> {
    for &id in p.labels() {
        lookup(params, id)?.validate()?;
    }
    for w in p.det_words() {
        state.check_word(w)?;
    }
    Ok(())
}

type PairingCache = Mutex<HashMap<(usize, usize), Arc<Vec<AnnularPairing>>>>;

/// Enumerations of NC₂(m,n) are shared across calls.
pub fn nc2_cached(m: usize, n: usize) -> Result<Arc<Vec<AnnularPairing>>> {
    static CACHE: OnceLock<PairingCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("pairing cache").get(&(m, n)) {
        return Ok(v.clone());
    }
    let v = Arc::new(enumerate_nc2_capped(m, n, DEFAULT_PAIRING_CAP)?);
    cache.lock().expect("pairing cache").insert((m, n), v.clone());
    Ok(v)
}

/// Limit of `E[(1/N) Tr p]`: sum over non-mixing disc pairings of the
/// product of φ over the cycles of `σγ_m`.
pub fn first_order(p: &Monomial, params: &ParamsMap, state: &LimitState) -> Result<C64> {
    check_monomial(p, params, state)?;
    let m = p.degree();
    if m == 0 {
        return state.phi(&p.det_words()[0]);
    }
    let mut acc = CompensatedSum::new();
    for sigma in enumerate_nc2_disc(m)? {
        if !is_non_mixing_matching(sigma.matching(), p.labels()) {
            continue;
        }
        acc.add(eval_phi_perm(&sigma.kreweras(), p.det_words(), state)?);
    }
    Ok(acc.value())
}

fn concat_letters(p: &Monomial, q: &Monomial) -> (Vec<WignerId>, Vec<DetWord>) {
    let labels = p.labels().iter().chain(q.labels()).copied().collect();
    let letters = p.det_words().iter().chain(q.det_words()).cloned().collect();
    (labels, letters)
}

/// φ⁽²⁾(p,q) split into its four sums.
pub fn phi2(p: &Monomial, q: &Monomial, params: &ParamsMap, state: &LimitState) -> Result<Phi2Terms> {
    check_monomial(p, params, state)?;
    check_monomial(q, params, state)?;
    let (m, n) = (p.degree(), q.degree());
    if m == 0 || n == 0 || (m + n) % 2 == 1 {
        return Ok(Phi2Terms::default());
    }
    let pairings = nc2_cached(m, n)?;
    let (labels, letters) = concat_letters(p, q);
    let label_at = |i: usize| labels[i - 1];

    let mut s1 = CompensatedSum::new();
    for sigma in pairings.iter() {
        if is_non_mixing(sigma, &labels, false) {
            s1.add(eval_phi_k(sigma, &letters, state)?);
        }
    }

    let mut s2 = CompensatedSum::new();
    if p.labels().iter().chain(q.labels()).any(|&id| params[&id].theta != ZERO) {
        let sq = q.s_transform()?;
        let (labels_s, letters_s) = concat_letters(p, &sq);
        for sigma in pairings.iter() {
            if !is_non_mixing(sigma, &labels_s, false) {
                continue;
            }
            let mut theta = ONE;
            for i in 1..=m {
                if sigma.partner(i) > m {
                    theta *= params[&labels_s[i - 1]].theta;
                }
            }
            if theta != ZERO {
                s2.add(theta * eval_phi_k(sigma, &letters_s, state)?);
            }
        }
    }

    let mut s3 = CompensatedSum::new();
    let mut s4 = CompensatedSum::new();
    for sigma in pairings.iter() {
        match sigma.through_count() {
            2 if is_non_mixing(sigma, &labels, true) => {
                let first = (1..=m).find(|&i| sigma.partner(i) > m).unwrap();
                let k4 = params[&label_at(first)].k4;
                if k4 != 0.0 {
                    s3.add(k4 * eval_phi_tilde_k(sigma, &letters, state)?);
                }
            }
            1 if is_non_mixing(sigma, &labels, false) => {
                let first = (1..=m).find(|&i| sigma.partner(i) > m).unwrap();
                let w = params[&label_at(first)];
                let coef = C64::new(w.eta - 1.0, 0.0) - w.theta;
                if coef != ZERO {
                    s4.add(coef * eval_phi_tilde_k(sigma, &letters, state)?);
                }
            }
            _ => {}
        }
    }

    Ok(Phi2Terms {
        s1: s1.value(),
        s2: s2.value(),
        s3: s3.value(),
        s4: s4.value(),
    })
}

/// φ⁽²⁾ for ensembles with zero pseudo-variance, as a single pass over
/// NC₂(m,n): Kreweras term, `k₄` term on two through strings and `(η − 1)`
/// term on one through string. Rejects any nonzero θ.
pub fn phi2_vanishing_pseudovariance(
    p: &Monomial,
    q: &Monomial,
    params: &ParamsMap,
    state: &LimitState,
) -> Result<C64> {
    check_monomial(p, params, state)?;
    check_monomial(q, params, state)?;
    for id in p.labels().iter().chain(q.labels()) {
        if params[id].theta != ZERO {
            return Err(Error::InvalidArgument(format!("{id} has nonzero pseudo-variance")));
        }
    }
    let (m, n) = (p.degree(), q.degree());
    if m == 0 || n == 0 || (m + n) % 2 == 1 {
        return Ok(ZERO);
    }
    let (labels, letters) = concat_letters(p, q);
    let mut plain = CompensatedSum::new();
    let mut quartic = CompensatedSum::new();
    let mut diagonal = CompensatedSum::new();
    for sigma in nc2_cached(m, n)?.iter() {
        if !is_non_mixing_matching(sigma.matching(), &labels) {
            continue;
        }
        plain.add(eval_phi_k(sigma, &letters, state)?);
        let through: Vec<usize> = (1..=m).filter(|&i| sigma.partner(i) > m).collect();
        let w = params[&labels[through[0] - 1]];
        if through.len() == 1 && w.eta != 1.0 {
            diagonal.add((w.eta - 1.0) * eval_phi_tilde_k(sigma, &letters, state)?);
        }
        if through.len() == 2 && w.k4 != 0.0 {
            let same = through
                .iter()
                .flat_map(|&i| [i, sigma.partner(i)])
                .all(|j| labels[j - 1] == labels[through[0] - 1]);
            if same {
                quartic.add(w.k4 * eval_phi_tilde_k(sigma, &letters, state)?);
            }
        }
    }
    Ok(plain.value() + ZERO + quartic.value() + diagonal.value())
}

/// Bilinear extension `Σ cᵢ dⱼ φ⁽²⁾(pᵢ, qⱼ)`.
pub fn phi2_poly(p: &Polynomial, q: &Polynomial, params: &ParamsMap, state: &LimitState) -> Result<C64> {
    let mut acc = CompensatedSum::new();
    for (c, pm) in p.terms() {
        for (d, qm) in q.terms() {
            acc.add(c * d * phi2(pm, qm, params, state)?.total());
        }
    }
    Ok(acc.value())
}

/// `E[z(P) z̄(Q)] = φ⁽²⁾(P, Q*)`.
pub fn conj_covariance(p: &Polynomial, q: &Polynomial, params: &ParamsMap, state: &LimitState) -> Result<C64> {
    phi2_poly(p, &q.adjoint(), params, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{circulant, diagonal_pattern, DetFamily};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn single(p: WignerParams) -> ParamsMap {
        [(WignerId(1), p)].into_iter().collect()
    }

    fn mono(s: &str) -> Monomial {
        Monomial::parse(s).unwrap()
    }

    fn identity_state() -> LimitState {
        LimitState::finite(DetFamily::identity(4))
    }

    #[test]
    fn scalar_anchors() {
        let st = identity_state();
        for (p, want) in [
            (WignerParams::GUE, 2.0),
            (WignerParams::GOE, 4.0),
            (WignerParams::new(1.0, 1.0, -2.0).unwrap(), 0.0),
        ] {
            let ps = single(p);
            let v = phi2(&mono("x1 x1"), &mono("x1 x1"), &ps, &st).unwrap().total();
            assert!((v - c(want)).norm() < 1e-12, "{v}");
            let v = phi2(&mono("x1"), &mono("x1"), &ps, &st).unwrap().total();
            assert_eq!(v, c(p.eta));
        }
    }

    #[test]
    fn first_order_moments() {
        let st = identity_state();
        let ps = single(WignerParams::GUE);
        assert_eq!(first_order(&mono("x1"), &ps, &st).unwrap(), ZERO);
        assert_eq!(first_order(&mono("x1 x1"), &ps, &st).unwrap(), c(1.0));
        assert_eq!(first_order(&mono("x1 x1 x1 x1"), &ps, &st).unwrap(), c(2.0));
        assert_eq!(first_order(&mono("x1 x1 x1 x1 x1 x1"), &ps, &st).unwrap(), c(5.0));
    }

    #[test]
    fn example_one_shape() {
        let n = 8;
        let fam = DetFamily::new(
            n,
            vec![
                diagonal_pattern(n, &[c(1.0), c(-0.5)]).unwrap(),
                circulant(n, &[c(0.3), c(1.0), c(0.0), c(-0.2)]).unwrap(),
            ],
            5.0,
        )
        .unwrap();
        let st = LimitState::finite(fam);
        let w = WignerParams::new(0.4, 1.7, 0.3).unwrap();
        let t = phi2(&mono("x1 a0"), &mono("x1 a1"), &single(w), &st).unwrap();
        let (a1, a2) = (DetWord::letter(0), DetWord::letter(1));
        let want = st.phi(&a1.concat(&a2)).unwrap()
            + w.theta * st.phi_transpose(&a1, &a2).unwrap()
            + (w.eta - 1.0 - w.theta) * st.phi_hadamard(&a1, &a2).unwrap();
        assert!((t.total() - want).norm() < 1e-12);
        assert_eq!(t.s3, ZERO);
    }

    #[test]
    fn odd_and_degree_zero_vanish() {
        let st = identity_state();
        let ps = single(WignerParams::GOE);
        assert_eq!(phi2(&mono("x1 x1"), &mono("x1"), &ps, &st).unwrap().total(), ZERO);
        assert_eq!(phi2(&mono("a0"), &mono("x1"), &ps, &st).unwrap().total(), ZERO);
    }

    #[test]
    fn unknown_ids_fail() {
        let st = identity_state();
        let ps = single(WignerParams::GUE);
        assert!(matches!(
            phi2(&mono("x2"), &mono("x2"), &ps, &st),
            Err(Error::UnknownWigner(_))
        ));
        assert!(matches!(
            phi2(&mono("x1 a3"), &mono("x1"), &ps, &st),
            Err(Error::LetterOutOfRange { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(WignerParams::new(1.5, 1.0, 0.0).is_err());
        assert!(WignerParams::new(0.0, -1.0, 0.0).is_err());
        assert!(WignerParams::new(0.0, 1.0, -1.5).is_err());
        assert!(WignerParams::new(1.0, 1.0, -2.0).is_ok());
    }
}
