//! Words in Wigner letters `x_k` and deterministic letters `a_j`.
//!
//! A canonical monomial alternates `x_{w₁} d₁ x_{w₂} d₂ ⋯ x_{w_m} d_m` where
//! each `dᵢ` is a (possibly empty) product of deterministic letters; the
//! empty product is the identity.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

/// Identifier of a Wigner ensemble (`x3` has id 3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WignerId(pub u32);

impl fmt::Display for WignerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A deterministic matrix of the family with adjoint/transpose flags.
/// Both flags together mean the entrywise conjugate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetLetter {
    pub base: usize,
    pub star: bool,
    pub transpose: bool,
}

impl DetLetter {
    pub fn plain(base: usize) -> Self {
        DetLetter {
            base,
            star: false,
            transpose: false,
        }
    }

    pub fn t(self) -> Self {
        DetLetter {
            transpose: !self.transpose,
            ..self
        }
    }

    pub fn star(self) -> Self {
        DetLetter {
            star: !self.star,
            ..self
        }
    }
}

impl fmt::Display for DetLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.base)?;
        if self.star {
            write!(f, "*")?;
        }
        if self.transpose {
            write!(f, "^t")?;
        }
        Ok(())
    }
}

/// Product of deterministic letters, read left to right. Empty = identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetWord(pub Vec<DetLetter>);

impl DetWord {
    pub fn identity() -> Self {
        DetWord(Vec::new())
    }

    pub fn letter(base: usize) -> Self {
        DetWord(vec![DetLetter::plain(base)])
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[DetLetter] {
        &self.0
    }

    pub fn concat(&self, rhs: &DetWord) -> DetWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&rhs.0);
        DetWord(v)
    }

    /// `(b₁⋯b_k)ᵗ = b_kᵗ ⋯ b₁ᵗ`
    pub fn transpose(&self) -> DetWord {
        DetWord(self.0.iter().rev().map(|l| l.t()).collect())
    }

    /// `(b₁⋯b_k)* = b_k* ⋯ b₁*`
    pub fn adjoint(&self) -> DetWord {
        DetWord(self.0.iter().rev().map(|l| l.star()).collect())
    }

    pub fn max_base(&self) -> Option<usize> {
        self.0.iter().map(|l| l.base).max()
    }
}

impl fmt::Display for DetWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromIterator<DetWord> for DetWord {
    fn from_iter<I: IntoIterator<Item = DetWord>>(iter: I) -> Self {
        DetWord(iter.into_iter().flat_map(|w| w.0).collect())
    }
}

/// One letter of an uncanonicalized word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RawLetter {
    Wigner(WignerId),
    Det(DetLetter),
    Identity,
}

/// Canonical monomial `x_{w₁} d₁ ⋯ x_{w_m} d_m`, or a pure deterministic
/// word when the degree is 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    wigner: Vec<WignerId>,
    det: Vec<DetWord>,
}

impl Monomial {
    /// `wigner.len() == det.len() ≥ 1`.
    pub fn new(wigner: Vec<WignerId>, det: Vec<DetWord>) -> Result<Self> {
        if wigner.is_empty() {
            return Err(Error::DegreeZero);
        }
        if wigner.len() != det.len() {
            return Err(Error::DimensionMismatch {
                expected: wigner.len(),
                found: det.len(),
            });
        }
        Ok(Monomial { wigner, det })
    }

    pub fn deterministic(word: DetWord) -> Self {
        Monomial {
            wigner: Vec::new(),
            det: vec![word],
        }
    }

    /// `x_{w} 1 x_{w} 1 ⋯` with `degree` copies.
    pub fn power(id: WignerId, degree: usize) -> Self {
        if degree == 0 {
            return Monomial::deterministic(DetWord::identity());
        }
        Monomial {
            wigner: vec![id; degree],
            det: vec![DetWord::identity(); degree],
        }
    }

    pub fn degree(&self) -> usize {
        self.wigner.len()
    }

    pub fn labels(&self) -> &[WignerId] {
        &self.wigner
    }

    /// Deterministic slots; for degree 0 the single pure word.
    pub fn det_words(&self) -> &[DetWord] {
        &self.det
    }

    pub fn max_base(&self) -> Option<usize> {
        self.det.iter().filter_map(|w| w.max_base()).max()
    }

    pub fn to_raw(&self) -> Vec<RawLetter> {
        let mut out = Vec::new();
        if self.wigner.is_empty() {
            out.extend(self.det[0].0.iter().map(|l| RawLetter::Det(*l)));
            return out;
        }
        for (w, d) in self.wigner.iter().zip(&self.det) {
            out.push(RawLetter::Wigner(*w));
            out.extend(d.0.iter().map(|l| RawLetter::Det(*l)));
        }
        out
    }

    /// `s(x₁a₁⋯x_na_n) = x_n a_{n−1}ᵗ x_{n−1} ⋯ a₁ᵗ x₁ a_nᵗ`
    pub fn s_transform(&self) -> Result<Monomial> {
        self.reverse_with(DetWord::transpose)
    }

    /// `p*`, rotated back to canonical form: `x_n a_{n−1}* ⋯ a₁* x₁ a_n*`.
    pub fn adjoint(&self) -> Monomial {
        if self.wigner.is_empty() {
            return Monomial::deterministic(self.det[0].adjoint());
        }
        self.reverse_with(DetWord::adjoint).expect("degree checked")
    }

    fn reverse_with(&self, f: impl Fn(&DetWord) -> DetWord) -> Result<Monomial> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::DegreeZero);
        }
        let wigner = (0..n).map(|k| self.wigner[n - 1 - k]).collect();
        let det = (0..n)
            .map(|k| {
                if k + 1 < n {
                    f(&self.det[n - 2 - k])
                } else {
                    f(&self.det[n - 1])
                }
            })
            .collect();
        Ok(Monomial { wigner, det })
    }

    /// Parses tokens such as `x1 a0 x2 a1^t a0*` or `x1 x1`.
    pub fn parse(s: &str) -> Result<Monomial> {
        Ok(canonicalize(&parse_letters(s)?))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.wigner.is_empty() {
            return write!(f, "{}", self.det[0]);
        }
        for (k, (w, d)) in self.wigner.iter().zip(&self.det).enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{w} {d}")?;
        }
        Ok(())
    }
}

/// Cyclically rotates to start with a Wigner letter, drops `*` on Wigner
/// letters, fuses adjacent deterministic letters and fills empty slots with
/// the identity.
pub fn canonicalize(raw: &[RawLetter]) -> Monomial {
    let Some(first) = raw.iter().position(|l| matches!(l, RawLetter::Wigner(_))) else {
        let word = raw
            .iter()
            .filter_map(|l| match l {
                RawLetter::Det(d) => Some(*d),
                _ => None,
            })
            .collect();
        return Monomial::deterministic(DetWord(word));
    };
    let mut wigner = Vec::new();
    let mut det: Vec<DetWord> = Vec::new();
    for k in 0..raw.len() {
        match raw[(first + k) % raw.len()] {
            RawLetter::Wigner(w) => {
                wigner.push(w);
                det.push(DetWord::identity());
            }
            RawLetter::Det(d) => det.last_mut().expect("starts with x").0.push(d),
            RawLetter::Identity => {}
        }
    }
    Monomial { wigner, det }
}

/// Tokenizer for words. Letters: `x<id>` (optional `*`, ignored),
/// `a<index>` with optional `*` and `^t` / `'` / `ᵗ` suffixes, and `1` or
/// `I` for the identity. Whitespace between letters is optional.
pub fn parse_letters(s: &str) -> Result<Vec<RawLetter>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    let err = |msg: String| Error::Parse(format!("{msg} in `{s}`"));
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        match c {
            'x' | 'a' => {
                k += 1;
                let start = k;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                if start == k {
                    return Err(err(format!("letter `{c}` without index")));
                }
                let digits: String = chars[start..k].iter().collect();
                let idx: u64 = digits
                    .parse()
                    .map_err(|_| err(format!("bad index `{digits}`")))?;
                let (mut star, mut transpose) = (false, false);
                loop {
                    if k < chars.len() && chars[k] == '*' {
                        star = !star;
                        k += 1;
                    } else if k + 1 < chars.len() && chars[k] == '^' && chars[k + 1] == 't' {
                        transpose = !transpose;
                        k += 2;
                    } else if k < chars.len() && (chars[k] == '\'' || chars[k] == 'ᵗ') {
                        transpose = !transpose;
                        k += 1;
                    } else {
                        break;
                    }
                }
                if c == 'x' {
                    if transpose {
                        return Err(err("transpose on a Wigner letter".into()));
                    }
                    let id = u32::try_from(idx).map_err(|_| err("Wigner id too large".into()))?;
                    out.push(RawLetter::Wigner(WignerId(id)));
                } else {
                    out.push(RawLetter::Det(DetLetter {
                        base: idx as usize,
                        star,
                        transpose,
                    }));
                }
            }
            '1' | 'I' | '𝟙' => {
                out.push(RawLetter::Identity);
                k += 1;
            }
            _ => return Err(err(format!("unexpected character `{c}`"))),
        }
    }
    if out.is_empty() {
        return Err(err("empty word".into()));
    }
    Ok(out)
}

/// Finite linear combination of canonical monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: Vec<(C64, Monomial)>,
}

impl Polynomial {
    /// Merges equal monomials and drops zero coefficients; order of first
    /// appearance is kept.
    pub fn new(terms: impl IntoIterator<Item = (C64, Monomial)>) -> Self {
        let mut index: BTreeMap<Monomial, usize> = BTreeMap::new();
        let mut merged: Vec<(C64, Monomial)> = Vec::new();
        for (c, m) in terms {
            match index.get(&m) {
                Some(&i) => merged[i].0 += c,
                None => {
                    index.insert(m.clone(), merged.len());
                    merged.push((c, m));
                }
            }
        }
        merged.retain(|(c, _)| *c != ZERO);
        Polynomial { terms: merged }
    }

    pub fn monomial(m: Monomial) -> Self {
        Polynomial::new([(C64::new(1.0, 0.0), m)])
    }

    pub fn terms(&self) -> &[(C64, Monomial)] {
        &self.terms
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        Polynomial::new(self.terms.iter().map(|(c, m)| (c * s, m.clone())))
    }

    pub fn add(&self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(self.terms.iter().chain(&rhs.terms).cloned())
    }

    /// `P* = Σ c̄ m*`
    pub fn adjoint(&self) -> Polynomial {
        Polynomial::new(self.terms.iter().map(|(c, m)| (c.conj(), m.adjoint())))
    }
}
