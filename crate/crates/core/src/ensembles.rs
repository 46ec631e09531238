//! Entry laws for Wigner matrices, their parameters `(θ, η, k₄)`, exact
//! mixed moments and a Hermitian sampler.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covariance::WignerParams;
use crate::error::{Error, Result};
use crate::linalg::{Mat, RMat, Work, C64, ZERO};
use crate::words::WignerId;

pub const DEFAULT_MOMENT_CAP: usize = 12;

/// Symmetric real law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RealLaw {
    Zero,
    Gaussian { variance: f64 },
    /// `P(0) = 1 − 1/κ`, `P(±√(vκ)) = 1/(2κ)`; kurtosis `κ ≥ 1`, and
    /// `κ = 1` is a scaled Rademacher law.
    ThreePoint { variance: f64, kurtosis: f64 },
}

impl RealLaw {
    pub fn rademacher(variance: f64) -> RealLaw {
        RealLaw::ThreePoint {
            variance,
            kurtosis: 1.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            RealLaw::Zero => 0.0,
            RealLaw::Gaussian { variance } | RealLaw::ThreePoint { variance, .. } => variance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RealLaw::Zero => Ok(()),
            RealLaw::Gaussian { variance } if variance >= 0.0 => Ok(()),
            RealLaw::ThreePoint { variance, kurtosis } if variance >= 0.0 && kurtosis >= 1.0 => Ok(()),
            other => Err(Error::InfeasibleLaw(format!("{other:?}"))),
        }
    }

    /// `E[u^k]`.
    pub fn moment(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if k % 2 == 1 {
            return 0.0;
        }
        let half = (k / 2) as i32;
        match *self {
            RealLaw::Zero => 0.0,
            RealLaw::Gaussian { variance } => {
                let double_fact: f64 = (1..k).step_by(2).map(|j| j as f64).product();
                variance.powi(half) * double_fact
            }
            RealLaw::ThreePoint { variance, kurtosis } => {
                if variance == 0.0 {
                    0.0
                } else {
                    variance.powi(half) * kurtosis.powi(half - 1)
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RealLaw::Zero => 0.0,
            RealLaw::Gaussian { variance } => {
                let z: f64 = rng.sample(StandardNormal);
                z * variance.sqrt()
            }
            RealLaw::ThreePoint { variance, kurtosis } => {
                let atom = (variance * kurtosis).sqrt();
                if kurtosis == 1.0 {
                    return if rng.random::<bool>() { atom } else { -atom };
                }
                let u: f64 = rng.random();
                let tail = 1.0 / (2.0 * kurtosis);
                if u < tail {
                    atom
                } else if u < 2.0 * tail {
                    -atom
                } else {
                    0.0
                }
            }
        }
    }
}

/// Law of an off-diagonal entry.
#[derive(Clone, Debug, PartialEq)]
pub enum EntryLaw {
    /// `x = u + i v` with `u`, `v` independent and symmetric.
    Product { re: RealLaw, im: RealLaw },
    /// Finite support; must be invariant under conjugation.
    Discrete { support: Vec<C64>, weights: Vec<f64> },
}

impl EntryLaw {
    pub fn gaussian_complex() -> Self {
        EntryLaw::Product {
            re: RealLaw::Gaussian { variance: 0.5 },
            im: RealLaw::Gaussian { variance: 0.5 },
        }
    }

    pub fn gaussian_real() -> Self {
        EntryLaw::Product {
            re: RealLaw::Gaussian { variance: 1.0 },
            im: RealLaw::Zero,
        }
    }

    pub fn rademacher_real() -> Self {
        EntryLaw::Product {
            re: RealLaw::rademacher(1.0),
            im: RealLaw::Zero,
        }
    }

    pub fn rademacher_complex() -> Self {
        EntryLaw::Product {
            re: RealLaw::rademacher(0.5),
            im: RealLaw::rademacher(0.5),
        }
    }

    /// Checks centering, unit variance and conjugation invariance.
    pub fn validate(&self) -> Result<()> {
        match self {
            EntryLaw::Product { re, im } => {
                re.validate()?;
                im.validate()?;
                let v = re.variance() + im.variance();
                if (v - 1.0).abs() > 1e-12 {
                    return Err(Error::InfeasibleLaw(format!("E|x|² = {v}, expected 1")));
                }
                Ok(())
            }
            EntryLaw::Discrete { support, weights } => {
                if support.is_empty() || support.len() != weights.len() {
                    return Err(Error::InfeasibleLaw("support/weights length mismatch".into()));
                }
                if weights.iter().any(|&w| !(w >= 0.0)) {
                    return Err(Error::InfeasibleLaw("negative weight".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InfeasibleLaw(format!("weights sum to {total}")));
                }
                let mean: C64 = support.iter().zip(weights).map(|(x, w)| x * w).sum();
                if mean.norm() > 1e-12 {
                    return Err(Error::InfeasibleLaw(format!("mean {mean} is not zero")));
                }
                let var: f64 = support.iter().zip(weights).map(|(x, w)| x.norm_sqr() * w).sum();
                if (var - 1.0).abs() > 1e-12 {
                    return Err(Error::InfeasibleLaw(format!("E|x|² = {var}, expected 1")));
                }
                // conjugation invariance: every atom's conjugate carries the same mass
                for (x, w) in support.iter().zip(weights) {
                    let mass: f64 = support
                        .iter()
                        .zip(weights)
                        .filter(|(y, _)| (**y - x.conj()).norm() < 1e-12)
                        .map(|(_, w)| w)
                        .sum();
                    let own: f64 = support
                        .iter()
                        .zip(weights)
                        .filter(|(y, _)| (**y - x).norm() < 1e-12)
                        .map(|(_, w)| w)
                        .sum();
                    if (mass - own).abs() > 1e-12 {
                        return Err(Error::InfeasibleLaw(format!(
                            "atom {x} (mass {w}) and its conjugate differ in mass"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// `E[x^p x̄^q]`, exact up to floating point.
    pub fn moment(&self, p: usize, q: usize) -> Result<C64> {
        if p + q > DEFAULT_MOMENT_CAP {
            return Err(Error::CapExceeded {
                what: "entry moment order",
                value: p + q,
                limit: DEFAULT_MOMENT_CAP,
            });
        }
        Ok(match self {
            EntryLaw::Product { re, im } => {
                // (u + iv)^p (u − iv)^q expanded binomially
                let i = C64::new(0.0, 1.0);
                let mut acc = ZERO;
                for a in 0..=p {
                    for b in 0..=q {
                        let ku = a + b;
                        let kv = p + q - ku;
                        let mu = re.moment(ku) * im.moment(kv);
                        if mu == 0.0 {
                            continue;
                        }
                        let coef = binom(p, a) * binom(q, b);
                        let phase = i.powi((p - a) as i32) * (-i).powi((q - b) as i32);
                        acc += phase * (coef * mu);
                    }
                }
                acc
            }
            EntryLaw::Discrete { support, weights } => support
                .iter()
                .zip(weights)
                .map(|(x, w)| x.powi(p as i32) * x.conj().powi(q as i32) * *w)
                .sum(),
        })
    }

    /// Real-valued entries almost surely.
    pub fn is_real(&self) -> bool {
        match self {
            EntryLaw::Product { im, .. } => *im == RealLaw::Zero,
            EntryLaw::Discrete { support, .. } => support.iter().all(|z| z.im == 0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        match self {
            EntryLaw::Product { re, im } => C64::new(re.sample(rng), im.sample(rng)),
            EntryLaw::Discrete { support, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, w) in support.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *x;
                    }
                }
                *support.last().expect("nonempty support")
            }
        }
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `(θ, η, k₄)` of an off-diagonal law together with a diagonal law.
pub fn params_of(law: &EntryLaw, diagonal: &RealLaw) -> Result<WignerParams> {
    law.validate()?;
    diagonal.validate()?;
    let theta = law.moment(2, 0)?;
    let abs4 = law.moment(2, 2)?.re;
    let k4 = abs4 - 2.0 - theta.norm_sqr();
    let p = WignerParams {
        theta,
        eta: diagonal.variance(),
        k4,
    };
    Ok(p)
}

/// A product law with pseudo-variance `θ` and fourth cumulant `k₄`: both
/// components share the excess kurtosis `2k₄/(1+θ²)`; Gaussian when
/// `k₄ = 0`, symmetric three-point otherwise.
pub fn solve_law(theta: f64, k4: f64) -> Result<EntryLaw> {
    if !(theta.abs() <= 1.0) {
        return Err(Error::InfeasibleLaw(format!("|θ| = {} > 1", theta.abs())));
    }
    let floor = -1.0 - theta * theta;
    if !(k4 >= floor - 1e-12) {
        return Err(Error::InfeasibleLaw(format!(
            "k4 = {k4} below the bound {floor} for θ = {theta}"
        )));
    }
    let var_u = (1.0 + theta) / 2.0;
    let var_v = (1.0 - theta) / 2.0;
    let component = |variance: f64| -> RealLaw {
        if variance == 0.0 {
            RealLaw::Zero
        } else if k4 == 0.0 {
            RealLaw::Gaussian { variance }
        } else {
            let kurtosis = (3.0 + 2.0 * k4 / (1.0 + theta * theta)).max(1.0);
            RealLaw::ThreePoint { variance, kurtosis }
        }
    };
    Ok(EntryLaw::Product {
        re: component(var_u),
        im: component(var_v),
    })
}

/// Samples `X = (x_ij)/√N`, Hermitian. Entries below the diagonal are
/// drawn row by row, the upper triangle is written as their conjugates.
pub fn sample<R: Rng + ?Sized>(n: usize, law: &EntryLaw, diagonal: &RealLaw, rng: &mut R) -> Mat {
    let scale = 1.0 / (n as f64).sqrt();
    let mut x = Mat::zeros(n);
    for i in 0..n {
        for j in 0..i {
            let z = law.sample(rng) * scale;
            x[(i, j)] = z;
            x[(j, i)] = z.conj();
        }
        x[(i, i)] = C64::new(diagonal.sample(rng) * scale, 0.0);
    }
    x
}

/// As [`sample`], stored as a real matrix when the law is real. Both
/// consume the random stream identically.
pub fn sample_work<R: Rng + ?Sized>(n: usize, law: &EntryLaw, diagonal: &RealLaw, rng: &mut R) -> Work {
    if !law.is_real() {
        return Work::Complex(sample(n, law, diagonal, rng));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut x = RMat::zeros(n);
    for i in 0..n {
        for j in 0..i {
            let z = law.sample(rng).re * scale;
            x.set(i, j, z);
            x.set(j, i, z);
        }
        x.set(i, i, diagonal.sample(rng) * scale);
    }
    Work::Real(x)
}

/// JSON description of an entry law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntryLawSpec {
    GaussianComplex {},
    GaussianReal {},
    RademacherReal {},
    RademacherComplex {},
    /// Built by [`solve_law`].
    TwoPointMix { theta: f64, k4: f64 },
    CustomDiscrete { support: Vec<[f64; 2]>, weights: Vec<f64> },
}

impl EntryLawSpec {
    pub fn build(&self) -> Result<EntryLaw> {
        let law = match self {
            EntryLawSpec::GaussianComplex {} => EntryLaw::gaussian_complex(),
            EntryLawSpec::GaussianReal {} => EntryLaw::gaussian_real(),
            EntryLawSpec::RademacherReal {} => EntryLaw::rademacher_real(),
            EntryLawSpec::RademacherComplex {} => EntryLaw::rademacher_complex(),
            EntryLawSpec::TwoPointMix { theta, k4 } => solve_law(*theta, *k4)?,
            EntryLawSpec::CustomDiscrete { support, weights } => EntryLaw::Discrete {
                support: support.iter().map(|&[re, im]| C64::new(re, im)).collect(),
                weights: weights.clone(),
            },
        };
        law.validate()?;
        Ok(law)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Gue,
    Goe,
    Rademacher,
}

/// One Wigner ensemble in an experiment: either a preset or an explicit
/// off-diagonal law plus diagonal law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub id: WignerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<EntryLawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<RealLaw>,
}

impl EnsembleSpec {
    pub fn build(&self) -> Result<Ensemble> {
        match (&self.preset, &self.law, &self.diagonal) {
            (Some(p), None, None) => Ok(Ensemble::preset(self.id, *p)),
            (None, Some(law), Some(diagonal)) => Ensemble::new(self.id, law.build()?, *diagonal),
            _ => Err(Error::InvalidArgument(format!(
                "ensemble {}: give either `preset` or both `law` and `diagonal`",
                self.id
            ))),
        }
    }
}

/// A Wigner ensemble ready for sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub id: WignerId,
    pub law: EntryLaw,
    pub diagonal: RealLaw,
}

impl Ensemble {
    pub fn new(id: WignerId, law: EntryLaw, diagonal: RealLaw) -> Result<Self> {
        law.validate()?;
        diagonal.validate()?;
        Ok(Ensemble { id, law, diagonal })
    }

    /// gue: (0,1,0); goe: (1,2,0); rademacher: ±1 entries and diagonal, (1,1,−2).
    pub fn preset(id: WignerId, p: Preset) -> Self {
        let (law, diagonal) = match p {
            Preset::Gue => (EntryLaw::gaussian_complex(), RealLaw::Gaussian { variance: 1.0 }),
            Preset::Goe => (EntryLaw::gaussian_real(), RealLaw::Gaussian { variance: 2.0 }),
            Preset::Rademacher => (EntryLaw::rademacher_real(), RealLaw::rademacher(1.0)),
        };
        Ensemble { id, law, diagonal }
    }

    pub fn params(&self) -> Result<WignerParams> {
        params_of(&self.law, &self.diagonal)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Mat {
        sample(n, &self.law, &self.diagonal, rng)
    }

    pub fn sample_work<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Work {
        sample_work(n, &self.law, &self.diagonal, rng)
    }

    /// `E[d^p]` for the unnormalized diagonal entry.
    pub fn diagonal_moment(&self, p: usize) -> Result<f64> {
        diagonal_moments(&self.diagonal, p)
    }
}

/// `E[d^p]` of the diagonal law.
pub fn diagonal_moments(diagonal: &RealLaw, p: usize) -> Result<f64> {
    if p > DEFAULT_MOMENT_CAP {
        return Err(Error::CapExceeded {
            what: "diagonal moment order",
            value: p,
            limit: DEFAULT_MOMENT_CAP,
        });
    }
    Ok(diagonal.moment(p))
}

pub fn entry_moments(law: &EntryLaw, p: usize, q: usize) -> Result<C64> {
    law.moment(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn preset_parameters() {
        let p = Ensemble::preset(WignerId(1), Preset::Gue).params().unwrap();
        assert!(close(p.theta.re, 0.0) && close(p.eta, 1.0) && close(p.k4, 0.0));
        let p = Ensemble::preset(WignerId(1), Preset::Goe).params().unwrap();
        assert!(close(p.theta.re, 1.0) && close(p.eta, 2.0) && close(p.k4, 0.0));
        let p = Ensemble::preset(WignerId(1), Preset::Rademacher).params().unwrap();
        assert!(close(p.theta.re, 1.0) && close(p.eta, 1.0) && close(p.k4, -2.0));
    }

    #[test]
    fn moment_examples() {
        assert_eq!(EntryLaw::gaussian_complex().moment(1, 1).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(EntryLaw::rademacher_real().moment(4, 0).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(EntryLaw::gaussian_real().moment(4, 0).unwrap(), C64::new(3.0, 0.0));
        assert_eq!(EntryLaw::gaussian_complex().moment(2, 0).unwrap(), ZERO);
        // E|z|⁴ = 2 for the standard complex Gaussian
        assert!((EntryLaw::gaussian_complex().moment(2, 2).unwrap() - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!(EntryLaw::gaussian_real().moment(7, 6).is_err());
    }

    #[test]
    fn solve_round_trips() {
        for (theta, k4) in [(0.0, 0.0), (1.0, -2.0), (0.5, 1.0), (-0.3, -0.9), (0.0, -1.0), (0.8, 4.0)] {
            let law = solve_law(theta, k4).unwrap();
            let p = params_of(&law, &RealLaw::Gaussian { variance: 1.0 }).unwrap();
            assert!(close(p.theta.re, theta) && close(p.theta.im, 0.0), "{theta} {k4}: {p:?}");
            assert!(close(p.k4, k4), "{theta} {k4}: {p:?}");
        }
        assert_eq!(solve_law(1.0, -2.0).unwrap(), EntryLaw::rademacher_real());
        assert!(solve_law(0.5, -1.5).is_err());
        assert!(solve_law(1.2, 0.0).is_err());
    }

    #[test]
    fn sampler_is_hermitian_and_seeded() {
        let e = Ensemble::preset(WignerId(1), Preset::Gue);
        let a = e.sample(30, &mut ChaCha8Rng::seed_from_u64(9));
        let b = e.sample(30, &mut ChaCha8Rng::seed_from_u64(9));
        assert!(a.is_hermitian_exact());
        assert_eq!(a, b);
        let r = Ensemble::preset(WignerId(1), Preset::Goe);
        let dense = r.sample(12, &mut ChaCha8Rng::seed_from_u64(4));
        let work = r.sample_work(12, &mut ChaCha8Rng::seed_from_u64(4));
        assert!(matches!(work, Work::Real(_)));
        assert_eq!(work.to_complex(), dense);
    }

    #[test]
    fn discrete_validation() {
        let ok = EntryLaw::Discrete {
            support: vec![C64::new(0.0, 1.0), C64::new(0.0, -1.0)],
            weights: vec![0.5, 0.5],
        };
        assert!(ok.validate().is_ok());
        let p = params_of(&ok, &RealLaw::Zero).unwrap();
        assert!(close(p.theta.re, -1.0) && close(p.k4, -2.0));
        let skew = EntryLaw::Discrete {
            support: vec![C64::new(0.6, 0.8), C64::new(-0.6, -0.8)],
            weights: vec![0.5, 0.5],
        };
        assert!(skew.validate().is_err());
    }

    #[test]
    fn spec_json() {
        let e: EnsembleSpec = serde_json::from_str(r#"{"id": 2, "preset": "goe"}"#).unwrap();
        assert_eq!(e.build().unwrap().params().unwrap().eta, 2.0);
        let e: EnsembleSpec = serde_json::from_str(
            r#"{"id": 3, "law": {"kind": "two_point_mix", "theta": 0.5, "k4": 1.0},
                "diagonal": {"kind": "gaussian", "variance": 1.0}}"#,
        )
        .unwrap();
        assert!(close(e.build().unwrap().params().unwrap().k4, 1.0));
        assert!(serde_json::from_str::<EnsembleSpec>(r#"{"id": 1, "preset": "gaussian"}"#).is_err());
    }
}
