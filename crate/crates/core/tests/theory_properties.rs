//! Property tests for annular pairings, word transforms and the limiting
//! covariance.

use proptest::prelude::*;

use wigfluct::annulus::{
    enumerate_nc2, kreweras, noncrossing_by_cycle_count, noncrossing_by_reduction, through_cycles, AnnularPairing,
};
use wigfluct::covariance::phi2_vanishing_pseudovariance;
use wigfluct::linalg::Mat;
use wigfluct::state::random_fixed;
use wigfluct::{phi2, DetFamily, DetLetter, DetWord, LimitState, Monomial, ParamsMap, WignerId, WignerParams, C64};

/// A uniformly shuffled perfect matching of `1..=size` (`size` even).
fn matching(size: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((1..=size).collect::<Vec<usize>>()).prop_shuffle().prop_map(move |order| {
        let mut m = vec![0; size];
        for pair in order.chunks(2) {
            m[pair[0] - 1] = pair[1];
            m[pair[1] - 1] = pair[0];
        }
        m
    })
}

fn split_matching() -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    (1usize..=5)
        .prop_flat_map(|half| (Just(2 * half), 1..2 * half))
        .prop_flat_map(|(size, m)| (Just(m), Just(size - m), matching(size)))
}

fn letter() -> impl Strategy<Value = DetLetter> {
    (0usize..3, any::<bool>()).prop_map(|(b, t)| if t { DetLetter::plain(b).t() } else { DetLetter::plain(b) })
}

fn monomial(max_degree: usize) -> impl Strategy<Value = Monomial> {
    (1..=max_degree)
        .prop_flat_map(|d| {
            (
                prop::collection::vec(1u32..=2, d),
                prop::collection::vec(prop::collection::vec(letter(), 0..=2), d),
            )
        })
        .prop_map(|(ids, words)| {
            Monomial::new(ids.into_iter().map(WignerId).collect(), words.into_iter().map(DetWord).collect()).unwrap()
        })
}

fn params() -> impl Strategy<Value = WignerParams> {
    (-1.0f64..1.0, 0.0f64..3.0, 0.0f64..1.0).prop_map(|(theta, eta, u)| {
        let floor = -1.0 - theta * theta;
        WignerParams::new(theta, eta, floor + u * (3.0 - floor)).unwrap()
    })
}

fn state() -> LimitState {
    let n = 7;
    let mats: Vec<Mat> = (0..3).map(|k| random_fixed(n, 90 + k, 2.0).unwrap()).collect();
    LimitState::finite(DetFamily::unchecked(n, mats))
}

fn close(a: C64, b: C64) -> bool {
    (a - b).norm() <= 1e-10 * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #[test]
    fn noncrossing_predicates_agree((m, n, mt) in split_matching()) {
        prop_assume!((0..m).any(|i| mt[i] > m));
        let a = noncrossing_by_reduction(&mt, m, n);
        prop_assert_eq!(a, noncrossing_by_cycle_count(&mt, m, n));
        if a {
            let s = AnnularPairing::new(m, n, mt.clone()).unwrap();
            prop_assert_eq!(s.as_permutation().cycle_count() + kreweras(&s).cycle_count(), m + n);
            prop_assert_eq!((m - s.through_count()) % 2, 0);
            prop_assert!(enumerate_nc2(m, n).unwrap().contains(&s));
        }
    }

    #[test]
    fn through_cycles_cover_both_circles((m, n, mt) in split_matching()) {
        prop_assume!(noncrossing_by_cycle_count(&mt, m, n) && (0..m).any(|i| mt[i] > m));
        let s = AnnularPairing::new(m, n, mt).unwrap();
        let tc = through_cycles(&kreweras(&s), m, n);
        prop_assert_eq!(tc.len(), s.through_count());
        for c in tc {
            prop_assert!(!c.outer.is_empty() && !c.inner.is_empty());
            prop_assert!(c.outer.iter().all(|&i| i <= m) && c.inner.iter().all(|&i| i > m));
        }
    }

    #[test]
    fn s_transform_is_an_involution(p in monomial(5)) {
        let s = p.s_transform().unwrap();
        prop_assert_eq!(s.degree(), p.degree());
        prop_assert_eq!(s.s_transform().unwrap(), p);
    }

    #[test]
    fn phi2_is_symmetric(p in monomial(3), q in monomial(3), w1 in params(), w2 in params()) {
        let st = state();
        let ps = ParamsMap::from([(WignerId(1), w1), (WignerId(2), w2)]);
        let a = phi2(&p, &q, &ps, &st).unwrap().total();
        let b = phi2(&q, &p, &ps, &st).unwrap().total();
        prop_assert!(close(a, b), "{} vs {}", a, b);
    }

    #[test]
    fn phi2_is_invariant_under_rotation(p in monomial(4), q in monomial(3), w1 in params(), w2 in params()) {
        let st = state();
        let ps = ParamsMap::from([(WignerId(1), w1), (WignerId(2), w2)]);
        let d = p.degree();
        let rotated = Monomial::new(
            (0..d).map(|k| p.labels()[(k + 1) % d]).collect(),
            (0..d).map(|k| p.det_words()[(k + 1) % d].clone()).collect(),
        ).unwrap();
        let a = phi2(&p, &q, &ps, &st).unwrap().total();
        let b = phi2(&rotated, &q, &ps, &st).unwrap().total();
        prop_assert!(close(a, b), "{} vs {}", a, b);
    }

    #[test]
    fn odd_total_degree_vanishes(p in monomial(4), q in monomial(4), w in params()) {
        prop_assume!((p.degree() + q.degree()) % 2 == 1);
        let ps = ParamsMap::from([(WignerId(1), w), (WignerId(2), w)]);
        prop_assert_eq!(phi2(&p, &q, &ps, &state()).unwrap().total(), C64::default());
    }

    #[test]
    fn zero_pseudovariance_paths_agree(p in monomial(4), q in monomial(4), eta in 0.0f64..3.0, k4 in -1.0f64..3.0) {
        let w = WignerParams::new(0.0, eta, k4).unwrap();
        let ps = ParamsMap::from([(WignerId(1), w), (WignerId(2), WignerParams::GUE)]);
        let st = state();
        let a = phi2(&p, &q, &ps, &st).unwrap();
        prop_assert_eq!(a.s2, C64::default());
        let b = phi2_vanishing_pseudovariance(&p, &q, &ps, &st).unwrap();
        prop_assert!(close(a.total(), b));
    }

    #[test]
    fn functionals_are_tracial(u in prop::collection::vec(letter(), 1..4), v in prop::collection::vec(letter(), 1..4)) {
        let st = state();
        let (u, v) = (DetWord(u), DetWord(v));
        prop_assert!(close(st.phi(&u.concat(&v)).unwrap(), st.phi(&v.concat(&u)).unwrap()));
        prop_assert!(close(st.phi_hadamard(&u, &v).unwrap(), st.phi_hadamard(&v, &u).unwrap()));
        // φ(w) = φ(wᵗ)
        prop_assert!(close(st.phi(&u).unwrap(), st.phi(&u.transpose()).unwrap()));
    }
}
