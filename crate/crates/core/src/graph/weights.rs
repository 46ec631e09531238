//! Wigner weights of a quotient: expectations of products of unnormalized
//! entries, read off twin groups.

use std::collections::BTreeMap;

use super::{EdgeClass, LabeledGraph};
use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};
use crate::words::WignerId;

/// `E[∏ z_e]` over the Wigner edges of the selected cycles, vertices of the
/// quotient labeled injectively. Entries in the same twin group and with
/// the same Wigner id are the same variable (or its conjugate); distinct
/// groups are independent.
pub fn x_moment(tq: &LabeledGraph, ensembles: &[Ensemble], keep_cycle: impl Fn(usize) -> bool) -> Result<C64> {
    // (low, high, id) → (# entries z_{high,low}, # conjugates)
    let mut groups: BTreeMap<(usize, usize, WignerId), (usize, usize)> = BTreeMap::new();
    let letters = tq.letters();
    for e in tq.edges() {
        if e.class != EdgeClass::X || !keep_cycle(letters.cycle_of[e.label]) {
            continue;
        }
        let id = letters.wigner[e.label];
        let (lo, hi) = (e.src.min(e.trg), e.src.max(e.trg));
        let slot = groups.entry((lo, hi, id)).or_default();
        // the edge reads X(trg, src); the sampler stores z below the diagonal
        if e.trg >= e.src {
            slot.0 += 1;
        } else {
            slot.1 += 1;
        }
    }
    let mut acc = ONE;
    for ((lo, hi, id), (p, q)) in groups {
        let ens = ensembles
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::UnknownWigner(id.to_string()))?;
        let m = if lo == hi {
            C64::new(ens.diagonal_moment(p + q)?, 0.0)
        } else {
            ens.law.moment(p, q)?
        };
        if m == ZERO {
            return Ok(ZERO);
        }
        acc *= m;
    }
    Ok(acc)
}

/// Order 1: the joint expectation over all cycles. Order 2: the
/// alternating sum over subsets `J` of cycles,
/// `Σ_J (−1)^{n−|J|} E[∏_{J}] ∏_{j∉J} E[∏_{j}]`.
pub fn omega_x(tq: &LabeledGraph, ensembles: &[Ensemble], order: u8) -> Result<C64> {
    let n = tq.cycle_count();
    match order {
        1 => x_moment(tq, ensembles, |_| true),
        2 => {
            if n > 16 {
                return Err(Error::CapExceeded {
                    what: "cycles in a second-order weight",
                    value: n,
                    limit: 16,
                });
            }
            let singles: Vec<C64> = (0..n)
                .map(|j| x_moment(tq, ensembles, |c| c == j))
                .collect::<Result<_>>()?;
            let mut total = ZERO;
            for mask in 0u32..(1 << n) {
                let mut term = x_moment(tq, ensembles, |c| mask & (1 << c) != 0)?;
                for (j, s) in singles.iter().enumerate() {
                    if mask & (1 << j) == 0 {
                        term *= -s;
                    }
                }
                total += term;
            }
            Ok(total)
        }
        _ => Err(Error::InvalidArgument(format!("weight order {order} not in {{1, 2}}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{solve_law, Preset, RealLaw};
    use crate::graph::{build_cycle_graph, quotient, SetPartition};
    use crate::words::Monomial;

    fn gue() -> Vec<Ensemble> {
        vec![Ensemble::preset(WignerId(1), Preset::Gue)]
    }

    #[test]
    fn doubled_edges() {
        let t = build_cycle_graph(&[Monomial::parse("x1 a0 x1 a1").unwrap()]).unwrap();
        // opposite twins: E|x|² = 1
        let opp = quotient(&t, &SetPartition::from_labels(&[0, 1, 1, 0])).unwrap();
        assert_eq!(omega_x(&opp, &gue(), 1).unwrap(), ONE);
        // parallel twins: E[x²] = θ
        let par = quotient(&t, &SetPartition::from_labels(&[0, 1, 0, 1])).unwrap();
        assert_eq!(omega_x(&par, &gue(), 1).unwrap(), ZERO);
        let law = solve_law(0.5, 1.0).unwrap();
        let ens = vec![Ensemble::new(WignerId(1), law, RealLaw::Gaussian { variance: 1.0 }).unwrap()];
        assert!((omega_x(&par, &ens, 1).unwrap() - C64::new(0.5, 0.0)).norm() < 1e-12);
        // single edge: centered
        let lone = quotient(&t, &SetPartition::singletons(4)).unwrap();
        assert_eq!(omega_x(&lone, &gue(), 1).unwrap(), ZERO);
    }

    #[test]
    fn fourfold_group_gives_fourth_moment_minus_one() {
        // two cycles x1 a x1 b, all four Wigner edges on one opposite pair
        let p = Monomial::parse("x1 a0 x1 a1").unwrap();
        let t = build_cycle_graph(&[p.clone(), p]).unwrap();
        let pi = SetPartition::from_labels(&[0, 1, 1, 0, 0, 1, 1, 0]);
        let tq = quotient(&t, &pi).unwrap();
        let ens = vec![Ensemble::preset(WignerId(1), Preset::Rademacher)];
        // E|x|⁴ − E|x|² E|x|² = 1 − 1 for ±1 entries
        assert_eq!(omega_x(&tq, &ens, 2).unwrap(), ZERO);
        let g = gue();
        let w = omega_x(&tq, &g, 2).unwrap();
        assert!((w - C64::new(1.0, 0.0)).norm() < 1e-12, "{w}");
    }

    #[test]
    fn diagonal_loops_use_diagonal_law() {
        let t = build_cycle_graph(&[Monomial::parse("x1").unwrap(), Monomial::parse("x1").unwrap()]).unwrap();
        let tq = quotient(&t, &SetPartition::one_block(4)).unwrap();
        let goe = vec![Ensemble::preset(WignerId(1), Preset::Goe)];
        assert_eq!(omega_x(&tq, &goe, 2).unwrap(), C64::new(2.0, 0.0));
        assert!(omega_x(&tq, &goe, 3).is_err());
        assert!(omega_x(&tq, &[], 1).is_err());
    }
}
