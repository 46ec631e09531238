//! Exact finite-N moments of traces by summing over vertex partitions of
//! the test graph: `E[∏ Tr M_j] = Σ_π N^{−m/2} ω_X(π) Tr⁰[T_A^π]`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use super::partitions::{all_partitions, for_each_partition, mobius, SetPartition};
use super::{build_cycle_graph, classify, quotient, weights, Classification, EdgeClass, LabeledGraph};
use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, Mat, C64, ONE, ZERO};
use crate::state::DetFamily;
use crate::words::Monomial;

/// Vertices of the test graph; Bell(10) = 115 975 partitions.
pub const MAX_ORACLE_VERTICES: usize = 10;
pub const MAX_ORACLE_DIM: usize = 16;

/// A graph whose edges carry concrete matrices.
#[derive(Clone, Debug)]
pub struct MatrixGraph {
    pub vertices: usize,
    /// `(src, trg, M)`, contributing `M(ψ(trg), ψ(src))`.
    pub edges: Vec<(usize, usize, Arc<Mat>)>,
}

impl MatrixGraph {
    /// Deterministic part of a quotient, with letter matrices from `family`.
    pub fn from_a_edges(tq: &LabeledGraph, family: &DetFamily) -> Result<Self> {
        let det = &tq.letters().det;
        let edges = tq
            .edges()
            .iter()
            .filter(|e| e.class == EdgeClass::A)
            .map(|e| Ok((e.src, e.trg, family.eval_word(&det[e.label])?)))
            .collect::<Result<_>>()?;
        Ok(MatrixGraph {
            vertices: tq.vertex_count(),
            edges,
        })
    }

    fn quotient(&self, pi: &SetPartition) -> MatrixGraph {
        MatrixGraph {
            vertices: pi.block_count(),
            edges: self
                .edges
                .iter()
                .map(|(s, t, m)| (pi.block_of(*s), pi.block_of(*t), m.clone()))
                .collect(),
        }
    }

    fn dim(&self) -> Option<usize> {
        self.edges.first().map(|(_, _, m)| m.dim())
    }
}

struct Factor {
    vars: Vec<usize>,
    data: Vec<C64>,
}

/// `Tr[S] = Σ_{ψ: V → [N]} ∏_e M_e(ψ(trg e), ψ(src e))` by variable
/// elimination, eliminating the vertex with the fewest neighbours first.
pub fn graph_trace(g: &MatrixGraph, n: usize) -> C64 {
    let mut factors: Vec<Factor> = g
        .edges
        .iter()
        .map(|(s, t, m)| {
            if s == t {
                Factor {
                    vars: vec![*s],
                    data: (0..n).map(|i| m[(i, i)]).collect(),
                }
            } else {
                let (a, b) = (*s.min(t), *s.max(t));
                let data = (0..n * n)
                    .map(|k| {
                        let (ia, ib) = (k / n, k % n);
                        // entry (ψ(trg), ψ(src))
                        if *t == a { m[(ia, ib)] } else { m[(ib, ia)] }
                    })
                    .collect();
                Factor { vars: vec![a, b], data }
            }
        })
        .collect();
    let mut scalar = ONE;
    let mut remaining: Vec<usize> = (0..g.vertices).collect();
    while !remaining.is_empty() {
        // pick the vertex whose elimination creates the smallest factor
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                let mut u: Vec<usize> = factors
                    .iter()
                    .filter(|f| f.vars.contains(&v))
                    .flat_map(|f| f.vars.iter().copied())
                    .collect();
                u.sort_unstable();
                u.dedup();
                (pos, u.len())
            })
            .min_by_key(|&(_, size)| size)
            .expect("nonempty");
        let v = remaining.swap_remove(pos);
        let (with, without): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = without;
        if with.is_empty() {
            scalar *= C64::new(n as f64, 0.0);
            continue;
        }
        let mut union: Vec<usize> = with.iter().flat_map(|f| f.vars.iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        let out_vars: Vec<usize> = union.iter().copied().filter(|&w| w != v).collect();
        let v_pos = union.iter().position(|&w| w == v).expect("v in union");
        // strides of each factor's variables inside the union index
        let positions: Vec<Vec<usize>> = with
            .iter()
            .map(|f| f.vars.iter().map(|w| union.iter().position(|u| u == w).expect("var in union")).collect())
            .collect();
        let out_len = n.pow(out_vars.len() as u32);
        let mut out = vec![ZERO; out_len];
        let mut idx = vec![0usize; union.len()];
        let total = n.pow(union.len() as u32);
        for _ in 0..total {
            let mut prod = ONE;
            for (f, pos) in with.iter().zip(&positions) {
                let k = pos.iter().fold(0, |acc, &p| acc * n + idx[p]);
                prod *= f.data[k];
                if prod == ZERO {
                    break;
                }
            }
            if prod != ZERO {
                let k = idx
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != v_pos)
                    .fold(0, |acc, (_, &i)| acc * n + i);
                out[k] += prod;
            }
            // odometer
            for p in (0..idx.len()).rev() {
                idx[p] += 1;
                if idx[p] < n {
                    break;
                }
                idx[p] = 0;
            }
        }
        if out_vars.is_empty() {
            scalar *= out[0];
        } else {
            factors.push(Factor { vars: out_vars, data: out });
        }
    }
    factors.iter().fold(scalar, |acc, f| acc * f.data[0])
}

/// `Σ_ψ ∏_e M_e(ψ(trg), ψ(src))` by brute force over all maps.
pub fn graph_trace_direct(g: &MatrixGraph, n: usize) -> C64 {
    sum_over_maps(g, n, false)
}

fn sum_over_maps(g: &MatrixGraph, n: usize, injective: bool) -> C64 {
    let k = g.vertices;
    if injective && k > n {
        return ZERO;
    }
    let mut psi = vec![0usize; k];
    let mut acc = CompensatedSum::new();
    loop {
        let ok = !injective || {
            let mut seen = vec![false; n];
            psi.iter().all(|&i| !std::mem::replace(&mut seen[i], true))
        };
        if ok {
            let r = g
                .edges
                .iter()
                .fold(ONE, |p, (s, t, m)| p * m[(psi[*t], psi[*s])]);
            acc.add(r);
        }
        let mut p = k;
        loop {
            if p == 0 {
                return acc.value();
            }
            p -= 1;
            psi[p] += 1;
            if psi[p] < n {
                break;
            }
            psi[p] = 0;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMethod {
    /// `Tr⁰[S] = Σ_{π'} Mob(0, π') Tr[S^{π'}]`.
    Mobius,
    /// Enumerate injective labelings.
    Direct,
}

/// Sum over injective vertex labelings.
pub fn injective_trace(g: &MatrixGraph, n: usize, method: TraceMethod) -> Result<C64> {
    if let Some(d) = g.dim() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, found: d });
        }
    }
    match method {
        TraceMethod::Direct => {
            let work = (n as f64).powi(g.vertices as i32);
            if work > 5e7 {
                return Err(Error::CapExceeded {
                    what: "direct enumeration size N^|V|",
                    value: work as usize,
                    limit: 50_000_000,
                });
            }
            Ok(sum_over_maps(g, n, true))
        }
        TraceMethod::Mobius => {
            if g.vertices > MAX_ORACLE_VERTICES {
                return Err(Error::CapExceeded {
                    what: "graph vertices",
                    value: g.vertices,
                    limit: MAX_ORACLE_VERTICES,
                });
            }
            let mut acc = CompensatedSum::new();
            for_each_partition(g.vertices, |p| {
                let mob = super::partitions::mobius_from_bottom(p);
                acc.add(graph_trace(&g.quotient(p), n) * mob);
            })?;
            Ok(acc.value())
        }
    }
}

/// One term of the partition sum for a pair of monomials.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionDiagnostic {
    pub id: usize,
    pub partition: String,
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
    pub q2_prime: f64,
    pub classification: Vec<Classification>,
    /// `N^{−m/2} ω_X⁽²⁾`.
    pub beta_x: C64,
    /// `Tr⁰[T_A^π]`.
    pub beta_a: C64,
}

fn check_caps(vertices: usize, n: usize) -> Result<()> {
    if vertices > MAX_ORACLE_VERTICES {
        return Err(Error::CapExceeded {
            what: "oracle graph vertices",
            value: vertices,
            limit: MAX_ORACLE_VERTICES,
        });
    }
    if n > MAX_ORACLE_DIM {
        return Err(Error::CapExceeded {
            what: "oracle dimension",
            value: n,
            limit: MAX_ORACLE_DIM,
        });
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Partition sum over a cycle graph: every partition, its Wigner weight,
/// and the injective trace of its deterministic part by Möbius inversion
/// over a shared table of plain traces.
struct PartitionSum {
    t: LabeledGraph,
    a: MatrixGraph,
    partitions: Vec<SetPartition>,
    index: HashMap<SetPartition, usize>,
    traces: Vec<C64>,
    n: usize,
}

impl PartitionSum {
    fn new(monomials: &[Monomial], family: &DetFamily) -> Result<Self> {
        let t = build_cycle_graph(monomials)?;
        let n = family.dim();
        check_caps(t.vertex_count(), n)?;
        let a = MatrixGraph::from_a_edges(&t, family)?;
        let partitions = all_partitions(t.vertex_count())?;
        let index = partitions.iter().cloned().enumerate().map(|(k, p)| (p, k)).collect();
        let traces = par_map(&partitions, |p| graph_trace(&a.quotient(p), n));
        Ok(PartitionSum {
            t,
            a,
            partitions,
            index,
            traces,
            n,
        })
    }

    /// `Tr⁰[T_A^π] = Σ_{ρ ≥ π} Mob(π, ρ) Tr[T_A^ρ]`.
    fn beta_a(&self, pi: &SetPartition) -> C64 {
        if pi.block_count() > self.n {
            return ZERO;
        }
        let mut acc = CompensatedSum::new();
        for_each_partition(pi.block_count(), |outer| {
            let rho = pi.merge(outer);
            let mob = mobius(pi, &rho).expect("coarsening");
            acc.add(self.traces[self.index[&rho]] * mob);
        })
        .expect("within cap");
        acc.value()
    }

    fn scale(&self) -> f64 {
        (self.n as f64).powf(-(self.t.x_edge_count() as f64) / 2.0)
    }

    fn total(&self, ensembles: &[Ensemble], order: u8) -> Result<C64> {
        let scale = self.scale();
        let terms = par_map(&self.partitions, |pi| -> Result<C64> {
            let tq = quotient(&self.t, pi)?;
            let w = weights::omega_x(&tq, ensembles, order)?;
            if w == ZERO {
                return Ok(ZERO);
            }
            Ok(w * scale * self.beta_a(pi))
        });
        let mut acc = CompensatedSum::new();
        for t in terms {
            acc.add(t?);
        }
        Ok(acc.value())
    }
}

fn split_constants(monomials: &[Monomial], family: &DetFamily) -> Result<(Vec<Monomial>, C64)> {
    let mut constant = ONE;
    let mut rest = Vec::new();
    for p in monomials {
        if p.degree() == 0 {
            constant *= family.eval_word(&p.det_words()[0])?.trace();
        } else {
            rest.push(p.clone());
        }
    }
    Ok((rest, constant))
}

/// Exact `E[∏_j Tr M_j]` at `N = family.dim()`.
pub fn exact_moment(monomials: &[Monomial], family: &DetFamily, ensembles: &[Ensemble]) -> Result<C64> {
    let (rest, constant) = split_constants(monomials, family)?;
    if rest.is_empty() {
        return Ok(constant);
    }
    let sum = PartitionSum::new(&rest, family)?;
    Ok(constant * sum.total(ensembles, 1)?)
}

/// Exact `E[Tr p Tr q] − E[Tr p] E[Tr q]`.
pub fn exact_tau2(p: &Monomial, q: &Monomial, family: &DetFamily, ensembles: &[Ensemble]) -> Result<C64> {
    if p.degree() == 0 || q.degree() == 0 {
        return Ok(ZERO);
    }
    let joint = exact_moment(&[p.clone(), q.clone()], family, ensembles)?;
    let ep = exact_moment(std::slice::from_ref(p), family, ensembles)?;
    let eq = exact_moment(std::slice::from_ref(q), family, ensembles)?;
    Ok(joint - ep * eq)
}

/// The same covariance summed directly with second-order weights, plus one
/// diagnostic row per partition with a nonzero weight.
pub fn tau2_partitions(
    p: &Monomial,
    q: &Monomial,
    family: &DetFamily,
    ensembles: &[Ensemble],
) -> Result<(C64, Vec<PartitionDiagnostic>)> {
    let sum = PartitionSum::new(&[p.clone(), q.clone()], family)?;
    let scale = sum.scale();
    let rows = par_map(&sum.partitions, |pi| -> Result<Option<PartitionDiagnostic>> {
        let tq = quotient(&sum.t, pi)?;
        let w = weights::omega_x(&tq, ensembles, 2)?;
        if w == ZERO {
            return Ok(None);
        }
        let report = classify(&tq);
        Ok(Some(PartitionDiagnostic {
            id: sum.index[pi],
            partition: pi.to_string(),
            q: report.q,
            q1: report.components.iter().map(|c| c.q1).sum(),
            q2: report.components.iter().map(|c| c.q2).sum(),
            q2_prime: report.components.iter().map(|c| c.q2_prime).sum(),
            classification: report.components.iter().map(|c| c.classification).collect(),
            beta_x: w * scale,
            beta_a: sum.beta_a(pi),
        }))
    });
    let mut acc = CompensatedSum::new();
    let mut out = Vec::new();
    for r in rows {
        if let Some(d) = r? {
            acc.add(d.beta_x * d.beta_a);
            out.push(d);
        }
    }
    debug_assert_eq!(sum.a.vertices, sum.t.vertex_count());
    Ok((acc.value(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EntryLaw, Preset, RealLaw};
    use crate::state::{circulant, diagonal_pattern};
    use crate::words::WignerId;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    fn family(n: usize) -> DetFamily {
        let a0 = diagonal_pattern(n, &[c(1.0), c(-0.5), c(2.0)]).unwrap();
        let a1 = circulant(n, &[c(0.5), C64::new(0.0, 1.0), c(0.25)]).unwrap();
        DetFamily::unchecked(n, vec![a0, a1])
    }

    #[test]
    fn traces_of_small_graphs() {
        let n = 3;
        let f = family(n);
        let a = f.matrices()[1].clone();
        let m = Arc::new(a.clone());
        // loop on one vertex: Tr A
        let lp = MatrixGraph { vertices: 1, edges: vec![(0, 0, m.clone())] };
        assert!(close(graph_trace(&lp, n), a.trace(), 1e-14));
        assert!(close(injective_trace(&lp, n, TraceMethod::Mobius).unwrap(), a.trace(), 1e-14));
        // single edge: Σ_{i≠j} A_ij
        let edge = MatrixGraph { vertices: 2, edges: vec![(0, 1, m.clone())] };
        let mut off = ZERO;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)];
                }
            }
        }
        for method in [TraceMethod::Mobius, TraceMethod::Direct] {
            assert!(close(injective_trace(&edge, n, method).unwrap(), off, 1e-14));
        }
        // a directed 3-cycle is Tr(A³) with the orientation of the entries
        let cyc = MatrixGraph {
            vertices: 3,
            edges: vec![(1, 0, m.clone()), (2, 1, m.clone()), (0, 2, m.clone())],
        };
        let a3 = a.matmul(&a).matmul(&a).trace();
        assert!(close(graph_trace(&cyc, n), a3, 1e-13));
        assert!(close(graph_trace_direct(&cyc, n), a3, 1e-13));
    }

    #[test]
    fn injective_paths_agree_and_trace_is_sum_over_quotients() {
        let n = 4;
        let f = family(n);
        let m0 = Arc::new(f.matrices()[0].clone());
        let m1 = Arc::new(f.matrices()[1].clone());
        let g = MatrixGraph {
            vertices: 4,
            edges: vec![(0, 1, m1.clone()), (1, 2, m0.clone()), (2, 0, m1.clone()), (3, 2, m1.clone()), (3, 3, m0)],
        };
        let mob = injective_trace(&g, n, TraceMethod::Mobius).unwrap();
        let dir = injective_trace(&g, n, TraceMethod::Direct).unwrap();
        assert!(close(mob, dir, 1e-12), "{mob} vs {dir}");
        // Σ_π Tr⁰[S^π] = Tr[S]
        let mut acc = ZERO;
        for_each_partition(4, |p| {
            acc += injective_trace(&g.quotient(p), n, TraceMethod::Direct).unwrap();
        })
        .unwrap();
        assert!(close(acc, graph_trace(&g, n), 1e-12));
        assert!(close(graph_trace(&g, n), graph_trace_direct(&g, n), 1e-12));
        // more vertices than labels: no injective map
        let big = MatrixGraph { vertices: 5, edges: vec![(0, 1, m1)] };
        assert_eq!(injective_trace(&big, n, TraceMethod::Direct).unwrap(), ZERO);
    }

    #[test]
    fn second_moment_of_a_wigner_matrix() {
        for (preset, eta) in [(Preset::Gue, 1.0), (Preset::Goe, 2.0), (Preset::Rademacher, 1.0)] {
            let ens = vec![Ensemble::preset(WignerId(1), preset)];
            for n in [2usize, 5, 9] {
                let f = DetFamily::identity(n);
                let x2 = Monomial::power(WignerId(1), 2);
                let v = exact_moment(&[x2], &f, &ens).unwrap();
                assert!(close(v, c(n as f64 - 1.0 + eta), 1e-12), "{preset:?} N={n}: {v}");
                let x = Monomial::power(WignerId(1), 1);
                assert_eq!(exact_moment(&[x.clone()], &f, &ens).unwrap(), ZERO);
                let tau = exact_tau2(&x, &x, &f, &ens).unwrap();
                assert!(close(tau, c(eta), 1e-12), "{tau}");
            }
        }
    }

    #[test]
    fn partition_sum_matches_brute_force() {
        // every index labeling at N = 3, expectations by exact moments
        let n = 3;
        let f = family(n);
        let law = EntryLaw::Discrete {
            support: vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)],
            weights: vec![0.25; 4],
        };
        let ens = vec![
            Ensemble::new(WignerId(1), law, RealLaw::rademacher(1.5)).unwrap(),
            Ensemble::preset(WignerId(2), Preset::Goe),
        ];
        let ps = [Monomial::parse("x1 a0 x2 a1").unwrap(), Monomial::parse("x1 a1^t x1").unwrap()];
        let exact = exact_moment(&ps, &f, &ens).unwrap();
        let t = build_cycle_graph(&ps).unwrap();
        let a = MatrixGraph::from_a_edges(&t, &f).unwrap();
        // brute force: Σ_ψ E[r_X(ψ)] r_A(ψ), with E[r_X] from the kernel of ψ
        let mut psi = vec![0usize; t.vertex_count()];
        let mut acc = ZERO;
        let scale = (n as f64).powf(-(t.x_edge_count() as f64) / 2.0);
        loop {
            let pi = SetPartition::from_labels(&psi);
            let tq = quotient(&t, &pi).unwrap();
            let w = weights::omega_x(&tq, &ens, 1).unwrap();
            let r = a.edges.iter().fold(ONE, |p, (s, tr, m)| p * m[(psi[*tr], psi[*s])]);
            acc += w * r * scale;
            let mut p = psi.len();
            let done = loop {
                if p == 0 {
                    break true;
                }
                p -= 1;
                psi[p] += 1;
                if psi[p] < n {
                    break false;
                }
                psi[p] = 0;
            };
            if done {
                break;
            }
        }
        assert!(close(exact, acc, 1e-12), "{exact} vs {acc}");
    }

    #[test]
    fn second_order_weights_give_the_same_covariance() {
        let n = 5;
        let f = family(n);
        let ens = vec![Ensemble::preset(WignerId(1), Preset::Rademacher)];
        let p = Monomial::parse("x1 a0 x1 a1").unwrap();
        let q = Monomial::parse("x1 a1 x1").unwrap();
        let direct = exact_tau2(&p, &q, &f, &ens).unwrap();
        let (via_weights, rows) = tau2_partitions(&p, &q, &f, &ens).unwrap();
        assert!(close(direct, via_weights, 1e-10), "{direct} vs {via_weights}");
        assert!(!rows.is_empty());
    }

    #[test]
    fn caps() {
        let f = DetFamily::identity(17);
        let ens = vec![Ensemble::preset(WignerId(1), Preset::Gue)];
        let x = Monomial::power(WignerId(1), 2);
        assert!(matches!(exact_moment(&[x.clone()], &f, &ens), Err(Error::CapExceeded { .. })));
        let f = DetFamily::identity(3);
        let x6 = Monomial::power(WignerId(1), 6);
        assert!(matches!(exact_moment(&[x6], &f, &ens), Err(Error::CapExceeded { .. })));
    }
}
