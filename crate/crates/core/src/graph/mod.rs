//! Test graphs for trace moments: one directed cycle per monomial, vertex
//! partitions and their quotients, and the topological quantities that
//! decide which quotients survive as `N → ∞`.
//!
//! Letter `k` (counted across all monomials) owns vertices `2k` and
//! `2k+1`. Its Wigner edge runs `2k+1 → 2k` and its deterministic edge runs
//! from the first vertex of the next letter of the same cycle to `2k+1`.
//! An edge `e` contributes the matrix entry `M(ψ(trg e), ψ(src e))`.

pub mod oracle;
pub mod partitions;
pub mod topology;
pub mod weights;

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::words::{DetWord, Monomial, WignerId};

pub use oracle::{exact_moment, exact_tau2, graph_trace, injective_trace, PartitionDiagnostic};
pub use partitions::{bell, for_each_partition, SetPartition};
pub use topology::{bridges, leaves_count, prune, tecc_forest, UGraph};
pub use weights::omega_x;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeClass {
    X,
    A,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: usize,
    pub trg: usize,
    pub class: EdgeClass,
    /// Letter index.
    pub label: usize,
}

/// What each letter index stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Letters {
    pub wigner: Vec<WignerId>,
    pub det: Vec<DetWord>,
    /// Monomial (cycle) of each letter.
    pub cycle_of: Vec<usize>,
    pub cycles: Vec<Range<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    vertices: usize,
    edges: Vec<Edge>,
    letters: Arc<Letters>,
}

/// Disjoint union of one alternating cycle per monomial.
pub fn build_cycle_graph(monomials: &[Monomial]) -> Result<LabeledGraph> {
    let mut wigner = Vec::new();
    let mut det = Vec::new();
    let mut cycle_of = Vec::new();
    let mut cycles = Vec::new();
    for (j, p) in monomials.iter().enumerate() {
        if p.degree() == 0 {
            return Err(Error::DegreeZero);
        }
        let start = wigner.len();
        wigner.extend_from_slice(p.labels());
        det.extend_from_slice(p.det_words());
        cycle_of.extend(std::iter::repeat_n(j, p.degree()));
        cycles.push(start..wigner.len());
    }
    let mut edges = Vec::with_capacity(2 * wigner.len());
    for range in &cycles {
        for k in range.clone() {
            let next = if k + 1 == range.end { range.start } else { k + 1 };
            edges.push(Edge {
                src: 2 * k + 1,
                trg: 2 * k,
                class: EdgeClass::X,
                label: k,
            });
            edges.push(Edge {
                src: 2 * next,
                trg: 2 * k + 1,
                class: EdgeClass::A,
                label: k,
            });
        }
    }
    Ok(LabeledGraph {
        vertices: 2 * wigner.len(),
        edges,
        letters: Arc::new(Letters {
            wigner,
            det,
            cycle_of,
            cycles,
        }),
    })
}

/// Identifies the vertices of each block; labels and multiplicities are
/// kept.
pub fn quotient(t: &LabeledGraph, pi: &SetPartition) -> Result<LabeledGraph> {
    if pi.len() != t.vertices {
        return Err(Error::DimensionMismatch {
            expected: t.vertices,
            found: pi.len(),
        });
    }
    Ok(LabeledGraph {
        vertices: pi.block_count(),
        edges: t
            .edges
            .iter()
            .map(|e| Edge {
                src: pi.block_of(e.src),
                trg: pi.block_of(e.trg),
                ..*e
            })
            .collect(),
        letters: t.letters.clone(),
    })
}

impl LabeledGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn letters(&self) -> &Letters {
        &self.letters
    }

    pub fn cycle_count(&self) -> usize {
        self.letters.cycles.len()
    }

    pub fn x_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(|e| e.class == EdgeClass::X)
    }

    pub fn a_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(|e| e.class == EdgeClass::A)
    }

    pub fn x_edge_count(&self) -> usize {
        self.x_edges().count()
    }

    pub fn undirected(&self) -> UGraph {
        UGraph::new(self.vertices, self.edges.iter().map(|e| (e.src, e.trg)).collect())
    }

    /// `T_A`: same vertices, deterministic edges only.
    pub fn a_graph(&self) -> UGraph {
        UGraph::new(self.vertices, self.a_edges().map(|e| (e.src, e.trg)).collect())
    }

    pub fn x_graph(&self) -> UGraph {
        UGraph::new(self.vertices, self.x_edges().map(|e| (e.src, e.trg)).collect())
    }

    /// Wigner edges grouped by unordered vertex pair (twin edges).
    pub fn twin_groups(&self) -> Vec<TwinGroup> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (id, e) in self.edges.iter().enumerate() {
            if e.class == EdgeClass::X {
                map.entry((e.src.min(e.trg), e.src.max(e.trg))).or_default().push(id);
            }
        }
        map.into_iter()
            .map(|((a, b), edges)| TwinGroup { a, b, edges })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwinGroup {
    pub a: usize,
    pub b: usize,
    /// Indices into [`LabeledGraph::edges`].
    pub edges: Vec<usize>,
}

impl TwinGroup {
    pub fn multiplicity(&self) -> usize {
        self.edges.len()
    }

    pub fn is_loop(&self) -> bool {
        self.a == self.b
    }
}

/// Graph of deterministic components: the quotient's vertices, then one
/// vertex per connected component of `T_A`; Wigner edges with their
/// multiplicity plus one edge from each vertex to its component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gdc {
    pub graph: UGraph,
    /// Vertices `0..x_vertices` are quotient vertices.
    pub x_vertices: usize,
    pub a_component_of: Vec<usize>,
}

impl Gdc {
    pub fn a_components(&self) -> usize {
        self.graph.vertices - self.x_vertices
    }

    /// Multiplicities forgotten.
    pub fn bar(&self) -> UGraph {
        self.graph.simple()
    }

    /// Edges of the pruned bar graph that are Wigner groups.
    pub fn cycle_wigner_groups(&self) -> Vec<(usize, usize)> {
        let (_, edges) = prune(&self.bar());
        edges
            .into_iter()
            .filter(|&(a, b)| a < self.x_vertices && b < self.x_vertices)
            .collect()
    }
}

pub fn gdc(tq: &LabeledGraph) -> Gdc {
    let (count, a_component_of) = tq.a_graph().components();
    let mut edges: Vec<(usize, usize)> = tq.x_edges().map(|e| (e.src, e.trg)).collect();
    edges.extend((0..tq.vertices).map(|v| (v, tq.vertices + a_component_of[v])));
    Gdc {
        graph: UGraph::new(tq.vertices + count, edges),
        x_vertices: tq.vertices,
        a_component_of,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    DoubleTree,
    DoubleUnicyclic,
    TwoFourTree,
    Other,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::DoubleTree => "double_tree",
            Classification::DoubleUnicyclic => "double_unicyclic",
            Classification::TwoFourTree => "two_four_tree",
            Classification::Other => "other",
        })
    }
}

/// One connected component of the quotient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentReport {
    pub vertices: Vec<usize>,
    /// Monomials whose cycle lands in this component.
    pub cycles: Vec<usize>,
    pub q1: f64,
    pub q2: f64,
    pub q2_prime: f64,
    /// Leaves of the t.e.c.c. forest of the component's deterministic part.
    pub leaves: usize,
    pub a_components: usize,
    /// Twin-group sizes, largest first.
    pub x_multiplicities: Vec<usize>,
    pub classification: Classification,
}

impl ComponentReport {
    pub fn q(&self) -> f64 {
        self.q1 + self.q2 + self.q2_prime
    }

    pub fn has_single_edge(&self) -> bool {
        self.x_multiplicities.contains(&1)
    }

    pub fn is_valid(&self) -> bool {
        matches!(
            self.classification,
            Classification::DoubleUnicyclic | Classification::TwoFourTree
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopoReport {
    pub components: Vec<ComponentReport>,
    /// `−|E_X|/2 + 𝔣/2`.
    pub q: f64,
    pub leaves: usize,
    pub x_edges: usize,
}

pub fn classify(tq: &LabeledGraph) -> TopoReport {
    let (count, comp_of) = tq.undirected().components();
    let g = gdc(tq);
    let a = tq.a_graph();
    let forest = topology::tecc_forest(&a);
    // trees of the t.e.c.c. forest are the connected components of T_A
    let (trees, tree_of) = forest.forest.components();
    let mut tree_size = vec![0usize; trees];
    let mut tree_leaves = vec![0usize; trees];
    for v in 0..forest.forest.vertices {
        tree_size[tree_of[v]] += 1;
        if forest.forest.degree(v) == 1 {
            tree_leaves[tree_of[v]] += 1;
        }
    }
    let mut leaves = vec![0usize; count];
    let mut a_comps = vec![0usize; count];
    let mut tree_seen = vec![false; trees];
    for v in 0..tq.vertices {
        let t = tree_of[forest.component_of[v]];
        if !tree_seen[t] {
            tree_seen[t] = true;
            leaves[comp_of[v]] += if tree_size[t] == 1 { 2 } else { tree_leaves[t] };
            a_comps[comp_of[v]] += 1;
        }
    }
    let groups = tq.twin_groups();
    let mut x_count = vec![0usize; count];
    let mut mults: Vec<Vec<usize>> = vec![Vec::new(); count];
    for grp in &groups {
        let c = comp_of[grp.a];
        x_count[c] += grp.multiplicity();
        mults[c].push(grp.multiplicity());
    }
    let mut vertices = vec![Vec::new(); count];
    for v in 0..tq.vertices {
        vertices[comp_of[v]].push(v);
    }
    let mut cycles = vec![Vec::new(); count];
    for e in tq.x_edges() {
        let j = tq.letters.cycle_of[e.label];
        let c = comp_of[e.src];
        if !cycles[c].contains(&j) {
            cycles[c].push(j);
        }
    }
    let components: Vec<ComponentReport> = (0..count)
        .map(|c| {
            let groups_c = mults[c].len() as f64;
            let q1 = groups_c - x_count[c] as f64 / 2.0;
            let q2 = a_comps[c] as f64 - groups_c;
            let q2_prime = leaves[c] as f64 / 2.0 - a_comps[c] as f64;
            let mut m = std::mem::take(&mut mults[c]);
            m.sort_unstable_by(|a, b| b.cmp(a));
            cycles[c].sort_unstable();
            let classification = classify_component(q1, q2, &m);
            ComponentReport {
                vertices: std::mem::take(&mut vertices[c]),
                cycles: std::mem::take(&mut cycles[c]),
                q1,
                q2,
                q2_prime,
                leaves: leaves[c],
                a_components: a_comps[c],
                x_multiplicities: m,
                classification,
            }
        })
        .collect();
    debug_assert_eq!(g.a_components(), a_comps.iter().sum::<usize>());
    let total_leaves: usize = leaves.iter().sum();
    let x_edges = tq.x_edge_count();
    TopoReport {
        components,
        q: (total_leaves as f64 - x_edges as f64) / 2.0,
        leaves: total_leaves,
        x_edges,
    }
}

fn classify_component(q1: f64, q2: f64, mults: &[usize]) -> Classification {
    if mults.iter().any(|&m| m < 2) {
        return Classification::Other;
    }
    let fours = mults.iter().filter(|&&m| m == 4).count();
    let twos = mults.iter().filter(|&&m| m == 2).count();
    match (q1, q2) {
        (q1, q2) if q1 == 0.0 && q2 == 1.0 => Classification::DoubleTree,
        (q1, q2) if q1 == 0.0 && q2 == 0.0 => Classification::DoubleUnicyclic,
        (q1, q2) if q1 == -1.0 && q2 == 1.0 && fours == 1 && twos + 1 == mults.len() => {
            Classification::TwoFourTree
        }
        _ => Classification::Other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TwinKind {
    /// Double unicyclic, every twin pair opposite.
    Opposite,
    /// Double unicyclic, the pairs on the cycle parallel.
    Parallel,
    /// 2-4 tree.
    FourTwo,
}

/// The annular pairing read off a connected valid quotient of two cycles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwinPairing {
    pub kind: TwinKind,
    /// Twin pairs joining the two cycles.
    pub through: usize,
    /// 1-based partner of each Wigner letter.
    pub matching: Vec<usize>,
}

/// For a quotient of exactly two cycles that is connected, of double
/// unicyclic or 2-4 tree type, and whose twin edges share a Wigner id:
/// the pairing of Wigner letters by twinning. Inside the fourfold group
/// of a 2-4 tree, each edge is paired with the opposite edge of the other
/// cycle.
pub fn twin_pairing(tq: &LabeledGraph) -> Option<TwinPairing> {
    if tq.cycle_count() != 2 {
        return None;
    }
    let report = classify(tq);
    let [comp] = report.components.as_slice() else {
        return None;
    };
    if !comp.is_valid() {
        return None;
    }
    let letters = tq.letters();
    let edges = tq.edges();
    let mut matching = vec![0usize; letters.wigner.len()];
    let mut through = 0;
    let mut all_opposite = true;
    let opposite = |i: usize, j: usize| edges[i].src == edges[j].trg && edges[i].trg == edges[j].src;
    for g in tq.twin_groups() {
        let id = letters.wigner[edges[g.edges[0]].label];
        if g.edges.iter().any(|&e| letters.wigner[edges[e].label] != id) {
            return None;
        }
        let pairs: Vec<(usize, usize)> = match g.edges.as_slice() {
            &[e, f] => {
                // loops are their own reverse
                all_opposite &= opposite(e, f);
                vec![(e, f)]
            }
            four @ &[_, _, _, _] => {
                let (first, second): (Vec<usize>, Vec<usize>) =
                    four.iter().partition(|&&e| letters.cycle_of[edges[e].label] == 0);
                if first.len() != 2 {
                    return None;
                }
                let mut out = Vec::new();
                for &e in &first {
                    let f = *second.iter().find(|&&f| opposite(e, f) && !out.iter().any(|&(_, g)| g == f))?;
                    out.push((e, f));
                }
                out
            }
            _ => return None,
        };
        for (e, f) in pairs {
            let (a, b) = (edges[e].label, edges[f].label);
            matching[a] = b + 1;
            matching[b] = a + 1;
            if letters.cycle_of[a] != letters.cycle_of[b] {
                through += 1;
            }
        }
    }
    if through == 0 {
        // no twin pair joins the cycles: X-disconnected
        return None;
    }
    let kind = match comp.classification {
        Classification::TwoFourTree => TwinKind::FourTwo,
        _ if all_opposite => TwinKind::Opposite,
        _ => TwinKind::Parallel,
    };
    Some(TwinPairing { kind, through, matching })
}
