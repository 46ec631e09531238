//! Undirected multigraph topology: components, bridges, the forest of
//! two-edge-connected components and leaf pruning.

/// Undirected multigraph; loops and parallel edges allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl UGraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.iter().all(|&(a, b)| a < vertices && b < vertices));
        UGraph { vertices, edges }
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for (id, &(a, b)) in self.edges.iter().enumerate() {
            adj[a].push((b, id));
            if a != b {
                adj[b].push((a, id));
            }
        }
        adj
    }

    /// Component id per vertex, numbered by smallest vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        components_avoiding(self, &vec![false; self.edges.len()])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| usize::from(a == v) + usize::from(b == v))
            .sum()
    }

    /// Same vertices, each unordered pair kept once.
    pub fn simple(&self) -> UGraph {
        let mut seen = std::collections::BTreeSet::new();
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .filter(|e| seen.insert(*e))
            .collect();
        UGraph {
            vertices: self.vertices,
            edges,
        }
    }

    pub fn is_forest(&self) -> bool {
        let (c, _) = self.components();
        self.edges.len() + c == self.vertices && self.edges.iter().all(|&(a, b)| a != b)
    }
}

fn components_avoiding(g: &UGraph, removed: &[bool]) -> (usize, Vec<usize>) {
    let adj = g.adjacency();
    let mut comp = vec![usize::MAX; g.vertices];
    let mut count = 0;
    for start in 0..g.vertices {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = count;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(w, id) in &adj[v] {
                if !removed[id] && comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (count, comp)
}

/// `true` at the index of every cutting edge. Parallel edges and loops are
/// never bridges.
pub fn bridges(g: &UGraph) -> Vec<bool> {
    let adj = g.adjacency();
    let mut is_bridge = vec![false; g.edges.len()];
    let mut disc = vec![usize::MAX; g.vertices];
    let mut low = vec![0usize; g.vertices];
    let mut time = 0;
    for root in 0..g.vertices {
        if disc[root] != usize::MAX {
            continue;
        }
        // iterative DFS: (vertex, edge used to enter, next adjacency slot)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(top) = stack.len().checked_sub(1) {
            let (v, parent_edge, slot) = stack[top];
            if slot < adj[v].len() {
                let (w, id) = adj[v][slot];
                stack[top].2 += 1;
                if id == parent_edge {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, id, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(u, _, _)) = stack.last() {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        is_bridge[parent_edge] = true;
                    }
                }
            }
        }
    }
    is_bridge
}

/// Forest whose vertices are the two-edge-connected components and whose
/// edges are the bridges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeccForest {
    /// Component of each original vertex.
    pub component_of: Vec<usize>,
    pub forest: UGraph,
}

pub fn tecc_forest(g: &UGraph) -> TeccForest {
    let cut = bridges(g);
    let (count, component_of) = components_avoiding(g, &cut);
    let edges = g
        .edges
        .iter()
        .zip(&cut)
        .filter(|(_, &c)| c)
        .map(|(&(a, b), _)| (component_of[a], component_of[b]))
        .collect();
    TeccForest {
        component_of,
        forest: UGraph::new(count, edges),
    }
}

/// Leaves of the t.e.c.c. forest; a tree reduced to one vertex counts 2.
/// An isolated vertex of `g` is such a tree.
pub fn leaves_count(g: &UGraph) -> usize {
    let t = tecc_forest(g);
    let f = &t.forest;
    let (trees, tree_of) = f.components();
    let mut size = vec![0usize; trees];
    for &c in &tree_of {
        size[c] += 1;
    }
    let mut leaves = vec![0usize; trees];
    for v in 0..f.vertices {
        if f.degree(v) == 1 {
            leaves[tree_of[v]] += 1;
        }
    }
    (0..trees).map(|c| if size[c] == 1 { 2 } else { leaves[c] }).sum()
}

/// Deletes vertices of degree ≤ 1 (and their edge) until none are left.
/// Returns the surviving vertices in increasing order and the surviving
/// edges in the original numbering.
pub fn prune(g: &UGraph) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut alive_v = vec![true; g.vertices];
    let mut alive_e = vec![true; g.edges.len()];
    let mut deg: Vec<usize> = (0..g.vertices).map(|v| g.degree(v)).collect();
    loop {
        let leaf = (0..g.vertices).find(|&v| alive_v[v] && deg[v] <= 1);
        let Some(v) = leaf else { break };
        alive_v[v] = false;
        for (id, &(a, b)) in g.edges.iter().enumerate() {
            if alive_e[id] && (a == v || b == v) {
                alive_e[id] = false;
                deg[a] -= 1;
                deg[b] -= 1;
            }
        }
    }
    let vertices = (0..g.vertices).filter(|&v| alive_v[v]).collect();
    let edges = g
        .edges
        .iter()
        .zip(&alive_e)
        .filter(|(_, &a)| a)
        .map(|(&e, _)| e)
        .collect();
    (vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangles_with_bridge() -> UGraph {
        UGraph::new(6, vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
    }

    #[test]
    fn bridge_between_triangles() {
        let g = triangles_with_bridge();
        let b = bridges(&g);
        assert_eq!(b, vec![false, false, false, false, false, false, true]);
        let t = tecc_forest(&g);
        assert_eq!(t.forest.vertices, 2);
        assert_eq!(t.forest.edges.len(), 1);
        assert_eq!(leaves_count(&g), 2);
    }

    #[test]
    fn conventions() {
        // one two-edge-connected component
        assert_eq!(leaves_count(&UGraph::new(3, vec![(0, 1), (1, 2), (2, 0)])), 2);
        // isolated vertex and a loop both count as trivial trees
        assert_eq!(leaves_count(&UGraph::new(1, vec![])), 2);
        assert_eq!(leaves_count(&UGraph::new(1, vec![(0, 0)])), 2);
        // a doubled edge is not a bridge
        assert_eq!(bridges(&UGraph::new(2, vec![(0, 1), (1, 0)])), vec![false, false]);
        // path on four vertices: three bridges, two leaves
        let path = UGraph::new(4, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(bridges(&path), vec![true; 3]);
        assert_eq!(leaves_count(&path), 2);
        // star with three arms
        assert_eq!(leaves_count(&UGraph::new(4, vec![(0, 1), (0, 2), (0, 3)])), 3);
    }

    #[test]
    fn pruning() {
        let tree = UGraph::new(5, vec![(0, 1), (1, 2), (1, 3), (3, 4)]);
        let (v, e) = prune(&tree);
        assert!(v.is_empty() && e.is_empty());
        // triangle with a pendant path keeps the triangle
        let g = UGraph::new(5, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]);
        let (v, e) = prune(&g);
        assert_eq!(v, vec![0, 1, 2]);
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn forest_predicate() {
        assert!(UGraph::new(3, vec![(0, 1)]).is_forest());
        assert!(!UGraph::new(2, vec![(0, 1), (0, 1)]).is_forest());
        assert!(UGraph::new(2, vec![(0, 1), (0, 1)]).simple().is_forest());
    }
}
