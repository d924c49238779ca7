//! Strongly connected components of small directed graphs.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

/// Components of the digraph with `adjacency[i]` listing the successors of `i`; each
/// component lists its vertices ascending.
pub fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(adjacency.len(), 0);
    let nodes: Vec<_> = (0..adjacency.len()).map(|_| g.add_node(())).collect();
    for (i, succ) in adjacency.iter().enumerate() {
        for &j in succ {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            c.sort_unstable();
            c
        })
        .collect()
}

/// True when every vertex reaches every other one. The empty graph counts as connected.
pub fn is_strongly_connected(adjacency: &[Vec<usize>]) -> bool {
    strongly_connected_components(adjacency).len() <= 1
}
