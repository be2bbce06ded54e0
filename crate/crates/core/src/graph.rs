//! Coupling-graph emission in DOT format.
//!
//! Nodes are operators; an edge connects two operators that appear together
//! inside a common Trotterized term. Without a partition a multi-operator
//! global term couples everything; with one, each sub-block forms a clique
//! and the rotated global term ties the block leaders together.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::plan::{doc_of_shape, HamiltonianShape, Partition};

#[derive(Debug, Clone)]
pub struct CouplingGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CouplingGraph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.contains(&key)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    fn add_clique(&mut self, members: &[usize]) {
        for (idx, &a) in members.iter().enumerate() {
            for &b in &members[idx + 1..] {
                let key = if a < b { (a, b) } else { (b, a) };
                self.edges.insert(key);
            }
        }
    }

    /// Render as an undirected DOT graph with deterministic ordering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph coupling {\n");
        for i in 1..=self.n {
            out.push_str(&format!("  O{i};\n"));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("  O{a} -- O{b};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Build the coupling graph of a shape, optionally after a block rotation.
/// Operators are labeled 1..=N.
pub fn coupling_graph(
    shape: &HamiltonianShape,
    partition: Option<&Partition>,
) -> Result<CouplingGraph> {
    let report = doc_of_shape(shape, partition)?;
    let n = shape.n_ops;
    let mut graph = CouplingGraph {
        n,
        edges: BTreeSet::new(),
    };
    match partition {
        None => {
            // A global term couples operators pairwise once its DoC admits
            // at least two of them in one exponential.
            if report.doc_original >= 2 && n >= 2 {
                let all: Vec<usize> = (1..=n).collect();
                graph.add_clique(&all);
            }
        }
        Some(p) => {
            for (&off, &d) in p.offsets().iter().zip(p.block_dims()) {
                let members: Vec<usize> = (off..off + d).collect();
                graph.add_clique(&members);
            }
            if report.per_term.iter().any(|t| t.term.starts_with("global") && t.doc >= 2) {
                graph.add_clique(p.offsets());
            }
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::TermDegree;

    fn shape(n: usize) -> HamiltonianShape {
        HamiltonianShape {
            n_ops: n,
            local_f_degree: TermDegree::NonPolynomial,
            local_g_degree: TermDegree::Polynomial(2),
            global_f_degree: TermDegree::NonPolynomial,
            global_g_degree: TermDegree::Polynomial(2),
            qubits_per_op: 2,
        }
    }

    #[test]
    fn unpartitioned_nonpolynomial_is_complete() {
        let g = coupling_graph(&shape(4), None).unwrap();
        assert_eq!(g.edge_count(), 6);
        for a in 1..=4 {
            for b in (a + 1)..=4 {
                assert!(g.has_edge(a, b));
            }
        }
    }

    #[test]
    fn single_operator_has_no_edges() {
        let g = coupling_graph(&shape(1), None).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn partitioned_16_gives_block_cliques_plus_leader_clique() {
        let p = Partition::new(vec![4, 4, 4, 4]).unwrap();
        let g = coupling_graph(&shape(16), Some(&p)).unwrap();
        // 4 cliques of 4 (6 edges each) plus the leader clique {1,5,9,13}.
        assert_eq!(g.edge_count(), 4 * 6 + 6);
        assert!(g.has_edge(1, 4));
        assert!(g.has_edge(1, 5));
        assert!(g.has_edge(5, 9));
        assert!(!g.has_edge(2, 5));
    }

    #[test]
    fn dot_output_is_deterministic() {
        let p = Partition::new(vec![2, 1]).unwrap();
        let g = coupling_graph(&shape(3), Some(&p)).unwrap();
        let dot = g.to_dot();
        assert_eq!(dot, coupling_graph(&shape(3), Some(&p)).unwrap().to_dot());
        assert!(dot.starts_with("graph coupling {"));
        assert!(dot.contains("O1 -- O2;"));
        assert!(dot.contains("O1 -- O3;"));
    }
}
