use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use serde::Serialize;

use super::DenseMatrix;

/// Strongly connected components of a coupling graph in block lower-triangular order.
///
/// Node `i` receives from node `j` when `a[i][j] > 0`, so a nonzero entry
/// below the diagonal blocks means a later block listens to an earlier one.
/// Node indices are 0-based; each block is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condensation {
    pub blocks: Vec<Vec<usize>>,
    /// `(receiving block, sending block)` pairs, receiving block always later.
    pub block_edges: BTreeSet<(usize, usize)>,
}

impl Condensation {
    pub fn is_irreducible(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn block_of(&self, node: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&node))
    }

    /// Blocks with no incoming cross-block edge.
    pub fn roots(&self) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&q| !self.block_edges.iter().any(|&(to, _)| to == q))
            .collect()
    }

    /// Concatenated block order; permuting by it gives the block lower-triangular form.
    pub fn permutation(&self) -> Vec<usize> {
        self.blocks.iter().flatten().copied().collect()
    }
}

impl fmt::Display for Condensation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let nodes: Vec<String> = b.iter().map(|i| (i + 1).to_string()).collect();
                format!("{{{}}}", nodes.join(","))
            })
            .collect();
        write!(f, "blocks [{}]", blocks.join(", "))?;
        if !self.block_edges.is_empty() {
            let edges: Vec<String> = self
                .block_edges
                .iter()
                .map(|(to, from)| format!("{}<-{}", to + 1, from + 1))
                .collect();
            write!(f, ", block edges {}", edges.join(" "))?;
        }
        Ok(())
    }
}

/// Tarjan's algorithm, iterative. Components come out sinks-first.
fn tarjan(out: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = out.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // (node, position in its adjacency list)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < out[v].len() {
                let w = out[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

/// Condenses the coupling graph into strongly connected blocks.
///
/// Edges are the strictly positive off-diagonal entries. Blocks are ordered
/// topologically (senders before receivers); ties are broken by smallest node
/// index so the result is canonical.
pub fn scc_condensation(a: &DenseMatrix) -> Condensation {
    let n = a.dim();
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] > 0.0 {
                out[j].push(i);
            }
        }
    }

    let comps = tarjan(&out);
    let mut comp_of = vec![0; n];
    for (cid, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = cid;
        }
    }

    let ncomp = comps.len();
    let mut succ = vec![BTreeSet::new(); ncomp];
    let mut indeg = vec![0usize; ncomp];
    for (j, targets) in out.iter().enumerate() {
        for &i in targets {
            let (cj, ci) = (comp_of[j], comp_of[i]);
            if cj != ci && succ[cj].insert(ci) {
                indeg[ci] += 1;
            }
        }
    }

    // Kahn's algorithm keyed by each component's smallest node.
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..ncomp)
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((comps[c][0], c)))
        .collect();
    let mut position = vec![0; ncomp];
    let mut blocks = Vec::with_capacity(ncomp);
    while let Some(Reverse((_, c))) = ready.pop() {
        position[c] = blocks.len();
        blocks.push(comps[c].clone());
        for &d in &succ[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.push(Reverse((comps[d][0], d)));
            }
        }
    }

    let mut block_edges = BTreeSet::new();
    for (c, targets) in succ.iter().enumerate() {
        for &d in targets {
            block_edges.insert((position[d], position[c]));
        }
    }

    Condensation {
        blocks,
        block_edges,
    }
}
