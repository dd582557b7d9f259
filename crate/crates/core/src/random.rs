//! Seeded random coupling matrices for property checks.
//!
//! Erdős–Rényi edges with probability 1/2 and weights uniform in `(0, 1]`,
//! rejection-sampled until the graph is connected (symmetric case) or
//! strongly connected (directed case). Each case draws from its own ChaCha
//! stream, so batches give the same matrices whatever order they run in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serde::Serialize;

use crate::conditions::proposition1_holds;
use crate::error::Result;
use crate::linalg::{
    left_null_vector, negativity_tolerance, scc_condensation, sym_eigen, symmetrize_weighted,
};
use crate::model::{pinned_matrix, validate_coupling, CouplingMatrix, PinPlan};

const EDGE_PROBABILITY: f64 = 0.5;

/// Independent stream for case `case` of a batch seeded with `seed`.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

fn weight(rng: &mut impl Rng) -> f64 {
    // (0, 1]
    1.0 - rng.gen::<f64>()
}

fn with_diagonal(mut rows: Vec<Vec<f64>>) -> CouplingMatrix {
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 0.0;
        // Summing the off-diagonals and negating keeps the row sum at rounding level.
        let off: f64 = row.iter().sum();
        row[i] = -off;
    }
    validate_coupling(&rows).expect("generated matrix satisfies coupling constraints")
}

/// Symmetric, connected coupling matrix on `m` nodes.
pub fn symmetric_coupling(rng: &mut impl Rng, m: usize) -> CouplingMatrix {
    loop {
        let mut rows = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                if rng.gen_bool(EDGE_PROBABILITY) {
                    let w = weight(rng);
                    rows[i][j] = w;
                    rows[j][i] = w;
                }
            }
        }
        let a = with_diagonal(rows);
        if scc_condensation(&a).is_irreducible() {
            return a;
        }
    }
}

/// Irreducible coupling matrix on `m` nodes with independently drawn directed edges.
pub fn irreducible_coupling(rng: &mut impl Rng, m: usize) -> CouplingMatrix {
    loop {
        let mut rows = vec![vec![0.0; m]; m];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                if i != j && rng.gen_bool(EDGE_PROBABILITY) {
                    *entry = weight(rng);
                }
            }
        }
        let a = with_diagonal(rows);
        if scc_condensation(&a).is_irreducible() {
            return a;
        }
    }
}

/// Outcome of [`property_batch`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertySummary {
    pub seed: u64,
    pub cases: u64,
    /// Random symmetric networks whose pinned matrix has a nonnegative top eigenvalue.
    pub symmetric_failures: Vec<u64>,
    /// Random irreducible networks where the weighted pinned matrix is not negative definite.
    pub weighted_failures: Vec<u64>,
}

impl PropertySummary {
    pub fn passed(&self) -> bool {
        self.symmetric_failures.is_empty() && self.weighted_failures.is_empty()
    }
}

/// Draws `cases` random networks with 2 to 10 nodes, pins a random node with
/// `ε ∈ (0, 5]`, and checks that the pinned matrix is negative definite
/// (plain for symmetric coupling, Perron-weighted for directed coupling).
pub fn property_batch(seed: u64, cases: u64) -> Result<PropertySummary> {
    let mut out = PropertySummary {
        seed,
        cases,
        symmetric_failures: Vec::new(),
        weighted_failures: Vec::new(),
    };
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let m = rng.gen_range(2..=10);
        let pin = PinPlan::new(rng.gen_range(1..=m), 5.0 * weight(&mut rng), 1.0)?;

        let sym = symmetric_coupling(&mut rng, m);
        let (v, _) = proposition1_holds(&pinned_matrix(&sym, &pin)?)?;
        if !v.holds {
            out.symmetric_failures.push(case);
        }

        let dir = irreducible_coupling(&mut rng, m);
        let xi = left_null_vector(&dir, true)?;
        let weighted = symmetrize_weighted(&pinned_matrix(&dir, &pin)?, &xi)?;
        let mu1 = sym_eigen(&weighted)?.largest();
        if !(mu1 < -negativity_tolerance(&weighted)) {
            out.weighted_failures.push(case);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_matrices_are_valid() {
        for case in 0..50 {
            let mut rng = case_rng(1, case);
            let m = rng.gen_range(2..=8);
            let s = symmetric_coupling(&mut rng, m);
            assert!(s.symmetric());
            let a = irreducible_coupling(&mut rng, m);
            assert!(scc_condensation(&a).is_irreducible());
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let a = symmetric_coupling(&mut case_rng(9, 3), 6);
        let b = symmetric_coupling(&mut case_rng(9, 3), 6);
        assert_eq!(a, b);
        let c = symmetric_coupling(&mut case_rng(9, 4), 6);
        assert_ne!(a, c);
    }

    #[test]
    fn small_batch_passes() {
        let summary = property_batch(3, 40).unwrap();
        assert!(summary.passed(), "{summary:?}");
    }
}
