use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// A `k x n` table of permutations of `0..n`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    n: usize,
    k: usize,
    order: Vec<usize>,
    seed: Option<u64>,
}

impl PermutationSet {
    /// Wraps explicit rows, checking that each one is a permutation of `0..n`.
    pub fn from_rows(n: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let mut order = Vec::with_capacity(rows.len() * n);
        let mut seen = vec![false; n];
        for (p, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "permutation row {p} has length {}, expected {n}",
                    row.len()
                )));
            }
            seen.iter_mut().for_each(|s| *s = false);
            for &i in row {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Precondition(format!(
                        "row {p} is not a permutation of 0..{n}"
                    )));
                }
            }
            order.extend_from_slice(row);
        }
        Ok(Self {
            n,
            k: rows.len(),
            order,
            seed: None,
        })
    }

    /// All `n!` permutations of `0..n` in lexicographic order, starting with the identity.
    pub fn exhaustive(n: usize) -> Result<Self> {
        if n > 10 {
            return Err(Error::Precondition(format!(
                "refusing to enumerate {n}! permutations"
            )));
        }
        let mut rows = Vec::new();
        let mut current: Vec<usize> = (0..n).collect();
        loop {
            rows.push(current.clone());
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        Self::from_rows(n, &rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, p: usize) -> &[usize] {
        &self.order[p * self.n..(p + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        (0..self.k).map(move |p| self.row(p))
    }

    pub(crate) fn table(&self) -> &[usize] {
        &self.order
    }
}

/// Draws `k` independent uniform permutations of `0..n` (Fisher–Yates).
///
/// Row `p` is shuffled by a ChaCha8 generator keyed by `seed` on stream `p`,
/// so the table depends only on `(n, k, seed)` and not on how rows are
/// distributed across threads. Duplicates and the identity are allowed.
pub fn make_permutations(n: usize, k: usize, seed: u64) -> PermutationSet {
    let mut order = vec![0usize; k * n];
    if n > 0 {
        order.par_chunks_mut(n).enumerate().for_each(|(p, row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            row.iter_mut().enumerate().for_each(|(i, v)| *v = i);
            row.shuffle(&mut rng);
        });
    }
    PermutationSet {
        n,
        k,
        order,
        seed: Some(seed),
    }
}
