//! Symmetric-group utilities: enumeration, cycle structure, conjugacy-class
//! bookkeeping, and traces of permutation operators against tensor factors.
//!
//! The trace convention is fixed by the tuple sum
//! `Tr[T_pi (A_1 x ... x A_k)] = sum_v prod_j A_j[v_{pi(j)}, v_j]`,
//! which factorizes over cycles into ordinary matrix-product traces. The
//! dense tuple sum is kept as an oracle for the factorized evaluation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;

use crate::{Error, Result};

/// Cap on the degree for full symmetric-group enumeration (8! = 40320).
pub const MAX_SYM_DEGREE: usize = 8;

/// A permutation of `{0, ..., k-1}` stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Self { map: (0..k).collect() }
    }

    pub fn from_images(map: Vec<usize>) -> Result<Self> {
        let k = map.len();
        let mut seen = vec![false; k];
        for &v in &map {
            if v >= k || seen[v] {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation of 0..{k}: {map:?}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    /// Build from disjoint cycles in 0-based notation; unmentioned points are
    /// fixed.
    pub fn from_cycles(k: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut map: Vec<usize> = (0..k).collect();
        for cycle in cycles {
            for w in 0..cycle.len() {
                let from = cycle[w];
                let to = cycle[(w + 1) % cycle.len()];
                if from >= k || to >= k {
                    return Err(Error::InvalidArgument(format!(
                        "cycle point out of range for degree {k}"
                    )));
                }
                map[from] = to;
            }
        }
        Self::from_images(map)
    }

    pub fn degree(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.map
    }

    /// `(self . other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        debug_assert_eq!(self.degree(), other.degree());
        Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut map = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            map[v] = i;
        }
        Permutation { map }
    }

    /// Disjoint cycles, each starting at its smallest point, ordered by that
    /// point. Fixed points are included as 1-cycles.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let k = self.map.len();
        let mut seen = vec![false; k];
        let mut out = Vec::new();
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = self.map[start];
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.map[cur];
            }
            out.push(cycle);
        }
        out
    }

    pub fn num_cycles(&self) -> usize {
        self.cycles().len()
    }

    /// Cycle lengths sorted descending — the conjugacy-class label.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(|c| c.len()).collect();
        t.sort_unstable_by(|a, b| b.cmp(a));
        t
    }
}

/// All of `S_k` in lexicographic order of image lists. `k <= 8`.
pub fn enumerate_sym(k: usize) -> Result<Vec<Permutation>> {
    if k == 0 || k > MAX_SYM_DEGREE {
        return Err(Error::Budget(format!(
            "symmetric-group enumeration supports 1 <= k <= {MAX_SYM_DEGREE}, got {k}"
        )));
    }
    let mut out = Vec::with_capacity((1..=k).product());
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; k];
    fn rec(k: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        if current.len() == k {
            out.push(Permutation { map: current.clone() });
            return;
        }
        for v in 0..k {
            if !used[v] {
                used[v] = true;
                current.push(v);
                rec(k, current, used, out);
                current.pop();
                used[v] = false;
            }
        }
    }
    rec(k, &mut current, &mut used, &mut out);
    Ok(out)
}

/// Conjugacy-class sizes of `S_k`, keyed by cycle type.
pub fn class_sizes(k: usize) -> Result<BTreeMap<Vec<usize>, u64>> {
    let mut out = BTreeMap::new();
    for p in enumerate_sym(k)? {
        *out.entry(p.cycle_type()).or_insert(0) += 1;
    }
    Ok(out)
}

/// Rising factorial `d (d+1) ... (d+k-1)`, the normalization
/// `sum_{pi in S_k} d^{cycles(pi)}` of Haar moment formulas.
pub fn haar_moment_normalization(d: u64, k: u32) -> BigInt {
    let mut acc = BigInt::from(1);
    for i in 0..k as u64 {
        acc *= BigInt::from(d + i);
    }
    acc
}

fn check_square_same_dim(mats: &[DMatrix<Complex64>]) -> Result<usize> {
    let d = mats
        .first()
        .ok_or_else(|| Error::InvalidArgument("no tensor factors".into()))?
        .nrows();
    for m in mats {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(
                "tensor factors must be square with a common dimension".into(),
            ));
        }
    }
    Ok(d)
}

/// `Tr[T_pi (A_1 x ... x A_k)]` via cycle factorization: the factor of a
/// cycle `(c_1 -> c_2 -> ... -> c_m)` is `Tr(A_{c_m} ... A_{c_2} A_{c_1})`.
pub fn perm_tensor_trace(pi: &Permutation, mats: &[DMatrix<Complex64>]) -> Result<Complex64> {
    if pi.degree() != mats.len() {
        return Err(Error::DimensionMismatch(format!(
            "permutation degree {} vs {} tensor factors",
            pi.degree(),
            mats.len()
        )));
    }
    let d = check_square_same_dim(mats)?;
    let mut total = Complex64::new(1.0, 0.0);
    for cycle in pi.cycles() {
        let mut prod = DMatrix::identity(d, d);
        for &j in &cycle {
            prod = &mats[j] * prod;
        }
        total *= prod.trace();
    }
    Ok(total)
}

/// Oracle for the same trace: the defining sum over index tuples,
/// `sum_v prod_j A_j[v_{pi(j)}, v_j]`, with a `d^k` budget.
pub fn perm_tensor_trace_dense(
    pi: &Permutation,
    mats: &[DMatrix<Complex64>],
) -> Result<Complex64> {
    let k = mats.len();
    if pi.degree() != k {
        return Err(Error::DimensionMismatch(format!(
            "permutation degree {} vs {} tensor factors",
            pi.degree(),
            k
        )));
    }
    let d = check_square_same_dim(mats)?;
    let tuples = (d as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    if tuples > 4096 {
        return Err(Error::Budget(format!(
            "dense oracle needs d^k <= 4096, got {d}^{k}"
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut v = vec![0usize; k];
    'outer: loop {
        let mut term = Complex64::new(1.0, 0.0);
        for j in 0..k {
            term *= mats[j][(v[pi.apply(j)], v[j])];
        }
        total += term;
        for slot in (0..k).rev() {
            v[slot] += 1;
            if v[slot] < d {
                continue 'outer;
            }
            v[slot] = 0;
        }
        break;
    }
    Ok(total)
}
