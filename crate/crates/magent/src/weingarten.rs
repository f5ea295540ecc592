//! Weingarten calculus for unitary Haar averages.
//!
//! Conventions: `T_pi` has matrix elements `prod_t delta(m_t, v_{pi^{-1}(t)})`,
//! so `T_pi T_rho = T_{pi rho}` and `Tr T_pi = d^{cycles(pi)}`. The twirl
//! `E[U^{xk} X U^{t xk}]` is the orthogonal projection of `X` onto the span of
//! the `T_pi`, evaluated through the Gram matrix `G[s, t] = d^{cycles(s^-1 t)}`.
//! `G` is singular for `d < k`, so its pseudo-inverse is used throughout; this
//! keeps every identity exact in the rank-deficient regime as well.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::closed::Rat;
use crate::perm::{enumerate_sym, Permutation};
use crate::state::SchmidtSpectrum;
use crate::{Error, Result};

/// Relative singular-value cutoff for the Gram pseudo-inverse.
const PINV_CUTOFF: f64 = 1e-12;

/// Pseudo-inverse of the `S_k` Gram matrix `d^{cycles(s^-1 t)}`.
pub struct WeingartenTable {
    d: u64,
    k: u32,
    perms: Vec<Permutation>,
    wg: DMatrix<f64>,
}

impl WeingartenTable {
    pub fn new(d: u64, k: u32) -> Result<Self> {
        if !(1..=6).contains(&k) {
            return Err(Error::Budget(format!(
                "Weingarten table supports 1 <= k <= 6, got {k}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let perms = enumerate_sym(k as usize)?;
        let n = perms.len();
        let mut gram = DMatrix::zeros(n, n);
        for (i, s) in perms.iter().enumerate() {
            let si = s.inverse();
            for (j, t) in perms.iter().enumerate() {
                let c = si.compose(t).num_cycles() as u32;
                gram[(i, j)] = (d as f64).powi(c as i32);
            }
        }
        let svd = gram.clone().svd(true, true);
        let cutoff = PINV_CUTOFF * svd.singular_values.max();
        let wg = svd
            .pseudo_inverse(cutoff)
            .map_err(|e| Error::Numerical(format!("Gram pseudo-inverse failed: {e}")))?;
        Ok(Self { d, k, perms, wg })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.wg[(i, j)]
    }

    /// Coefficients of the twirl of `X` on the `T_tau` basis, given the
    /// overlaps `t_sigma = Tr[T_{sigma^-1} X]`.
    pub fn twirl_coefficients(&self, overlaps: &[f64]) -> Result<Vec<f64>> {
        if overlaps.len() != self.perms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} overlaps for k = {}",
                overlaps.len(),
                self.k
            )));
        }
        let v = DMatrix::from_column_slice(overlaps.len(), 1, overlaps);
        // Symmetric Gram: coefficients are Wg^T t = Wg t.
        let c = &self.wg * v;
        Ok(c.column(0).iter().copied().collect())
    }
}

/// `Tr[T_pi Q] = Tr[T_{pi^-1} Q]` for the four-copy Pauli operator
/// `Q = (1/d^2) sum_P P^{x4}`: `d^{cycles}` when every cycle of `pi` has even
/// length (every Pauli squares to the identity), otherwise `d^{cycles - 2}`
/// (only the identity string survives an odd power trace).
pub fn pauli_q_overlap(d: u64, pi: &Permutation) -> Rat {
    let cycles = pi.cycles();
    let c = cycles.len() as i64;
    let all_even = cycles.iter().all(|cy| cy.len() % 2 == 0);
    let exp = if all_even { c } else { c - 2 };
    let base = Rat::from(BigInt::from(d));
    if exp >= 0 {
        num_traits::pow::pow(base, exp as usize)
    } else {
        num_traits::pow::pow(base, (-exp) as usize).recip()
    }
}

/// Exact Haar mean of the stabilizer purity via the symmetric-subspace
/// projector: `E[psi^{x4}] = Pi_sym / C(d+3, 4)` and
/// `E[SP] = d Tr[Q Pi_sym] / C(d+3, 4)`.
pub fn haar_mean_sp_symmetric(d: u64) -> Result<Rat> {
    let perms = enumerate_sym(4)?;
    let total: Rat = perms.iter().map(|p| pauli_q_overlap(d, p)).sum();
    // 4! C(d+3, 4) = d (d+1) (d+2) (d+3).
    let denom: BigInt = (0..4u64).map(|i| BigInt::from(d + i)).product();
    Ok(Rat::from(BigInt::from(d)) * total / BigRational::from(denom))
}

/// `sum_v prod_t lambda_{v_t}` over tuples `v` constant on the cycles of
/// `rho^-1 tau`: the Schmidt-overlap factor of the two-sided twirl.
fn schmidt_overlap(tau: &Permutation, rho: &Permutation, spectrum: &SchmidtSpectrum) -> f64 {
    rho.inverse()
        .compose(tau)
        .cycles()
        .iter()
        .map(|c| spectrum.sum_pow(c.len() as u32))
        .product()
}

/// Brute-force oracle for [`schmidt_overlap`]: the defining constrained sum
/// over index tuples.
#[cfg(test)]
fn schmidt_overlap_dense(tau: &Permutation, rho: &Permutation, spectrum: &SchmidtSpectrum) -> f64 {
    let k = tau.degree();
    let da = spectrum.len();
    let ti = tau.inverse();
    let ri = rho.inverse();
    let mut total = 0.0;
    let mut v = vec![0usize; k];
    'outer: loop {
        let consistent = (0..k).all(|t| v[ti.apply(t)] == v[ri.apply(t)]);
        if consistent {
            total += (0..k).map(|t| spectrum.lambdas()[v[t]]).product::<f64>();
        }
        for slot in (0..k).rev() {
            v[slot] += 1;
            if v[slot] < da {
                continue 'outer;
            }
            v[slot] = 0;
        }
        break;
    }
    total
}

/// Schmidt-orbit average of `M_lin` evaluated by the two-sided Weingarten
/// twirl — an evaluation path that shares nothing with the closed-form
/// coefficient polynomials.
pub fn orbit_average_weingarten(da: u64, db: u64, spectrum: &SchmidtSpectrum) -> Result<f64> {
    if spectrum.len() > da as usize {
        return Err(Error::DimensionMismatch(format!(
            "{} Schmidt values for d_A = {da}",
            spectrum.len()
        )));
    }
    let wa = WeingartenTable::new(da, 4)?;
    let wb = WeingartenTable::new(db, 4)?;
    let perms = wa.perms();

    let qa: Vec<f64> = perms
        .iter()
        .map(|p| crate::closed::to_f64(&pauli_q_overlap(da, p)))
        .collect();
    let qb: Vec<f64> = perms
        .iter()
        .map(|p| crate::closed::to_f64(&pauli_q_overlap(db, p)))
        .collect();
    let a = wa.twirl_coefficients(&qa)?;
    let b = wb.twirl_coefficients(&qb)?;

    let mut inner = 0.0;
    for (i, tau) in perms.iter().enumerate() {
        for (j, rho) in perms.iter().enumerate() {
            inner += a[i] * b[j] * schmidt_overlap(tau, rho, spectrum);
        }
    }
    Ok(1.0 - (da * db) as f64 * inner)
}
