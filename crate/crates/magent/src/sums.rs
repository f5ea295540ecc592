//! Exact permutation sums behind the variance of `M_lin` and the vanishing
//! covariance of `M_lin` with `E_lin`.
//!
//! Two independent evaluation paths are kept for each sum. The first carries
//! a table of per-conjugacy-class polynomials (with class sizes absorbed).
//! The second enumerates the full symmetric group and evaluates every
//! Pauli-string trace product exactly in Gaussian-integer arithmetic; the
//! Pauli sums factorize over qubits, so each permutation contributes a
//! per-qubit Gaussian integer raised to the qubit count. The two paths and
//! the closed-form moments must agree bit-for-bit in `BigRational`.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::closed::{self, Rat};
use crate::perm::{enumerate_sym, haar_moment_normalization, Permutation};
use crate::{Error, Result};

/// Gaussian integer `re + i im`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
struct Gi {
    re: i128,
    im: i128,
}

impl Gi {
    const ZERO: Gi = Gi { re: 0, im: 0 };
    const ONE: Gi = Gi { re: 1, im: 0 };

    fn add(self, o: Gi) -> Gi {
        Gi { re: self.re + o.re, im: self.im + o.im }
    }

    fn mul(self, o: Gi) -> Gi {
        Gi {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    fn pow(self, mut n: u32) -> Gi {
        let mut acc = Gi::ONE;
        let mut base = self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    /// `i^ph * v`.
    fn i_pow_times(ph: u8, v: i128) -> Gi {
        match ph % 4 {
            0 => Gi { re: v, im: 0 },
            1 => Gi { re: 0, im: v },
            2 => Gi { re: -v, im: 0 },
            _ => Gi { re: 0, im: -v },
        }
    }
}

/// A single-qubit Pauli with an `i`-power phase: `i^ph X^x Z^z`.
#[derive(Copy, Clone, Debug)]
struct PhasedPauli {
    x: u8,
    z: u8,
    ph: u8,
}

impl PhasedPauli {
    /// Hermitian representative of the string `(x, z)`.
    fn hermitian(x: u8, z: u8) -> Self {
        Self { x, z, ph: x & z }
    }

    fn identity() -> Self {
        Self { x: 0, z: 0, ph: 0 }
    }

    fn by_index(idx: u8) -> Self {
        Self::hermitian(idx & 1, idx >> 1)
    }

    /// `Z^z X^x' = (-1)^(z x') X^x' Z^z` fixes the reordering phase.
    fn mul(self, o: PhasedPauli) -> PhasedPauli {
        PhasedPauli {
            x: self.x ^ o.x,
            z: self.z ^ o.z,
            ph: (self.ph + o.ph + 2 * (self.z & o.x)) % 4,
        }
    }

    /// Trace in dimension 2: `2 i^ph` for the identity string, else 0.
    fn trace(self) -> Gi {
        if self.x == 0 && self.z == 0 {
            Gi::i_pow_times(self.ph, 2)
        } else {
            Gi::ZERO
        }
    }
}

/// `prod_{cycles (c_1 .. c_m)} Tr(A_{c_m} ... A_{c_1})` for single-qubit
/// phased Paulis assigned to the tensor slots.
fn cycle_trace_product(pi: &Permutation, slots: &[PhasedPauli]) -> Gi {
    let mut total = Gi::ONE;
    for cycle in pi.cycles() {
        let mut prod = PhasedPauli::identity();
        for &j in &cycle {
            prod = slots[j].mul(prod);
        }
        let t = prod.trace();
        if t == Gi::ZERO {
            return Gi::ZERO;
        }
        total = total.mul(t);
    }
    total
}

fn real_big(g: Gi, what: &str) -> Result<BigInt> {
    if g.im != 0 {
        return Err(Error::Numerical(format!(
            "{what}: imaginary residue {} in an exact real sum",
            g.im
        )));
    }
    Ok(BigInt::from(g.re))
}

/// Per-class polynomial results for
/// `sum_{pi in S_8} sum_{P, P'} Tr[(P^{x4} x P'^{x4}) T_pi]`,
/// keyed by cycle type; class sizes are absorbed into the coefficients.
/// Terms are `(coefficient, power of d)`.
fn variance_class_table() -> Vec<(Vec<usize>, Vec<(i64, u32)>)> {
    vec![
        (vec![1, 1, 1, 1, 1, 1, 1, 1], vec![(1, 8)]),
        (vec![2, 1, 1, 1, 1, 1, 1], vec![(28, 7)]),
        (vec![3, 1, 1, 1, 1, 1], vec![(112, 6)]),
        (vec![4, 1, 1, 1, 1], vec![(408, 5), (12, 7)]),
        (vec![5, 1, 1, 1], vec![(1152, 4), (192, 6)]),
        (vec![6, 1, 1], vec![(1920, 3), (1440, 5)]),
        (vec![7, 1], vec![(5760, 4)]),
        (vec![8], vec![(2304, 3), (2736, 5)]),
        (vec![2, 2, 1, 1, 1, 1], vec![(204, 6), (6, 8)]),
        (vec![3, 2, 1, 1, 1], vec![(1024, 5), (96, 7)]),
        (vec![4, 2, 1, 1], vec![(2016, 4), (504, 6)]),
        (vec![2, 2, 2, 1, 1], vec![(384, 5), (36, 7)]),
        (vec![3, 3, 1, 1], vec![(832, 4), (288, 6)]),
        (vec![3, 2, 2, 1], vec![(336, 6), (1344, 4)]),
        (vec![4, 3, 1], vec![(1824, 5), (1536, 3)]),
        (vec![5, 2, 1], vec![(2304, 3), (1728, 5)]),
        (vec![2, 2, 2, 2], vec![(96, 6), (9, 8)]),
        (vec![4, 2, 2], vec![(180, 7), (1080, 5)]),
        (vec![3, 3, 2], vec![(640, 3), (480, 5)]),
        (vec![6, 2], vec![(2496, 4), (864, 6)]),
        (vec![5, 3], vec![(2688, 4)]),
        (vec![4, 4], vec![(864, 4), (396, 6)]),
    ]
}

fn eval_poly(terms: &[(i64, u32)], d: u64) -> BigInt {
    terms
        .iter()
        .map(|&(c, p)| BigInt::from(c) * BigInt::from(d).pow(p))
        .sum()
}

/// `E[SP^2]` from the per-class polynomial table:
/// `S(d) / (d^2 prod_{i=0}^7 (d+i))`.
pub fn second_moment_sp_class_table(n: u32) -> Result<Rat> {
    if n == 0 || n > 16 {
        return Err(Error::InvalidArgument(format!("need 1 <= n <= 16, got {n}")));
    }
    let d = 1u64 << n;
    let s: BigInt = variance_class_table()
        .iter()
        .map(|(_, terms)| eval_poly(terms, d))
        .sum();
    let denom = BigInt::from(d * d) * haar_moment_normalization(d, 8);
    Ok(Rat::new(s, denom))
}

/// Per-permutation single-qubit factor of the `S_8` variance sum:
/// `sum_{a, a'} prod_cycles Tr(...)` with Pauli `a` on slots 0-3 and `a'` on
/// slots 4-7.
fn variance_qubit_factor(pi: &Permutation) -> Gi {
    let mut s = Gi::ZERO;
    for a in 0..4u8 {
        for b in 0..4u8 {
            let pa = PhasedPauli::by_index(a);
            let pb = PhasedPauli::by_index(b);
            let slots = [pa, pa, pa, pa, pb, pb, pb, pb];
            s = s.add(cycle_trace_product(pi, &slots));
        }
    }
    s
}

/// `E[SP^2]` by full `S_8` enumeration with exact phased-Pauli traces; the
/// Pauli sums factorize over qubits, so each permutation contributes its
/// single-qubit Gaussian integer raised to the `n`-th power.
pub fn second_moment_sp_enumeration(n: u32) -> Result<Rat> {
    if n == 0 || n > 8 {
        return Err(Error::Budget(format!(
            "enumeration path keeps i128 exact for 1 <= n <= 8, got {n}"
        )));
    }
    let d = 1u64 << n;
    let mut total = Gi::ZERO;
    for pi in enumerate_sym(8)? {
        total = total.add(variance_qubit_factor(&pi).pow(n));
    }
    let s = real_big(total, "S_8 variance sum")?;
    let denom = BigInt::from(d * d) * haar_moment_normalization(d, 8);
    Ok(Rat::new(s, denom))
}

/// Cross-check the two `E[SP^2]` paths against each other and against the
/// closed-form moment; returns the common value.
pub fn verify_variance_sum(n: u32) -> Result<Rat> {
    let table = second_moment_sp_class_table(n)?;
    let enumerated = second_moment_sp_enumeration(n)?;
    if table != enumerated {
        return Err(Error::Verification(format!(
            "class table {table} != enumeration {enumerated} for E[SP^2] at n = {n}"
        )));
    }
    let closed = closed::second_moment_stabilizer_purity(1 << n);
    if table != closed {
        return Err(Error::Verification(format!(
            "permutation sum {table} != closed form {closed} for E[SP^2] at n = {n}"
        )));
    }
    Ok(table)
}

/// Per-class polynomial results for the `S_6` covariance sum, keyed by cycle
/// type. Terms are `(coefficient, power of d_A, power of d_B)`.
fn covariance_class_table() -> Vec<(Vec<usize>, Vec<(i64, u32, u32)>)> {
    vec![
        (vec![1, 1, 1, 1, 1, 1], vec![(1, 6, 6)]),
        (vec![2, 1, 1, 1, 1], vec![(1, 7, 5), (14, 5, 5)]),
        (vec![3, 1, 1, 1], vec![(8, 6, 4), (32, 4, 4)]),
        (vec![4, 1, 1], vec![(6, 5, 5), (36, 5, 3), (48, 3, 3)]),
        (vec![5, 1], vec![(48, 4, 4), (96, 4, 2)]),
        (vec![6], vec![(72, 5, 3), (48, 3, 3)]),
        (vec![2, 2, 1, 1], vec![(3, 6, 6), (6, 6, 4), (36, 4, 4)]),
        (vec![3, 2, 1], vec![(24, 5, 5), (32, 5, 3), (64, 3, 3)]),
        (vec![4, 2], vec![(30, 6, 4), (12, 4, 4), (48, 4, 2)]),
        (vec![2, 2, 2], vec![(3, 7, 5), (12, 5, 3)]),
        (vec![3, 3], vec![(24, 4, 4), (16, 4, 2)]),
    ]
}

/// `E[Tr(rho_A^2) Tr(Q psi^{x4})]` from the per-class polynomial table:
/// `S(d_A, d_B) / (d^2 d_A prod_{i=0}^5 (d+i))`.
pub fn cross_moment_class_table(na: u32, nb: u32) -> Result<Rat> {
    if na == 0 || nb == 0 || na + nb > 16 {
        return Err(Error::InvalidArgument(format!(
            "need n_A, n_B >= 1 and n_A + n_B <= 16, got ({na}, {nb})"
        )));
    }
    let (da, db) = (1u64 << na, 1u64 << nb);
    let d = da * db;
    let s: BigInt = covariance_class_table()
        .iter()
        .flat_map(|(_, terms)| terms.iter())
        .map(|&(c, pa, pb)| BigInt::from(c) * BigInt::from(da).pow(pa) * BigInt::from(db).pow(pb))
        .sum();
    let denom = BigInt::from(d * d) * BigInt::from(da) * haar_moment_normalization(d, 6);
    Ok(Rat::new(s, denom))
}

/// Per-permutation single-qubit factors of the `S_6` covariance sum. The
/// trace factorizes into an A part (Pauli `P_A` on the two purity slots,
/// `P_A'` on the four operator slots) and a B part (identity on the purity
/// slots, `P_B'` on the operator slots).
fn covariance_qubit_factors(pi: &Permutation) -> (Gi, Gi) {
    let mut a_sum = Gi::ZERO;
    for a in 0..4u8 {
        for ap in 0..4u8 {
            let pa = PhasedPauli::by_index(a);
            let pap = PhasedPauli::by_index(ap);
            let slots = [pa, pa, pap, pap, pap, pap];
            a_sum = a_sum.add(cycle_trace_product(pi, &slots));
        }
    }
    let mut b_sum = Gi::ZERO;
    for bp in 0..4u8 {
        let id = PhasedPauli::identity();
        let pbp = PhasedPauli::by_index(bp);
        let slots = [id, id, pbp, pbp, pbp, pbp];
        b_sum = b_sum.add(cycle_trace_product(pi, &slots));
    }
    (a_sum, b_sum)
}

/// The same cross moment by full `S_6` enumeration: each permutation
/// contributes `a(pi)^{n_A} b(pi)^{n_B}` in exact Gaussian integers.
pub fn cross_moment_enumeration(na: u32, nb: u32) -> Result<Rat> {
    if na == 0 || nb == 0 || na + nb > 10 {
        return Err(Error::Budget(format!(
            "enumeration path keeps i128 exact for n_A + n_B <= 10, got ({na}, {nb})"
        )));
    }
    let (da, db) = (1u64 << na, 1u64 << nb);
    let d = da * db;
    let mut total = Gi::ZERO;
    for pi in enumerate_sym(6)? {
        let (a, b) = covariance_qubit_factors(&pi);
        total = total.add(a.pow(na).mul(b.pow(nb)));
    }
    let s = real_big(total, "S_6 covariance sum")?;
    let denom = BigInt::from(d * d) * BigInt::from(da) * haar_moment_normalization(d, 6);
    Ok(Rat::new(s, denom))
}

/// Cross-check the two cross-moment paths against each other and against the
/// closed form `4 (d_A + d_B) / (d (d+1) (d+3))`, then confirm that the
/// implied covariance of `E_lin` and `M_lin` vanishes exactly. Returns the
/// cross moment.
pub fn verify_covariance_sum(na: u32, nb: u32) -> Result<Rat> {
    let table = cross_moment_class_table(na, nb)?;
    let enumerated = cross_moment_enumeration(na, nb)?;
    if table != enumerated {
        return Err(Error::Verification(format!(
            "class table {table} != enumeration {enumerated} for the cross moment at ({na}, {nb})"
        )));
    }
    let (da, db) = (1u64 << na, 1u64 << nb);
    let d = da * db;
    let closed_value = closed::rat(4, 1) * closed::rat((da + db) as i64, 1)
        / (closed::rat(d as i64, 1) * closed::rat((d + 1) as i64, 1) * closed::rat((d + 3) as i64, 1));
    if table != closed_value {
        return Err(Error::Verification(format!(
            "permutation sum {table} != closed form {closed_value} at ({na}, {nb})"
        )));
    }
    // Cov(E_lin, M_lin) = d E[...] - E[SP] E[Tr rho_A^2]; must vanish.
    let cov = Rat::from(BigInt::from(d)) * &table
        - closed::mean_stabilizer_purity(d) * closed::mean_purity_a(da, db);
    if !cov.is_zero() {
        return Err(Error::Verification(format!(
            "implied covariance {cov} is nonzero at ({na}, {nb})"
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn phased_pauli_algebra() {
        // X Z = -i Y: (XZ) has x=z=1 and phase -i relative to the Hermitian Y.
        let x = PhasedPauli::hermitian(1, 0);
        let z = PhasedPauli::hermitian(0, 1);
        let xz = x.mul(z);
        assert_eq!((xz.x, xz.z, xz.ph), (1, 1, 0));
        let y = PhasedPauli::hermitian(1, 1);
        // Y^2 = I with no phase.
        let y2 = y.mul(y);
        assert_eq!((y2.x, y2.z, y2.ph % 4), (0, 0, 0));
        // Z X = i Y as operators: i^1 X Z with the anticommutation phase.
        let zx = z.mul(x);
        assert_eq!((zx.x, zx.z, zx.ph), (1, 1, 2));
        assert_eq!(x.mul(x).trace(), Gi { re: 2, im: 0 });
        assert_eq!(x.trace(), Gi::ZERO);
    }

    #[test]
    fn variance_class_table_is_complete() {
        let table = variance_class_table();
        assert_eq!(table.len(), 22);
        let classes = crate::perm::class_sizes(8).unwrap();
        for (ty, _) in &table {
            let mut sorted = ty.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            assert!(classes.contains_key(&sorted), "unknown class {ty:?}");
        }
    }

    #[test]
    fn variance_enumeration_matches_class_table_per_class() {
        // Group the enumeration by cycle type and compare each class
        // polynomial at d = 2 and d = 4.
        for n in [1u32, 2] {
            let d = 1u64 << n;
            let mut by_class: BTreeMap<Vec<usize>, Gi> = BTreeMap::new();
            for pi in enumerate_sym(8).unwrap() {
                let v = variance_qubit_factor(&pi).pow(n);
                let e = by_class.entry(pi.cycle_type()).or_insert(Gi::ZERO);
                *e = e.add(v);
            }
            for (ty, terms) in variance_class_table() {
                let mut sorted = ty.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                let got = by_class[&sorted];
                assert_eq!(got.im, 0, "class {ty:?}");
                assert_eq!(
                    BigInt::from(got.re),
                    eval_poly(&terms, d),
                    "class {ty:?} at d = {d}"
                );
            }
        }
    }

    #[test]
    fn variance_paths_and_closed_form_agree() {
        for n in 1..=4u32 {
            let v = verify_variance_sum(n).unwrap();
            assert_eq!(v, closed::second_moment_stabilizer_purity(1 << n));
        }
        assert_eq!(verify_variance_sum(1).unwrap(), closed::rat(68, 105));
    }

    #[test]
    fn covariance_paths_and_closed_form_agree() {
        for (na, nb) in [(1u32, 1u32), (1, 2), (2, 2), (1, 3), (2, 3), (3, 3), (1, 5)] {
            verify_covariance_sum(na, nb).unwrap();
        }
        assert_eq!(verify_covariance_sum(1, 1).unwrap(), closed::rat(4, 35));
    }

    #[test]
    fn cross_moment_is_symmetric_in_the_bipartition() {
        // The purity factor lives on side A in the derivation, yet the closed
        // form 4(d_A + d_B)/(d (d+1) (d+3)) is symmetric, so the exact sums
        // must agree under swapping the split.
        let ab = cross_moment_class_table(1, 2).unwrap();
        let ba = cross_moment_class_table(2, 1).unwrap();
        assert_eq!(ab, ba);
        // But d * E - mean product vanishes either way.
        for (na, nb) in [(1u32, 2u32), (2, 1)] {
            verify_covariance_sum(na, nb).unwrap();
        }
    }

    #[test]
    fn budgets() {
        assert!(second_moment_sp_enumeration(9).is_err());
        assert!(cross_moment_enumeration(6, 6).is_err());
        assert!(second_moment_sp_class_table(0).is_err());
    }
}
