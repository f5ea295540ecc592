//! Exhaustive Clifford-group enumeration for one and two qubits.
//!
//! Elements are generated by breadth-first closure over `H`, `S` and `CNOT`
//! and deduplicated by their tableau — the signed Pauli images of the `X_i`
//! and `Z_i` generators under conjugation — which quotients out the global
//! phase. The projective group sizes are 24 (one qubit) and 11520 (two
//! qubits); the orbit of `|0...0>` recovers the 6 and 60 stabilizer states.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::pauli::PauliString;
use crate::state::{antiflatness, PureState};
use crate::{Error, Result};

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

fn eye(d: usize) -> DMatrix<Complex64> {
    DMatrix::identity(d, d)
}

fn hadamard() -> DMatrix<Complex64> {
    let s = 1.0 / 2.0f64.sqrt();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ],
    )
}

fn phase_gate() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 1.0),
        ],
    )
}

/// CNOT with control on mask bit `c` and target on mask bit `t`.
fn cnot(n: u32, c: u32, t: u32) -> DMatrix<Complex64> {
    let d = 1usize << n;
    let mut m = DMatrix::zeros(d, d);
    for b in 0..d {
        let out = if b >> c & 1 == 1 { b ^ (1 << t) } else { b };
        m[(out, b)] = Complex64::new(1.0, 0.0);
    }
    m
}

fn single_qubit_on(n: u32, q: u32, g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    // Mask bit q counts from the least significant index bit.
    let mut m = eye(1);
    for bit in (0..n).rev() {
        m = if bit == q { kron(&m, g) } else { kron(&m, &eye(2)) };
    }
    m
}

fn generators(n: u32) -> Vec<DMatrix<Complex64>> {
    let mut gens = Vec::new();
    for q in 0..n {
        gens.push(single_qubit_on(n, q, &hadamard()));
        gens.push(single_qubit_on(n, q, &phase_gate()));
    }
    for c in 0..n {
        for t in 0..n {
            if c != t {
                gens.push(cnot(n, c, t));
            }
        }
    }
    gens
}

/// Identify `m P m^dag` as a signed Pauli string; the sign is `+-1` for any
/// Clifford `m`.
fn conjugated_pauli(m: &DMatrix<Complex64>, p: &PauliString) -> Result<(u64, u64, i8)> {
    let n = p.n();
    let c = m * p.matrix() * m.adjoint();
    let x = (0..c.nrows())
        .find(|&r| c[(r, 0)].norm() > 0.5)
        .ok_or_else(|| Error::Numerical("conjugate has no support in column 0".into()))? as u64;
    let v0 = c[(x as usize, 0)];
    let mut z = 0u64;
    for j in 0..n {
        let b = 1usize << j;
        let v = c[(b ^ x as usize, b)] / v0;
        if v.re < 0.0 {
            z |= 1 << j;
        }
    }
    let lead = match (x & z).count_ones() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let s = (v0 / lead).re;
    if (s.abs() - 1.0).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "conjugate of a Pauli is not a signed Pauli (sign {s})"
        )));
    }
    Ok((x, z, if s > 0.0 { 1 } else { -1 }))
}

type Tableau = Vec<(u64, u64, i8)>;

fn tableau(n: u32, m: &DMatrix<Complex64>) -> Result<Tableau> {
    let mut t = Vec::with_capacity(2 * n as usize);
    for q in 0..n {
        t.push(conjugated_pauli(m, &PauliString::new(n, 1 << q, 0)?)?);
        t.push(conjugated_pauli(m, &PauliString::new(n, 0, 1 << q)?)?);
    }
    Ok(t)
}

/// All Clifford unitaries on `n` qubits modulo global phase, `n <= 2`.
/// Each element is returned as one concrete matrix representative.
pub fn enumerate_clifford(n: u32) -> Result<Vec<DMatrix<Complex64>>> {
    if !(1..=2).contains(&n) {
        return Err(Error::Budget(format!(
            "exhaustive Clifford enumeration supports n in {{1, 2}}, got {n}"
        )));
    }
    let gens = generators(n);
    let mut seen: HashMap<Tableau, usize> = HashMap::new();
    let mut elements = Vec::new();
    let start = eye(1 << n);
    seen.insert(tableau(n, &start)?, 0);
    elements.push(start);
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        for g in &gens {
            let next = g * &elements[idx];
            let key = tableau(n, &next)?;
            if !seen.contains_key(&key) {
                seen.insert(key, elements.len());
                queue.push_back(elements.len());
                elements.push(next);
            }
        }
    }
    Ok(elements)
}

fn state_key(amps: &[Complex64]) -> Result<Vec<(i64, i64)>> {
    let lead = amps
        .iter()
        .find(|a| a.norm() > 1e-9)
        .ok_or_else(|| Error::Numerical("zero state".into()))?;
    let phase = lead / lead.norm();
    Ok(amps
        .iter()
        .map(|a| {
            let v = a / phase;
            ((v.re * 1e6).round() as i64, (v.im * 1e6).round() as i64)
        })
        .collect())
}

/// The orbit of `|0...0>` under the Clifford group: all stabilizer states on
/// `n` qubits, deduplicated up to global phase. `n <= 2`.
pub fn stabilizer_states(n: u32) -> Result<Vec<PureState>> {
    let d = 1usize << n;
    let mut zero = vec![Complex64::new(0.0, 0.0); d];
    zero[0] = Complex64::new(1.0, 0.0);
    let zero = PureState::new(zero, d, 1)?;
    let mut seen = HashMap::new();
    let mut states = Vec::new();
    for c in enumerate_clifford(n)? {
        let s = zero.apply(&c)?;
        let key = state_key(s.amps())?;
        if !seen.contains_key(&key) {
            seen.insert(key, ());
            states.push(s);
        }
    }
    Ok(states)
}

/// Average anti-flatness of `rho_A` over the full Clifford orbit of a
/// two-qubit state, with the bipartition taken from the state's shape.
/// Equals `(d^2 - d_A^2)(d_A^2 - 1) / ((d^2 - 1)(d + 2) d_A^2) * M_lin(psi)`.
pub fn clifford_orbit_antiflatness(psi: &PureState) -> Result<f64> {
    let n = psi.num_qubits();
    if psi.da() < 2 || psi.db() < 2 {
        return Err(Error::InvalidArgument(
            "anti-flatness needs a nontrivial bipartition".into(),
        ));
    }
    let (da, db) = (psi.da(), psi.db());
    let mut sum = 0.0;
    let mut comp = 0.0;
    let group = enumerate_clifford(n)?;
    for c in &group {
        let rotated = psi.clone().with_shape(1 << n, 1)?.apply(c)?.with_shape(da, db)?;
        let y = antiflatness(&rotated) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum / group.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed;
    use crate::pauli::{m2, m_lin, stabilizer_purity};
    use crate::state::{golden_state, haar_state, substream};
    use approx::assert_abs_diff_eq;

    #[test]
    fn group_sizes() {
        assert_eq!(enumerate_clifford(1).unwrap().len(), 24);
        assert_eq!(enumerate_clifford(2).unwrap().len(), 11520);
        assert!(enumerate_clifford(3).is_err());
    }

    #[test]
    fn elements_are_unitary_and_closed() {
        let group = enumerate_clifford(1).unwrap();
        let mut keys = HashMap::new();
        for c in &group {
            let res = (c.adjoint() * c - eye(2)).norm();
            assert!(res < 1e-12, "unitarity residual {res}");
            keys.insert(tableau(1, c).unwrap(), ());
        }
        // Products stay inside the set (spot check).
        for (i, j) in [(0usize, 5usize), (3, 17), (10, 23), (7, 7)] {
            let prod = &group[i] * &group[j];
            assert!(keys.contains_key(&tableau(1, &prod).unwrap()));
        }
    }

    #[test]
    fn stabilizer_state_counts() {
        assert_eq!(stabilizer_states(1).unwrap().len(), 6);
        assert_eq!(stabilizer_states(2).unwrap().len(), 60);
    }

    #[test]
    fn purity_is_faithful_on_stabilizer_states() {
        for n in 1..=2u32 {
            for s in stabilizer_states(n).unwrap() {
                assert_abs_diff_eq!(stabilizer_purity(&s).unwrap(), 1.0, epsilon = 1e-10);
                assert!(m_lin(&s).unwrap().abs() < 1e-10);
            }
        }
        assert!(m_lin(&golden_state(2)).unwrap() > 0.1);
    }

    #[test]
    fn magic_is_clifford_invariant() {
        let group = enumerate_clifford(2).unwrap();
        let mut rng = substream(41, 0);
        let psi = haar_state(4, 1, &mut rng).unwrap();
        let base = m2(&psi).unwrap();
        for idx in [1usize, 100, 2000, 7000, 11000] {
            let rotated = psi.apply(&group[idx]).unwrap();
            assert_abs_diff_eq!(m2(&rotated).unwrap(), base, epsilon = 1e-10);
        }
    }

    #[test]
    fn orbit_antiflatness_identity() {
        let pref = closed::to_f64(&closed::clifford_antiflatness_prefactor(2, 2));
        assert_abs_diff_eq!(pref, 0.1, epsilon = 1e-15);

        let golden = golden_state(2).with_shape(2, 2).unwrap();
        let got = clifford_orbit_antiflatness(&golden).unwrap();
        let expect = pref * m_lin(&golden).unwrap();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-10);

        let mut rng = substream(42, 0);
        let psi = haar_state(2, 2, &mut rng).unwrap();
        let got = clifford_orbit_antiflatness(&psi).unwrap();
        let expect = pref * m_lin(&psi.clone().with_shape(4, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-10);

        // Both sides vanish on a stabilizer state.
        let bell = stabilizer_states(2)
            .unwrap()
            .into_iter()
            .map(|s| s.with_shape(2, 2).unwrap())
            .find(|s| crate::state::e_lin(s) > 0.4)
            .unwrap();
        let got = clifford_orbit_antiflatness(&bell).unwrap();
        assert_abs_diff_eq!(got, 0.0, epsilon = 1e-10);
    }
}
