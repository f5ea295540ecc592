//! Bit-level Pauli-string algebra and the stabilizer-entropy kernels.
//!
//! A Pauli string is stored phase-free as an `(x_mask, z_mask)` bit pair; the
//! represented operator is the Hermitian representative, with `(1,1)` on a
//! qubit meaning `Y`. Fourth powers of expectations make any sign convention
//! irrelevant. Mask bit `k` acts on bit `k` of the computational-basis index.
//!
//! The projector-style operator `Q = (1/d^2) sum_P P^{x4}` is never
//! materialized: every `Tr(Q psi^{x4})` is the Pauli-spectrum quartic sum
//! `(1/d) sum_P <P>^4`, an `O(8^n)`-time, `O(d)`-memory computation. The
//! spectrum itself is evaluated per `x_mask` with a Walsh–Hadamard transform
//! over the `z_mask` axis, which brings the cost down to `O(d^2 log d)`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::state::PureState;
use crate::{Error, Result};

/// Default cap on the qubit count for exact stabilizer-purity sums.
pub const DEFAULT_QUBIT_CAP: u32 = 12;

/// An n-qubit Hermitian Pauli string in `(x_mask, z_mask)` encoding.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u32,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(n: u32, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::InvalidArgument(format!("bad qubit count {n}")));
        }
        let low = (1u64 << n) - 1;
        if x_mask & !low != 0 || z_mask & !low != 0 {
            return Err(Error::InvalidArgument(
                "mask uses bits above the qubit count".into(),
            ));
        }
        Ok(Self { n, x_mask, z_mask })
    }

    pub fn identity(n: u32) -> Self {
        Self { n, x_mask: 0, z_mask: 0 }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Iterate over all `4^n` strings, each `(x, z)` pair exactly once.
    pub fn all(n: u32) -> impl Iterator<Item = PauliString> {
        let d = 1u64 << n;
        (0..d).flat_map(move |x| (0..d).map(move |z| PauliString { n, x_mask: x, z_mask: z }))
    }

    /// Letter label, qubit 0 (mask bit 0) first.
    pub fn label(&self) -> String {
        (0..self.n)
            .map(|q| {
                let x = self.x_mask >> q & 1;
                let z = self.z_mask >> q & 1;
                match (x, z) {
                    (0, 0) => 'I',
                    (1, 0) => 'X',
                    (0, 1) => 'Z',
                    _ => 'Y',
                }
            })
            .collect()
    }

    /// Dense matrix of the Hermitian representative.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.n;
        let iphase = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        let lead = iphase[((self.x_mask & self.z_mask).count_ones() % 4) as usize];
        let mut m = DMatrix::zeros(d, d);
        for b in 0..d as u64 {
            let sign = if (b & self.z_mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[((b ^ self.x_mask) as usize, b as usize)] = lead * sign;
        }
        m
    }
}

/// `<psi|P|psi>` in `O(d)` time via the bit-masked action of `P`.
pub fn pauli_expectation(p: PauliString, psi: &PureState) -> Result<f64> {
    if 1usize << p.n() != psi.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Pauli string on {} qubits, state dimension {}",
            p.n(),
            psi.dim()
        )));
    }
    let norm2: f64 = psi.amps().iter().map(|a| a.norm_sqr()).sum();
    let dev = (norm2.sqrt() - 1.0).abs();
    if dev > crate::state::NORM_TOL {
        return Err(Error::NotNormalized(dev));
    }
    let lead = (p.x_mask() & p.z_mask()).count_ones() % 4;
    let amps = psi.amps();
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, a) in amps.iter().enumerate() {
        let sign = if ((b as u64) & p.z_mask()).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        acc += amps[b ^ p.x_mask() as usize].conj() * a * sign;
    }
    let val = match lead {
        0 => acc,
        1 => Complex64::new(0.0, 1.0) * acc,
        2 => -acc,
        _ => Complex64::new(0.0, -1.0) * acc,
    };
    debug_assert!(val.im.abs() < 1e-10, "Hermitian expectation came out complex");
    Ok(val.re)
}

/// Power sums of the Pauli spectrum of a pure state.
#[derive(Copy, Clone, Debug)]
pub struct PauliSpectrumSummary {
    /// Hilbert dimension.
    pub d: usize,
    /// `sum_P <P>^2`; equals `d` for any normalized pure state.
    pub sum_sq: f64,
    /// `sum_P <P>^4`; lies in `[1, d]`.
    pub sum_quartic: f64,
}

#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// In-place Walsh–Hadamard transform (unnormalized).
fn wht(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let a = buf[j];
                let b = buf[j + h];
                buf[j] = a + b;
                buf[j + h] = a - b;
            }
            i += 2 * h;
        }
        h *= 2;
    }
}

/// Sequential spectrum kernel for a single `x_mask`; returns the partial
/// `(sum of <P>^2, sum of <P>^4)` over all `z_mask` values.
fn spectrum_partial(amps: &[Complex64], x: usize, scratch: &mut Vec<Complex64>) -> (f64, f64) {
    let d = amps.len();
    scratch.clear();
    scratch.extend((0..d).map(|b| amps[b ^ x].conj() * amps[b]));
    wht(scratch);
    let mut s2 = Kahan::default();
    let mut s4 = Kahan::default();
    for (z, g) in scratch.iter().enumerate() {
        let p = ((x as u64) & (z as u64)).count_ones() % 4;
        // Re(i^p * g); the expectation of a Hermitian representative is real.
        let val = match p {
            0 => g.re,
            1 => -g.im,
            2 => -g.re,
            _ => g.im,
        };
        let v2 = val * val;
        s2.add(v2);
        s4.add(v2 * v2);
    }
    (s2.sum, s4.sum)
}

/// Full Pauli-spectrum power sums, parallel over `x_mask` ranges.
///
/// The `4^n` strings are partitioned into disjoint per-`x` ranges; partial
/// sums are reduced in index order with compensated summation, so the result
/// is bit-identical for any worker count.
pub fn pauli_spectrum_capped(psi: &PureState, cap: u32) -> Result<PauliSpectrumSummary> {
    let n = psi.num_qubits();
    if n > cap {
        return Err(Error::QubitCapExceeded { n, cap });
    }
    let d = psi.dim();
    let amps = psi.amps();
    let partials: Vec<(f64, f64)> = (0..d)
        .into_par_iter()
        .map_init(Vec::new, |scratch, x| spectrum_partial(amps, x, scratch))
        .collect();
    let mut s2 = Kahan::default();
    let mut s4 = Kahan::default();
    for (a, b) in partials {
        s2.add(a);
        s4.add(b);
    }
    Ok(PauliSpectrumSummary {
        d,
        sum_sq: s2.sum,
        sum_quartic: s4.sum,
    })
}

pub fn pauli_spectrum(psi: &PureState) -> Result<PauliSpectrumSummary> {
    pauli_spectrum_capped(psi, DEFAULT_QUBIT_CAP)
}

/// Sequential spectrum power sums, for callers that already parallelize at a
/// coarser grain (one state per task).
pub(crate) fn pauli_quartic_seq(amps: &[Complex64], scratch: &mut Vec<Complex64>) -> f64 {
    let mut s4 = Kahan::default();
    for x in 0..amps.len() {
        let (_, q) = spectrum_partial(amps, x, scratch);
        s4.add(q);
    }
    s4.sum
}

/// Stabilizer purity `SP = (1/d) sum_P <P>^4`, in `(0, 1]`, equal to 1
/// exactly on stabilizer states.
pub fn stabilizer_purity_capped(psi: &PureState, cap: u32) -> Result<f64> {
    let s = pauli_spectrum_capped(psi, cap)?;
    Ok(s.sum_quartic / s.d as f64)
}

pub fn stabilizer_purity(psi: &PureState) -> Result<f64> {
    stabilizer_purity_capped(psi, DEFAULT_QUBIT_CAP)
}

/// Linear stabilizer entropy `M_lin = 1 - SP`.
pub fn m_lin(psi: &PureState) -> Result<f64> {
    Ok(1.0 - stabilizer_purity(psi)?)
}

pub fn m_lin_capped(psi: &PureState, cap: u32) -> Result<f64> {
    Ok(1.0 - stabilizer_purity_capped(psi, cap)?)
}

/// Logarithm convention for the 2-stabilizer Rényi entropy.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LogBase {
    /// Bits; the default, making entanglement values of stabilizer states integers.
    Two,
    Natural,
}

/// 2-stabilizer Rényi entropy `M_2 = -log SP`, base 2 by default.
pub fn m2(psi: &PureState) -> Result<f64> {
    m2_with_base(psi, LogBase::Two)
}

pub fn m2_with_base(psi: &PureState, base: LogBase) -> Result<f64> {
    let sp = stabilizer_purity(psi)?;
    Ok(match base {
        LogBase::Two => -sp.log2(),
        LogBase::Natural => -sp.ln(),
    })
}

/// Closed form for `sum_{P_1..P_m} Tr[(P_1 ... P_m)^k]` on `n` qubits.
///
/// The sum factorizes over qubits; the per-qubit factor depends only on
/// `k mod 4` and the number of strings `m` in the product.
pub fn pauli_power_trace_sum_closed(n: u32, m: u32, k: u32) -> Result<BigInt> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidArgument("need n >= 1 and k >= 1".into()));
    }
    let per_qubit: u64 = match (m, k % 4) {
        (2, 0) => 32,
        (2, 2) => 8,
        (2, _) => 8,
        (3, 0) => 128,
        (3, 2) => 32,
        (3, _) => 20,
        (4, 0) => 512,
        (4, 2) => 32,
        (4, _) => 56,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "closed form only covers m in {{2,3,4}}, got {m}"
            )))
        }
    };
    Ok(BigInt::from(per_qubit).pow(n))
}

/// Brute-force oracle for the same sum: explicit matrix products and traces
/// over all `4^{nm}` string tuples.
pub fn pauli_power_trace_sum_bruteforce(n: u32, m: u32, k: u32) -> Result<BigInt> {
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "m must be in {{2,3,4}}, got {m}"
        )));
    }
    if n > 3 || k > 8 || k < 1 || n < 1 {
        return Err(Error::Budget(format!("need n <= 3 and 1 <= k <= 8, got n={n}, k={k}")));
    }
    if n * m > 8 {
        return Err(Error::Budget(format!(
            "4^(n*m) = 4^{} tuples is over the feasibility budget",
            n * m
        )));
    }
    let d = 1usize << n;
    let mats: Vec<DMatrix<Complex64>> = PauliString::all(n).map(|p| p.matrix()).collect();
    let tuples = 4usize.pow(n * m);
    let total: Complex64 = (0..tuples)
        .into_par_iter()
        .map(|t| {
            let mut idx = t;
            let mut prod = mats[idx % mats.len()].clone();
            idx /= mats.len();
            for _ in 1..m {
                prod = &prod * &mats[idx % mats.len()];
                idx /= mats.len();
            }
            let mut power = prod.clone();
            for _ in 1..k {
                power = &power * &prod;
            }
            (0..d).map(|i| power[(i, i)]).sum::<Complex64>()
        })
        .sum();
    if total.im.abs() > 1e-9 || (total.re - total.re.round()).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "trace sum did not round to an integer: {total}"
        )));
    }
    Ok(BigInt::from(total.re.round() as i64))
}
