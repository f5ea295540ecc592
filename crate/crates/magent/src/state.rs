//! Pure-state construction and sampling: Haar states and unitaries, Schmidt
//! decomposition, Schmidt-orbit sampling, linear entanglement entropy and
//! anti-flatness.
//!
//! Index convention, fixed once and used everywhere: a state on a bipartition
//! `(d_A, d_B)` stores `amps[i * d_B + j] = <i_A, j_B | psi>`, i.e. the
//! amplitude vector reshapes row-major into a `d_A x d_B` matrix with the A
//! index on rows.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Tolerance on `|norm - 1|` for accepting a state vector. Inputs outside it
/// are rejected, never silently renormalized.
pub const NORM_TOL: f64 = 1e-10;

/// Tolerance on the Schmidt/SVD reconstruction residual.
pub const SCHMIDT_TOL: f64 = 1e-9;

/// Derive an independent RNG substream from a master seed.
///
/// Replaying `(seed, stream)` reproduces the stream bit-exactly; distinct
/// stream indices yield independent ChaCha streams.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn is_pow2(x: usize) -> bool {
    x != 0 && x & (x - 1) == 0
}

/// A normalized pure state with a declared bipartition `(d_A, d_B)`.
#[derive(Clone, Debug)]
pub struct PureState {
    amps: Vec<Complex64>,
    da: usize,
    db: usize,
}

impl PureState {
    /// Build a state from amplitudes, checking the norm and that both
    /// subsystem dimensions are powers of two.
    pub fn new(amps: Vec<Complex64>, da: usize, db: usize) -> Result<Self> {
        if !is_pow2(da) || !is_pow2(db) {
            return Err(Error::InvalidArgument(format!(
                "subsystem dimensions must be powers of two, got ({da}, {db})"
            )));
        }
        if amps.len() != da * db {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector has length {}, expected {}",
                amps.len(),
                da * db
            )));
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let dev = (norm2.sqrt() - 1.0).abs();
        if dev > NORM_TOL {
            return Err(Error::NotNormalized(dev));
        }
        Ok(Self { amps, da, db })
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.da * self.db
    }

    pub fn da(&self) -> usize {
        self.da
    }

    pub fn db(&self) -> usize {
        self.db
    }

    pub fn num_qubits(&self) -> u32 {
        self.dim().trailing_zeros()
    }

    /// Re-declare the bipartition without touching the amplitudes.
    pub fn with_shape(self, da: usize, db: usize) -> Result<Self> {
        Self::new(self.amps, da, db)
    }

    /// The `d_A x d_B` amplitude matrix (A index on rows).
    pub fn amp_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.da, self.db, |i, j| self.amps[i * self.db + j])
    }

    /// Tensor product as plain vectors; `self` supplies the high-order index.
    /// The result is unipartite `(d1*d2, 1)`; reshape as needed.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let d2 = other.dim();
        let mut amps = Vec::with_capacity(self.dim() * d2);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        PureState {
            amps,
            da: self.dim() * d2,
            db: 1,
        }
    }

    /// Apply a full-dimension unitary, preserving the declared shape.
    pub fn apply(&self, u: &DMatrix<Complex64>) -> Result<PureState> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, state dimension is {}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        let w = u * v;
        Ok(PureState {
            amps: w.iter().copied().collect(),
            da: self.da,
            db: self.db,
        })
    }
}

/// A Schmidt spectrum: probabilities on the simplex, stored descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Validate and canonicalize a spectrum: entries within `1e-9` of the
    /// simplex are clipped at zero, renormalized to sum one and sorted
    /// descending; anything further off is rejected.
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidArgument("empty Schmidt spectrum".into()));
        }
        if lambdas.iter().any(|&l| l < -1e-9) {
            return Err(Error::InvalidArgument(
                "Schmidt spectrum has a negative entry".into(),
            ));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "Schmidt spectrum sums to {sum}, not 1"
            )));
        }
        let mut ls: Vec<f64> = lambdas.into_iter().map(|l| l.max(0.0)).collect();
        let s: f64 = ls.iter().sum();
        for l in &mut ls {
            *l /= s;
        }
        ls.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { lambdas: ls })
    }

    /// The flat spectrum `(1/k, ..., 1/k)`.
    pub fn flat(k: usize) -> Self {
        Self {
            lambdas: vec![1.0 / k as f64; k],
        }
    }

    /// The rank-one spectrum `(1, 0, ..., 0)` of a product state.
    pub fn separable(k: usize) -> Self {
        let mut lambdas = vec![0.0; k];
        lambdas[0] = 1.0;
        Self { lambdas }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Power sum `sum_i lambda_i^p`.
    pub fn sum_pow(&self, p: u32) -> f64 {
        self.lambdas.iter().map(|l| l.powi(p as i32)).sum()
    }

    /// Linear entanglement of any state on this orbit: `1 - sum lambda^2`.
    pub fn e_lin(&self) -> f64 {
        1.0 - self.sum_pow(2)
    }
}

/// A `d x d` unitary matrix.
#[derive(Clone, Debug)]
pub struct Unitary {
    m: DMatrix<Complex64>,
}

impl Unitary {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    /// Max-abs entry deviation of `U^dag U` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.m.nrows();
        let g = self.m.adjoint() * &self.m;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((g[(i, j)] - expect).norm());
            }
        }
        worst
    }
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Draw a Haar-random pure state on the bipartition `(d_A, d_B)`.
///
/// Amplitudes are i.i.d. standard complex Gaussians normalized to unit
/// length, which induces the unique unitarily invariant measure.
pub fn haar_state(da: usize, db: usize, rng: &mut impl Rng) -> Result<PureState> {
    if !is_pow2(da) || !is_pow2(db) {
        return Err(Error::InvalidArgument(format!(
            "subsystem dimensions must be powers of two, got ({da}, {db})"
        )));
    }
    let d = da * db;
    let mut amps: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok(PureState { amps, da, db })
}

/// Draw a Haar-random unitary via QR of a complex Ginibre matrix.
///
/// The R-diagonal phase correction is applied explicitly: without it the QR
/// output is not Haar distributed.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> Unitary {
    let g = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            rjj / rjj.norm()
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Unitary { m: q }
}

/// Schmidt decomposition of a bipartite state with `d_A <= d_B`.
///
/// Returns the squared singular values (clipped, renormalized, descending)
/// and the local unitaries `U_A`, `U_B` with `Psi = U_A D U_B^T`.
pub fn schmidt(psi: &PureState) -> Result<(SchmidtSpectrum, DMatrix<Complex64>, DMatrix<Complex64>)> {
    if psi.da() > psi.db() {
        return Err(Error::InvalidArgument(format!(
            "schmidt requires d_A <= d_B, got ({}, {})",
            psi.da(),
            psi.db()
        )));
    }
    let m = psi.amp_matrix();
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .clone()
        .ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let vt = svd
        .v_t
        .clone()
        .ok_or_else(|| Error::Numerical("SVD did not return V^T".into()))?;
    // Psi = U S V^H = U_A D U_B^T with U_B^T = V^H, i.e. U_B = (V^H)^T.
    let ub = vt.transpose();
    let da = psi.da();
    let mut resid = 0.0f64;
    {
        let mut recon: DMatrix<Complex64> = DMatrix::zeros(psi.da(), psi.db());
        for k in 0..da {
            let s = Complex64::new(svd.singular_values[k], 0.0);
            for i in 0..psi.da() {
                for j in 0..psi.db() {
                    recon[(i, j)] += u[(i, k)] * s * ub[(j, k)];
                }
            }
        }
        for i in 0..psi.da() {
            for j in 0..psi.db() {
                resid = resid.max((recon[(i, j)] - m[(i, j)]).norm());
            }
        }
    }
    if resid > SCHMIDT_TOL {
        return Err(Error::Numerical(format!(
            "Schmidt reconstruction residual {resid:.3e} exceeds {SCHMIDT_TOL:.1e}"
        )));
    }
    let mut lambdas: Vec<f64> = svd
        .singular_values
        .iter()
        .take(da)
        .map(|s| (s * s).max(0.0))
        .collect();
    lambdas.resize(da, 0.0);
    let total: f64 = lambdas.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "squared singular values sum to {total}, expected 1"
        )));
    }
    for l in &mut lambdas {
        *l /= total;
    }
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((SchmidtSpectrum { lambdas }, u, ub))
}

/// The reference state `|psi^lambda> = sum_i sqrt(lambda_i) |i_A, i_B>`.
pub fn reference_state(spectrum: &SchmidtSpectrum, da: usize, db: usize) -> Result<PureState> {
    if spectrum.len() != da {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has length {}, expected d_A = {da}",
            spectrum.len()
        )));
    }
    if da > db {
        return Err(Error::InvalidArgument(format!(
            "reference state requires d_A <= d_B, got ({da}, {db})"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); da * db];
    for (i, l) in spectrum.lambdas().iter().enumerate() {
        amps[i * db + i] = Complex64::new(l.sqrt(), 0.0);
    }
    PureState::new(amps, da, db)
}

/// Draw `(U_A (x) U_B) |psi^lambda>` with independent Haar locals.
pub fn orbit_sample(
    spectrum: &SchmidtSpectrum,
    da: usize,
    db: usize,
    rng: &mut impl Rng,
) -> Result<PureState> {
    if spectrum.len() != da {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has length {}, expected d_A = {da}",
            spectrum.len()
        )));
    }
    let ua = haar_unitary(da, rng);
    let ub = haar_unitary(db, rng);
    let ua = ua.matrix();
    let ub = ub.matrix();
    let roots: Vec<f64> = spectrum.lambdas().iter().map(|l| l.sqrt()).collect();
    let mut amps = vec![Complex64::new(0.0, 0.0); da * db];
    for i in 0..da {
        for j in 0..db {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, r) in roots.iter().enumerate() {
                acc += ua[(i, k)] * ub[(j, k)] * *r;
            }
            amps[i * db + j] = acc;
        }
    }
    // Normalization can drift at the last bit; the locals are unitary so the
    // norm is 1 up to rounding.
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    PureState::new(amps, da, db)
}

/// Gram matrix `M M^dag` of the amplitude matrix, i.e. the reduced state on A.
fn gram(psi: &PureState) -> DMatrix<Complex64> {
    let m = psi.amp_matrix();
    &m * m.adjoint()
}

/// Linear entanglement entropy `1 - Tr(rho_A^2)`, computed from the Gram
/// matrix of the amplitude matrix; no `d x d` density matrix is formed.
pub fn e_lin(psi: &PureState) -> f64 {
    let g = gram(psi);
    let purity: f64 = g.iter().map(|x| x.norm_sqr()).sum();
    1.0 - purity
}

/// Anti-flatness `Tr(rho_A^3) - Tr^2(rho_A^2)` of the reduced state.
pub fn antiflatness(psi: &PureState) -> f64 {
    let g = gram(psi);
    let purity: f64 = g.iter().map(|x| x.norm_sqr()).sum();
    let g2 = &g * &g;
    let tr3: f64 = (&g2 * &g).diagonal().iter().map(|x| x.re).sum();
    tr3 - purity * purity
}

/// The n-fold tensor power of the single-qubit golden state, the pure state
/// with Bloch vector `(1,1,1)/sqrt(3)`.
pub fn golden_state(n: u32) -> PureState {
    assert!(n >= 1);
    // Eigenvector of (X+Y+Z)/sqrt(3) with eigenvalue +1:
    // cos(theta/2)|0> + e^{i pi/4} sin(theta/2)|1>, cos(theta) = 1/sqrt(3).
    let cos_theta = 1.0 / 3.0f64.sqrt();
    let half = (cos_theta.acos()) / 2.0;
    let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let g = PureState {
        amps: vec![
            Complex64::new(half.cos(), 0.0),
            phase * half.sin(),
        ],
        da: 2,
        db: 1,
    };
    let mut out = g.clone();
    for _ in 1..n {
        out = out.tensor(&g);
    }
    out
}
