//! Closed-form moments, orbit averages, conditional curves and bounds.
//!
//! Everything that is a ratio of integer polynomials is evaluated in
//! `BigRational` and converted to `f64` only at the boundary, so downstream
//! comparisons can be made against exactly computed references. The only
//! genuinely transcendental pieces are the `2 x d_B` marginal density (gamma
//! functions) and the quadrature that cross-checks the conditional curve
//! against the global mean.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use statrs::function::gamma::ln_gamma;

use crate::state::SchmidtSpectrum;
use crate::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: u64) -> Rat {
    Rat::from(BigInt::from(n))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// `E[Tr rho_A^2]` over Haar states: `(d_A + d_B) / (d + 1)`.
pub fn mean_purity_a(da: u64, db: u64) -> Rat {
    int(da + db) / int(da * db + 1)
}

/// `E[E_lin]` over Haar states: `1 - (d_A + d_B)/(d + 1)`.
pub fn mean_e_lin(da: u64, db: u64) -> Rat {
    Rat::one() - mean_purity_a(da, db)
}

/// `Var[E_lin]` over Haar states:
/// `2 (d_A^2 - 1)(d_B^2 - 1) / ((d+1)^2 (d+2)(d+3))`.
pub fn var_e_lin(da: u64, db: u64) -> Rat {
    let d = da * db;
    int(2) * int(da * da - 1) * int(db * db - 1)
        / (int(d + 1) * int(d + 1) * int(d + 2) * int(d + 3))
}

/// `E[SP]` over Haar states: `4 / (d + 3)`.
pub fn mean_stabilizer_purity(d: u64) -> Rat {
    int(4) / int(d + 3)
}

/// `E[M_lin]` over Haar states: `1 - 4/(d + 3)`.
pub fn mean_m_lin(d: u64) -> Rat {
    Rat::one() - mean_stabilizer_purity(d)
}

/// `E[SP^2]` over Haar states:
/// `16 (d^2 + 15 d + 68) / ((d+3)(d+5)(d+6)(d+7))`.
pub fn second_moment_stabilizer_purity(d: u64) -> Rat {
    int(16) * int(d * d + 15 * d + 68) / (int(d + 3) * int(d + 5) * int(d + 6) * int(d + 7))
}

/// `Var[M_lin] = Var[SP]`: `96 (d - 1) / ((d+3)^2 (d+5)(d+6)(d+7))`.
pub fn var_m_lin(d: u64) -> Rat {
    int(96) * int(d - 1) / (int(d + 3) * int(d + 3) * int(d + 5) * int(d + 6) * int(d + 7))
}

/// `E[SP * Tr rho_A^2]` over Haar states: `4 (d_A + d_B) / ((d+1)(d+3))`.
///
/// Equal to `E[SP] * E[Tr rho_A^2]`, which is the content of the vanishing
/// covariance below.
pub fn cross_moment_sp_purity(da: u64, db: u64) -> Rat {
    let d = da * db;
    int(4) * int(da + db) / (int(d + 1) * int(d + 3))
}

/// `Cov[E_lin, M_lin]` over Haar states. Exactly zero for every bipartition.
pub fn covariance_e_m(da: u64, db: u64) -> Rat {
    cross_moment_sp_purity(da, db) - mean_stabilizer_purity(da * db) * mean_purity_a(da, db)
}

/// Coefficients of the Schmidt-orbit average
/// `Mbar(lambda) = alpha + beta e + gamma e^2 + delta sum lambda^3 + mu sum lambda^4`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitCoefficients {
    pub alpha: Rat,
    pub beta: Rat,
    pub gamma: Rat,
    pub delta: Rat,
    pub mu: Rat,
}

pub fn orbit_coefficients(da: u64, db: u64) -> Result<OrbitCoefficients> {
    if da < 2 || db < 2 || da == 3 || db == 3 {
        return Err(Error::Domain(format!(
            "orbit coefficients need d_A, d_B >= 2 and != 3, got ({da}, {db})"
        )));
    }
    let (a, b) = (int(da), int(db));
    let ab = &a * &b;
    let a2m9 = &a * &a - int(9);
    let b2m9 = &b * &b - int(9);
    let ap3bp3 = (&a + int(3)) * (&b + int(3));
    let am3bm3 = (&a - int(3)) * (&b - int(3));

    let alpha = Rat::one()
        - rat(4, 3) * (int(8) / &ab + int(5) / &ap3bp3 - Rat::one() / &am3bm3);
    let beta = int(8) / &ap3bp3 + int(16) / &ab;
    let gamma = -(int(4) * (&ab + int(9)) / (&a2m9 * &b2m9) + int(8) / &ab);
    let delta = -int(96) * (&a * &a + &ab + &b * &b - int(9)) / (&a * &a2m9 * &b * &b2m9);
    let mu = int(24) * (&a + &b) / (&a2m9 * &b2m9);
    Ok(OrbitCoefficients { alpha, beta, gamma, delta, mu })
}

/// Exact orbit average for a rational Schmidt spectrum.
pub fn orbit_mean_m_rational(da: u64, db: u64, lambdas: &[Rat]) -> Result<Rat> {
    if lambdas.len() > da as usize {
        return Err(Error::DimensionMismatch(format!(
            "{} Schmidt values for d_A = {da}",
            lambdas.len()
        )));
    }
    let total: Rat = lambdas.iter().cloned().sum();
    if total != Rat::one() || lambdas.iter().any(|l| l.is_negative()) {
        return Err(Error::Domain("Schmidt values must lie on the simplex".into()));
    }
    let c = orbit_coefficients(da, db)?;
    let s2: Rat = lambdas.iter().map(|l| l * l).sum();
    let s3: Rat = lambdas.iter().map(|l| l * l * l).sum();
    let s4: Rat = lambdas.iter().map(|l| l * l * l * l).sum();
    let e = Rat::one() - s2;
    Ok(c.alpha + c.beta * &e + c.gamma * &e * &e + c.delta * s3 + c.mu * s4)
}

/// Orbit average `Mbar(lambda)` for a floating-point Schmidt spectrum.
pub fn orbit_mean_m(da: u64, db: u64, spectrum: &SchmidtSpectrum) -> Result<f64> {
    if spectrum.lambdas().len() > da as usize {
        return Err(Error::DimensionMismatch(format!(
            "{} Schmidt values for d_A = {da}",
            spectrum.lambdas().len()
        )));
    }
    let c = orbit_coefficients(da, db)?;
    let e = spectrum.e_lin();
    let s3 = spectrum.sum_pow(3);
    let s4 = spectrum.sum_pow(4);
    Ok(to_f64(&c.alpha)
        + to_f64(&c.beta) * e
        + to_f64(&c.gamma) * e * e
        + to_f64(&c.delta) * s3
        + to_f64(&c.mu) * s4)
}

/// Orbit average at the separable point: `1 - 16/((d_A+3)(d_B+3))`.
pub fn orbit_mean_m_separable(da: u64, db: u64) -> Rat {
    Rat::one() - int(16) / (int(da + 3) * int(db + 3))
}

/// Orbit average at the flat (maximally entangled) spectrum.
pub fn orbit_mean_m_maxent(da: u64, db: u64) -> Result<Rat> {
    if da == 3 || db == 3 {
        return Err(Error::Domain("undefined at d = 3 factors".into()));
    }
    let (a, b) = (int(da), int(db));
    let num = &a * &a * &a * &b * &b * &b - int(9) * &a * &a * &a * &b
        - int(4) * &a * &a * &b * &b
        + int(24) * &a * &a
        + int(12) * &a * &b
        - int(24);
    let den = &a * &a * &a * (&b - int(3)) * &b * (&b + int(3));
    Ok(num / den)
}

/// The entanglement-only part of the decomposition
/// `Mbar = delta * F_A + G(e) + mu * sum lambda^4`:
/// `G(e) = alpha + delta + (beta - 2 delta) e + (gamma + delta) e^2`.
pub fn g_of_e_rational(da: u64, db: u64, e: &Rat) -> Result<Rat> {
    let c = orbit_coefficients(da, db)?;
    Ok(&c.alpha + &c.delta + (&c.beta - int(2) * &c.delta) * e + (&c.gamma + &c.delta) * e * e)
}

pub fn g_of_e(da: u64, db: u64, e: f64) -> Result<f64> {
    let c = orbit_coefficients(da, db)?;
    Ok(to_f64(&(&c.alpha + &c.delta))
        + to_f64(&(&c.beta - int(2) * &c.delta)) * e
        + to_f64(&(&c.gamma + &c.delta)) * e * e)
}

/// Conditional mean of `M_lin` at fixed entanglement for a `2 x d_B` split:
/// `(5 d_B^2 - 24 d_B e^2 + 24 d_B e - d_B - 60 e^2) / (5 d_B (d_B + 3))`,
/// valid for `e` in `[0, 1/2]`.
pub fn conditional_mean_2xdb(db: u64, e: f64) -> Result<f64> {
    if db < 2 || db == 3 {
        return Err(Error::Domain(format!("need d_B >= 2 and != 3, got {db}")));
    }
    if !(0.0..=0.5).contains(&e) {
        return Err(Error::Domain(format!("e = {e} outside [0, 1/2]")));
    }
    let dbf = db as f64;
    Ok((5.0 * dbf * dbf - 24.0 * dbf * e * e + 24.0 * dbf * e - dbf - 60.0 * e * e)
        / (5.0 * dbf * (dbf + 3.0)))
}

/// Large-`d_B` expansion of the same curve: `1 - 8(3e^2 - 3e + 2)/(5 d_B)`.
pub fn conditional_mean_2xdb_asymptotic(db: u64, e: f64) -> f64 {
    1.0 - 8.0 * (3.0 * e * e - 3.0 * e + 2.0) / (5.0 * db as f64)
}

/// Large-`d` balanced-split orbit average: `1 - (12 e^2 - 24 e + 16)/d`.
pub fn orbit_mean_m_asymptotic(d: u64, e: f64) -> f64 {
    1.0 - (12.0 * e * e - 24.0 * e + 16.0) / d as f64
}

/// Haar density of `E_lin` for a `2 x d_B` split on `[0, 1/2]`:
/// `2^d_B e^(d_B - 2) sqrt(1 - 2e) Gamma(d_B + 1/2) / (sqrt(pi) Gamma(d_B - 1))`.
///
/// Equivalently, via the Legendre duplication formula, the normalizing
/// constant is `2^(1 - d_B) Gamma(2 d_B) / (Gamma(d_B) Gamma(d_B - 1))`.
pub fn marginal_density_2xdb(db: u64, e: f64) -> Result<f64> {
    if db < 2 {
        return Err(Error::Domain(format!("need d_B >= 2, got {db}")));
    }
    if !(0.0..=0.5).contains(&e) {
        return Ok(0.0);
    }
    let dbf = db as f64;
    let ln_const = dbf * std::f64::consts::LN_2 + ln_gamma(dbf + 0.5)
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma(dbf - 1.0);
    if e == 0.0 {
        // e^(d_B - 2) is 1 at d_B = 2 and 0 for larger d_B.
        if db > 2 {
            return Ok(0.0);
        }
        return Ok(ln_const.exp());
    }
    let ln = ln_const + (dbf - 2.0) * e.ln() + 0.5 * (1.0 - 2.0 * e).ln();
    Ok(ln.exp())
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "quadrature failed to converge on [{a}, {b}] (residual {err:.3e})"
        )));
    }
    Ok(adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integrate `g(e)` against `de` over `[0, 1/2]` after the substitution
/// `e = (1 - t^2)/2`, which absorbs the square-root endpoint singularity of
/// the `2 x d_B` marginal into a smooth factor.
fn integrate_over_e(g: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    integrate(|t| g(0.5 * (1.0 - t * t)) * t, 0.0, 1.0, tol)
}

/// `int P_{2,d_B}(e) de` over `[0, 1/2]`; equals 1.
pub fn marginal_normalization_2xdb(db: u64, tol: f64) -> Result<f64> {
    integrate_over_e(|e| marginal_density_2xdb(db, e).unwrap_or(0.0), tol)
}

/// `int Mtilde_{2,d_B}(e) P_{2,d_B}(e) de` over `[0, 1/2]`; equals the global
/// Haar mean `1 - 4/(2 d_B + 3)`.
pub fn conditional_consistency_integral(db: u64, tol: f64) -> Result<f64> {
    if db < 2 || db == 3 {
        return Err(Error::Domain(format!("need d_B >= 2 and != 3, got {db}")));
    }
    integrate_over_e(
        |e| {
            conditional_mean_2xdb(db, e).unwrap_or(0.0) * marginal_density_2xdb(db, e).unwrap_or(0.0)
        },
        tol,
    )
}

/// Prefactor in the Clifford-averaged anti-flatness identity
/// `E_C[F_A(C psi)] = c(d, d_A) * M_lin(psi)`:
/// `c = (d^2 - d_A^2)(d_A^2 - 1) / ((d^2 - 1)(d + 2) d_A^2)`.
pub fn clifford_antiflatness_prefactor(da: u64, db: u64) -> Rat {
    let d = da * db;
    int(d * d - da * da) * int(da * da - 1) / (int(d * d - 1) * int(d + 2) * int(da * da))
}

/// Concentration bound for `M_lin` over Haar states:
/// `Pr(|M_lin - E[M_lin]| >= eps) <= 3 exp(-eps^2 d / (729 pi))`.
pub fn levy_tail_bound(d: u64, eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::Domain(format!("need eps > 0, got {eps}")));
    }
    Ok(3.0 * (-eps * eps * d as f64 / (729.0 * std::f64::consts::PI)).exp())
}

/// Uniform-in-`lambda` Chebyshev bound on the orbit variance of `M_lin`:
/// `16 d_A^3 d_B^3 / ((d_A^2 - 9)^2 (d_B^2 - 9)^2)`.
pub fn orbit_variance_bound(da: u64, db: u64) -> Result<Rat> {
    if da == 3 || db == 3 {
        return Err(Error::Domain("undefined at d = 3 factors".into()));
    }
    let a2 = (da * da) as i64 - 9;
    let b2 = (db * db) as i64 - 9;
    Ok(int(16 * da * db * da * db * da * db)
        / (Rat::from(BigInt::from(a2 * a2)) * Rat::from(BigInt::from(b2 * b2))))
}

/// Bhatia–Davis bound on the orbit variance given the orbit mean `mbar` of a
/// variable confined to `[0, 1]`: `mbar (1 - mbar)`.
pub fn bhatia_davis_bound(mbar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mbar) {
        return Err(Error::Domain(format!("mean {mbar} outside [0, 1]")));
    }
    Ok(mbar * (1.0 - mbar))
}
