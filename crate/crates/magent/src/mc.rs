//! Parallel, bit-reproducible Monte Carlo estimation of the joint statistics
//! of `E_lin` and `M_lin`.
//!
//! Reproducibility contract: work is split into fixed chunks of
//! [`CHUNK_SIZE`] samples; chunk `i` always draws from RNG substream `i` of
//! the master seed, and chunk results are merged in index order. The output
//! is therefore bit-identical for any worker count, and adding samples
//! extends a run without perturbing earlier draws.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::closed;
use crate::pauli::{pauli_quartic_seq, DEFAULT_QUBIT_CAP};
use crate::state::{e_lin, haar_state, orbit_sample, substream, SchmidtSpectrum};
use crate::{Error, Result};

/// Samples per RNG substream chunk.
pub const CHUNK_SIZE: u64 = 4096;

/// Number of contiguous chunk batches used for batch-means standard errors.
pub const BATCHES: usize = 32;

/// Default bin count per axis of the joint histogram.
pub const DEFAULT_BINS: usize = 60;

/// Minimum per-bin occupancy for a conditional-curve bin to be reported.
pub const MIN_BIN_COUNT: u64 = 50;

/// Streaming bivariate moment accumulator (Welford/Chan).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointAccumulator {
    count: u64,
    mean_e: f64,
    mean_m: f64,
    m2_e: f64,
    m2_m: f64,
    cross: f64,
}

impl JointAccumulator {
    pub fn push(&mut self, e: f64, m: f64) {
        self.count += 1;
        let n = self.count as f64;
        let de = e - self.mean_e;
        let dm = m - self.mean_m;
        self.mean_e += de / n;
        self.mean_m += dm / n;
        self.m2_e += de * (e - self.mean_e);
        self.m2_m += dm * (m - self.mean_m);
        self.cross += de * (m - self.mean_m);
    }

    pub fn merge(a: &JointAccumulator, b: &JointAccumulator) -> JointAccumulator {
        if a.count == 0 {
            return *b;
        }
        if b.count == 0 {
            return *a;
        }
        let (na, nb) = (a.count as f64, b.count as f64);
        let n = na + nb;
        let de = b.mean_e - a.mean_e;
        let dm = b.mean_m - a.mean_m;
        JointAccumulator {
            count: a.count + b.count,
            mean_e: a.mean_e + de * nb / n,
            mean_m: a.mean_m + dm * nb / n,
            m2_e: a.m2_e + b.m2_e + de * de * na * nb / n,
            m2_m: a.m2_m + b.m2_m + dm * dm * na * nb / n,
            cross: a.cross + b.cross + de * dm * na * nb / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean_e(&self) -> f64 {
        self.mean_e
    }

    pub fn mean_m(&self) -> f64 {
        self.mean_m
    }

    /// Unbiased sample variance of `E_lin`.
    pub fn var_e(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.m2_e / (self.count - 1) as f64
    }

    pub fn var_m(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.m2_m / (self.count - 1) as f64
    }

    /// Unbiased sample covariance of `E_lin` and `M_lin`.
    pub fn cov(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.cross / (self.count - 1) as f64
    }

    pub fn corr(&self) -> f64 {
        self.cov() / (self.var_e() * self.var_m()).sqrt()
    }

    pub fn se_mean_e(&self) -> f64 {
        (self.var_e() / self.count as f64).sqrt()
    }

    pub fn se_mean_m(&self) -> f64 {
        (self.var_m() / self.count as f64).sqrt()
    }
}

/// A finished sampling run: global moments, per-batch moments for
/// batch-means error bars, and the raw `(e, m)` pairs in draw order.
#[derive(Clone, Debug)]
pub struct JointSamples {
    pub summary: JointAccumulator,
    pub batches: Vec<JointAccumulator>,
    pub pairs: Vec<(f64, f64)>,
}

impl JointSamples {
    /// Batch-means standard error of the sample covariance.
    pub fn se_cov(&self) -> f64 {
        batch_se(&self.batches, |b| b.cov())
    }

    /// Batch-means standard error of the sample variance of `M_lin`.
    pub fn se_var_m(&self) -> f64 {
        batch_se(&self.batches, |b| b.var_m())
    }
}

fn batch_se(batches: &[JointAccumulator], stat: impl Fn(&JointAccumulator) -> f64) -> f64 {
    let vals: Vec<f64> = batches
        .iter()
        .filter(|b| b.count() >= 2)
        .map(|b| stat(b))
        .collect();
    let k = vals.len() as f64;
    if k < 2.0 {
        return f64::NAN;
    }
    let mean = vals.iter().sum::<f64>() / k;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            if w == 0 {
                return Err(Error::InvalidArgument("workers must be positive".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn chunk_layout(samples: u64) -> Vec<(u64, u64)> {
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < samples {
        let len = CHUNK_SIZE.min(samples - start);
        chunks.push((start / CHUNK_SIZE, len));
        start += len;
    }
    chunks
}

fn assemble(chunks: Vec<(JointAccumulator, Vec<(f64, f64)>)>) -> JointSamples {
    let n_chunks = chunks.len().max(1);
    let mut summary = JointAccumulator::default();
    let mut batches = vec![JointAccumulator::default(); BATCHES.min(n_chunks)];
    let n_batches = batches.len();
    let mut pairs = Vec::new();
    for (i, (acc, mut p)) in chunks.into_iter().enumerate() {
        summary = JointAccumulator::merge(&summary, &acc);
        let b = i * n_batches / n_chunks;
        batches[b] = JointAccumulator::merge(&batches[b], &acc);
        pairs.append(&mut p);
    }
    JointSamples { summary, batches, pairs }
}

/// Sample `E_lin` and `M_lin` of Haar-random states on a `d_A x d_B`
/// bipartition.
pub fn sample_haar_joint(
    da: usize,
    db: usize,
    samples: u64,
    seed: u64,
    workers: Option<usize>,
    cap: u32,
) -> Result<JointSamples> {
    let d = da
        .checked_mul(db)
        .ok_or_else(|| Error::InvalidArgument("dimension overflow".into()))?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = (d as u64).trailing_zeros();
    if !d.is_power_of_two() || n > cap {
        return Err(Error::QubitCapExceeded { n, cap });
    }
    with_workers(workers, move || {
        let chunks: Vec<(JointAccumulator, Vec<(f64, f64)>)> = chunk_layout(samples)
            .into_par_iter()
            .map(|(chunk, len)| {
                let mut rng = substream(seed, chunk);
                let mut scratch = Vec::new();
                let mut acc = JointAccumulator::default();
                let mut pairs = Vec::with_capacity(len as usize);
                for _ in 0..len {
                    let psi = haar_state(da, db, &mut rng).expect("valid dims");
                    let e = e_lin(&psi);
                    let m = 1.0 - pauli_quartic_seq(psi.amps(), &mut scratch) / d as f64;
                    acc.push(e, m);
                    pairs.push((e, m));
                }
                (acc, pairs)
            })
            .collect();
        assemble(chunks)
    })
}

/// Sample `M_lin` over the Schmidt orbit of a fixed spectrum; `E_lin` is
/// constant on the orbit and recorded per draw as a self-check.
pub fn sample_orbit(
    spectrum: &SchmidtSpectrum,
    da: usize,
    db: usize,
    samples: u64,
    seed: u64,
    workers: Option<usize>,
    cap: u32,
) -> Result<JointSamples> {
    let d = da * db;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = (d as u64).trailing_zeros();
    if !d.is_power_of_two() || n > cap {
        return Err(Error::QubitCapExceeded { n, cap });
    }
    let spectrum = spectrum.clone();
    with_workers(workers, move || {
        let chunks: Vec<(JointAccumulator, Vec<(f64, f64)>)> = chunk_layout(samples)
            .into_par_iter()
            .map(|(chunk, len)| {
                let mut rng = substream(seed, chunk);
                let mut scratch = Vec::new();
                let mut acc = JointAccumulator::default();
                let mut pairs = Vec::with_capacity(len as usize);
                for _ in 0..len {
                    let psi = orbit_sample(&spectrum, da, db, &mut rng).expect("valid dims");
                    let e = e_lin(&psi);
                    let m = 1.0 - pauli_quartic_seq(psi.amps(), &mut scratch) / d as f64;
                    acc.push(e, m);
                    pairs.push((e, m));
                }
                (acc, pairs)
            })
            .collect();
        assemble(chunks)
    })
}

/// Convenience wrappers with the default qubit cap.
pub fn sample_haar_joint_default(
    da: usize,
    db: usize,
    samples: u64,
    seed: u64,
) -> Result<JointSamples> {
    sample_haar_joint(da, db, samples, seed, None, DEFAULT_QUBIT_CAP)
}

/// Binned conditional mean of `M_lin` as a function of `E_lin`.
#[derive(Clone, Debug)]
pub struct BinnedCurve {
    pub centers: Vec<f64>,
    pub means: Vec<f64>,
    pub sems: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn conditional_curve(
    pairs: &[(f64, f64)],
    e_max: f64,
    bins: usize,
    min_count: u64,
) -> Result<BinnedCurve> {
    if bins == 0 || !(e_max > 0.0) {
        return Err(Error::InvalidArgument("need bins >= 1 and e_max > 0".into()));
    }
    let mut count = vec![0u64; bins];
    let mut mean = vec![0.0f64; bins];
    let mut m2 = vec![0.0f64; bins];
    for &(e, m) in pairs {
        if !(0.0..=e_max).contains(&e) {
            continue;
        }
        let b = (((e / e_max) * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        let d = m - mean[b];
        mean[b] += d / count[b] as f64;
        m2[b] += d * (m - mean[b]);
    }
    let mut out = BinnedCurve {
        centers: Vec::new(),
        means: Vec::new(),
        sems: Vec::new(),
        counts: Vec::new(),
    };
    let w = e_max / bins as f64;
    for b in 0..bins {
        if count[b] >= min_count.max(2) {
            out.centers.push((b as f64 + 0.5) * w);
            out.means.push(mean[b]);
            out.sems
                .push((m2[b] / (count[b] - 1) as f64 / count[b] as f64).sqrt());
            out.counts.push(count[b]);
        }
    }
    Ok(out)
}

/// Joint histogram of `(E_lin, M_lin)` on `[0, e_max] x [0, 1]`, row-major in
/// the `E` index.
#[derive(Clone, Debug)]
pub struct Histogram2D {
    pub e_max: f64,
    pub bins_e: usize,
    pub bins_m: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram2D {
    pub fn e_edges(&self) -> Vec<f64> {
        (0..=self.bins_e)
            .map(|i| i as f64 * self.e_max / self.bins_e as f64)
            .collect()
    }

    pub fn m_edges(&self) -> Vec<f64> {
        (0..=self.bins_m).map(|i| i as f64 / self.bins_m as f64).collect()
    }
}

pub fn joint_histogram(
    pairs: &[(f64, f64)],
    e_max: f64,
    bins_e: usize,
    bins_m: usize,
) -> Result<Histogram2D> {
    if bins_e == 0 || bins_m == 0 || !(e_max > 0.0) {
        return Err(Error::InvalidArgument("need positive bin counts and e_max".into()));
    }
    let mut counts = vec![0u64; bins_e * bins_m];
    let mut total = 0u64;
    for &(e, m) in pairs {
        if !(0.0..=e_max).contains(&e) || !(0.0..=1.0).contains(&m) {
            continue;
        }
        let be = (((e / e_max) * bins_e as f64) as usize).min(bins_e - 1);
        let bm = ((m * bins_m as f64) as usize).min(bins_m - 1);
        counts[be * bins_m + bm] += 1;
        total += 1;
    }
    Ok(Histogram2D { e_max, bins_e, bins_m, counts, total })
}

/// Bin masses of the independent-Gaussian reference with the closed-form
/// Haar means and variances, on the grid of `hist`.
pub fn gaussian_reference(da: u64, db: u64, hist: &Histogram2D) -> Result<Vec<f64>> {
    let d = da * db;
    let ne = Normal::new(
        closed::to_f64(&closed::mean_e_lin(da, db)),
        closed::to_f64(&closed::var_e_lin(da, db)).sqrt(),
    )
    .map_err(|e| Error::Numerical(format!("reference normal: {e}")))?;
    let nm = Normal::new(
        closed::to_f64(&closed::mean_m_lin(d)),
        closed::to_f64(&closed::var_m_lin(d)).sqrt(),
    )
    .map_err(|e| Error::Numerical(format!("reference normal: {e}")))?;
    let ee = hist.e_edges();
    let me = hist.m_edges();
    let pe: Vec<f64> = (0..hist.bins_e)
        .map(|i| ne.cdf(ee[i + 1]) - ne.cdf(ee[i]))
        .collect();
    let pm: Vec<f64> = (0..hist.bins_m)
        .map(|j| nm.cdf(me[j + 1]) - nm.cdf(me[j]))
        .collect();
    let mut q = Vec::with_capacity(hist.bins_e * hist.bins_m);
    for &e in &pe {
        for &m in &pm {
            q.push(e * m);
        }
    }
    let z: f64 = q.iter().sum();
    if z <= 0.0 {
        return Err(Error::Numerical("reference has no mass on the grid".into()));
    }
    for v in &mut q {
        *v /= z;
    }
    Ok(q)
}

/// KL divergence (natural log) and L1 distance between the empirical
/// histogram and a reference mass vector. Both are evaluated on the support
/// of the empirical distribution, with the reference renormalized there.
pub fn histogram_distances(hist: &Histogram2D, reference: &[f64]) -> Result<(f64, f64)> {
    if reference.len() != hist.counts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference bins for a {} x {} histogram",
            reference.len(),
            hist.bins_e,
            hist.bins_m
        )));
    }
    if hist.total == 0 {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    let mut qz = 0.0;
    for (c, &q) in hist.counts.iter().zip(reference) {
        if *c > 0 {
            if q <= 0.0 {
                return Err(Error::Numerical(
                    "reference vanishes on occupied bins; KL undefined".into(),
                ));
            }
            qz += q;
        }
    }
    let mut kl = 0.0;
    let mut l1 = 0.0;
    for (c, &q) in hist.counts.iter().zip(reference) {
        if *c == 0 {
            continue;
        }
        let p = *c as f64 / hist.total as f64;
        let qn = q / qz;
        kl += p * (p / qn).ln();
        l1 += (p - qn).abs();
    }
    Ok((kl.max(0.0), l1))
}

/// Fraction of draws with `|m - center| >= eps`.
pub fn tail_fraction(pairs: &[(f64, f64)], center: f64, eps: f64) -> Result<f64> {
    if pairs.is_empty() || eps <= 0.0 {
        return Err(Error::InvalidArgument("need samples and eps > 0".into()));
    }
    let hits = pairs.iter().filter(|(_, m)| (m - center).abs() >= eps).count();
    Ok(hits as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn accumulator_matches_direct_formulas() {
        let data = [(0.1, 0.4), (0.2, 0.1), (0.15, 0.9), (0.05, 0.3), (0.3, 0.6)];
        let mut acc = JointAccumulator::default();
        for &(e, m) in &data {
            acc.push(e, m);
        }
        let n = data.len() as f64;
        let me: f64 = data.iter().map(|p| p.0).sum::<f64>() / n;
        let mm: f64 = data.iter().map(|p| p.1).sum::<f64>() / n;
        let ve: f64 = data.iter().map(|p| (p.0 - me).powi(2)).sum::<f64>() / (n - 1.0);
        let cov: f64 = data.iter().map(|p| (p.0 - me) * (p.1 - mm)).sum::<f64>() / (n - 1.0);
        assert_abs_diff_eq!(acc.mean_e(), me, epsilon = 1e-14);
        assert_abs_diff_eq!(acc.mean_m(), mm, epsilon = 1e-14);
        assert_abs_diff_eq!(acc.var_e(), ve, epsilon = 1e-14);
        assert_abs_diff_eq!(acc.cov(), cov, epsilon = 1e-14);
    }

    #[test]
    fn merge_is_exact_and_order_stable() {
        let data: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let x = (i as f64 * 0.37).sin().abs() * 0.4;
                let y = (i as f64 * 0.73).cos().abs();
                (x, y)
            })
            .collect();
        let mut whole = JointAccumulator::default();
        for &(e, m) in &data {
            whole.push(e, m);
        }
        for split in [1usize, 13, 50, 99] {
            let mut a = JointAccumulator::default();
            let mut b = JointAccumulator::default();
            for &(e, m) in &data[..split] {
                a.push(e, m);
            }
            for &(e, m) in &data[split..] {
                b.push(e, m);
            }
            let merged = JointAccumulator::merge(&a, &b);
            assert_abs_diff_eq!(merged.mean_e(), whole.mean_e(), epsilon = 1e-13);
            assert_abs_diff_eq!(merged.var_m(), whole.var_m(), epsilon = 1e-12);
            assert_abs_diff_eq!(merged.cov(), whole.cov(), epsilon = 1e-13);
        }
        let empty = JointAccumulator::default();
        assert_eq!(JointAccumulator::merge(&whole, &empty), whole);
    }

    #[test]
    fn runs_are_reproducible_across_worker_counts() {
        let a = sample_haar_joint(2, 2, 6000, 7, Some(1), DEFAULT_QUBIT_CAP).unwrap();
        let b = sample_haar_joint(2, 2, 6000, 7, Some(4), DEFAULT_QUBIT_CAP).unwrap();
        let c = sample_haar_joint(2, 2, 6000, 7, None, DEFAULT_QUBIT_CAP).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.summary, c.summary);
        assert_eq!(a.pairs, b.pairs);
        // Different seed, different draws.
        let d = sample_haar_joint(2, 2, 6000, 8, None, DEFAULT_QUBIT_CAP).unwrap();
        assert_ne!(a.pairs[0], d.pairs[0]);
    }

    #[test]
    fn haar_moments_match_closed_forms() {
        let run = sample_haar_joint_default(2, 2, 40_000, 11).unwrap();
        let s = &run.summary;
        let me = closed::to_f64(&closed::mean_e_lin(2, 2));
        let mm = closed::to_f64(&closed::mean_m_lin(4));
        assert!((s.mean_e() - me).abs() < 4.0 * s.se_mean_e());
        assert!((s.mean_m() - mm).abs() < 4.0 * s.se_mean_m());
        let cov_se = run.se_cov();
        assert!(cov_se.is_finite());
        assert!(s.cov().abs() < 5.0 * cov_se, "cov {} se {}", s.cov(), cov_se);
    }

    #[test]
    fn orbit_sampling_fixes_entanglement() {
        let spec = SchmidtSpectrum::new(vec![0.7, 0.3]).unwrap();
        let run = sample_orbit(&spec, 2, 2, 5000, 3, None, DEFAULT_QUBIT_CAP).unwrap();
        let e_expect = spec.e_lin();
        for &(e, _) in run.pairs.iter().step_by(500) {
            assert_abs_diff_eq!(e, e_expect, epsilon = 1e-9);
        }
        let mbar = closed::orbit_mean_m(2, 2, &spec).unwrap();
        let s = &run.summary;
        assert!((s.mean_m() - mbar).abs() < 4.0 * s.se_mean_m());
    }

    #[test]
    fn curve_and_histogram_bookkeeping() {
        let pairs = vec![(0.05, 0.2), (0.06, 0.4), (0.3, 0.9), (0.45, 0.5), (1.2, 0.5)];
        let hist = joint_histogram(&pairs, 0.5, 10, 10).unwrap();
        assert_eq!(hist.total, 4); // out-of-range pair dropped
        assert_eq!(hist.counts.iter().sum::<u64>(), 4);
        let curve = conditional_curve(&pairs, 0.5, 5, 2).unwrap();
        assert_eq!(curve.centers.len(), 1); // only the first bin has 2 entries
        assert_abs_diff_eq!(curve.means[0], 0.3, epsilon = 1e-12);
    }

    #[test]
    fn distances_vanish_on_self() {
        let run = sample_haar_joint_default(2, 2, 20_000, 5).unwrap();
        let hist = joint_histogram(&run.pairs, 0.5, 20, 20).unwrap();
        let p: Vec<f64> = hist
            .counts
            .iter()
            .map(|&c| c as f64 / hist.total as f64)
            .collect();
        let (kl, l1) = histogram_distances(&hist, &p).unwrap();
        assert_abs_diff_eq!(kl, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l1, 0.0, epsilon = 1e-12);
        // Against the Gaussian reference the distances are finite and positive.
        let q = gaussian_reference(2, 2, &hist).unwrap();
        let (kl, l1) = histogram_distances(&hist, &q).unwrap();
        assert!(kl > 0.0 && kl.is_finite());
        assert!(l1 > 0.0 && l1 < 2.0);
    }

    #[test]
    fn tail_fraction_respects_levy_bound() {
        let run = sample_haar_joint_default(2, 4, 20_000, 9).unwrap();
        let mm = closed::to_f64(&closed::mean_m_lin(8));
        for eps in [0.1, 0.2, 0.4] {
            let frac = tail_fraction(&run.pairs, mm, eps).unwrap();
            let bound = closed::levy_tail_bound(8, eps).unwrap();
            assert!(
                frac <= bound.min(1.0) + 0.02,
                "eps {eps}: fraction {frac} vs bound {bound}"
            );
        }
    }
}
