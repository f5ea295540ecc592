use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use magent::closed;
use magent::clifford;
use magent::mc;
use magent::pauli::{self, DEFAULT_QUBIT_CAP};
use magent::perm;
use magent::state::{self, SchmidtSpectrum};
use magent::sums;
use magent::weingarten;

#[derive(Parser)]
#[command(
    name = "magent",
    version,
    about = "Joint statistics of linear entanglement and stabilizer entropy of random bipartite states"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample (E_lin, M_lin) of Haar-random states on a bipartition.
    Sample(SampleArgs),
    /// Sample M_lin over the Schmidt orbit of a fixed spectrum.
    Orbit(OrbitArgs),
    /// Binned conditional mean of M_lin as a function of E_lin.
    Conditional(ConditionalArgs),
    /// Joint 2-d histogram of (E_lin, M_lin) with a Gaussian reference.
    Hist2d(Hist2dArgs),
    /// Evaluate the closed-form moments and orbit coefficients for a shape.
    ClosedForm(ClosedFormArgs),
    /// Run a named verification suite; exits nonzero on any failing check.
    Verify(VerifyArgs),
    /// KL and L1 distance to the Gaussian reference across system sizes.
    GaussCheck(GaussArgs),
}

/// Bipartition shape: either explicit dimensions or a qubit count with an
/// optional split point (A gets floor(n/2) qubits by default).
#[derive(Args, Serialize, Clone)]
struct ShapeArgs {
    #[arg(long, requires = "db", conflicts_with_all = ["n", "na"])]
    da: Option<u64>,
    #[arg(long, requires = "da")]
    db: Option<u64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, requires = "n")]
    na: Option<u32>,
}

impl ShapeArgs {
    fn resolve(&self) -> Result<(u64, u64), String> {
        match (self.da, self.db, self.n) {
            (Some(da), Some(db), None) => {
                if da < 1 || db < 1 {
                    return Err("subsystem dimensions must be positive".into());
                }
                Ok((da, db))
            }
            (None, None, Some(n)) => {
                let na = self.na.unwrap_or(n / 2);
                if n == 0 || na == 0 || na >= n {
                    return Err(format!("need 0 < na < n, got n = {n}, na = {na}"));
                }
                Ok((1u64 << na, 1u64 << (n - na)))
            }
            _ => Err("specify either --da/--db or --n [--na]".into()),
        }
    }
}

#[derive(Args, Serialize, Clone)]
struct RunArgs {
    /// Number of Monte Carlo draws.
    #[arg(long)]
    samples: u64,
    /// PRNG seed; required so no run depends on silent entropy.
    #[arg(long)]
    seed: u64,
    /// Worker threads; results are invariant to this by construction.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the qubit cap on exact Pauli-spectrum evaluation.
    #[arg(long, default_value_t = DEFAULT_QUBIT_CAP)]
    cap_override: u32,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Serialize, Clone)]
struct OutArgs {
    /// Output path; CSV runs also get a `.json` metadata sidecar.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Suppress the timestamp field so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct OrbitArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Schmidt spectrum as comma-separated decimals, length d_A.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    lambda: Vec<f64>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct ConditionalArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = mc::DEFAULT_BINS)]
    bins: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct Hist2dArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Bin count per axis.
    #[arg(long, default_value_t = 30)]
    bins: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct ClosedFormArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Optional Schmidt spectrum for the orbit-average value.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    lambda: Option<Vec<f64>>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    Tables,
    PauliPatterns,
    Variance,
    Covariance,
    WeingartenOrbit,
    CliffordAntiflat,
    Gauss,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Sample count for the `gauss` suite.
    #[arg(long, default_value_t = 20_000)]
    samples: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct GaussArgs {
    #[arg(long, default_value_t = 4)]
    n_min: u32,
    #[arg(long, default_value_t = 8)]
    n_max: u32,
    #[command(flatten)]
    run: RunArgs,
    /// Bin count per histogram axis.
    #[arg(long, default_value_t = 30)]
    bins: usize,
    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Orbit(a) => cmd_orbit(a),
        Cmd::Conditional(a) => cmd_conditional(a),
        Cmd::Hist2d(a) => cmd_hist2d(a),
        Cmd::ClosedForm(a) => cmd_closed_form(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::GaussCheck(a) => cmd_gauss_check(a),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// A cell in an output table, kept typed so CSV and JSON renderings agree.
#[derive(Clone)]
enum Cell {
    U(u64),
    F(f64),
    S(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(v) => v.to_string(),
            // 17 significant digits round-trips every double exactly.
            Cell::F(v) => format!("{v:.16e}"),
            Cell::S(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::U(v) => json!(v),
            Cell::F(v) => json!(v),
            Cell::S(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

struct Artifact {
    command: &'static str,
    config: Value,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    extra: Map<String, Value>,
}

impl Artifact {
    fn meta(&self, out: &OutArgs) -> Value {
        let mut meta = Map::new();
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        meta.insert("command".into(), json!(self.command));
        meta.insert("config".into(), self.config.clone());
        if !out.deterministic {
            let ts = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            meta.insert("timestamp".into(), json!(ts));
        }
        for (k, v) in &self.extra {
            meta.insert(k.clone(), v.clone());
        }
        Value::Object(meta)
    }

    fn csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    fn json_doc(&self, out: &OutArgs) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        json!({
            "meta": self.meta(out),
            "columns": self.columns,
            "rows": rows,
        })
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    match out.extension() {
        Some(e) if e == "json" => out.with_extension("meta.json"),
        _ => out.with_extension("json"),
    }
}

fn emit(art: &Artifact, out: &OutArgs) -> Result<(), String> {
    match (&out.out, out.format) {
        (Some(path), Format::Csv) => {
            std::fs::write(path, art.csv()).map_err(|e| format!("write {path:?}: {e}"))?;
            let sidecar = sidecar_path(path);
            let doc = serde_json::to_string_pretty(&art.meta(out)).unwrap();
            std::fs::write(&sidecar, doc + "\n").map_err(|e| format!("write {sidecar:?}: {e}"))
        }
        (Some(path), Format::Json) => {
            let doc = serde_json::to_string_pretty(&art.json_doc(out)).unwrap();
            std::fs::write(path, doc + "\n").map_err(|e| format!("write {path:?}: {e}"))
        }
        (None, Format::Csv) => {
            print!("{}", art.csv());
            Ok(())
        }
        (None, Format::Json) => {
            println!("{}", serde_json::to_string_pretty(&art.json_doc(out)).unwrap());
            Ok(())
        }
    }
}

fn lib_err(e: magent::Error) -> String {
    e.to_string()
}

fn qubits(da: u64, db: u64) -> Result<(), String> {
    let d = da.checked_mul(db).ok_or("dimension overflow")?;
    if !d.is_power_of_two() {
        return Err(format!(
            "total dimension {d} = {da} x {db} is not a power of two; Pauli sums need qubits"
        ));
    }
    Ok(())
}

fn summary_json(s: &mc::JointSamples) -> Value {
    json!({
        "count": s.summary.count(),
        "mean_e": s.summary.mean_e(),
        "mean_m": s.summary.mean_m(),
        "var_e": s.summary.var_e(),
        "var_m": s.summary.var_m(),
        "cov": s.summary.cov(),
        "corr": s.summary.corr(),
        "se_mean_e": s.summary.se_mean_e(),
        "se_mean_m": s.summary.se_mean_m(),
        "se_cov": s.se_cov(),
        "se_var_m": s.se_var_m(),
    })
}

fn haar_reference_json(da: u64, db: u64) -> Value {
    let d = da * db;
    json!({
        "mean_e_lin": closed::to_f64(&closed::mean_e_lin(da, db)),
        "var_e_lin": closed::to_f64(&closed::var_e_lin(da, db)),
        "mean_m_lin": closed::to_f64(&closed::mean_m_lin(d)),
        "var_m_lin": closed::to_f64(&closed::var_m_lin(d)),
        "cov_e_m": closed::to_f64(&closed::covariance_e_m(da, db)),
    })
}

fn pair_rows(pairs: &[(f64, f64)]) -> Vec<Vec<Cell>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(e, m))| vec![Cell::U(i as u64), Cell::F(e), Cell::F(m)])
        .collect()
}

fn cmd_sample(a: SampleArgs) -> Result<ExitCode, String> {
    let (da, db) = a.shape.resolve()?;
    qubits(da, db)?;
    let samples = mc::sample_haar_joint(
        da as usize,
        db as usize,
        a.run.samples,
        a.run.seed,
        a.run.workers,
        a.run.cap_override,
    )
    .map_err(lib_err)?;
    let mut extra = Map::new();
    extra.insert("summary".into(), summary_json(&samples));
    extra.insert("reference".into(), haar_reference_json(da, db));
    let art = Artifact {
        command: "sample",
        config: serde_json::to_value(&a).unwrap(),
        columns: vec!["sample_index", "e_lin", "m_lin"],
        rows: pair_rows(&samples.pairs),
        extra,
    };
    emit(&art, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_orbit(a: OrbitArgs) -> Result<ExitCode, String> {
    let (da, db) = a.shape.resolve()?;
    qubits(da, db)?;
    if a.lambda.len() != da as usize {
        return Err(format!(
            "Schmidt spectrum must have d_A = {da} entries, got {}",
            a.lambda.len()
        ));
    }
    let spectrum = SchmidtSpectrum::new(a.lambda.clone()).map_err(lib_err)?;
    let samples = mc::sample_orbit(
        &spectrum,
        da as usize,
        db as usize,
        a.run.samples,
        a.run.seed,
        a.run.workers,
        a.run.cap_override,
    )
    .map_err(lib_err)?;
    let mbar = closed::orbit_mean_m(da, db, &spectrum).map_err(lib_err)?;
    let se = samples.summary.se_mean_m();
    let z = (samples.summary.mean_m() - mbar) / se;
    let mut extra = Map::new();
    extra.insert("summary".into(), summary_json(&samples));
    extra.insert(
        "reference".into(),
        json!({
            "e_lin": spectrum.e_lin(),
            "orbit_mean_m": mbar,
            "z_score": z,
        }),
    );
    let art = Artifact {
        command: "orbit",
        config: serde_json::to_value(&a).unwrap(),
        columns: vec!["sample_index", "e_lin", "m_lin"],
        rows: pair_rows(&samples.pairs),
        extra,
    };
    emit(&art, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn e_lin_max(da: u64, db: u64) -> f64 {
    1.0 - 1.0 / da.min(db) as f64
}

fn cmd_conditional(a: ConditionalArgs) -> Result<ExitCode, String> {
    let (da, db) = a.shape.resolve()?;
    qubits(da, db)?;
    let samples = mc::sample_haar_joint(
        da as usize,
        db as usize,
        a.run.samples,
        a.run.seed,
        a.run.workers,
        a.run.cap_override,
    )
    .map_err(lib_err)?;
    let curve = mc::conditional_curve(
        &samples.pairs,
        e_lin_max(da, db),
        a.bins,
        mc::MIN_BIN_COUNT,
    )
    .map_err(lib_err)?;
    let mut rows = Vec::new();
    for i in 0..curve.centers.len() {
        // The closed-form column only exists for a qubit on side A.
        let cf = if da == 2 {
            closed::conditional_mean_2xdb(db, curve.centers[i])
                .map(Cell::F)
                .unwrap_or(Cell::Missing)
        } else {
            Cell::Missing
        };
        rows.push(vec![
            Cell::F(curve.centers[i]),
            Cell::F(curve.means[i]),
            Cell::F(curve.sems[i]),
            Cell::U(curve.counts[i]),
            cf,
        ]);
    }
    let mut extra = Map::new();
    extra.insert("summary".into(), summary_json(&samples));
    extra.insert("reference".into(), haar_reference_json(da, db));
    let art = Artifact {
        command: "conditional",
        config: serde_json::to_value(&a).unwrap(),
        columns: vec!["e_center", "cond_mean_m", "cond_se", "count", "closed_form_m"],
        rows,
        extra,
    };
    emit(&art, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_hist2d(a: Hist2dArgs) -> Result<ExitCode, String> {
    let (da, db) = a.shape.resolve()?;
    qubits(da, db)?;
    let samples = mc::sample_haar_joint(
        da as usize,
        db as usize,
        a.run.samples,
        a.run.seed,
        a.run.workers,
        a.run.cap_override,
    )
    .map_err(lib_err)?;
    let hist =
        mc::joint_histogram(&samples.pairs, e_lin_max(da, db), a.bins, a.bins).map_err(lib_err)?;
    let reference = mc::gaussian_reference(da, db, &hist).map_err(lib_err)?;
    let (kl, l1) = mc::histogram_distances(&hist, &reference).map_err(lib_err)?;
    let ee = hist.e_edges();
    let me = hist.m_edges();
    let mut rows = Vec::new();
    for be in 0..hist.bins_e {
        for bm in 0..hist.bins_m {
            let idx = be * hist.bins_m + bm;
            rows.push(vec![
                Cell::F(ee[be]),
                Cell::F(ee[be + 1]),
                Cell::F(me[bm]),
                Cell::F(me[bm + 1]),
                Cell::U(hist.counts[idx]),
                Cell::F(hist.counts[idx] as f64 / hist.total as f64),
                Cell::F(reference[idx]),
            ]);
        }
    }
    let mut extra = Map::new();
    extra.insert("summary".into(), summary_json(&samples));
    extra.insert(
        "distances".into(),
        json!({ "kl": kl, "l1": l1, "in_range": hist.total }),
    );
    extra.insert("reference".into(), haar_reference_json(da, db));
    let art = Artifact {
        command: "hist2d",
        config: serde_json::to_value(&a).unwrap(),
        columns: vec!["e_lo", "e_hi", "m_lo", "m_hi", "count", "empirical", "gaussian_ref"],
        rows,
        extra,
    };
    emit(&art, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_closed_form(a: ClosedFormArgs) -> Result<ExitCode, String> {
    let (da, db) = a.shape.resolve()?;
    let d = da.checked_mul(db).ok_or("dimension overflow")?;
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut push = |name: &str, r: &closed::Rat| {
        rows.push(vec![
            Cell::S(name.to_string()),
            Cell::S(r.to_string()),
            Cell::F(closed::to_f64(r)),
        ]);
    };
    push("mean_e_lin", &closed::mean_e_lin(da, db));
    push("var_e_lin", &closed::var_e_lin(da, db));
    push("mean_m_lin", &closed::mean_m_lin(d));
    push("var_m_lin", &closed::var_m_lin(d));
    push("mean_stabilizer_purity", &closed::mean_stabilizer_purity(d));
    push(
        "second_moment_stabilizer_purity",
        &closed::second_moment_stabilizer_purity(d),
    );
    push("cross_moment_sp_purity", &closed::cross_moment_sp_purity(da, db));
    push("cov_e_m", &closed::covariance_e_m(da, db));
    push(
        "clifford_antiflatness_prefactor",
        &closed::clifford_antiflatness_prefactor(da, db),
    );
    if let Ok(c) = closed::orbit_coefficients(da, db) {
        push("orbit_alpha", &c.alpha);
        push("orbit_beta", &c.beta);
        push("orbit_gamma", &c.gamma);
        push("orbit_delta", &c.delta);
        push("orbit_mu", &c.mu);
        push("orbit_mean_m_separable", &closed::orbit_mean_m_separable(da, db));
        if let Ok(m) = closed::orbit_mean_m_maxent(da, db) {
            push("orbit_mean_m_maxent", &m);
        }
        if let Ok(b) = closed::orbit_variance_bound(da, db) {
            push("orbit_variance_bound", &b);
        }
    }
    let mut extra = Map::new();
    if let Some(lambda) = &a.lambda {
        let spectrum = SchmidtSpectrum::new(lambda.clone()).map_err(lib_err)?;
        let mbar = closed::orbit_mean_m(da, db, &spectrum).map_err(lib_err)?;
        rows.push(vec![
            Cell::S("orbit_mean_m".into()),
            Cell::Missing,
            Cell::F(mbar),
        ]);
        extra.insert(
            "orbit".into(),
            json!({ "lambda": spectrum.lambdas(), "e_lin": spectrum.e_lin() }),
        );
    }
    let art = Artifact {
        command: "closed-form",
        config: serde_json::to_value(&a).unwrap(),
        columns: vec!["name", "exact", "value"],
        rows,
        extra,
    };
    emit(&art, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

struct Check {
    name: String,
    computed: Value,
    reference: Value,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn exact(name: impl Into<String>, computed: impl ToString, reference: impl ToString) -> Check {
        let c = computed.to_string();
        let r = reference.to_string();
        Check {
            name: name.into(),
            pass: c == r,
            computed: json!(c),
            reference: json!(r),
            tolerance: 0.0,
        }
    }

    fn close(name: impl Into<String>, computed: f64, reference: f64, tol: f64) -> Check {
        Check {
            name: name.into(),
            pass: (computed - reference).abs() <= tol,
            computed: json!(computed),
            reference: json!(reference),
            tolerance: tol,
        }
    }

    fn from_result<T: ToString>(name: impl Into<String>, r: magent::Result<T>) -> Check {
        match r {
            Ok(v) => Check {
                name: name.into(),
                computed: json!(v.to_string()),
                reference: json!("internal cross-check"),
                tolerance: 0.0,
                pass: true,
            },
            Err(e) => Check {
                name: name.into(),
                computed: json!(e.to_string()),
                reference: json!("internal cross-check"),
                tolerance: 0.0,
                pass: false,
            },
        }
    }
}

fn suite_tables() -> Result<Vec<Check>, String> {
    let mut checks = Vec::new();
    let s4: BTreeMap<Vec<usize>, u64> = [
        (vec![1, 1, 1, 1], 1),
        (vec![2, 1, 1], 6),
        (vec![2, 2], 3),
        (vec![3, 1], 8),
        (vec![4], 6),
    ]
    .into_iter()
    .collect();
    checks.push(Check::exact(
        "class_sizes_s4",
        format!("{:?}", perm::class_sizes(4).map_err(lib_err)?),
        format!("{s4:?}"),
    ));
    for (k, expect) in [(6usize, 11usize), (8, 22)] {
        let sizes = perm::class_sizes(k).map_err(lib_err)?;
        checks.push(Check::exact(format!("class_count_s{k}"), sizes.len(), expect));
        let total: u64 = sizes.values().sum();
        let fact: u64 = (1..=k as u64).product();
        checks.push(Check::exact(format!("class_total_s{k}"), total, fact));
    }
    let s8 = perm::class_sizes(8).map_err(lib_err)?;
    for (cycle, expect) in [
        (vec![2usize, 2, 2, 2], 105u64),
        (vec![3, 3, 2], 1120),
        (vec![6, 1, 1], 3360),
        (vec![8], 5040),
    ] {
        checks.push(Check::exact(
            format!("class_size_s8_{cycle:?}"),
            s8.get(&cycle).copied().unwrap_or(0),
            expect,
        ));
    }
    // The moment normalization is the power sum of d over cycle counts.
    for d in [2u64, 3] {
        let direct: num_bigint::BigInt = perm::enumerate_sym(4)
            .map_err(lib_err)?
            .iter()
            .map(|p| num_bigint::BigInt::from(d).pow(p.num_cycles() as u32))
            .sum();
        checks.push(Check::exact(
            format!("moment_normalization_d{d}_k4"),
            perm::haar_moment_normalization(d, 4),
            direct,
        ));
    }
    Ok(checks)
}

fn suite_pauli_patterns() -> Result<Vec<Check>, String> {
    let mut checks = Vec::new();
    checks.push(Check::exact(
        "trace_pattern_n1_m3_k1",
        pauli::pauli_power_trace_sum_closed(1, 3, 1).map_err(lib_err)?,
        20,
    ));
    for (n, m) in [(1u32, 2u32), (2, 2), (3, 2), (1, 3), (2, 3), (1, 4), (2, 4)] {
        for k in [1u32, 2, 4, 8] {
            let closed = pauli::pauli_power_trace_sum_closed(n, m, k).map_err(lib_err)?;
            let brute = pauli::pauli_power_trace_sum_bruteforce(n, m, k).map_err(lib_err)?;
            checks.push(Check::exact(
                format!("trace_pattern_n{n}_m{m}_k{k}"),
                closed,
                brute,
            ));
        }
    }
    Ok(checks)
}

fn suite_variance() -> Vec<Check> {
    let mut checks = Vec::new();
    for n in 1..=3u32 {
        checks.push(Check::from_result(
            format!("variance_sum_n{n}"),
            sums::verify_variance_sum(n),
        ));
    }
    checks.push(Check::exact(
        "var_m_lin_d2",
        closed::var_m_lin(2),
        closed::rat(4, 525),
    ));
    checks
}

fn suite_covariance() -> Vec<Check> {
    let mut checks = Vec::new();
    for (na, nb) in [(1u32, 1u32), (1, 2)] {
        checks.push(Check::from_result(
            format!("covariance_sum_na{na}_nb{nb}"),
            sums::verify_covariance_sum(na, nb),
        ));
        let (da, db) = (1u64 << na, 1u64 << nb);
        checks.push(Check::exact(
            format!("cov_e_m_{da}x{db}"),
            closed::covariance_e_m(da, db),
            closed::rat(0, 1),
        ));
    }
    checks
}

fn random_spectrum(da: usize, rng: &mut impl rand::Rng) -> SchmidtSpectrum {
    let mut ls: Vec<f64> = (0..da).map(|_| rng.gen::<f64>()).collect();
    let s: f64 = ls.iter().sum();
    for l in &mut ls {
        *l /= s;
    }
    SchmidtSpectrum::new(ls).expect("normalized simplex point")
}

fn suite_weingarten_orbit(seed: u64) -> Result<Vec<Check>, String> {
    let mut checks = Vec::new();
    checks.push(Check::close(
        "orbit_mean_separable_2x2",
        closed::to_f64(&closed::orbit_mean_m_separable(2, 2)),
        0.36,
        1e-15,
    ));
    checks.push(Check::close(
        "orbit_mean_bell_2x2",
        closed::to_f64(&closed::orbit_mean_m_maxent(2, 2).map_err(lib_err)?),
        0.3,
        1e-15,
    ));
    let mut rng = state::substream(seed, 0);
    for (da, db) in [(2u64, 2u64), (2, 4), (4, 4), (2, 8), (4, 8)] {
        for i in 0..4 {
            let spectrum = random_spectrum(da as usize, &mut rng);
            let cf = closed::orbit_mean_m(da, db, &spectrum).map_err(lib_err)?;
            let wg = weingarten::orbit_average_weingarten(da, db, &spectrum).map_err(lib_err)?;
            checks.push(Check::close(
                format!("orbit_mean_weingarten_{da}x{db}_{i}"),
                wg,
                cf,
                1e-9,
            ));
        }
    }
    Ok(checks)
}

fn suite_clifford_antiflat(seed: u64) -> Result<Vec<Check>, String> {
    let mut checks = Vec::new();
    let pref = closed::to_f64(&closed::clifford_antiflatness_prefactor(2, 2));
    checks.push(Check::exact(
        "antiflat_prefactor_2x2",
        closed::clifford_antiflatness_prefactor(2, 2),
        closed::rat(1, 10),
    ));
    let mut rng = state::substream(seed, 1);
    for i in 0..5 {
        let psi = state::haar_state(2, 2, &mut rng).map_err(lib_err)?;
        let lhs = clifford::clifford_orbit_antiflatness(&psi).map_err(lib_err)?;
        let rhs = pref * pauli::m_lin(&psi).map_err(lib_err)?;
        checks.push(Check::close(format!("antiflat_identity_haar_{i}"), lhs, rhs, 1e-10));
    }
    let stab = clifford::stabilizer_states(2).map_err(lib_err)?;
    let worst = stab
        .iter()
        .map(|s| {
            let m = pauli::m_lin(s).unwrap_or(f64::NAN).abs();
            let f = state::antiflatness(s).abs();
            m.max(f)
        })
        .fold(0.0f64, f64::max);
    checks.push(Check::close("antiflat_stabilizer_states", worst, 0.0, 1e-12));
    Ok(checks)
}

fn gauss_distances(
    n: u32,
    samples: u64,
    seed: u64,
    workers: Option<usize>,
    bins: usize,
) -> Result<(f64, f64), String> {
    let na = n / 2;
    let (da, db) = (1usize << na, 1usize << (n - na));
    let run = mc::sample_haar_joint(da, db, samples, seed, workers, DEFAULT_QUBIT_CAP)
        .map_err(lib_err)?;
    let hist = mc::joint_histogram(&run.pairs, e_lin_max(da as u64, db as u64), bins, bins)
        .map_err(lib_err)?;
    let reference = mc::gaussian_reference(da as u64, db as u64, &hist).map_err(lib_err)?;
    mc::histogram_distances(&hist, &reference).map_err(lib_err)
}

fn suite_gauss(samples: u64, seed: u64, workers: Option<usize>) -> Result<Vec<Check>, String> {
    let mut checks = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for n in 4..=6u32 {
        let (kl, l1) = gauss_distances(n, samples, seed, workers, 24)?;
        if let Some((pk, pl)) = prev {
            checks.push(Check {
                name: format!("kl_decreasing_n{}_to_n{n}", n - 1),
                pass: kl < pk,
                computed: json!(kl),
                reference: json!(pk),
                tolerance: 0.0,
            });
            checks.push(Check {
                name: format!("l1_decreasing_n{}_to_n{n}", n - 1),
                pass: l1 < pl,
                computed: json!(l1),
                reference: json!(pl),
                tolerance: 0.0,
            });
        }
        prev = Some((kl, l1));
    }
    Ok(checks)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode, String> {
    let checks = match a.suite {
        Suite::Tables => suite_tables()?,
        Suite::PauliPatterns => suite_pauli_patterns()?,
        Suite::Variance => suite_variance(),
        Suite::Covariance => suite_covariance(),
        Suite::WeingartenOrbit => suite_weingarten_orbit(a.seed)?,
        Suite::CliffordAntiflat => suite_clifford_antiflat(a.seed)?,
        Suite::Gauss => suite_gauss(a.samples, a.seed, a.workers)?,
    };
    let all_pass = checks.iter().all(|c| c.pass);
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                Cell::S(c.name.clone()),
                Cell::S(c.computed.to_string()),
                Cell::S(c.reference.to_string()),
                Cell::F(c.tolerance),
                Cell::S(if c.pass { "pass" } else { "fail" }.into()),
            ]
        })
        .collect();
    let mut extra = Map::new();
    extra.insert(
        "report".into(),
        json!({
            "checks": checks.iter().map(|c| json!({
                "name": c.name,
                "computed": c.computed,
                "reference": c.reference,
                "tolerance": c.tolerance,
                "pass": c.pass,
            })).collect::<Vec<_>>(),
            "all_pass": all_pass,
        }),
    );
    let art = Artifact {
        command: "verify",
        config: serde_json::to_value(&a).unwrap(),
        columns: vec!["check", "computed", "reference", "tolerance", "status"],
        rows,
        extra,
    };
    emit(&art, &a.out)?;
    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed");
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_gauss_check(a: GaussArgs) -> Result<ExitCode, String> {
    if a.n_min < 2 || a.n_min > a.n_max {
        return Err(format!("need 2 <= n_min <= n_max, got {}..{}", a.n_min, a.n_max));
    }
    let mut rows = Vec::new();
    let mut kls = Vec::new();
    let mut l1s = Vec::new();
    for n in a.n_min..=a.n_max {
        let (kl, l1) =
            gauss_distances(n, a.run.samples, a.run.seed, a.run.workers, a.bins)?;
        rows.push(vec![Cell::U(n as u64), Cell::F(kl), Cell::F(l1)]);
        kls.push(kl);
        l1s.push(l1);
    }
    let mut extra = Map::new();
    if rows.len() > 1 {
        let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        extra.insert(
            "monotone".into(),
            json!({ "kl_decreasing": dec(&kls), "l1_decreasing": dec(&l1s) }),
        );
    }
    let per_bin = a.run.samples as f64 / (a.bins * a.bins) as f64;
    if per_bin < 10.0 {
        extra.insert(
            "warning".into(),
            json!(format!(
                "expected occupancy {per_bin:.1} per bin is low; distances will be noisy"
            )),
        );
    }
    let art = Artifact {
        command: "gauss-check",
        config: serde_json::to_value(&a).unwrap(),
        columns: vec!["n", "kl", "l1"],
        rows,
        extra,
    };
    emit(&art, &a.out)?;
    Ok(ExitCode::SUCCESS)
}
