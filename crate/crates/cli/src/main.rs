use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use hzeta::arith::{padic_valuation, pow_rational, Prime};
use hzeta::counting::{count_n_parallel, decade_samples, fit_counts};
use hzeta::fourier_local::{hhat_p_closed, hhat_p_oracle, unit_character_moment, unit_character_moment_brute, OracleConfig};
use hzeta::geometry::{builtin_p2_model, Severity, VarietyModel};
use hzeta::heights::PicParam;
use hzeta::igusa::{eta_eval_with, EtaConfig, IgusaSpec, TestFn};
use hzeta::zeta_assembly::{peyre_constant_with, z1_partial_sum, QuadratureConfig, Z1Config};
use hzeta::ComplexVal;

const THREADS_ENV: &str = "HZETA_THREADS";

#[derive(Parser)]
#[command(name = "hzeta", version, about = "Height zeta function of P^2 as a compactification of G_a x| G_m")]
struct Cli {
    /// worker threads (default: $HZETA_THREADS, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// file of `key = value` lines; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count points of bounded anticanonical height (CSV)
    Count(CountArgs),
    /// Check the local transforms against the shell-sum oracle (JSON)
    Verify(VerifyArgs),
    /// Local Fourier transform tools
    Localft {
        #[command(subcommand)]
        cmd: LocalftCmd,
    },
    /// Evaluate a monomial-phase Igusa integral (JSON)
    Igusa(IgusaArgs),
    /// Leading constant by the residue, Peyre and counting routes (JSON)
    Constant(ConstantArgs),
    /// Partial sums of the spectral term Z1 (JSON)
    Z1probe(Z1Args),
    /// Dump or validate a variety model
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
}

#[derive(Subcommand)]
enum LocalftCmd {
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Write the built-in P^2 model as JSON
    Dump {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a model file; exit 1 on errors
    Validate {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    bmax: f64,
    /// bounds `bmax / 10^k`, one decade apart
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',')]
    p: Vec<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Vec<String>,
    /// largest admissible oracle error bound
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_perturbation: bool,
}

#[derive(Args)]
struct IgusaArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, allow_hyphen_values = true)]
    d: i64,
    #[arg(long, allow_hyphen_values = true)]
    e: i64,
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    /// `s1,s2`
    #[arg(long, allow_hyphen_values = true)]
    s: String,
    /// `integral` (Z_p^2) or `maximal` ((pZ_p)^2)
    #[arg(long, default_value = "integral")]
    testfn: String,
    #[arg(long)]
    max_shell: Option<i64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long, default_value_t = 100_000)]
    pcut: u64,
    /// height bound for the empirical count
    #[arg(long, default_value_t = 1e6)]
    bmax: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Z1Args {
    #[arg(long, allow_hyphen_values = true)]
    s: String,
    /// largest `|beta|, |gamma|`; partial sums also at a quarter and half of it
    #[arg(long, default_value_t = 40)]
    alpharange: u64,
    /// trapezoid nodes on `[-tmax, tmax]`
    #[arg(long, default_value_t = 193)]
    tgrid: usize,
    #[arg(long, default_value_t = 24.0)]
    tmax: f64,
    #[arg(long, default_value_t = 1000)]
    pcut: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Config file entries become `--key=value` flags unless already given.
fn merge_config(mut args: Vec<String>) -> anyhow::Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = Some(args.get(i + 1).cloned().ok_or_else(|| usage("--config needs a file"))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("cannot read config {path}: {e}")))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{path}:{}: expected `key = value`", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_') {
            return Err(usage(format!("{path}:{}: bad key `{key}`", n + 1)));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if key == "config" || args.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match value {
            "true" => extra.push(flag),
            "false" => {}
            v => extra.push(format!("{flag}={v}")),
        }
    }
    args.extend(extra);
    Ok(args)
}

/// Twelve significant digits, shortest decimal form.
fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json!(round12(n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
            f.write_all(text.as_bytes())?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json(out: &Option<PathBuf>, v: Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(&round_json(v))?;
    text.push('\n');
    emit(out, &text)
}

fn parse_rational(s: &str) -> anyhow::Result<BigRational> {
    s.trim().parse::<BigRational>().map_err(|e| usage(format!("bad rational `{s}`: {e}")))
}

fn parse_pair(s: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(usage(format!("expected `a,b`, got `{s}`")));
    }
    let a = parts[0].parse().map_err(|_| usage(format!("bad number `{}`", parts[0])))?;
    let b = parts[1].parse().map_err(|_| usage(format!("bad number `{}`", parts[1])))?;
    Ok((a, b))
}

fn prime(p: u64) -> anyhow::Result<Prime> {
    Prime::new(p).map_err(|e| usage(e.to_string()))
}

fn cmd_count(a: &CountArgs, threads: usize) -> anyhow::Result<bool> {
    if !(a.bmax > 0.0) || a.samples == 0 {
        return Err(usage("--bmax must be positive and --samples at least 1"));
    }
    let mut csv = String::from("B,N,N/B\n");
    let mut entries = Vec::new();
    for b in decade_samples(a.bmax, a.samples) {
        let n = count_n_parallel(b, threads)?;
        csv.push_str(&format!("{},{},{}\n", fmt12(b), n, fmt12(n as f64 / b)));
        entries.push((b, n));
    }
    emit(&a.out, &csv)?;
    if entries.len() >= 3 {
        if let Ok(r) = fit_counts(entries) {
            eprintln!("fitted c = {}{}", fmt12(r.fitted_c), if r.low_confidence { " (low confidence)" } else { "" });
        }
    }
    Ok(true)
}

const DEFAULT_PRIMES: [u64; 3] = [2, 3, 5];
const DEFAULT_ALPHAS: [&str; 9] = ["1", "2", "1/2", "3", "1/3", "6", "1/6", "4", "1/4"];
const S_GRID: [(f64, f64); 9] =
    [(0.5, 2.0), (0.5, 3.0), (0.5, 4.0), (1.0, 2.0), (1.0, 3.0), (1.0, 4.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0)];

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<bool> {
    if !(a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let primes: Vec<u64> = if a.p.is_empty() { DEFAULT_PRIMES.to_vec() } else { a.p.clone() };
    let alphas: Vec<String> =
        if a.alpha.is_empty() { DEFAULT_ALPHAS.iter().map(|s| s.to_string()).collect() } else { a.alpha.clone() };
    let primes = primes.into_iter().map(prime).collect::<anyhow::Result<Vec<_>>>()?;
    let alphas = alphas.iter().map(|s| parse_rational(s)).collect::<anyhow::Result<Vec<_>>>()?;
    if alphas.iter().any(|x| padic_valuation(x, primes[0]).is_none()) {
        return Err(usage("alpha must be nonzero"));
    }

    let mut cases = Vec::new();
    let mut all_pass = true;
    // unit character moments
    for &p in &primes {
        for v in -3i64..=3 {
            let x = pow_rational(p.get(), v);
            let exact = unit_character_moment(&x, p);
            let ex = exact.to_f64().unwrap_or(f64::NAN);
            let brute = unit_character_moment_brute(&x, p, (-v).max(1) as u32)?;
            let diff = (brute - ComplexVal::new(ex, 0.0)).norm();
            let pass = diff <= 1e-12;
            all_pass &= pass;
            cases.push(json!({
                "kind": "moment", "p": p.get(), "valuation": v,
                "exact": exact.to_string(), "brute": [brute.re, brute.im], "diff": diff, "pass": pass,
            }));
        }
    }
    // closed form against the oracle
    let mut first = true;
    for &p in &primes {
        let ocfg = OracleConfig { tolerance: a.tol, ..OracleConfig::default_for(p) };
        for alpha in &alphas {
            for &(s0, s2) in &S_GRID {
                let s = PicParam::real(s0, s2);
                let mut closed = hhat_p_closed(&s, alpha, p)?;
                let perturbed = a.inject_perturbation && first;
                if perturbed {
                    closed *= 1.0 + 1e-3;
                }
                first = false;
                let (oracle, bound, detail) = match hhat_p_oracle(&s, alpha, p, &ocfg) {
                    Ok(r) => (r.value, r.error_bound.unwrap_or(f64::INFINITY), None),
                    Err(e) => (ComplexVal::new(f64::NAN, f64::NAN), f64::INFINITY, Some(e.to_string())),
                };
                let diff = (closed - oracle).norm();
                let pass = bound <= a.tol && diff <= bound + 1e-9;
                all_pass &= pass;
                let mut case = json!({
                    "kind": "closed-vs-oracle", "p": p.get(), "alpha": alpha.to_string(), "s": [s0, s2],
                    "closed": [closed.re, closed.im], "oracle": [oracle.re, oracle.im],
                    "error_bound": bound, "diff": diff, "pass": pass,
                });
                if perturbed {
                    case["perturbed"] = json!(true);
                }
                if let Some(d) = detail {
                    case["error"] = json!(d);
                }
                if !pass {
                    eprintln!("FAIL p={} alpha={} s=({s0}, {s2}): diff {diff:e}, bound {bound:e}", p.get(), alpha);
                }
                cases.push(case);
            }
        }
    }
    let n_fail = cases.iter().filter(|c| c["pass"] == json!(false)).count();
    emit_json(&a.out, json!({ "cases": cases, "failures": n_fail, "pass": all_pass, "tolerance": a.tol }))?;
    Ok(all_pass)
}

fn cmd_igusa(a: &IgusaArgs) -> anyhow::Result<bool> {
    let p = prime(a.p)?;
    let (s1, s2) = parse_pair(&a.s)?;
    let testfn = match a.testfn.as_str() {
        "integral" => TestFn::IntegralSquare,
        "maximal" => TestFn::MaximalSquare,
        other => return Err(usage(format!("unknown test function `{other}`"))),
    };
    let spec = IgusaSpec::new(
        p,
        a.d,
        a.e,
        parse_rational(&a.alpha)?,
        ComplexVal::new(s1, 0.0),
        ComplexVal::new(s2, 0.0),
        testfn,
    )
    .map_err(|e| usage(e.to_string()))?;
    let mut cfg = EtaConfig::default();
    if let Some(m) = a.max_shell {
        cfg.max_shell = m;
    }
    if let Some(t) = a.tol {
        cfg.tolerance = t;
    }
    let r = eta_eval_with(&spec, &cfg)?;
    let st = &r.stats;
    let nmax = st.survivors.iter().map(|s| s.0).max();
    let mmax = st.survivors.iter().map(|s| s.1).max();
    emit_json(
        &a.out,
        json!({
            "p": a.p, "d": a.d, "e": a.e, "alpha": spec.alpha.to_string(), "s": [s1, s2],
            "value": [r.value.re, r.value.im],
            "tail_bound": r.tail_bound,
            "shells_scanned": st.shells_scanned,
            "certified_zero": st.certified_zero,
            "trivial_phase": st.trivial_phase,
            "brute_forced": st.brute_forced,
            "unresolved": st.unresolved,
            "max_depth": st.max_depth_used,
            "survivors": st.survivors.len(),
            "survivor_max_n": nmax,
            "survivor_max_m": mmax,
        }),
    )?;
    Ok(true)
}

fn quad_cfg(tol: Option<f64>) -> anyhow::Result<QuadratureConfig> {
    let mut cfg = QuadratureConfig::default();
    if let Some(t) = tol {
        cfg.tolerance = t;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn cmd_constant(a: &ConstantArgs, threads: usize) -> anyhow::Result<bool> {
    if a.pcut < 2 || !(a.bmax > 1.0) {
        return Err(usage("--pcut must be at least 2 and --bmax above 1"));
    }
    let cfg = quad_cfg(a.tol)?;
    let r = peyre_constant_with(&builtin_p2_model(), a.pcut, &cfg, a.bmax, threads).context("constant")?;
    emit_json(&a.out, serde_json::to_value(&r)?)?;
    Ok(true)
}

fn cmd_z1probe(a: &Z1Args) -> anyhow::Result<bool> {
    let (s0, s2) = parse_pair(&a.s)?;
    if a.alpharange < 4 || a.tgrid < 2 {
        return Err(usage("--alpharange must be at least 4 and --tgrid at least 2"));
    }
    let r = a.alpharange;
    let zcfg = Z1Config { ranges: vec![r / 4, r / 2, r], t_max: a.tmax, t_points: a.tgrid, cutoff: a.pcut };
    let step = 2.0 * a.tmax / (a.tgrid - 1) as f64;
    if step * (r as f64).ln() > std::f64::consts::FRAC_PI_2 {
        eprintln!("warning: t step {step:.3} under-resolves |alpha|^(-it) at alpha = {r}; raise --tgrid");
    }
    let rep = z1_partial_sum(&PicParam::real(s0, s2), &zcfg, &QuadratureConfig::default()).context("z1probe")?;
    emit_json(&a.out, serde_json::to_value(&rep)?)?;
    Ok(rep.cauchy_ok)
}

fn cmd_model(cmd: &ModelCmd) -> anyhow::Result<bool> {
    match cmd {
        ModelCmd::Dump { out } => {
            let mut text = builtin_p2_model().to_json();
            text.push('\n');
            emit(out, &text)?;
            Ok(true)
        }
        ModelCmd::Validate { file, out } => {
            let model = read_model(file)?;
            let violations = model.validate();
            let ok = !violations.iter().any(|v| v.severity == Severity::Error);
            emit_json(out, json!({ "model": model.name, "valid": ok, "violations": violations }))?;
            Ok(ok)
        }
    }
}

fn read_model(file: &Path) -> anyhow::Result<VarietyModel> {
    let text = std::fs::read_to_string(file).map_err(|e| usage(format!("cannot read {}: {e}", file.display())))?;
    VarietyModel::from_json(&text).map_err(|e| usage(e.to_string()))
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<usize> {
    if let Some(n) = flag {
        return if n == 0 { Err(usage("--threads must be positive")) } else { Ok(n) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn run() -> anyhow::Result<bool> {
    let args = merge_config(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let threads = thread_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    match &cli.cmd {
        Cmd::Count(a) => cmd_count(a, threads),
        Cmd::Verify(a) | Cmd::Localft { cmd: LocalftCmd::Verify(a) } => cmd_verify(a),
        Cmd::Igusa(a) => cmd_igusa(a),
        Cmd::Constant(a) => cmd_constant(a, threads),
        Cmd::Z1probe(a) => cmd_z1probe(a),
        Cmd::Model { cmd } => cmd_model(cmd),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
