//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical non-convergence,
//! 4 resource cap. `QSIGKER_SEED` and `QSIGKER_THREADS` override the default
//! seed and worker count.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::ensemble::{classical_mc_estimate, classical_sufficient_params, Development, McParams};
use crate::error::{Error, Result};
use crate::io::{load_dataset, read_csv_path};
use crate::kernels::{gram_matrix, kernel, KernelConfig, KernelMethod};
use crate::law::{max_sd_residual, solve_schwinger_dyson, Potential, SolverOptions};
use crate::pauli::{count_even_words, count_pair_words, sample_pauli_ensemble};
use crate::qsim::{
    build_trotter_circuit, circuit_trace_exact, dqc1_probability, dqc1_run, qsigker_run, qsigker_run_auto, Circuit,
    CircuitParams,
};
use crate::rng::{SeedStream, DEFAULT_SEED};
use crate::signature::{signature_tail_bound, truncated_signature};

#[derive(Parser, Debug)]
#[command(name = "qsigker", version, about = "Path signatures, GUE signature kernels and their quantum estimators")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "QSIGKER_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Truncated signature of a CSV path.
    Sig(SigArgs),
    /// Kernel between two paths, or a Gram matrix over a dataset.
    Kernel(KernelArgs),
    /// Limiting law of a matrix model from its potential.
    SdLaw(SdLawArgs),
    /// Word counts W(m, p) and N(m, p).
    Counts(CountsArgs),
    /// Classical Monte Carlo estimate of E tr U along a path.
    Mc(McArgs),
    /// Simulated DQC1 estimate of Re E tr U along a path, or replay of a saved circuit.
    Qsim(QsimArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SigArgs {
    /// CSV file with header `t,x1,...,xd`.
    pub file: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelTarget {
    SignaturePde,
    SignatureSeries,
    GueSeries,
    GueIntegralEq,
    #[value(alias = "mc", alias = "classical")]
    GueClassicalMc,
    #[value(alias = "quantum")]
    GueQuantum,
    /// Gram matrix over a dataset; the kernel is chosen by `--method`.
    Gram,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    pub target: KernelTarget,
    /// Two CSV paths, or for `gram` a `.jsonl` dataset or several CSV files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Kernel used by `gram`.
    #[arg(long)]
    pub method: Option<KernelTarget>,
    /// Truncation depth of series methods [default: 12 signature, 16 GUE].
    #[arg(long)]
    pub depth: Option<usize>,
    /// Grid spacing of grid methods [default: 1/256].
    #[arg(long)]
    pub grid_h: Option<f64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Share draws across Gram entries.
    #[arg(long)]
    pub shared_samples: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Parameters of the stochastic methods.
#[derive(Args, Debug, Default)]
pub struct SamplingArgs {
    /// Matrix size N [default: 256].
    #[arg(long)]
    pub matrix_n: Option<usize>,
    /// Monte Carlo draws M [default: 400].
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Truncation / Trotter steps K [default: 64 classical, 32 quantum].
    #[arg(long)]
    pub trotter_k: Option<usize>,
    /// Develop with (I + iA/K)^K instead of exact exponentials (gue-classical-mc).
    #[arg(long)]
    pub truncated: bool,
    /// Qubits n [default: 8].
    #[arg(long)]
    pub n_qubits: Option<usize>,
    /// Pauli strings per generator m [default: 8].
    #[arg(long)]
    pub pauli_m: Option<usize>,
    /// DQC1 shots [default: 4000].
    #[arg(long)]
    pub shots: Option<u64>,
    /// Target accuracy; with --delta selects sufficient parameters.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Constant of the sparse-ensemble bound used by quantum auto mode.
    #[arg(long = "constant-C", alias = "constant-c")]
    pub constant_c: Option<f64>,
    #[arg(long, env = "QSIGKER_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SdLawArgs {
    /// Potential JSON `{"dim": d, "couplings": [{"word": [..], "g": ..}]}`; empty means Gaussian.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Number of variables when the potential does not say [default: 1].
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub max_degree: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CountsArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub p: u32,
}

#[derive(Args, Debug)]
pub struct McArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub matrix_n: Option<usize>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub trotter_k: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, env = "QSIGKER_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct QsimArgs {
    /// CSV path; optional when replaying a circuit.
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub n_qubits: Option<usize>,
    #[arg(long)]
    pub pauli_m: Option<usize>,
    #[arg(long)]
    pub trotter_k: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "constant-C", alias = "constant-c")]
    pub constant_c: Option<f64>,
    #[arg(long, env = "QSIGKER_SEED")]
    pub seed: Option<u64>,
    /// Write the circuit of the first ensemble draw as JSON lines.
    #[arg(long)]
    pub export_circuit: Option<PathBuf>,
    /// Replay a saved circuit instead of building one from a path.
    #[arg(long, conflicts_with = "file")]
    pub import_circuit: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Maps a library error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } | Error::Diverged { .. } => 3,
        Error::ResourceCap { .. } => 4,
        _ => 2,
    }
}

/// Machine-readable error report written to standard error.
pub fn error_report(e: &Error) -> serde_json::Value {
    let mut v = json!({ "error": e.to_string(), "exit_code": exit_code(e) });
    match e {
        Error::NotConverged { iterations, residual } | Error::Diverged { iterations, residual } => {
            v["iterations"] = json!(iterations);
            v["residual"] = json!(residual);
        }
        Error::ResourceCap { what, requested, cap } => {
            v["resource"] = json!(what);
            v["requested"] = json!(requested);
            v["cap"] = json!(cap);
        }
        _ => {}
    }
    v
}

/// Parses arguments and runs the command; clap usage errors are returned as-is.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write) -> std::result::Result<Result<()>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(run(cli, stdout))
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        // a second initialisation (e.g. in tests) keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Sig(a) => cmd_sig(a, stdout),
        Command::Kernel(a) => cmd_kernel(a, stdout),
        Command::SdLaw(a) => cmd_sd_law(a, stdout),
        Command::Counts(a) => cmd_counts(a, stdout),
        Command::Mc(a) => cmd_mc(a, stdout),
        Command::Qsim(a) => cmd_qsim(a, stdout),
    }
}

fn emit(out: &OutputArgs, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &out.output {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn write_json(w: &mut dyn Write, v: &serde_json::Value) -> Result<()> {
    serde_json::to_writer(&mut *w, v)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn cmd_sig(a: SigArgs, stdout: &mut dyn Write) -> Result<()> {
    let path = read_csv_path(&a.file)?;
    let sig = truncated_signature(&path, a.depth);
    let tail = signature_tail_bound(&path, a.depth);
    emit(&a.out, stdout, |w| match a.out.format {
        Format::Json => {
            let (words, coeffs): (Vec<_>, Vec<_>) = sig.iter().unzip();
            write_json(
                w,
                &json!({
                    "dim": path.dim(),
                    "depth": a.depth,
                    "tail_bound": tail,
                    "words": words,
                    "coefficients": coeffs,
                }),
            )
        }
        Format::Csv => {
            writeln!(w, "word,coefficient")?;
            for (word, c) in sig.iter() {
                let letters: Vec<String> = word.letters().iter().map(|l| l.to_string()).collect();
                writeln!(w, "{},{c:?}", letters.join(" "))?;
            }
            Ok(())
        }
    })
}

fn flag_error(flag: &str, what: &str) -> Error {
    Error::invalid(format!("--{flag} does not apply to {what}"))
}

fn method_for(target: KernelTarget, a: &KernelArgs) -> Result<KernelMethod> {
    let s = &a.sampling;
    let name = target.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let stochastic_flags = [
        ("matrix-n", s.matrix_n.is_some()),
        ("mc-samples", s.mc_samples.is_some()),
        ("trotter-k", s.trotter_k.is_some()),
        ("truncated", s.truncated),
        ("n-qubits", s.n_qubits.is_some()),
        ("pauli-m", s.pauli_m.is_some()),
        ("shots", s.shots.is_some()),
        ("epsilon", s.epsilon.is_some()),
        ("delta", s.delta.is_some()),
        ("constant-C", s.constant_c.is_some()),
        ("seed", s.seed.is_some() && std::env::var_os("QSIGKER_SEED").is_none()),
    ];
    let allowed: &[&str] = match target {
        KernelTarget::GueClassicalMc => &["matrix-n", "mc-samples", "trotter-k", "truncated", "seed"],
        KernelTarget::GueQuantum => &["n-qubits", "pauli-m", "trotter-k", "shots", "epsilon", "delta", "constant-C", "seed"],
        _ => &[],
    };
    for (flag, set) in stochastic_flags {
        if set && !allowed.contains(&flag) {
            return Err(flag_error(flag, &name));
        }
    }
    let uses_depth = matches!(target, KernelTarget::SignatureSeries | KernelTarget::GueSeries);
    let uses_grid = matches!(target, KernelTarget::SignaturePde | KernelTarget::GueIntegralEq);
    if a.depth.is_some() && !uses_depth {
        return Err(flag_error("depth", &name));
    }
    if a.grid_h.is_some() && !uses_grid {
        return Err(flag_error("grid-h", &name));
    }
    let seed = s.seed.unwrap_or(DEFAULT_SEED);
    let h = a.grid_h.unwrap_or(1.0 / 256.0);
    Ok(match target {
        KernelTarget::SignaturePde => KernelMethod::SignaturePde { h },
        KernelTarget::SignatureSeries => KernelMethod::SignatureSeries { depth: a.depth.unwrap_or(12) },
        KernelTarget::GueSeries => KernelMethod::GueSeries { depth: a.depth.unwrap_or(16) },
        KernelTarget::GueIntegralEq => KernelMethod::GueIntegralEq { h },
        KernelTarget::GueClassicalMc => {
            if s.trotter_k.is_some() && !s.truncated {
                return Err(Error::invalid("--trotter-k applies to gue-classical-mc only with --truncated"));
            }
            KernelMethod::GueClassicalMc {
                params: McParams {
                    n: s.matrix_n.unwrap_or(256),
                    m: s.mc_samples.unwrap_or(400),
                    k: s.trotter_k.unwrap_or(64),
                    seed,
                },
                development: if s.truncated { Development::Truncated } else { Development::Exact },
            }
        }
        KernelTarget::GueQuantum => match (s.epsilon, s.delta) {
            (Some(epsilon), Some(delta)) => {
                if s.n_qubits.is_some() || s.pauli_m.is_some() || s.trotter_k.is_some() || s.shots.is_some() {
                    return Err(Error::invalid(
                        "--epsilon/--delta select n, m, K and shots; do not pass them as well",
                    ));
                }
                KernelMethod::GueQuantumAuto { epsilon, delta, constant_c: s.constant_c.unwrap_or(1.0), seed }
            }
            (None, None) => {
                if s.constant_c.is_some() {
                    return Err(Error::invalid("--constant-C only applies with --epsilon and --delta"));
                }
                KernelMethod::GueQuantum {
                    params: CircuitParams {
                        m: s.pauli_m.unwrap_or(8),
                        n: s.n_qubits.unwrap_or(8),
                        k: s.trotter_k.unwrap_or(32),
                        seed,
                    },
                    shots: s.shots.unwrap_or(4000),
                }
            }
            _ => return Err(Error::invalid("--epsilon and --delta must be given together")),
        },
        KernelTarget::Gram => return Err(Error::invalid("gram is not a kernel method")),
    })
}

fn cmd_kernel(a: KernelArgs, stdout: &mut dyn Write) -> Result<()> {
    if a.target == KernelTarget::Gram {
        let target = a
            .method
            .ok_or_else(|| Error::invalid("gram needs --method"))?;
        let method = method_for(target, &a)?;
        if a.shared_samples && !method.is_stochastic() {
            return Err(flag_error("shared-samples", method.name()));
        }
        let data = load_dataset(&a.files)?;
        let labels: Vec<String> = data.iter().map(|d| d.id.clone()).collect();
        let paths: Vec<_> = data.into_iter().map(|d| d.path).collect();
        let g = gram_matrix(&labels, &paths, &KernelConfig { method, shared_samples: a.shared_samples })?;
        return emit(&a.out, stdout, |w| match a.out.format {
            Format::Csv => g.write_csv(w),
            Format::Json => write_json(w, &serde_json::to_value(&g)?),
        });
    }
    if a.method.is_some() {
        return Err(Error::invalid("--method only applies to gram"));
    }
    if a.shared_samples {
        return Err(flag_error("shared-samples", "a single kernel value"));
    }
    if a.out.format == Format::Csv {
        return Err(Error::invalid("single kernel values are written as JSON"));
    }
    let [fs, ft] = a.files.as_slice() else {
        return Err(Error::invalid(format!("expected two path files, got {}", a.files.len())));
    };
    let method = method_for(a.target, &a)?;
    let (s, t) = (read_csv_path(fs)?, read_csv_path(ft)?);
    let v = kernel(&s, &t, &method)?;
    emit(&a.out, stdout, |w| write_json(w, &serde_json::to_value(&v)?))
}

fn load_potential(a: &SdLawArgs) -> Result<Potential> {
    let dim = a.dim.unwrap_or(1);
    let Some(file) = &a.potential else {
        return Ok(Potential::quadratic(dim));
    };
    let text = std::fs::read_to_string(file)?;
    if text.trim().is_empty() {
        return Ok(Potential::quadratic(dim));
    }
    let mut v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(file.display().to_string(), e.to_string()))?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::parse(file.display().to_string(), "potential must be a JSON object"))?;
    match (obj.get("dim").and_then(|d| d.as_u64()), a.dim) {
        (Some(found), Some(asked)) if found as usize != asked => {
            return Err(Error::DimensionMismatch { expected: asked, found: found as usize })
        }
        (None, _) => {
            obj.insert("dim".into(), json!(dim));
        }
        _ => {}
    }
    let p: Potential = serde_json::from_value(v).map_err(|e| Error::parse(file.display().to_string(), e.to_string()))?;
    p.validate()?;
    Ok(p)
}

fn cmd_sd_law(a: SdLawArgs, stdout: &mut dyn Write) -> Result<()> {
    let v = load_potential(&a)?;
    let opts = SolverOptions { tol: a.tol, max_iter: a.max_iter, damping: a.damping };
    let law = solve_schwinger_dyson(&v, a.max_degree, opts)?;
    let residual = max_sd_residual(&law, &v);
    emit(&a.out, stdout, |w| match a.out.format {
        Format::Json => {
            let mut body = serde_json::to_value(law.to_export())?;
            body["max_sd_residual"] = json!(residual);
            write_json(w, &body)
        }
        Format::Csv => {
            writeln!(w, "word,coefficient")?;
            for (word, c) in law.iter() {
                let letters: Vec<String> = word.letters().iter().map(|l| l.to_string()).collect();
                writeln!(w, "{},{c:?}", letters.join(" "))?;
            }
            Ok(())
        }
    })
}

fn cmd_counts(a: CountsArgs, stdout: &mut dyn Write) -> Result<()> {
    let w = count_even_words(a.m, a.p)?;
    let n = count_pair_words(a.m, a.p)?;
    // exact integers of any size are valid JSON numbers
    writeln!(stdout, "{{\"m\": {}, \"p\": {}, \"W\": {w}, \"N\": {n}}}", a.m, a.p)?;
    Ok(())
}

fn cmd_mc(a: McArgs, stdout: &mut dyn Write) -> Result<()> {
    let path = read_csv_path(&a.file)?;
    let sufficient = match (a.epsilon, a.delta) {
        (Some(e), Some(d)) => Some(classical_sufficient_params(path.one_variation(), e, d)?),
        (None, None) => None,
        _ => return Err(Error::invalid("--epsilon and --delta must be given together")),
    };
    let (auto_m, auto_n, auto_k) = sufficient.map_or((None, None, None), |(m, n, k)| (Some(m), Some(n), Some(k)));
    let params = McParams {
        n: a.matrix_n.or(auto_n).unwrap_or(256),
        m: a.mc_samples.or(auto_m).unwrap_or(400),
        k: a.trotter_k.or(auto_k).unwrap_or(64),
        seed: a.seed.unwrap_or(DEFAULT_SEED),
    };
    let r = classical_mc_estimate(&path, params)?;
    let mut body = r.to_json();
    if let Some((m, n, k)) = sufficient {
        body["sufficient"] = json!({ "M": m, "N": n, "K": k });
        body["epsilon"] = json!(a.epsilon);
        body["delta"] = json!(a.delta);
    }
    emit(&a.out, stdout, |w| write_json(w, &body))
}

fn cmd_qsim(a: QsimArgs, stdout: &mut dyn Write) -> Result<()> {
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    if let Some(file) = &a.import_circuit {
        for (flag, set) in [
            ("n-qubits", a.n_qubits.is_some()),
            ("pauli-m", a.pauli_m.is_some()),
            ("trotter-k", a.trotter_k.is_some()),
            ("epsilon", a.epsilon.is_some()),
            ("delta", a.delta.is_some()),
            ("constant-C", a.constant_c.is_some()),
            ("export-circuit", a.export_circuit.is_some()),
        ] {
            if set {
                return Err(flag_error(flag, "circuit replay"));
            }
        }
        let circuit = Circuit::read_jsonl(BufReader::new(File::open(file)?))?;
        let trace = circuit_trace_exact(&circuit)?;
        let mut body = json!({
            "n": circuit.n(),
            "gates": circuit.len(),
            "trace_re": trace.re,
            "trace_im": trace.im,
            "dqc1_probability": dqc1_probability(&circuit)?,
        });
        if let Some(shots) = a.shots {
            body["estimate"] = serde_json::to_value(dqc1_run(&circuit, shots, seed)?)?;
        }
        return emit(&a.out, stdout, |w| write_json(w, &body));
    }
    let file = a.file.as_ref().ok_or_else(|| Error::invalid("need a path file or --import-circuit"))?;
    let path = read_csv_path(file)?;
    let auto = match (a.epsilon, a.delta) {
        (Some(e), Some(d)) => {
            if a.n_qubits.is_some() || a.pauli_m.is_some() || a.trotter_k.is_some() || a.shots.is_some() {
                return Err(Error::invalid("--epsilon/--delta select n, m, K and shots; do not pass them as well"));
            }
            Some((e, d))
        }
        (None, None) => {
            if a.constant_c.is_some() {
                return Err(Error::invalid("--constant-C only applies with --epsilon and --delta"));
            }
            None
        }
        _ => return Err(Error::invalid("--epsilon and --delta must be given together")),
    };
    let params = match auto {
        Some((e, d)) => {
            crate::qsim::quantum_sufficient_params(path.one_variation(), e, d, a.constant_c.unwrap_or(1.0), seed)?
                .params
        }
        None => CircuitParams {
            m: a.pauli_m.unwrap_or(8),
            n: a.n_qubits.unwrap_or(8),
            k: a.trotter_k.unwrap_or(32),
            seed,
        },
    };
    if let Some(target) = &a.export_circuit {
        let ops = sample_pauli_ensemble(params.n, params.m, path.dim(), SeedStream::new(seed).child(0).child(0))?;
        let circuit = build_trotter_circuit(&path, &ops, params.k)?;
        let mut w = BufWriter::new(File::create(target)?);
        circuit.write_jsonl(&mut w)?;
        w.flush()?;
    }
    let out = match auto {
        Some((e, d)) => qsigker_run_auto(&path, e, d, a.constant_c.unwrap_or(1.0), seed)?,
        None => qsigker_run(&path, params, a.shots.unwrap_or(4000))?,
    };
    emit(&a.out, stdout, |w| write_json(w, &serde_json::to_value(&out)?))
}
