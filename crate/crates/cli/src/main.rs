//! `grob`: robustness of bipartite quantum gates in the presence of noise.
//!
//! A thin command-line surface over the `gate-robustness` library. Inputs
//! are JSON files (matrices, channels, circuits); output is a short human
//! report or, with `--format json`, a machine-readable object. Exit codes:
//! 0 on success, 1 on domain errors (non-unitary gate, entangling gate in
//! the simulator, unreachable precision), 2 on unreadable or malformed
//! input.

use std::collections::BTreeMap;
use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gate_robustness::channels::{classical_cnot, depolarize_both, depolarizing, Channel};
use gate_robustness::choi::{choi_state, sep_char_check};
use gate_robustness::io::{circuit_from_json, format_real, ChannelJson, CircuitJson, MatrixJson};
use gate_robustness::linalg::{cx, hermiticity_deviation, min_eigenvalue, CMatrix};
use gate_robustness::operator::{operator_schmidt, Dims, Operator};
use gate_robustness::robustness::{
    mixing_feasibility, mixing_feasibility_channels, random_robustness_unitary,
    relative_robustness_gate, threshold_bound_depolarizing, threshold_bound_general,
    unital_schmidt_robustness, RobustnessKind, RobustnessReport,
};
use gate_robustness::separability::{ppt_check, relative_robustness_state, SepStatus};
use gate_robustness::simulator::{dense_oracle, l1_distance, run_circuit};
use gate_robustness::Error;

/// Environment variable supplying the default RNG seed for `simulate`.
const SEED_ENV: &str = "GROB_SEED";

#[derive(Parser)]
#[command(
    name = "grob",
    version,
    about = "Robustness of bipartite quantum gates in the presence of noise",
    long_about = "Computes operator Schmidt decompositions, robustness of gates and states \
                  against noise, fault-tolerance threshold upper bounds, and classically \
                  simulates circuits of separability-preserving gates.\n\n\
                  Matrix files: {\"dims\":[dA,dB],\"entries\":[[re,im],...]} (row-major).\n\
                  Channel files: {\"dims\":[dA,dB],\"kraus\":[matrix,...]} or {\"dims\":...,\"choi\":matrix}.\n\
                  Channel arguments also accept the builtin names identity, depolarize1, \
                  depolarize2, and classical-cnot."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit a machine-readable JSON object instead of text.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Operator Schmidt coefficients and random robustness of a gate.
    Schmidt {
        /// Gate file (matrix JSON).
        gate: String,
    },
    /// Channel state of a channel: matrix, marginal check, separability.
    Choi {
        /// Channel file, builtin channel name, or unitary matrix file.
        channel: String,
    },
    /// Robustness measures of a bipartite unitary gate.
    Robustness {
        /// Gate file (matrix JSON).
        gate: String,
        /// Which robustness measure to compute.
        #[arg(long, value_enum, default_value_t = Measure::Random)]
        measure: Measure,
        /// Noise channel for --measure relative: file or builtin name.
        #[arg(long, default_value = "depolarize2")]
        against: String,
    },
    /// Robustness of a bipartite state relative to a noise state.
    RobustnessState {
        /// State file (matrix JSON; dims give the cut).
        state: String,
        /// Noise state: "white" or a matrix file.
        #[arg(long, default_value = "white")]
        sigma: String,
        /// Override the bipartite cut, written as dAxdB (for example 2x2).
        #[arg(long)]
        cut: Option<String>,
    },
    /// Fault-tolerance threshold upper bounds for a gate.
    Threshold {
        /// Gate file (matrix JSON).
        gate: String,
        /// Noise model the bound refers to.
        #[arg(long, value_enum, default_value_t = NoiseModel::DepolarizeEach)]
        noise: NoiseModel,
    },
    /// Sample measurement outcomes of a separability-preserving circuit.
    Simulate {
        /// Circuit file.
        circuit: String,
        /// Number of measurement samples to draw.
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
        /// Total-variation error budget for the sampled distribution.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// RNG seed; defaults to $GROB_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Also compute the exact distribution densely and report the l1 gap.
        #[arg(long)]
        oracle: bool,
    },
    /// Largest weight p such that e = p f + (1-p) g for some physical g.
    Mixfeas {
        /// Mixture: channel file, builtin name, or density matrix file.
        e: String,
        /// Component to extract, in the same formats.
        f: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    /// Against complete depolarization: d_A d_B u_1 u_2.
    Random,
    /// Against the worst trace-preserving noise, via unitary Schmidt factors.
    UnitalSchmidt,
    /// Against one fixed channel (--against).
    Relative,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseModel {
    /// Each party's gate uses depolarize independently: sqrt(R)/(1+sqrt(R)).
    DepolarizeEach,
    /// Arbitrary separability-breaking noise: R_g/(1+R_g).
    WorstGeneral,
    /// All parties depolarized jointly: R_r/(1+R_r).
    DepolarizeAll,
}

/// A failed run: exit code plus the message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    /// Unreadable or structurally malformed input (exit 2).
    fn format<E: std::fmt::Display>(e: E) -> Self {
        Failure { code: 2, message: e.to_string() }
    }

    /// Well-formed input describing an object outside the domain (exit 1).
    fn domain<E: std::fmt::Display>(e: E) -> Self {
        Failure { code: 1, message: e.to_string() }
    }

    /// Classify a library error: malformed data stays a format problem,
    /// everything else is a domain failure.
    fn core(e: Error) -> Self {
        match e {
            Error::Json(_) | Error::BadInput(_) => Failure::format(e),
            _ => Failure::domain(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Schmidt { gate } => cmd_schmidt(gate, cli.format),
        Command::Choi { channel } => cmd_choi(channel, cli.format),
        Command::Robustness { gate, measure, against } => {
            cmd_robustness(gate, *measure, against, cli.format)
        }
        Command::RobustnessState { state, sigma, cut } => {
            cmd_robustness_state(state, sigma, cut.as_deref(), cli.format)
        }
        Command::Threshold { gate, noise } => cmd_threshold(gate, *noise, cli.format),
        Command::Simulate { circuit, shots, epsilon, seed, oracle } => {
            cmd_simulate(circuit, *shots, *epsilon, *seed, *oracle, cli.format)
        }
        Command::Mixfeas { e, f } => cmd_mixfeas(e, f, cli.format),
    }
}

// ---------------------------------------------------------------- loading

fn read_text(path: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::format(format!("{path}: {e}")))
}

fn load_matrix(path: &str) -> Result<(CMatrix, Dims), Failure> {
    let wire: MatrixJson = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::format(format!("{path}: {e}")))?;
    let m = wire.matrix().map_err(|e| Failure::format(format!("{path}: {e}")))?;
    Ok((m, wire.dims()))
}

fn load_operator(path: &str) -> Result<Operator, Failure> {
    let (m, dims) = load_matrix(path)?;
    if m.nrows() != dims.total() {
        return Err(Failure::format(format!(
            "{path}: matrix is {}x{} but dims [{}, {}] require {}x{}",
            m.nrows(),
            m.ncols(),
            dims.a,
            dims.b,
            dims.total(),
            dims.total()
        )));
    }
    Operator::new(m, dims).map_err(|e| Failure::format(format!("{path}: {e}")))
}

fn builtin_channel(name: &str) -> Option<Channel> {
    match name {
        "identity" => Some(Channel::identity(Dims::new(2, 2))),
        "depolarize1" => Some(depolarizing(2)),
        "depolarize2" => Some(depolarize_both(Dims::new(2, 2))),
        "classical-cnot" => Some(classical_cnot()),
        _ => None,
    }
}

/// Load a channel from a builtin name, a channel file, or a unitary matrix
/// file (which becomes the corresponding gate channel).
fn load_channel(arg: &str) -> Result<Channel, Failure> {
    if let Some(channel) = builtin_channel(arg) {
        return Ok(channel);
    }
    let value: Value = serde_json::from_str(&read_text(arg)?)
        .map_err(|e| Failure::format(format!("{arg}: {e}")))?;
    channel_from_value(arg, value)
}

fn channel_from_value(path: &str, value: Value) -> Result<Channel, Failure> {
    let keys = value
        .as_object()
        .ok_or_else(|| Failure::format(format!("{path}: expected a JSON object")))?;
    if keys.contains_key("kraus") || keys.contains_key("choi") {
        let wire: ChannelJson = serde_json::from_value(value)
            .map_err(|e| Failure::format(format!("{path}: {e}")))?;
        wire.build().map_err(Failure::core)
    } else if keys.contains_key("entries") {
        let wire: MatrixJson = serde_json::from_value(value)
            .map_err(|e| Failure::format(format!("{path}: {e}")))?;
        let op = Operator::new(
            wire.matrix().map_err(|e| Failure::format(format!("{path}: {e}")))?,
            wire.dims(),
        )
        .map_err(|e| Failure::format(format!("{path}: {e}")))?;
        Channel::from_unitary(&op).map_err(Failure::core)
    } else {
        Err(Failure::format(format!(
            "{path}: expected a channel object (kraus or choi) or a matrix object (entries)"
        )))
    }
}

/// One side of a mixing-feasibility query.
enum MixSide {
    Chan(Channel),
    State(CMatrix),
}

fn load_mix_side(arg: &str) -> Result<MixSide, Failure> {
    if let Some(channel) = builtin_channel(arg) {
        return Ok(MixSide::Chan(channel));
    }
    let value: Value = serde_json::from_str(&read_text(arg)?)
        .map_err(|e| Failure::format(format!("{arg}: {e}")))?;
    let keys = value
        .as_object()
        .ok_or_else(|| Failure::format(format!("{arg}: expected a JSON object")))?;
    if keys.contains_key("kraus") || keys.contains_key("choi") {
        Ok(MixSide::Chan(channel_from_value(arg, value)?))
    } else if keys.contains_key("entries") {
        let wire: MatrixJson = serde_json::from_value(value)
            .map_err(|e| Failure::format(format!("{arg}: {e}")))?;
        let matrix = wire.matrix().map_err(|e| Failure::format(format!("{arg}: {e}")))?;
        // A bare matrix is a density matrix when it looks like one, and a
        // gate (channel with one unitary Kraus operator) otherwise.
        if hermiticity_deviation(&matrix) <= 1e-8 && (matrix.trace().re - 1.0).abs() <= 1e-8 {
            return Ok(MixSide::State(matrix));
        }
        let op = Operator::new(matrix, wire.dims())
            .map_err(|e| Failure::format(format!("{arg}: {e}")))?;
        Channel::from_unitary(&op).map(MixSide::Chan).map_err(|e| {
            Failure::domain(format!("{arg}: neither a density matrix nor a unitary gate ({e})"))
        })
    } else {
        Err(Failure::format(format!(
            "{arg}: expected a channel object (kraus or choi) or a state object (entries)"
        )))
    }
}

fn parse_cut(text: &str) -> Result<Dims, Failure> {
    let bad = || Failure::format(format!("cut {text:?} is not of the form dAxdB, like 2x2"));
    let (a, b) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok(Dims::new(a, b))
}

/// Density matrix sanity checks for state inputs that bypass library
/// validation.
fn check_state(m: &CMatrix, what: &str) -> Result<(), Failure> {
    if m.nrows() != m.ncols() {
        return Err(Failure::format(format!("{what} is not square")));
    }
    let herm = hermiticity_deviation(m);
    if herm > 1e-8 {
        return Err(Failure::domain(format!(
            "{what} is not hermitian (deviation {herm:.3e})"
        )));
    }
    let min = min_eigenvalue(m);
    if min < -1e-9 {
        return Err(Failure::domain(format!(
            "{what} is not positive semidefinite (minimum eigenvalue {min:.3e})"
        )));
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-10 {
        return Err(Failure::domain(format!(
            "{what} does not have unit trace (trace {:.6} + {:.1e}i)",
            trace.re, trace.im
        )));
    }
    Ok(())
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| {
            Failure::format(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))
        }),
        Err(_) => Ok(0),
    }
}

// --------------------------------------------------------------- printing

/// A real number for JSON output; infinities become null.
fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn pretty(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    text
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn sep_status_str(status: SepStatus) -> &'static str {
    match status {
        SepStatus::Separable => "separable",
        SepStatus::Entangled => "entangled",
        SepStatus::Undecided => "undecided",
    }
}

fn kind_str(kind: RobustnessKind) -> &'static str {
    match kind {
        RobustnessKind::Random => "random",
        RobustnessKind::Separable => "separable",
        RobustnessKind::Global => "global",
        RobustnessKind::Relative => "relative",
    }
}

fn matrix_rows(m: &CMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        out.push(' ');
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            out.push_str(&format!(" {:+.4}{:+.4}i", z.re, z.im));
        }
        out.push('\n');
    }
    out
}

fn report_json(command: &str, report: &RobustnessReport, extra: Value) -> Value {
    let mut object = json!({
        "command": command,
        "value": real(report.value),
        "kind": kind_str(report.kind),
        "exact": report.exact,
        "bound": report.threshold_bound.map_or(Value::Null, real),
    });
    if let Some(witness) = &report.noise_witness {
        object["witness"] =
            serde_json::to_value(ChannelJson::from_channel(witness)).expect("channel json");
    }
    if let Value::Object(extras) = extra {
        for (key, value) in extras {
            object[&key] = value;
        }
    }
    object
}

// --------------------------------------------------------------- commands

fn cmd_schmidt(path: &str, format: OutputFormat) -> Result<String, Failure> {
    let op = load_operator(path)?;
    let decomposition = operator_schmidt(&op).map_err(Failure::core)?;
    let report = random_robustness_unitary(&op).map_err(Failure::core)?;
    if format == OutputFormat::Json {
        let extra = json!({ "coefficients": decomposition.coefficients, "dims": [op.dims().a, op.dims().b] });
        return Ok(pretty(&report_json("schmidt", &report, extra)));
    }
    let list = decomposition
        .coefficients
        .iter()
        .map(|&q| format_real(q))
        .collect::<Vec<_>>()
        .join(", ");
    let mut out = format!(
        "schmidt coefficients: [{list}]\nrandom robustness: {}\n",
        format_real(report.value)
    );
    if let Some(bound) = report.threshold_bound {
        out.push_str(&format!(
            "mixing threshold (full depolarizing): {}\n",
            format_real(bound)
        ));
    }
    Ok(out)
}

fn cmd_choi(arg: &str, format: OutputFormat) -> Result<String, Failure> {
    let channel = load_channel(arg)?;
    let state = choi_state(&channel).map_err(Failure::core)?;
    let verdict = ppt_check(state.rho(), state.cut());
    let report = sep_char_check(&state, Some(&channel));
    let dims = state.dims();
    if format == OutputFormat::Json {
        return Ok(pretty(&json!({
            "command": "choi",
            "dims": [dims.a, dims.b],
            "choi": serde_json::to_value(MatrixJson::from_parts(state.rho(), dims)).expect("matrix json"),
            "marginalDeviation": real(report.marginal_deviation),
            "tracePreserving": report.marginal_ok,
            "minPtEigenvalue": real(verdict.min_pt_eigenvalue),
            "separability": sep_status_str(report.cut_status),
        })));
    }
    let n = state.rho().nrows();
    let mut out = format!(
        "channel state on dims {}x{} (matrix {n}x{n}, systems R_A A B R_B):\n",
        dims.a, dims.b
    );
    out.push_str(&matrix_rows(state.rho()));
    out.push_str(&format!(
        "marginal deviation from maximally mixed: {:.3e}\ntrace preserving: {}\n",
        report.marginal_deviation,
        yes_no(report.marginal_ok)
    ));
    out.push_str(&format!(
        "min partial-transpose eigenvalue: {}\ncut separability: {}\n",
        format_real(verdict.min_pt_eigenvalue),
        sep_status_str(report.cut_status)
    ));
    Ok(out)
}

fn cmd_robustness(
    path: &str,
    measure: Measure,
    against: &str,
    format: OutputFormat,
) -> Result<String, Failure> {
    let op = load_operator(path)?;
    let (label, report) = match measure {
        Measure::Random => ("random", random_robustness_unitary(&op).map_err(Failure::core)?),
        Measure::UnitalSchmidt => (
            "unital-schmidt",
            unital_schmidt_robustness(&op).map_err(Failure::core)?,
        ),
        Measure::Relative => {
            let noise = load_channel(against)?;
            let gate = Channel::from_unitary(&op).map_err(Failure::core)?;
            ("relative", relative_robustness_gate(&gate, &noise).map_err(Failure::core)?)
        }
    };
    if format == OutputFormat::Json {
        return Ok(pretty(&report_json("robustness", &report, json!({ "measure": label }))));
    }
    let mut out = format!(
        "measure: {label}\nvalue: {}\nexact: {}\n",
        format_real(report.value),
        yes_no(report.exact)
    );
    if let Some(bound) = report.threshold_bound {
        out.push_str(&format!("threshold bound: {}\n", format_real(bound)));
    }
    if let Some(witness) = &report.noise_witness {
        out.push_str(&format!(
            "witness: noise channel with {} Kraus operators (shown with --format json)\n",
            witness.kraus().len()
        ));
    }
    Ok(out)
}

fn cmd_robustness_state(
    path: &str,
    sigma: &str,
    cut: Option<&str>,
    format: OutputFormat,
) -> Result<String, Failure> {
    let (rho, file_dims) = load_matrix(path)?;
    let dims = match cut {
        Some(text) => parse_cut(text)?,
        None => file_dims,
    };
    if dims.total() != rho.nrows() {
        return Err(Failure::format(format!(
            "cut {}x{} requires a {}x{} matrix, file holds {}x{}",
            dims.a,
            dims.b,
            dims.total(),
            dims.total(),
            rho.nrows(),
            rho.ncols()
        )));
    }
    let n = dims.total();
    let noise = if sigma == "white" {
        CMatrix::identity(n, n) * cx(1.0 / n as f64, 0.0)
    } else {
        let (matrix, _) = load_matrix(sigma)?;
        if matrix.nrows() != n {
            return Err(Failure::format(format!(
                "noise state is {}x{}, expected {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        matrix
    };
    check_state(&rho, "state")?;
    check_state(&noise, "noise state")?;
    let result = relative_robustness_state(&rho, &noise, dims);
    if format == OutputFormat::Json {
        return Ok(pretty(&json!({
            "command": "robustness-state",
            "value": real(result.value),
            "exact": result.exact,
            "cut": [dims.a, dims.b],
        })));
    }
    let label = if result.exact {
        "exact"
    } else {
        "lower bound (partial-transpose relaxation)"
    };
    Ok(format!("value: {}\nlabel: {label}\n", format_real(result.value)))
}

fn cmd_threshold(path: &str, noise: NoiseModel, format: OutputFormat) -> Result<String, Failure> {
    let op = load_operator(path)?;
    let (label, value, exact) = match noise {
        NoiseModel::DepolarizeEach => (
            "depolarize-each",
            threshold_bound_depolarizing(&op).map_err(Failure::core)?,
            true,
        ),
        NoiseModel::WorstGeneral => (
            "worst-general",
            threshold_bound_general(&op).map_err(Failure::core)?,
            unital_schmidt_robustness(&op).map(|r| r.exact).unwrap_or(false),
        ),
        NoiseModel::DepolarizeAll => {
            let report = random_robustness_unitary(&op).map_err(Failure::core)?;
            let bound = report
                .threshold_bound
                .ok_or_else(|| Failure::domain("gate creates no entanglement; no threshold"))?;
            ("depolarize-all", bound, report.exact)
        }
    };
    if format == OutputFormat::Json {
        return Ok(pretty(&json!({
            "command": "threshold",
            "noise": label,
            "value": real(value),
            "exact": exact,
            "bound": real(value),
        })));
    }
    Ok(format!("threshold bound ({label}): {}\n", format_real(value)))
}

fn bits_to_index(bits: &str) -> usize {
    bits.chars().fold(0, |acc, c| (acc << 1) | usize::from(c == '1'))
}

fn cmd_simulate(
    path: &str,
    shots: usize,
    epsilon: f64,
    seed_flag: Option<u64>,
    oracle: bool,
    format: OutputFormat,
) -> Result<String, Failure> {
    let file: CircuitJson = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::format(format!("{path}: {e}")))?;
    let circuit = circuit_from_json(&file).map_err(|e| Failure::format(format!("{path}: {e}")))?;
    circuit.validate().map_err(|e| Failure::format(format!("{path}: {e}")))?;
    let seed = resolve_seed(seed_flag)?;

    let result = run_circuit(&circuit, epsilon, shots, seed).map_err(Failure::core)?;
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    for sample in &result.samples {
        *histogram.entry(sample.clone()).or_insert(0) += 1;
    }

    let exact_and_gap = if oracle {
        let exact = dense_oracle(&circuit).map_err(Failure::core)?;
        let mut empirical = vec![0.0; exact.len()];
        for (outcome, count) in &histogram {
            empirical[bits_to_index(outcome)] = *count as f64 / shots.max(1) as f64;
        }
        let gap = l1_distance(&empirical, &exact);
        Some((exact, gap))
    } else {
        None
    };

    let width = circuit.measure.len();
    if format == OutputFormat::Json {
        let mut object = json!({
            "command": "simulate",
            "shots": shots,
            "seed": seed,
            "epsilon": epsilon,
            "precisionBits": result.precision_bits,
            "errorBudget": real(result.error_budget),
            "histogram": histogram,
        });
        if let Some((exact, gap)) = &exact_and_gap {
            let mut map = serde_json::Map::new();
            for (index, &probability) in exact.iter().enumerate() {
                if probability > 1e-12 {
                    map.insert(format!("{index:0width$b}"), real(probability));
                }
            }
            object["exact"] = Value::Object(map);
            object["l1Gap"] = real(*gap);
        }
        return Ok(pretty(&object));
    }

    let column = width.max("outcome".len());
    let mut out = format!("{:<column$}  {:>8}  {:>10}\n", "outcome", "count", "frequency");
    for (outcome, count) in &histogram {
        out.push_str(&format!(
            "{outcome:<column$}  {count:>8}  {:>10}\n",
            format_real(*count as f64 / shots.max(1) as f64)
        ));
    }
    out.push_str(&format!(
        "shots: {shots}  seed: {seed}  precision bits: {}\n",
        result.precision_bits
    ));
    out.push_str(&format!("error budget: {}\n", format_real(result.error_budget)));
    if let Some((exact, gap)) = &exact_and_gap {
        out.push_str(&format!("l1 gap to exact: {}\n", format_real(*gap)));
        out.push_str("exact distribution:\n");
        for (index, &probability) in exact.iter().enumerate() {
            if probability > 1e-12 {
                out.push_str(&format!(
                    "  {index:0width$b}: {}\n",
                    format_real(probability)
                ));
            }
        }
    }
    Ok(out)
}

fn cmd_mixfeas(e: &str, f: &str, format: OutputFormat) -> Result<String, Failure> {
    let left = load_mix_side(e)?;
    let right = load_mix_side(f)?;
    let value = match (left, right) {
        (MixSide::Chan(e), MixSide::Chan(f)) => {
            mixing_feasibility_channels(&e, &f).map_err(Failure::core)?
        }
        (MixSide::State(rho), MixSide::State(sigma)) => {
            if rho.nrows() != sigma.nrows() {
                return Err(Failure::format(format!(
                    "states have different sizes {} and {}",
                    rho.nrows(),
                    sigma.nrows()
                )));
            }
            mixing_feasibility(&rho, &sigma).map_err(Failure::core)?
        }
        _ => {
            return Err(Failure::format(
                "mixfeas needs two channels or two states, not one of each",
            ))
        }
    };
    if format == OutputFormat::Json {
        return Ok(pretty(&json!({
            "command": "mixfeas",
            "value": real(value),
            "exact": true,
        })));
    }
    Ok(format!("largest feasible weight: {}\n", format_real(value)))
}
