//! End-to-end tests of the `grob` binary: exit codes, output formats, and
//! the documented reference values.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use gate_robustness::channels::{noisy_gate, Channel};
use gate_robustness::io::ChannelJson;
use gate_robustness::operator::cnot;

const CNOT_JSON: &str = r#"{"dims":[2,2],"entries":[
    [1,0],[0,0],[0,0],[0,0],
    [0,0],[1,0],[0,0],[0,0],
    [0,0],[0,0],[0,0],[1,0],
    [0,0],[0,0],[1,0],[0,0]]}"#;

const BELL_JSON: &str = r#"{"dims":[2,2],"entries":[
    [0.5,0],[0,0],[0,0],[0.5,0],
    [0,0],[0,0],[0,0],[0,0],
    [0,0],[0,0],[0,0],[0,0],
    [0.5,0],[0,0],[0,0],[0.5,0]]}"#;

const NOISY_CIRCUIT_JSON: &str = r#"{
    "qubits": 3,
    "initial": "100",
    "gates": [
        {"name": "classical-cnot", "targets": [0, 1]},
        {"name": "classical-cnot", "targets": [1, 2]},
        {"name": "depolarize1", "targets": [1], "p": 0.5},
        {"name": "depolarize1", "targets": [2], "p": 0.5}
    ],
    "measure": [0, 1, 2]
}"#;

const ENTANGLING_CIRCUIT_JSON: &str = r#"{
    "qubits": 2,
    "initial": "00",
    "gates": [{"name": "kraus", "targets": [0, 1], "kraus": [[
        [1,0],[0,0],[0,0],[0,0],
        [0,0],[1,0],[0,0],[0,0],
        [0,0],[0,0],[0,0],[1,0],
        [0,0],[0,0],[1,0],[0,0]]]}],
    "measure": [0, 1]
}"#;

fn fixture(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("grob-cli-tests-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn grob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grob"))
        .args(args)
        .env_remove("GROB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn json_output(args: &[&str]) -> serde_json::Value {
    let output = grob(args);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    serde_json::from_str(&stdout(&output)).expect("valid json on stdout")
}

#[test]
fn schmidt_prints_coefficients_and_robustness() {
    let gate = fixture("cnot_schmidt.json", CNOT_JSON);
    let output = grob(&["schmidt", gate.to_str().unwrap()]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert_eq!(text.matches("1.41421356").count(), 2, "{text}");
    assert!(text.contains("random robustness: 8\n"), "{text}");
}

#[test]
fn schmidt_json_carries_the_reference_numbers() {
    let gate = fixture("cnot_schmidt_json.json", CNOT_JSON);
    let value = json_output(&["schmidt", gate.to_str().unwrap(), "--format", "json"]);
    assert!((value["value"].as_f64().unwrap() - 8.0).abs() < 1e-9);
    assert!(value["exact"].as_bool().unwrap());
    assert!((value["bound"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
    let coefficients = value["coefficients"].as_array().unwrap();
    assert_eq!(coefficients.len(), 2);
    for q in coefficients {
        assert!((q.as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn threshold_bounds_match_the_closed_forms() {
    let gate = fixture("cnot_threshold.json", CNOT_JSON);
    let path = gate.to_str().unwrap();

    let each = grob(&["threshold", path, "--noise", "depolarize-each"]);
    assert!(each.status.success());
    assert!(stdout(&each).contains("0.738796125"), "{}", stdout(&each));

    let each_json = json_output(&["threshold", path, "--noise", "depolarize-each", "--format", "json"]);
    let expected = (8.0 - 8f64.sqrt()) / 7.0;
    assert!((each_json["value"].as_f64().unwrap() - expected).abs() < 1e-12);

    let general = json_output(&["threshold", path, "--noise", "worst-general", "--format", "json"]);
    assert!((general["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(general["exact"].as_bool().unwrap());

    let all = json_output(&["threshold", path, "--noise", "depolarize-all", "--format", "json"]);
    assert!((all["value"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
}

#[test]
fn robustness_measures_agree_with_the_reference_gate() {
    let gate = fixture("cnot_robustness.json", CNOT_JSON);
    let path = gate.to_str().unwrap();

    let random = json_output(&["robustness", path, "--format", "json"]);
    assert!((random["value"].as_f64().unwrap() - 8.0).abs() < 1e-9);
    assert_eq!(random["kind"], "random");
    assert!(random["witness"].is_object());

    let unital = json_output(&["robustness", path, "--measure", "unital-schmidt", "--format", "json"]);
    assert!((unital["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((unital["bound"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let relative = json_output(&["robustness", path, "--measure", "relative", "--format", "json"]);
    assert!((relative["value"].as_f64().unwrap() - 8.0).abs() < 1e-6);
}

#[test]
fn non_unitary_gates_are_a_domain_error() {
    let gate = fixture(
        "nonunitary.json",
        r#"{"dims":[2,2],"entries":[
            [1,0],[0,0],[0,0],[0,0],
            [0,0],[1,0],[0,0],[0,0],
            [0,0],[0,0],[1,0],[0,0],
            [0,0],[0,0],[0,0],[0.5,0]]}"#,
    );
    let output = grob(&["schmidt", gate.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("not unitary"));
}

#[test]
fn malformed_input_is_a_format_error() {
    let missing = grob(&["schmidt", "/definitely/not/here.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let ragged = fixture("ragged.json", r#"{"dims":[2,2],"entries":[[1,0],[0,0]]}"#);
    let output = grob(&["schmidt", ragged.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));

    let garbage = fixture("garbage.json", "not json at all {");
    let output = grob(&["choi", garbage.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));

    let unknown_flag = grob(&["schmidt", "whatever.json", "--frobnicate"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
}

#[test]
fn choi_classifies_the_reference_channels() {
    let flip = grob(&["choi", "classical-cnot"]);
    assert!(flip.status.success());
    assert!(stdout(&flip).contains("cut separability: separable"));
    assert!(stdout(&flip).contains("trace preserving: yes"));

    let gate = fixture("cnot_choi.json", CNOT_JSON);
    let entangling = json_output(&["choi", gate.to_str().unwrap(), "--format", "json"]);
    assert_eq!(entangling["separability"], "entangled");
    assert!((entangling["minPtEigenvalue"].as_f64().unwrap() + 0.5).abs() < 1e-9);
    assert!(entangling["tracePreserving"].as_bool().unwrap());
}

#[test]
fn robustness_state_handles_cuts_and_noise_choices() {
    let bell = fixture("bell.json", BELL_JSON);
    let path = bell.to_str().unwrap();

    let white = json_output(&["robustness-state", path, "--format", "json"]);
    assert!((white["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(white["exact"].as_bool().unwrap());

    let text = grob(&["robustness-state", path]);
    assert!(stdout(&text).contains("label: exact"));

    let trivial = json_output(&["robustness-state", path, "--cut", "1x4", "--format", "json"]);
    assert_eq!(trivial["value"].as_f64().unwrap(), 0.0);

    // Mixing a Bell state with itself never reaches separability, so the
    // infinite value surfaces as JSON null.
    let against_self = json_output(&["robustness-state", path, "--sigma", path, "--format", "json"]);
    assert!(against_self["value"].is_null());

    let bad_cut = grob(&["robustness-state", path, "--cut", "3x3"]);
    assert_eq!(bad_cut.status.code(), Some(2));
}

#[test]
fn simulate_is_seed_deterministic() {
    let circuit = fixture("noisy_circuit.json", NOISY_CIRCUIT_JSON);
    let path = circuit.to_str().unwrap();
    let args = ["simulate", path, "--shots", "2000", "--seed", "7"];

    let first = grob(&args);
    let second = grob(&args);
    assert!(first.status.success());
    assert_eq!(stdout(&first), stdout(&second));

    let other_seed = grob(&["simulate", path, "--shots", "2000", "--seed", "8"]);
    assert_ne!(stdout(&first), stdout(&other_seed));

    let from_env = Command::new(env!("CARGO_BIN_EXE_grob"))
        .args(["simulate", path, "--shots", "2000"])
        .env("GROB_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(stdout(&first), stdout(&from_env));

    let flag_beats_env = Command::new(env!("CARGO_BIN_EXE_grob"))
        .args(args)
        .env("GROB_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(stdout(&first), stdout(&flag_beats_env));
}

#[test]
fn simulate_reports_the_oracle_gap() {
    let circuit = fixture("oracle_circuit.json", NOISY_CIRCUIT_JSON);
    let value = json_output(&[
        "simulate",
        circuit.to_str().unwrap(),
        "--shots",
        "4000",
        "--seed",
        "3",
        "--oracle",
        "--format",
        "json",
    ]);
    assert!(value["errorBudget"].as_f64().unwrap() <= 0.01);
    assert!(value["l1Gap"].as_f64().unwrap() < 0.1);
    // The first qubit is flipped to 1 and never touched again, so every
    // outcome starts with 1 and the exact distribution says so.
    let histogram = value["histogram"].as_object().unwrap();
    assert!(histogram.keys().all(|outcome| outcome.starts_with('1')));
    let exact = value["exact"].as_object().unwrap();
    let total: f64 = exact.values().map(|p| p.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(exact.keys().all(|outcome| outcome.starts_with('1')));
}

#[test]
fn simulate_refuses_entangling_gates() {
    let circuit = fixture("entangling_circuit.json", ENTANGLING_CIRCUIT_JSON);
    let output = grob(&["simulate", circuit.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("gate output entangled"), "{}", stderr(&output));
}

#[test]
fn mixfeas_matches_the_reference_weights() {
    let gate = fixture("cnot_mixfeas.json", CNOT_JSON);
    let white_vs_gate = json_output(&[
        "mixfeas",
        "depolarize2",
        gate.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!((white_vs_gate["value"].as_f64().unwrap() - 1.0 / 16.0).abs() < 1e-9);

    // A gate with two-sided depolarizing noise still contains the clean
    // gate with weight ((1-p) + p/4)^2.
    let noisy = noisy_gate(&cnot(), 0.3).unwrap();
    let noisy_file = fixture(
        "noisy_cnot_channel.json",
        &serde_json::to_string(&ChannelJson::from_channel(&noisy)).unwrap(),
    );
    let clean = Channel::from_unitary(&cnot()).unwrap();
    let clean_file = fixture(
        "clean_cnot_channel.json",
        &serde_json::to_string(&ChannelJson::from_channel(&clean)).unwrap(),
    );
    let weight = json_output(&[
        "mixfeas",
        noisy_file.to_str().unwrap(),
        clean_file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!((weight["value"].as_f64().unwrap() - 0.600625).abs() < 1e-9);

    let bell = fixture("bell_mixfeas.json", BELL_JSON);
    let mixed_kinds = grob(&["mixfeas", "depolarize2", bell.to_str().unwrap()]);
    assert_eq!(mixed_kinds.status.code(), Some(2));
}

#[test]
fn help_documents_the_defaults() {
    let help = grob(&["simulate", "--help"]);
    assert!(help.status.success());
    let text = stdout(&help);
    assert!(text.contains("GROB_SEED"), "{text}");
    assert!(text.contains("--oracle"));
    assert!(text.contains("--epsilon"));
}
