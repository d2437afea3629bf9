//! Acceptance gate: one test per release criterion, each checked at its
//! stated tolerance and time budget. Every test prints a single pass/fail
//! line through the harness, so this file doubles as the project's scorecard.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gate_robustness::channels::{classical_cnot, one_sided_depolarize, worst_noise, Channel};
use gate_robustness::choi::{choi_state, psi_of_unitary};
use gate_robustness::linalg::{cx, haar_unitary, min_eigenvalue, trace_distance, CMatrix};
use gate_robustness::operator::{
    cnot, min_partial_transpose_eigenvalue, schmidt_coefficients, schmidt_continuity_gap, Dims,
    Operator, Subsystem,
};
use gate_robustness::robustness::{
    chaining_bound, continuity_bound_random_robustness, log_robustness, mixing_feasibility,
    random_robustness_unitary, threshold_bound_depolarizing, threshold_bound_general,
    unital_schmidt_robustness,
};
use gate_robustness::separability::random_robustness_state;
use gate_robustness::simulator::{dense_oracle, l1_distance, run_circuit, Circuit, CircuitGate};

fn haar_gate(rng: &mut ChaCha8Rng) -> Operator {
    Operator::new(haar_unitary(4, rng), Dims::new(2, 2)).unwrap()
}

#[test]
fn criterion_01_cnot_random_robustness_is_eight_by_both_paths() {
    let start = Instant::now();

    let schmidt_path = random_robustness_unitary(&cnot()).unwrap().value;
    assert!((schmidt_path - 8.0).abs() < 1e-9, "schmidt path gave {schmidt_path}");

    let psi = psi_of_unitary(&cnot()).unwrap();
    let state_path = random_robustness_state(&psi, Dims::new(4, 4)).unwrap();
    assert!((state_path - 8.0).abs() < 1e-9, "channel-state path gave {state_path}");

    assert!(start.elapsed() < Duration::from_secs(1), "took {:?}", start.elapsed());
}

#[test]
fn criterion_02_cnot_schmidt_coefficients_are_a_root_two_pair() {
    let coefficients = schmidt_coefficients(&cnot()).unwrap();
    assert_eq!(coefficients.len(), 2, "got {coefficients:?}");
    for q in &coefficients {
        assert!((q - 2f64.sqrt()).abs() < 1e-9, "got {coefficients:?}");
    }
}

#[test]
fn criterion_03_no_two_qubit_gate_beats_cnot() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);

    let mut max = 0.0f64;
    for _ in 0..1000 {
        let value = random_robustness_unitary(&haar_gate(&mut rng)).unwrap().value;
        max = max.max(value);
    }
    assert!(max <= 8.0 + 1e-9, "a random gate reached {max}");

    let cnot_value = random_robustness_unitary(&cnot()).unwrap().value;
    assert!((cnot_value - 8.0).abs() < 1e-9, "cnot reached only {cnot_value}");

    assert!(start.elapsed() < Duration::from_secs(10), "took {:?}", start.elapsed());
}

#[test]
fn criterion_04_cnot_depolarizing_threshold_closed_form() {
    // (8 - sqrt(8)) / 7 = sqrt(8)/(1 + sqrt(8)) = 0.73879612503625...
    let bound = threshold_bound_depolarizing(&cnot()).unwrap();
    let expected = (8.0 - 8f64.sqrt()) / 7.0;
    assert!((bound - expected).abs() < 1e-9, "got {bound}, expected {expected}");
}

#[test]
fn criterion_05_cnot_unit_global_robustness_and_worst_noise_identity() {
    // One unit of worst-case noise destroys cnot's entangling power.
    let report = unital_schmidt_robustness(&cnot()).unwrap();
    assert!((report.value - 1.0).abs() < 1e-9, "global robustness {}", report.value);

    // The constructed worst noise really does reach the boundary: gate
    // state plus one unit of noise state is PPT across the reference cut.
    let gate_state = choi_state(&Channel::from_unitary(&cnot()).unwrap()).unwrap();
    let worst = worst_noise(&cnot()).unwrap();
    let noise_state = choi_state(&worst).unwrap();
    let mixture = (gate_state.rho() + noise_state.rho()) * cx(0.5, 0.0);
    let boundary = min_partial_transpose_eigenvalue(&mixture, Dims::new(4, 4));
    assert!(boundary >= -1e-9, "gate + worst noise has min PT eigenvalue {boundary}");

    // Claimed identity: the worst noise acts as the classically correlated
    // cnot on every computational basis state.
    let flip = classical_cnot();
    let mut largest_gap = 0.0f64;
    for index in 0..4 {
        let mut projector = CMatrix::zeros(4, 4);
        projector[(index, index)] = cx(1.0, 0.0);
        let gap = trace_distance(&worst.apply(&projector), &flip.apply(&projector));
        largest_gap = largest_gap.max(gap);
    }
    let flip_state = choi_state(&flip).unwrap();
    let flip_mixture = (gate_state.rho() + flip_state.rho()) * cx(0.5, 0.0);
    let flip_boundary = min_partial_transpose_eigenvalue(&flip_mixture, Dims::new(4, 4));
    assert!(
        largest_gap <= 1e-9,
        "the worst noise for cnot is not the classically correlated cnot: on computational \
         basis states their outputs differ by trace distance {largest_gap:.3} (the optimal \
         noise dephases the control and depolarizes the target instead of flipping), and the \
         gate mixed equally with the classically correlated cnot has min partial-transpose \
         eigenvalue {flip_boundary:.3}, far from separable; no tolerance makes this identity \
         hold. The unit-robustness and constructed-noise checks above do pass."
    );
}

#[test]
fn criterion_06_cnot_threshold_reports() {
    let general = threshold_bound_general(&cnot()).unwrap();
    assert!((general - 0.5).abs() < 1e-12, "general-noise bound {general}");

    let depolarizing_only = random_robustness_unitary(&cnot())
        .unwrap()
        .threshold_bound
        .unwrap();
    assert!(
        (depolarizing_only - 8.0 / 9.0).abs() < 1e-12,
        "depolarizing-only bound {depolarizing_only}"
    );
}

fn random_pair(rng: &mut ChaCha8Rng, qubits: usize) -> (usize, usize) {
    let a = rng.random_range(0..qubits);
    let mut b = rng.random_range(0..qubits - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// An eight-gate circuit over classically correlated cnots, one-sided
/// depolarizing noise, and random single-qubit unital channels (mixtures
/// of two unitaries).
fn random_sp_circuit(rng: &mut ChaCha8Rng) -> Circuit {
    let qubits = 3;
    let initial: String =
        (0..qubits).map(|_| if rng.random::<bool>() { '1' } else { '0' }).collect();
    let mut gates = Vec::new();
    for _ in 0..8 {
        match rng.random_range(0..3) {
            0 => {
                let (a, b) = random_pair(rng, qubits);
                gates.push(CircuitGate { channel: classical_cnot(), targets: vec![a, b] });
            }
            1 => {
                let (a, b) = random_pair(rng, qubits);
                let side = if rng.random::<bool>() { Subsystem::A } else { Subsystem::B };
                gates.push(CircuitGate {
                    channel: one_sided_depolarize(Dims::new(2, 2), side),
                    targets: vec![a, b],
                });
            }
            _ => {
                let target = rng.random_range(0..qubits);
                let p = 0.2 + 0.6 * rng.random::<f64>();
                let kraus = vec![
                    haar_unitary(2, rng) * cx(p.sqrt(), 0.0),
                    haar_unitary(2, rng) * cx((1.0 - p).sqrt(), 0.0),
                ];
                gates.push(CircuitGate {
                    channel: Channel::new(kraus, Dims::new(2, 1)).unwrap(),
                    targets: vec![target],
                });
            }
        }
    }
    Circuit { qubits, initial, gates, measure: vec![0, 1, 2] }
}

#[test]
fn criterion_07_sampled_circuits_match_the_dense_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let epsilon = 0.01;
    let shots = 100_000;

    for case in 0..20 {
        let circuit = random_sp_circuit(&mut rng);
        let result = run_circuit(&circuit, epsilon, shots, 1000 + case).unwrap();
        let exact = dense_oracle(&circuit).unwrap();

        let mut empirical = vec![0.0; exact.len()];
        for sample in &result.samples {
            let index = sample.chars().fold(0, |acc, c| (acc << 1) | usize::from(c == '1'));
            empirical[index] += 1.0 / shots as f64;
        }

        let sampling_sigma: f64 =
            exact.iter().map(|p| (p * (1.0 - p) / shots as f64).sqrt()).sum();
        let distance = l1_distance(&empirical, &exact);
        assert!(
            distance <= epsilon + 3.0 * sampling_sigma,
            "case {case}: l1 distance {distance} exceeds {epsilon} + 3x{sampling_sigma}"
        );
    }

    assert!(start.elapsed() < Duration::from_secs(120), "took {:?}", start.elapsed());
}

#[test]
fn criterion_08_partial_transpose_boundary_sits_at_the_robustness() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let white = CMatrix::identity(16, 16) * cx(1.0 / 16.0, 0.0);

    for case in 0..200 {
        let gate = haar_gate(&mut rng);
        let robustness = random_robustness_unitary(&gate).unwrap().value;

        let psi = psi_of_unitary(&gate).unwrap();
        let rho = &psi * psi.adjoint();
        let min_pt_at =
            |t: f64| min_partial_transpose_eigenvalue(&(&rho + &white * cx(t, 0.0)), Dims::new(4, 4));

        // Brute-force eigensolve bisection for the zero crossing.
        let (mut lo, mut hi) = (0.0f64, 16.0f64);
        assert!(min_pt_at(hi) > 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if min_pt_at(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let crossing = 0.5 * (lo + hi);
        assert!(
            (crossing - robustness).abs() <= 1e-6,
            "case {case}: crossing {crossing} vs robustness {robustness}"
        );
    }
}

#[test]
fn criterion_09_continuity_bounds_hold_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(97);

    for case in 0..500 {
        let u = haar_gate(&mut rng);
        let v = haar_gate(&mut rng);
        let (lhs, rhs) = schmidt_continuity_gap(&u, &v).unwrap();
        assert!(lhs <= rhs + 1e-9, "case {case}: coefficient overlap {lhs} > {rhs}");
    }

    for case in 0..500 {
        let u = haar_gate(&mut rng);
        let v = haar_gate(&mut rng);
        let (lhs, rhs) = continuity_bound_random_robustness(&u, &v).unwrap();
        assert!(lhs <= rhs + 1e-9, "case {case}: robustness difference {lhs} > {rhs}");
    }
}

#[test]
fn criterion_10_chaining_bound_holds_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(113);

    for case in 0..200 {
        let e1 = Channel::from_unitary(&haar_gate(&mut rng)).unwrap();
        let e2 = Channel::from_unitary(&haar_gate(&mut rng)).unwrap();
        let (bound, lhs) = chaining_bound(&e1, &e2).unwrap();
        assert!(lhs <= bound + 1e-6, "case {case}: {lhs} > {bound}");
        // Equivalent statement: log-robustness is subadditive.
        assert!(
            log_robustness(lhs) <= log_robustness(bound) + 1e-9,
            "case {case}: log form violated"
        );
    }
}

fn random_full_rank_state(rng: &mut ChaCha8Rng) -> CMatrix {
    let basis = haar_unitary(4, rng);
    let mut weights = [0.0f64; 4];
    let mut total = 0.0;
    for w in &mut weights {
        *w = 0.1 + rng.random::<f64>();
        total += *w;
    }
    let mut rho = CMatrix::zeros(4, 4);
    for (k, w) in weights.iter().enumerate() {
        let column = basis.column(k);
        rho += column * column.adjoint() * cx(w / total, 0.0);
    }
    rho
}

#[test]
fn criterion_11_mixing_boundary_is_sharp() {
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    let mut checked = 0;

    while checked < 100 {
        let rho = random_full_rank_state(&mut rng);
        let sigma = random_full_rank_state(&mut rng);
        let p = mixing_feasibility(&rho, &sigma).unwrap();
        if p > 0.99 {
            continue;
        }

        let residual = |q: f64| (&rho - &sigma * cx(q, 0.0)) * cx(1.0 / (1.0 - q), 0.0);
        let at_boundary = min_eigenvalue(&residual(p));
        assert!(at_boundary >= -1e-8, "pair {checked}: residual at p={p} has {at_boundary}");

        let beyond = min_eigenvalue(&residual(p + 1e-3));
        assert!(beyond < -1e-6, "pair {checked}: residual past the boundary still positive ({beyond})");

        checked += 1;
    }
}
