//! Classical simulation of circuits built from separability-preserving
//! gates.
//!
//! The state of q qubits is tracked as q Bloch vectors with l-bit
//! components. Each gate is applied exactly on the two target qubits'
//! product state, the (necessarily separable) output is decomposed into a
//! probabilistic mixture of product terms at the working precision, and one
//! term is sampled to become the new target vectors. The trace-distance
//! error of each replacement is the decomposition residual; summing the
//! worst residual per gate bounds the distance between the sampled
//! distribution and the true one. A dense density-matrix oracle provides
//! exact distributions for validation on small circuits.

use std::collections::HashMap;

use crate::channels::Channel;
use crate::choi::choi_state;
use crate::linalg::{cx, kron, CMatrix};
use crate::operator::{swap, Dims};
use crate::separability::{
    bloch_to_density, decompose_separable_2q, ppt_check, ProductDecomposition, SepStatus,
};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default residual constant for choosing the working precision: the
/// initial l satisfies `gate_count · ĉ · 2^{−l} ≤ ε`.
const RESIDUAL_CONSTANT: f64 = 16.0;

/// Most fractional bits the simulation will use; beyond this the rounding
/// step would be a no-op in double precision anyway.
const MAX_PRECISION_BITS: u32 = 50;

const LEAST_PRECISION_BITS: u32 = 4;

/// Product state of q qubits: one Bloch vector per qubit, every component
/// an l-bit dyadic in [−1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct BlochState {
    pub vectors: Vec<[f64; 3]>,
    pub precision_bits: u32,
}

impl BlochState {
    /// Check the representation invariant: components in [−1, 1] on the
    /// 2^{−l} lattice, and each vector's norm at most 1 + 2^{−l+2}.
    #[must_use]
    pub fn is_valid(&self) -> bool {
        let scale = (2.0_f64).powi(self.precision_bits as i32);
        let slack = (2.0_f64).powi(2 - (self.precision_bits as i32));
        self.vectors.iter().all(|v| {
            let on_lattice = v
                .iter()
                .all(|&x| x.abs() <= 1.0 && (x * scale - (x * scale).round()).abs() < 1e-9);
            let norm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            on_lattice && norm2 <= (1.0 + slack) * (1.0 + slack)
        })
    }
}

/// One gate of a circuit: a channel and the qubits it acts on.
#[derive(Clone, Debug)]
pub struct CircuitGate {
    pub channel: Channel,
    pub targets: Vec<usize>,
}

/// A measurement-terminated circuit on q qubits starting from a
/// computational basis state.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub qubits: usize,
    pub initial: String,
    pub gates: Vec<CircuitGate>,
    pub measure: Vec<usize>,
}

impl Circuit {
    /// Structural checks: the initial string is binary and matches the
    /// qubit count, targets are distinct in-range singletons or pairs with
    /// channel dimensions to match, and the measured set is strictly
    /// increasing and in range.
    pub fn validate(&self) -> Result<()> {
        if self.initial.len() != self.qubits
            || !self.initial.chars().all(|c| c == '0' || c == '1')
        {
            return Err(Error::BadCircuit(format!(
                "initial state {:?} is not a {}-bit string",
                self.initial, self.qubits
            )));
        }
        for (i, gate) in self.gates.iter().enumerate() {
            let t = &gate.targets;
            if t.iter().any(|&k| k >= self.qubits) {
                return Err(Error::BadCircuit(format!("gate {i} targets out of range")));
            }
            match t.len() {
                1 => {
                    if gate.channel.dims().total() != 2 {
                        return Err(Error::BadCircuit(format!(
                            "gate {i} targets one qubit but acts on dimension {}",
                            gate.channel.dims().total()
                        )));
                    }
                }
                2 => {
                    if t[0] == t[1] {
                        return Err(Error::BadCircuit(format!(
                            "gate {i} lists the same target twice"
                        )));
                    }
                    if gate.channel.dims() != Dims::new(2, 2) {
                        return Err(Error::BadCircuit(format!(
                            "gate {i} targets two qubits but is not a qubit-qubit channel"
                        )));
                    }
                }
                n => {
                    return Err(Error::BadCircuit(format!(
                        "gate {i} has {n} targets, only 1 or 2 are supported"
                    )));
                }
            }
        }
        let mut prev: Option<usize> = None;
        for &k in &self.measure {
            if k >= self.qubits {
                return Err(Error::BadCircuit(format!("measured qubit {k} out of range")));
            }
            if prev.is_some_and(|p| p >= k) {
                return Err(Error::BadCircuit(
                    "measured qubits must be strictly increasing".into(),
                ));
            }
            prev = Some(k);
        }
        Ok(())
    }
}

/// What a simulation run produced: one outcome string per shot, the
/// accumulated trace-distance budget, and the worst residual seen at each
/// gate (the budget is exactly their sum).
#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub samples: Vec<String>,
    pub error_budget: f64,
    pub per_gate_residuals: Vec<f64>,
    pub precision_bits: u32,
}

/// Bloch vectors for a computational basis state: (0,0,1) per 0 bit and
/// (0,0,−1) per 1 bit.
pub fn init_state(x: &str, precision_bits: u32) -> Result<BlochState> {
    let mut vectors = Vec::with_capacity(x.len());
    for c in x.chars() {
        match c {
            '0' => vectors.push([0.0, 0.0, 1.0]),
            '1' => vectors.push([0.0, 0.0, -1.0]),
            other => {
                return Err(Error::BadCircuit(format!(
                    "initial state contains {other:?}, expected 0 or 1"
                )));
            }
        }
    }
    Ok(BlochState { vectors, precision_bits })
}

/// Exact output of the gate on the targets' product state, decomposed into
/// product terms at the state's precision. Single-qubit gates are extended
/// by the identity on a partner qubit so every gate goes through the same
/// two-qubit path.
fn gate_output_decomposition(
    state: &BlochState,
    e: &Channel,
    targets: &[usize],
) -> Result<ProductDecomposition> {
    let (rho_a, rho_b, channel) = match targets {
        [t] => {
            let partner = partner_bloch(state, *t);
            let extended = e.tensor(&Channel::identity(Dims::new(2, 1)));
            (bloch_to_density(state.vectors[*t]), bloch_to_density(partner), extended)
        }
        [t1, t2] => (
            bloch_to_density(state.vectors[*t1]),
            bloch_to_density(state.vectors[*t2]),
            e.clone(),
        ),
        _ => return Err(Error::BadCircuit("gates act on one or two qubits".into())),
    };
    let output = channel.apply(&kron(&rho_a, &rho_b));
    decompose_separable_2q(&output, state.precision_bits)
}

fn partner_bloch(state: &BlochState, target: usize) -> [f64; 3] {
    if state.vectors.len() > 1 {
        state.vectors[(target + 1) % state.vectors.len()]
    } else {
        [0.0, 0.0, 1.0]
    }
}

fn sample_term(dec: &ProductDecomposition, rng: &mut impl Rng) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (j, term) in dec.terms.iter().enumerate() {
        acc += term.probability;
        if r < acc {
            return j;
        }
    }
    dec.terms.len() - 1
}

fn apply_term(state: &mut BlochState, targets: &[usize], dec: &ProductDecomposition, j: usize) {
    let term = &dec.terms[j];
    match targets {
        [t] => state.vectors[*t] = term.bloch_a,
        [t1, t2] => {
            state.vectors[*t1] = term.bloch_a;
            state.vectors[*t2] = term.bloch_b;
        }
        _ => unreachable!("validated earlier"),
    }
}

/// One stochastic gate application: compute the exact two-qubit output on
/// the targets, decompose it, sample a product term, and replace the target
/// vectors (all other qubits keep theirs). Returns the new state and the
/// decomposition residual, a trace-distance bound on the error introduced.
///
/// Fails with [`Error::EntangledInput`] when the output is not separable,
/// which signals a gate outside the simulable class.
pub fn simulate_gate(
    state: &BlochState,
    e: &Channel,
    targets: &[usize],
    rng: &mut impl Rng,
) -> Result<(BlochState, f64)> {
    let dec = gate_output_decomposition(state, e, targets)?;
    let j = sample_term(&dec, rng);
    let mut next = state.clone();
    apply_term(&mut next, targets, &dec, j);
    Ok((next, dec.residual))
}

/// Measure the given qubits independently in the computational basis:
/// outcome 0 with probability (1 + s³)/2 per qubit. Returns one character
/// per measured qubit, in the order given.
pub fn measure(state: &BlochState, subset: &[usize], rng: &mut impl Rng) -> Result<String> {
    let mut out = String::with_capacity(subset.len());
    for &k in subset {
        if k >= state.vectors.len() {
            return Err(Error::BadCircuit(format!("measured qubit {k} out of range")));
        }
        let p0 = ((1.0 + state.vectors[k][2]) / 2.0).clamp(0.0, 1.0);
        out.push(if rng.random::<f64>() < p0 { '0' } else { '1' });
    }
    Ok(out)
}

/// Half the l1 norm between two distributions on the same outcome space.
#[must_use]
pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions live on the same outcome space");
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

/// Screen a channel for separability preservation before simulating with
/// it.
///
/// Accepts a channel whose every Kraus operator is a product across the
/// qubit pair (an outright certificate), one that becomes such after
/// composition with SWAP on either side (SWAP itself preserves
/// separability), or one whose channel state passes the partial-transpose
/// test across the cut. Single-qubit channels pass trivially. This is a
/// screen, not a decision procedure: a gate that slips through is still
/// checked application by application, because an entangled output makes
/// the decomposition fail.
pub fn separability_screen(e: &Channel) -> Result<()> {
    if e.has_product_kraus()? {
        return Ok(());
    }
    let dims = e.dims();
    if dims.a == dims.b {
        let exchange = Channel::from_unitary(&swap(dims.a))?;
        if e.compose(&exchange)?.has_product_kraus()?
            || exchange.compose(e)?.has_product_kraus()?
        {
            return Ok(());
        }
    }
    let state = choi_state(e)?;
    let verdict = ppt_check(state.rho(), state.cut());
    if verdict.status == SepStatus::Entangled {
        return Err(Error::BadCircuit(
            "gate output entangled: the channel maps half an entangled pair to an entangled \
             state, so it is not separability-preserving"
                .into(),
        ));
    }
    Ok(())
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based per-event seed: shot and step index are hashed into the
/// root seed, so every gate application and measurement draws from its own
/// stream and the whole run is reproducible regardless of execution order.
fn event_seed(root: u64, shot: u64, step: u64) -> u64 {
    splitmix(splitmix(root ^ splitmix(shot)) ^ splitmix(step.wrapping_add(0x5851F42D4C957F2D)))
}

fn memo_key(state: &BlochState, targets: &[usize]) -> (u64, [u64; 6]) {
    let mut packed = [0u64; 6];
    let a = state.vectors[targets[0]];
    let b = if targets.len() == 2 {
        state.vectors[targets[1]]
    } else {
        partner_bloch(state, targets[0])
    };
    for i in 0..3 {
        packed[i] = a[i].to_bits();
        packed[i + 3] = b[i].to_bits();
    }
    (targets.len() as u64, packed)
}

/// Run a circuit of separability-preserving gates.
///
/// The working precision starts at `l = ⌈log₂(ĉ · gates / ε)⌉` with ĉ = 16
/// and every shot replays the stochastic gate procedure with its own
/// seeded stream. The accumulated budget (worst residual per gate, summed)
/// must come out at most ε; otherwise the precision is raised by what the
/// measured residuals call for, at most three times, before giving up.
/// Decompositions are deterministic in their input, so they are shared
/// across shots through a memo table.
pub fn run_circuit(
    circuit: &Circuit,
    epsilon: f64,
    shots: usize,
    seed: u64,
) -> Result<SimulationResult> {
    circuit.validate()?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::BadInput(format!(
            "target accuracy must be in (0, 1], got {epsilon}"
        )));
    }
    for (i, gate) in circuit.gates.iter().enumerate() {
        separability_screen(&gate.channel).map_err(|e| match e {
            Error::BadCircuit(msg) => Error::BadCircuit(format!("gate {i}: {msg}")),
            other => other,
        })?;
    }

    let gate_count = circuit.gates.len().max(1) as f64;
    let needed = (RESIDUAL_CONSTANT * gate_count / epsilon).log2().ceil() as i64;
    let mut precision_bits =
        (needed.max(LEAST_PRECISION_BITS as i64) as u32).min(MAX_PRECISION_BITS);

    let mut last_budget = f64::INFINITY;
    for escalation in 0..=3 {
        if escalation > 0 {
            let extra = (last_budget / epsilon).log2().ceil().max(1.0) as u32;
            precision_bits = (precision_bits + extra + 1).min(MAX_PRECISION_BITS);
        }
        let result = run_at_precision(circuit, precision_bits, shots, seed)?;
        if result.error_budget <= epsilon {
            return Ok(result);
        }
        last_budget = result.error_budget;
        if precision_bits == MAX_PRECISION_BITS {
            break;
        }
    }
    Err(Error::PrecisionUnattainable { budget: last_budget, epsilon })
}

fn run_at_precision(
    circuit: &Circuit,
    precision_bits: u32,
    shots: usize,
    seed: u64,
) -> Result<SimulationResult> {
    let mut per_gate_residuals = vec![0.0_f64; circuit.gates.len()];
    let mut samples = Vec::with_capacity(shots);
    let mut memo: HashMap<(usize, (u64, [u64; 6])), ProductDecomposition> = HashMap::new();
    let measure_step = circuit.gates.len() as u64;

    for shot in 0..shots {
        let mut state = init_state(&circuit.initial, precision_bits)?;
        for (m, gate) in circuit.gates.iter().enumerate() {
            let key = (m, memo_key(&state, &gate.targets));
            let dec = match memo.get(&key) {
                Some(hit) => hit,
                None => {
                    let fresh = gate_output_decomposition(&state, &gate.channel, &gate.targets)?;
                    memo.entry(key).or_insert(fresh)
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(event_seed(seed, shot as u64, m as u64));
            let j = sample_term(dec, &mut rng);
            per_gate_residuals[m] = per_gate_residuals[m].max(dec.residual);
            let chosen = (dec.terms[j].bloch_a, dec.terms[j].bloch_b);
            match gate.targets.as_slice() {
                [t] => state.vectors[*t] = chosen.0,
                [t1, t2] => {
                    state.vectors[*t1] = chosen.0;
                    state.vectors[*t2] = chosen.1;
                }
                _ => unreachable!("validated earlier"),
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(event_seed(seed, shot as u64, measure_step));
        samples.push(measure(&state, &circuit.measure, &mut rng)?);
    }

    let error_budget = per_gate_residuals.iter().sum();
    Ok(SimulationResult { samples, error_budget, per_gate_residuals, precision_bits })
}

/// Exact outcome distribution of a circuit by full density-matrix
/// evolution, for validating the stochastic simulation. Outcomes are
/// indexed with the first measured qubit as the most significant bit.
pub fn dense_oracle(circuit: &Circuit) -> Result<Vec<f64>> {
    circuit.validate()?;
    if circuit.qubits > 10 {
        return Err(Error::BadCircuit(format!(
            "dense evolution caps at 10 qubits, circuit has {}",
            circuit.qubits
        )));
    }
    let q = circuit.qubits;
    let dim = 1usize << q;
    let mut rho = CMatrix::zeros(dim, dim);
    let init = usize::from_str_radix(&circuit.initial, 2).unwrap_or(0);
    if q > 0 {
        rho[(init, init)] = cx(1.0, 0.0);
    } else {
        rho = CMatrix::identity(1, 1);
    }

    for gate in &circuit.gates {
        let mut next = CMatrix::zeros(dim, dim);
        for k in gate.channel.kraus() {
            let full = embed_kraus(k, &gate.targets, q);
            next += &full * &rho * full.adjoint();
        }
        rho = next;
    }

    let outcomes = 1usize << circuit.measure.len();
    let mut dist = vec![0.0; outcomes];
    for z in 0..dim {
        let mut idx = 0usize;
        for (pos, &k) in circuit.measure.iter().enumerate() {
            let bit = (z >> (q - 1 - k)) & 1;
            idx |= bit << (circuit.measure.len() - 1 - pos);
        }
        dist[idx] += rho[(z, z)].re;
    }
    Ok(dist)
}

/// Extend a 1- or 2-qubit Kraus operator to the full register, qubit 0
/// being the most significant index bit.
fn embed_kraus(k: &CMatrix, targets: &[usize], qubits: usize) -> CMatrix {
    let dim = 1usize << qubits;
    let shifts: Vec<usize> = targets.iter().map(|&t| qubits - 1 - t).collect();
    let local = 1usize << targets.len();
    let mut full = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut col_local = 0usize;
        for (pos, &s) in shifts.iter().enumerate() {
            col_local |= ((col >> s) & 1) << (targets.len() - 1 - pos);
        }
        let mut base = col;
        for &s in &shifts {
            base &= !(1usize << s);
        }
        for row_local in 0..local {
            let entry = k[(row_local, col_local)];
            if entry.norm_sqr() == 0.0 {
                continue;
            }
            let mut row = base;
            for (pos, &s) in shifts.iter().enumerate() {
                row |= ((row_local >> (targets.len() - 1 - pos)) & 1) << s;
            }
            full[(row, col)] += entry;
        }
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        classical_cnot, depolarize_both, one_sided_depolarize, partial_depolarizing,
    };
    use crate::linalg::trace_distance;
    use crate::operator::{cnot, Subsystem};
    use proptest::prelude::*;

    fn single_qubit_identity() -> Channel {
        Channel::identity(Dims::new(2, 1))
    }

    fn two_qubit_identity() -> Channel {
        Channel::identity(Dims::new(2, 2))
    }

    fn histogram(samples: &[String], width: usize) -> Vec<f64> {
        let mut counts = vec![0.0; 1 << width];
        for s in samples {
            counts[usize::from_str_radix(s, 2).unwrap()] += 1.0;
        }
        let total = samples.len() as f64;
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    }

    #[test]
    fn init_state_reference_points() {
        let single = init_state("0", 10).unwrap();
        assert_eq!(single.vectors, vec![[0.0, 0.0, 1.0]]);
        let pair = init_state("10", 10).unwrap();
        assert_eq!(pair.vectors, vec![[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]]);
        assert!(init_state("", 10).unwrap().vectors.is_empty());
        assert!(init_state("0x1", 10).is_err());
        assert!(single.is_valid());
    }

    #[test]
    fn identity_gate_changes_nothing() {
        let state = init_state("01", 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (next, residual) =
            simulate_gate(&state, &two_qubit_identity(), &[0, 1], &mut rng).unwrap();
        assert_eq!(next.vectors, state.vectors);
        assert!(residual <= 64.0 * (2.0_f64).powi(-12));
    }

    #[test]
    fn classical_cnot_follows_the_truth_table() {
        let state = init_state("10", 12).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (next, _) = simulate_gate(&state, &classical_cnot(), &[0, 1], &mut rng).unwrap();
            assert_eq!(next.vectors, vec![[0.0, 0.0, -1.0], [0.0, 0.0, -1.0]]);
        }
    }

    #[test]
    fn classical_cnot_on_a_superposed_control_samples_both_branches() {
        let mut state = init_state("00", 12).unwrap();
        state.vectors[0] = [1.0, 0.0, 0.0];
        let mut up = 0usize;
        let mut down = 0usize;
        for seed in 0..2000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (next, _) = simulate_gate(&state, &classical_cnot(), &[0, 1], &mut rng).unwrap();
            match (next.vectors[0][2], next.vectors[1][2]) {
                (z0, z1) if z0 == 1.0 && z1 == 1.0 => up += 1,
                (z0, z1) if z0 == -1.0 && z1 == -1.0 => down += 1,
                other => panic!("unexpected branch {other:?}"),
            }
        }
        let freq = up as f64 / (up + down) as f64;
        assert!((freq - 0.5).abs() < 0.05, "branch frequency {freq}");
    }

    #[test]
    fn entangling_output_is_refused() {
        let gate = Channel::from_unitary(&cnot()).unwrap();
        let mut state = init_state("00", 12).unwrap();
        state.vectors[0] = [1.0, 0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            simulate_gate(&state, &gate, &[0, 1], &mut rng),
            Err(Error::EntangledInput { .. })
        ));
    }

    #[test]
    fn measurement_reference_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zero = init_state("0", 8).unwrap();
        let one = init_state("1", 8).unwrap();
        for _ in 0..50 {
            assert_eq!(measure(&zero, &[0], &mut rng).unwrap(), "0");
            assert_eq!(measure(&one, &[0], &mut rng).unwrap(), "1");
        }

        let mut plus = init_state("0", 8).unwrap();
        plus.vectors[0] = [1.0, 0.0, 0.0];
        let draws = 100_000;
        let mut zeros = 0usize;
        for _ in 0..draws {
            if measure(&plus, &[0], &mut rng).unwrap() == "0" {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / draws as f64;
        let three_sigma = 3.0 * (0.25 / draws as f64).sqrt();
        assert!((freq - 0.5).abs() <= three_sigma, "frequency {freq}");
        assert!(measure(&plus, &[1], &mut rng).is_err());
    }

    #[test]
    fn distance_reference_points() {
        assert_eq!(l1_distance(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(l1_distance(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert!((l1_distance(&[0.5, 0.5], &[0.75, 0.25]) - 0.25).abs() < 1e-15);

        let zero = bloch_to_density([0.0, 0.0, 1.0]);
        let plus = bloch_to_density([1.0, 0.0, 0.0]);
        assert!(trace_distance(&zero, &zero) < 1e-15);
        let one = bloch_to_density([0.0, 0.0, -1.0]);
        assert!((trace_distance(&zero, &one) - 1.0).abs() < 1e-12);
        assert!((trace_distance(&zero, &plus) - 0.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn all_identity_circuit_reproduces_the_input() {
        let circuit = Circuit {
            qubits: 3,
            initial: "101".into(),
            gates: vec![
                CircuitGate { channel: single_qubit_identity(), targets: vec![0] },
                CircuitGate { channel: two_qubit_identity(), targets: vec![1, 2] },
                CircuitGate { channel: single_qubit_identity(), targets: vec![2] },
            ],
            measure: vec![0, 1, 2],
        };
        let result = run_circuit(&circuit, 0.01, 400, 11).unwrap();
        assert!(result.samples.iter().all(|s| s == "101"));
        assert!(result.error_budget <= 0.01);
        assert_eq!(result.per_gate_residuals.len(), 3);
        let sum: f64 = result.per_gate_residuals.iter().sum();
        assert_eq!(result.error_budget, sum);
    }

    #[test]
    fn classical_cnot_ladder_cascades() {
        let circuit = Circuit {
            qubits: 3,
            initial: "100".into(),
            gates: vec![
                CircuitGate { channel: classical_cnot(), targets: vec![0, 1] },
                CircuitGate { channel: classical_cnot(), targets: vec![1, 2] },
            ],
            measure: vec![0, 1, 2],
        };
        let result = run_circuit(&circuit, 0.01, 200, 17).unwrap();
        assert!(result.samples.iter().all(|s| s == "111"));
    }

    #[test]
    fn swap_passes_the_screen_and_swaps() {
        let exchange = Channel::from_unitary(&swap(2)).unwrap();
        separability_screen(&exchange).unwrap();
        let circuit = Circuit {
            qubits: 2,
            initial: "10".into(),
            gates: vec![CircuitGate { channel: exchange, targets: vec![0, 1] }],
            measure: vec![0, 1],
        };
        let result = run_circuit(&circuit, 0.01, 100, 23).unwrap();
        assert!(result.samples.iter().all(|s| s == "01"));
    }

    #[test]
    fn screen_rejects_an_entangling_gate() {
        let gate = Channel::from_unitary(&cnot()).unwrap();
        assert!(matches!(separability_screen(&gate), Err(Error::BadCircuit(_))));

        let circuit = Circuit {
            qubits: 2,
            initial: "00".into(),
            gates: vec![CircuitGate { channel: gate, targets: vec![0, 1] }],
            measure: vec![0, 1],
        };
        let refused = run_circuit(&circuit, 0.01, 10, 29);
        assert!(matches!(refused, Err(Error::BadCircuit(_))));
    }

    #[test]
    fn noisy_circuit_matches_the_dense_oracle() {
        let circuit = Circuit {
            qubits: 3,
            initial: "100".into(),
            gates: vec![
                CircuitGate { channel: classical_cnot(), targets: vec![0, 1] },
                CircuitGate {
                    channel: one_sided_depolarize(Dims::new(2, 2), Subsystem::A),
                    targets: vec![1, 2],
                },
                CircuitGate {
                    channel: partial_depolarizing(2, 0.5).unwrap(),
                    targets: vec![0],
                },
                CircuitGate { channel: classical_cnot(), targets: vec![2, 0] },
            ],
            measure: vec![0, 1, 2],
        };
        let epsilon = 0.01;
        let shots = 20_000;
        let result = run_circuit(&circuit, epsilon, shots, 31).unwrap();
        let exact = dense_oracle(&circuit).unwrap();
        let empirical = histogram(&result.samples, 3);
        let gap = l1_distance(&empirical, &exact);
        let sampling = 3.0 * (0.25 / shots as f64).sqrt();
        assert!(
            gap <= epsilon + sampling,
            "distribution gap {gap} exceeds {epsilon} + {sampling}"
        );
        assert!(result.error_budget <= epsilon);
    }

    #[test]
    fn depolarized_both_sides_reaches_uniform() {
        let circuit = Circuit {
            qubits: 2,
            initial: "00".into(),
            gates: vec![CircuitGate {
                channel: depolarize_both(Dims::new(2, 2)),
                targets: vec![0, 1],
            }],
            measure: vec![0, 1],
        };
        let result = run_circuit(&circuit, 0.01, 40_000, 37).unwrap();
        let empirical = histogram(&result.samples, 2);
        let exact = dense_oracle(&circuit).unwrap();
        for p in &exact {
            assert!((p - 0.25).abs() < 1e-12);
        }
        assert!(l1_distance(&empirical, &exact) < 0.02);
    }

    #[test]
    fn identical_seeds_reproduce_samples_exactly() {
        let circuit = Circuit {
            qubits: 3,
            initial: "010".into(),
            gates: vec![
                CircuitGate { channel: classical_cnot(), targets: vec![1, 2] },
                CircuitGate { channel: partial_depolarizing(2, 0.3).unwrap(), targets: vec![0] },
                CircuitGate { channel: classical_cnot(), targets: vec![0, 2] },
            ],
            measure: vec![0, 1, 2],
        };
        let a = run_circuit(&circuit, 0.01, 2_000, 41).unwrap();
        let b = run_circuit(&circuit, 0.01, 2_000, 41).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.error_budget, b.error_budget);

        let c = run_circuit(&circuit, 0.01, 2_000, 42).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn dense_oracle_reference_points() {
        let identity_circuit = Circuit {
            qubits: 2,
            initial: "10".into(),
            gates: vec![CircuitGate { channel: two_qubit_identity(), targets: vec![0, 1] }],
            measure: vec![0, 1],
        };
        let dist = dense_oracle(&identity_circuit).unwrap();
        assert_eq!(dist.iter().position(|&p| p > 0.999).unwrap(), 0b10);

        let flip_circuit = Circuit {
            qubits: 2,
            initial: "10".into(),
            gates: vec![CircuitGate { channel: classical_cnot(), targets: vec![0, 1] }],
            measure: vec![0, 1],
        };
        let dist = dense_oracle(&flip_circuit).unwrap();
        assert!((dist[0b11] - 1.0).abs() < 1e-12);

        let too_big = Circuit {
            qubits: 11,
            initial: "0".repeat(11),
            gates: vec![],
            measure: vec![0],
        };
        assert!(matches!(dense_oracle(&too_big), Err(Error::BadCircuit(_))));
    }

    #[test]
    fn reversed_targets_agree_with_the_oracle() {
        // A gate listed as (2, 0) must treat qubit 2 as its first input.
        let circuit = Circuit {
            qubits: 3,
            initial: "001".into(),
            gates: vec![CircuitGate { channel: classical_cnot(), targets: vec![2, 0] }],
            measure: vec![0, 1, 2],
        };
        let exact = dense_oracle(&circuit).unwrap();
        assert!((exact[0b101] - 1.0).abs() < 1e-12);
        let result = run_circuit(&circuit, 0.01, 50, 43).unwrap();
        assert!(result.samples.iter().all(|s| s == "101"));
    }

    #[test]
    fn states_stay_valid_through_noisy_evolution() {
        let circuit = Circuit {
            qubits: 2,
            initial: "01".into(),
            gates: vec![
                CircuitGate { channel: partial_depolarizing(2, 0.7).unwrap(), targets: vec![0] },
                CircuitGate {
                    channel: one_sided_depolarize(Dims::new(2, 2), Subsystem::B),
                    targets: vec![0, 1],
                },
            ],
            measure: vec![0],
        };
        // Replay one shot by hand to inspect the intermediate states.
        let mut state = init_state(&circuit.initial, 10).unwrap();
        for (m, gate) in circuit.gates.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(event_seed(47, 0, m as u64));
            let (next, _) = simulate_gate(&state, &gate.channel, &gate.targets, &mut rng).unwrap();
            assert!(next.is_valid(), "state {:?} invalid", next.vectors);
            state = next;
        }
    }

    #[test]
    fn gate_cost_grows_linearly() {
        let make = |n: usize| Circuit {
            qubits: 3,
            initial: "010".into(),
            gates: (0..n)
                .map(|i| CircuitGate {
                    channel: classical_cnot(),
                    targets: vec![i % 3, (i + 1) % 3],
                })
                .collect(),
            measure: vec![0, 1, 2],
        };
        let shots = 2_000;
        let t0 = std::time::Instant::now();
        run_circuit(&make(5), 0.01, shots, 53).unwrap();
        let short = t0.elapsed();
        let t1 = std::time::Instant::now();
        run_circuit(&make(20), 0.01, shots, 53).unwrap();
        let long = t1.elapsed();
        // Four times the gates should cost roughly four times the work;
        // allow a wide margin for timer noise and memo warm-up.
        assert!(
            long < short * 12 + std::time::Duration::from_millis(50),
            "5 gates: {short:?}, 20 gates: {long:?}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn prop_budget_is_the_residual_sum(seed in 0u64..1u64 << 40, p in 0.05f64..0.95) {
            let circuit = Circuit {
                qubits: 2,
                initial: "01".into(),
                gates: vec![
                    CircuitGate { channel: partial_depolarizing(2, p).unwrap(), targets: vec![0] },
                    CircuitGate { channel: classical_cnot(), targets: vec![0, 1] },
                ],
                measure: vec![0, 1],
            };
            let result = run_circuit(&circuit, 0.02, 300, seed).unwrap();
            let sum: f64 = result.per_gate_residuals.iter().sum();
            prop_assert_eq!(result.error_budget, sum);
            prop_assert!(result.error_budget <= 0.02);
            prop_assert!(result.samples.iter().all(|s| s.len() == 2));
        }
    }
}
