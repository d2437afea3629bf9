//! JSON wire formats: matrices, channels, and circuits as they appear in
//! input files, plus numeric formatting helpers for stable output.
//!
//! Complex numbers travel as `[re, im]` pairs and matrices as row-major
//! entry lists alongside the subsystem dimensions. The entry count sets the
//! actual matrix size, so the same shape serves gates (d_A d_B square),
//! states on a cut, and channel state matrices.

use serde::{Deserialize, Serialize};

use crate::channels::{
    classical_cnot, depolarize_both, depolarizing, noisy_gate, partial_depolarizing, Channel,
};
use crate::choi::{channel_from_choi, ChoiState};
use crate::linalg::{cx, CMatrix};
use crate::operator::{Dims, Operator};
use crate::simulator::{Circuit, CircuitGate};
use crate::{Error, Result};

/// A complex matrix with its bipartite split: row-major `[re, im]` entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dims: [usize; 2],
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    /// Capture a matrix and its split for serialization.
    #[must_use]
    pub fn from_parts(m: &CMatrix, dims: Dims) -> Self {
        let mut entries = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                entries.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        MatrixJson { dims: [dims.a, dims.b], entries }
    }

    /// The declared subsystem dimensions.
    #[must_use]
    pub fn dims(&self) -> Dims {
        Dims::new(self.dims[0], self.dims[1])
    }

    /// Rebuild the square matrix; the side length comes from the entry
    /// count.
    pub fn matrix(&self) -> Result<CMatrix> {
        square_matrix(&self.entries)
    }
}

fn square_matrix(entries: &[[f64; 2]]) -> Result<CMatrix> {
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n * n != entries.len() || n == 0 {
        return Err(Error::BadInput(format!(
            "matrix entry list has length {}, expected a positive square",
            entries.len()
        )));
    }
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let [re, im] = entries[r * n + c];
        cx(re, im)
    }))
}

/// A matrix field that is either a full matrix object or a bare entry
/// list (the enclosing object then supplies the dimensions).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixPayload {
    Full(MatrixJson),
    Entries(Vec<[f64; 2]>),
}

impl MatrixPayload {
    pub fn matrix(&self) -> Result<CMatrix> {
        match self {
            MatrixPayload::Full(m) => m.matrix(),
            MatrixPayload::Entries(entries) => square_matrix(entries),
        }
    }
}

/// A channel given either by its Kraus operators or by its channel state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dims: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixPayload>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixPayload>,
}

impl ChannelJson {
    /// Serialize a channel in Kraus form.
    #[must_use]
    pub fn from_channel(e: &Channel) -> Self {
        ChannelJson {
            dims: [e.dims().a, e.dims().b],
            kraus: Some(
                e.kraus()
                    .iter()
                    .map(|k| MatrixPayload::Full(MatrixJson::from_parts(k, e.dims())))
                    .collect(),
            ),
            choi: None,
        }
    }

    /// Construct the channel, validating trace preservation (Kraus form)
    /// or positivity and the mixed-marginal condition (state form).
    pub fn build(&self) -> Result<Channel> {
        let dims = Dims::new(self.dims[0], self.dims[1]);
        match (&self.kraus, &self.choi) {
            (Some(kraus), None) => {
                let mats = kraus.iter().map(|k| k.matrix()).collect::<Result<Vec<_>>>()?;
                Channel::new(mats, dims)
            }
            (None, Some(choi)) => {
                let state = ChoiState::new(choi.matrix()?, dims)?;
                channel_from_choi(&state)
            }
            _ => Err(Error::BadInput(
                "channel needs exactly one of \"kraus\" or \"choi\"".into(),
            )),
        }
    }
}

/// One gate in a circuit file: a builtin name or explicit Kraus data, plus
/// the target qubits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateJson {
    pub name: String,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixPayload>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

/// A circuit file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitJson {
    pub qubits: usize,
    pub initial: String,
    pub gates: Vec<GateJson>,
    pub measure: Vec<usize>,
}

fn gate_dims(targets: usize) -> Result<Dims> {
    match targets {
        1 => Ok(Dims::new(2, 1)),
        2 => Ok(Dims::new(2, 2)),
        n => Err(Error::BadCircuit(format!(
            "gates act on one or two qubits, got {n} targets"
        ))),
    }
}

/// Turn a gate description into a channel. Builtin names: `identity`,
/// `depolarize1` (one qubit, optional strength `p`), `depolarize2` (both
/// qubits, optional per-side strength `p`), `classical-cnot`,
/// `noisy-unitary` (`matrix` plus strength `p`), and `kraus` (explicit
/// operator list).
pub fn resolve_gate(gate: &GateJson) -> Result<Channel> {
    let dims = gate_dims(gate.targets.len())?;
    match gate.name.as_str() {
        "identity" => Ok(Channel::identity(dims)),
        "depolarize1" => {
            if gate.targets.len() != 1 {
                return Err(Error::BadCircuit("depolarize1 acts on one qubit".into()));
            }
            match gate.p {
                Some(p) => partial_depolarizing(2, p),
                None => Ok(depolarizing(2)),
            }
        }
        "depolarize2" => {
            if gate.targets.len() != 2 {
                return Err(Error::BadCircuit("depolarize2 acts on two qubits".into()));
            }
            match gate.p {
                Some(p) => {
                    let side = partial_depolarizing(2, p)?;
                    Ok(side.tensor(&partial_depolarizing(2, p)?))
                }
                None => Ok(depolarize_both(dims)),
            }
        }
        "classical-cnot" => {
            if gate.targets.len() != 2 {
                return Err(Error::BadCircuit("classical-cnot acts on two qubits".into()));
            }
            Ok(classical_cnot())
        }
        "noisy-unitary" => {
            let matrix = gate.matrix.as_ref().ok_or_else(|| {
                Error::BadCircuit("noisy-unitary needs a \"matrix\" field".into())
            })?;
            let p = gate
                .p
                .ok_or_else(|| Error::BadCircuit("noisy-unitary needs a strength \"p\"".into()))?;
            let u = Operator::new(matrix.matrix()?, dims)?;
            noisy_gate(&u, p)
        }
        "kraus" => {
            let kraus = gate
                .kraus
                .as_ref()
                .ok_or_else(|| Error::BadCircuit("kraus gate needs a \"kraus\" list".into()))?;
            let mats = kraus.iter().map(|k| k.matrix()).collect::<Result<Vec<_>>>()?;
            Channel::new(mats, dims)
        }
        other => Err(Error::BadCircuit(format!("unknown gate name {other:?}"))),
    }
}

/// Resolve every gate of a circuit file into a runnable circuit.
pub fn circuit_from_json(file: &CircuitJson) -> Result<Circuit> {
    let gates = file
        .gates
        .iter()
        .map(|g| {
            Ok(CircuitGate { channel: resolve_gate(g)?, targets: g.targets.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Circuit {
        qubits: file.qubits,
        initial: file.initial.clone(),
        gates,
        measure: file.measure.clone(),
    })
}

/// Round to the given number of significant decimal digits. Zero and
/// non-finite values pass through.
#[must_use]
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (x * factor).round() / factor
}

/// Decimal rendering at 12 significant digits; non-finite values render as
/// words and extreme magnitudes switch to scientific notation.
#[must_use]
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "infinite".into() } else { "-infinite".into() };
    }
    let rounded = round_sig(x, 12);
    if rounded != 0.0 && (rounded.abs() < 1e-4 || rounded.abs() >= 1e12) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}
