//! Gate-level robustness measures, their algebraic properties, the
//! threshold upper bounds they imply, and mixing feasibility between
//! channels.
//!
//! The random robustness of a gate is the least amount of completely
//! depolarized noise that must be mixed in before the gate's
//! entangling power disappears; the separable and global variants replace
//! white noise by the worst separability-preserving or arbitrary channel.
//! All of them reduce to state robustness questions about the gate's
//! channel state across the R_A A : B R_B cut.

use crate::channels::{depolarize_both, worst_noise, Channel};
use crate::choi::{choi_state, psi_of_unitary};
use crate::linalg::{
    cx, eigh, min_eigenvalue, psd_inv_sqrt, trace_distance, unitary_eigenphases, CMatrix,
};
use crate::operator::{
    min_partial_transpose_eigenvalue, schmidt_coefficients, operator_schmidt_unitary_factors,
    partial_trace, Dims, Operator,
};
use crate::separability::{random_robustness_state, relative_robustness_state};
use crate::{Error, Result, Tolerances};
use rand::Rng;

/// Which robustness measure a report carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RobustnessKind {
    /// Against completely depolarizing noise.
    Random,
    /// Against the worst separability-preserving noise.
    Separable,
    /// Against arbitrary trace-preserving noise.
    Global,
    /// Against one fixed channel supplied by the caller.
    Relative,
}

/// Outcome of a robustness computation.
///
/// `exact` is true only on formula-backed paths; otherwise the value is a
/// partial-transpose boundary, a lower bound on the true measure. The
/// witness, when present, is a noise channel that renders the gate
/// non-entangling at the reported mixing weight.
#[derive(Clone, Debug)]
pub struct RobustnessReport {
    pub value: f64,
    pub kind: RobustnessKind,
    pub exact: bool,
    pub noise_witness: Option<Channel>,
    pub threshold_bound: Option<f64>,
}

/// Random robustness of a unitary gate, `d_A d_B u_1 u_2` from its two
/// largest operator Schmidt coefficients.
///
/// The report also carries the mixing probability `R/(1+R)` at which the
/// gate mixed with complete depolarization stops producing entanglement.
pub fn random_robustness_unitary(u: &Operator) -> Result<RobustnessReport> {
    let tol = Tolerances::default();
    if !u.is_unitary(tol.predicate) {
        return Err(Error::NotUnitary {
            deviation: crate::linalg::unitarity_deviation(u.matrix()),
        });
    }
    let coeffs = schmidt_coefficients(u)?;
    let dims = u.dims();
    let second = coeffs.get(1).copied().unwrap_or(0.0);
    let value = dims.a as f64 * dims.b as f64 * coeffs[0] * second;
    Ok(RobustnessReport {
        value,
        kind: RobustnessKind::Random,
        exact: true,
        noise_witness: Some(depolarize_both(dims)),
        threshold_bound: Some(value / (1.0 + value)),
    })
}

/// The largest random robustness any unitary on the given dimensions can
/// have, `d_A² d_B² / 2`.
#[must_use]
pub fn random_robustness_max(dims: Dims) -> f64 {
    let d = dims.a as f64 * dims.b as f64;
    d * d / 2.0
}

/// Robustness of one channel relative to another: the least `t` such that
/// `(E + t F) / (1 + t)` has a separable channel state across the cut.
///
/// Delegates to the state-level search on channel states. When E is a
/// unitary gate and F is complete depolarization the value comes from the
/// pure-state formula instead and is exact; otherwise it is a
/// partial-transpose boundary and `exact` reflects whether that test is
/// conclusive on the cut.
pub fn relative_robustness_gate(e: &Channel, f: &Channel) -> Result<RobustnessReport> {
    if e.dims() != f.dims() {
        return Err(Error::DimensionMismatch(format!(
            "relative robustness needs matching dims, got ({}, {}) vs ({}, {})",
            e.dims().a,
            e.dims().b,
            f.dims().a,
            f.dims().b
        )));
    }
    let tol = Tolerances::default();
    let state_f = choi_state(f)?;
    let cut = state_f.cut();

    if e.kraus().len() == 1
        && crate::linalg::unitarity_deviation(&e.kraus()[0]) <= tol.predicate
    {
        let d = e.dims().total();
        let white = CMatrix::identity(d * d, d * d) * cx(1.0 / (d * d) as f64, 0.0);
        if trace_distance(state_f.rho(), &white) <= 1e-10 {
            let gate = Operator::new(e.kraus()[0].clone(), e.dims())?;
            let psi = psi_of_unitary(&gate)?;
            let value = random_robustness_state(&psi, cut)?;
            return Ok(RobustnessReport {
                value,
                kind: RobustnessKind::Relative,
                exact: true,
                noise_witness: Some(f.clone()),
                threshold_bound: None,
            });
        }
    }

    let state_e = choi_state(e)?;
    let found = relative_robustness_state(state_e.rho(), state_f.rho(), cut);
    Ok(RobustnessReport {
        value: found.value,
        kind: RobustnessKind::Relative,
        exact: found.exact,
        noise_witness: Some(f.clone()),
        threshold_bound: None,
    })
}

fn random_robustness_channel(e: &Channel) -> Result<(f64, bool)> {
    let report = relative_robustness_gate(e, &depolarize_both(e.dims()))?;
    Ok((report.value, report.exact))
}

/// Log-domain robustness `ln(1 + R)`, subadditive under composition.
#[must_use]
pub fn log_robustness(value: f64) -> f64 {
    (1.0 + value).ln()
}

/// Chaining bound on the random robustness of a composition,
/// `R(E1∘E2) ≤ R(E1) + R(E2) + R(E1) R(E2)`, valid when E1 is unital.
///
/// Returns `(bound, lhs)` after checking the inequality; the left side uses
/// the exact formula for unitary channels and a partial-transpose boundary
/// otherwise, which obeys the same inequality since channels with positive
/// partial transpose are closed under composition.
pub fn chaining_bound(e1: &Channel, e2: &Channel) -> Result<(f64, f64)> {
    if e1.dims() != e2.dims() {
        return Err(Error::DimensionMismatch(
            "chaining bound needs channels on the same bipartite space".into(),
        ));
    }
    if !e1.is_unital(1e-8) {
        return Err(Error::HypothesisViolated(
            "chaining bound requires the outer channel to be unital".into(),
        ));
    }
    let (r1, _) = random_robustness_channel(e1)?;
    let (r2, _) = random_robustness_channel(e2)?;
    let (lhs, _) = random_robustness_channel(&e1.compose(e2)?)?;
    let bound = r1 + r2 + r1 * r2;
    if lhs > bound + 1e-6 {
        return Err(Error::NumericalFailure(format!(
            "chaining inequality violated: {lhs} > {bound}"
        )));
    }
    Ok((bound, lhs))
}

/// Global-phase-insensitive gate distance `min_θ ‖U − e^{iθ} V‖` in the
/// operator norm.
///
/// `W = V†U` is unitary, so the distance is a minimax problem over its
/// eigenphases: if the smallest arc containing them has width `w`, the best
/// phase sits at the arc's midpoint and the distance is `2 sin(w/4)`.
pub fn phase_aligned_distance(u: &Operator, v: &Operator) -> Result<f64> {
    if u.dims() != v.dims() {
        return Err(Error::DimensionMismatch(
            "gate distance needs operators on the same space".into(),
        ));
    }
    let w = v.matrix().adjoint() * u.matrix();
    let mut phases = unitary_eigenphases(&w)?;
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tau = std::f64::consts::TAU;
    let mut largest_gap = phases[0] + tau - phases[phases.len() - 1];
    for pair in phases.windows(2) {
        largest_gap = largest_gap.max(pair[1] - pair[0]);
    }
    let width = (tau - largest_gap).max(0.0);
    Ok(2.0 * (width / 4.0).sin())
}

/// Continuity of the random robustness in the gate:
/// `|R(U) − R(V)| ≤ min(d_A, d_B) d_A³ d_B³ ‖U − V‖²`, with the distance
/// minimized over global phases (both sides are phase-invariant).
///
/// Returns `(lhs, rhs)` after checking the inequality.
pub fn continuity_bound_random_robustness(u: &Operator, v: &Operator) -> Result<(f64, f64)> {
    let ru = random_robustness_unitary(u)?;
    let rv = random_robustness_unitary(v)?;
    let dist = phase_aligned_distance(u, v)?;
    let dims = u.dims();
    let (da, db) = (dims.a as f64, dims.b as f64);
    let lhs = (ru.value - rv.value).abs();
    let rhs = da.min(db) * da.powi(3) * db.powi(3) * dist * dist;
    if lhs > rhs + 1e-9 {
        return Err(Error::NumericalFailure(format!(
            "continuity inequality violated: {lhs} > {rhs}"
        )));
    }
    Ok((lhs, rhs))
}

/// Separable (equivalently global) robustness of a gate whose Schmidt
/// factors are proportional to unitaries: `(Σ_j u_j)² / (d_A d_B) − 1`.
///
/// Every two-qubit unitary admits such a decomposition. The witness is the
/// mispairing noise built from the same factors, and the report is checked:
/// the gate state plus `value` parts witness state must pass the
/// partial-transpose test across the cut. Both the separable and the global
/// measure equal this value, because one separability-preserving channel
/// already achieves the bound that arbitrary noise cannot beat.
pub fn unital_schmidt_robustness(u: &Operator) -> Result<RobustnessReport> {
    let tol = Tolerances::default();
    let dec = operator_schmidt_unitary_factors(u)?;
    if !dec.has_unitary_factors(1e-8) {
        return Err(Error::HypothesisViolated(
            "Schmidt factors are not proportional to unitaries".into(),
        ));
    }
    let dims = u.dims();
    let d = dims.a as f64 * dims.b as f64;
    let sum = dec.coefficient_sum();
    let value = (sum * sum / d - 1.0).max(0.0);

    if dec.rank() < 2 {
        return Ok(RobustnessReport {
            value: 0.0,
            kind: RobustnessKind::Global,
            exact: true,
            noise_witness: None,
            threshold_bound: Some(0.0),
        });
    }

    let witness = worst_noise(u)?;
    let gate_state = choi_state(&Channel::from_unitary(u)?)?;
    let noise_state = choi_state(&witness)?;
    let mixed = (gate_state.rho() + noise_state.rho() * cx(value, 0.0))
        * cx(1.0 / (1.0 + value), 0.0);
    let min_pt = min_partial_transpose_eigenvalue(&mixed, gate_state.cut());
    if min_pt < -tol.predicate {
        return Err(Error::NumericalFailure(format!(
            "witness mixture fails the partial-transpose test, min eigenvalue {min_pt:.3e}"
        )));
    }
    Ok(RobustnessReport {
        value,
        kind: RobustnessKind::Global,
        exact: true,
        noise_witness: Some(witness),
        threshold_bound: Some(value / (1.0 + value)),
    })
}

/// Fault-tolerance threshold upper bound when every qubit of every gate is
/// independently depolarized with probability p: `√R / (1 + √R)` with
/// R the gate's random robustness.
///
/// The textbook form `(R − √R)/(R − 1)` is the same function: multiply
/// numerator and denominator by `(√R + 1)/(√R − 1)`. Writing it with √R
/// avoids the removable singularity at R = 1, where the bound is 1/2.
pub fn threshold_bound_depolarizing(u: &Operator) -> Result<f64> {
    let tol = Tolerances::default();
    let r = random_robustness_unitary(u)?.value;
    if r <= tol.predicate {
        return Err(Error::SeparableGate);
    }
    let root = r.sqrt();
    Ok(root / (1.0 + root))
}

/// Fault-tolerance threshold upper bound against arbitrary noise,
/// `R_g / (1 + R_g)`.
///
/// When the unitary-factor hypothesis fails (possible only beyond two
/// qubits) the exact random robustness stands in for the global one, which
/// weakens but never invalidates the bound.
pub fn threshold_bound_general(u: &Operator) -> Result<f64> {
    let value = match unital_schmidt_robustness(u) {
        Ok(report) => report.value,
        Err(Error::HypothesisViolated(_)) => random_robustness_unitary(u)?.value,
        Err(e) => return Err(e),
    };
    Ok(value / (1.0 + value))
}

/// Empirical check that, among all noise channels, complete depolarization
/// maximizes the worst-case gate robustness.
#[derive(Clone, Copy, Debug)]
pub struct DepolarizingWorstCase {
    /// Largest sampled robustness relative to complete depolarization.
    pub max_vs_depolarizing: f64,
    /// Largest sampled robustness relative to the candidate channel.
    pub max_vs_channel: f64,
    /// The analytic maximum `d_A² d_B² / 2` of the random robustness.
    pub analytic_max: f64,
    /// Whether the sampled maxima respect both bounds.
    pub holds: bool,
}

/// Sample Haar-random unitaries and confirm that none of them is harder to
/// disentangle with white noise than the worst sampled case with noise `e`,
/// and that the analytic cap on the random robustness is respected.
pub fn max_robustness_depolarizing_theorem_check(
    e: &Channel,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<DepolarizingWorstCase> {
    let dims = e.dims();
    let noise_state = choi_state(e)?;
    let cut = noise_state.cut();
    let mut max_vs_depolarizing = 0.0_f64;
    let mut max_vs_channel = 0.0_f64;
    for _ in 0..trials {
        let gate = Operator::new(crate::linalg::haar_unitary(dims.total(), rng), dims)?;
        let psi = psi_of_unitary(&gate)?;
        max_vs_depolarizing = max_vs_depolarizing.max(random_robustness_state(&psi, cut)?);
        let pure = &psi * psi.adjoint();
        let vs_channel = relative_robustness_state(&pure, noise_state.rho(), cut).value;
        max_vs_channel = max_vs_channel.max(vs_channel);
    }
    let analytic_max = random_robustness_max(dims);
    let holds = max_vs_depolarizing <= max_vs_channel + 1e-6
        && max_vs_depolarizing <= analytic_max + 1e-6;
    Ok(DepolarizingWorstCase { max_vs_depolarizing, max_vs_channel, analytic_max, holds })
}

/// The largest p such that `rho = p sigma + (1 − p) tau` for some density
/// matrix tau: `1 / λ_max(ρ^{-1/2} σ ρ^{-1/2})` on the support of rho, and
/// 0 when sigma leaks outside that support.
pub fn mixing_feasibility(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let tol = Tolerances::default();
    if rho.nrows() != rho.ncols() || rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "mixing feasibility needs equal square matrices, got {}x{} and {}x{}",
            rho.nrows(),
            rho.ncols(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    for m in [rho, sigma] {
        let deviation = crate::linalg::hermiticity_deviation(m);
        if deviation > tol.reconstruction {
            return Err(Error::NotHermitian { deviation });
        }
        let min_eigenvalue = min_eigenvalue(m);
        if min_eigenvalue < -tol.predicate {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        let trace = m.trace().re;
        if (trace - 1.0).abs() > 1e-8 {
            return Err(Error::BadInput(format!(
                "mixing feasibility needs unit-trace states, got trace {trace:.12}"
            )));
        }
    }
    let inv_sqrt = psd_inv_sqrt(rho, tol.rank_cutoff);
    let support = crate::linalg::hermitian_map(rho, tol.rank_cutoff, |_| 1.0);
    let n = rho.nrows();
    let leak = ((CMatrix::identity(n, n) - &support) * sigma).trace().re;
    if leak > tol.predicate {
        return Ok(0.0);
    }
    let m = &inv_sqrt * sigma * &inv_sqrt;
    let (vals, _) = eigh(&m);
    let largest = vals[0];
    if largest <= 0.0 {
        return Ok(0.0);
    }
    let p = (1.0 / largest).min(1.0);
    if 1.0 - p > 1e-9 {
        let tau = (rho - sigma * cx(p, 0.0)) * cx(1.0 / (1.0 - p), 0.0);
        let worst = min_eigenvalue(&tau);
        if worst < -1e-8 {
            return Err(Error::NumericalFailure(format!(
                "residual state at the feasibility boundary has eigenvalue {worst:.3e}"
            )));
        }
    }
    Ok(p)
}

/// The largest p such that `E = p F + (1 − p) G` for some channel G,
/// computed on channel states. The residual G is reconstructed and checked
/// to be completely positive and trace-preserving.
pub fn mixing_feasibility_channels(e: &Channel, f: &Channel) -> Result<f64> {
    if e.dims() != f.dims() {
        return Err(Error::DimensionMismatch(
            "channel mixing needs matching dims".into(),
        ));
    }
    let state_e = choi_state(e)?;
    let state_f = choi_state(f)?;
    let p = mixing_feasibility(state_e.rho(), state_f.rho())?;
    if 1.0 - p > 1e-9 {
        let g = (state_e.rho() - state_f.rho() * cx(p, 0.0)) * cx(1.0 / (1.0 - p), 0.0);
        let min_eigenvalue = min_eigenvalue(&g);
        if min_eigenvalue < -1e-8 {
            return Err(Error::NotCompletelyPositive { min_eigenvalue });
        }
        let Dims { a: da, b: db } = e.dims();
        let d = da * db;
        let marginal = partial_trace(&g, &[da, da, db, db], &[0, 3]);
        let deviation =
            (marginal - CMatrix::identity(d, d) * cx(1.0 / d as f64, 0.0)).norm();
        if deviation > 1e-8 {
            return Err(Error::MarginalNotMixed { deviation });
        }
    }
    Ok(p)
}
