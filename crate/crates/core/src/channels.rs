//! Quantum channels in Kraus form, and the noise models used throughout:
//! local depolarizing noise, the noisy-gate model (independent local
//! depolarization of each input), the classically correlated CNOT, and the
//! worst separable noise attached to a gate's Schmidt structure.

use crate::linalg::{self, cx, kron, CMatrix};
use crate::operator::{self, Dims, Operator, Subsystem};
use crate::{Error, Result, Tolerances};

/// A completely positive trace-preserving map in Kraus form,
/// E(ρ) = Σ_m K_m ρ K_m†.
///
/// Single-system channels are represented with `dims = (d, 1)`.
#[derive(Clone, Debug)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    dims: Dims,
}

impl Channel {
    /// Wrap a Kraus family, checking shape and trace preservation.
    pub fn new(kraus: Vec<CMatrix>, dims: Dims) -> Result<Self> {
        let d = dims.total();
        if kraus.is_empty() {
            return Err(Error::BadInput("a channel needs at least one Kraus operator".into()));
        }
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, dims give {}",
                    k.nrows(),
                    k.ncols(),
                    d
                )));
            }
        }
        let mut sum = CMatrix::zeros(d, d);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let deviation = (sum - CMatrix::identity(d, d)).norm();
        if deviation > Tolerances::default().reconstruction {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Channel { kraus, dims })
    }

    /// Unitary conjugation as a channel.
    pub fn from_unitary(u: &Operator) -> Result<Self> {
        let tol = Tolerances::default();
        if !u.is_unitary(tol.reconstruction) {
            return Err(Error::NotUnitary {
                deviation: linalg::unitarity_deviation(u.matrix()),
            });
        }
        Ok(Channel { kraus: vec![u.matrix().clone()], dims: u.dims() })
    }

    /// The identity channel.
    #[must_use]
    pub fn identity(dims: Dims) -> Self {
        let d = dims.total();
        Channel { kraus: vec![CMatrix::identity(d, d)], dims }
    }

    #[must_use]
    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    #[must_use]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// E(ρ).
    #[must_use]
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dims.total();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// self ∘ other: apply `other` first.
    pub fn compose(&self, other: &Channel) -> Result<Channel> {
        if self.dims.total() != other.dims.total() {
            return Err(Error::DimensionMismatch(
                "composed channels act on different spaces".into(),
            ));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a * b);
            }
        }
        Ok(Channel { kraus, dims: self.dims })
    }

    /// Tensor product channel acting on the combined space; the left factor
    /// becomes subsystem A and the right factor subsystem B.
    #[must_use]
    pub fn tensor(&self, other: &Channel) -> Channel {
        let dims = Dims::new(self.dims.total(), other.dims.total());
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(kron(a, b));
            }
        }
        Channel { kraus, dims }
    }

    /// `‖Σ K K† − I‖ ≤ tol`? (Trace preservation checks Σ K†K instead.)
    #[must_use]
    pub fn is_unital(&self, tol: f64) -> bool {
        let d = self.dims.total();
        let mut sum = CMatrix::zeros(d, d);
        for k in &self.kraus {
            sum += k * k.adjoint();
        }
        (sum - CMatrix::identity(d, d)).norm() <= tol
    }

    /// True when every Kraus operator has operator Schmidt rank one across
    /// the A:B split, which certifies that the channel maps separable states
    /// to separable states. Single-system channels hold trivially.
    pub fn has_product_kraus(&self) -> Result<bool> {
        if self.dims.a == 1 || self.dims.b == 1 {
            return Ok(true);
        }
        let cutoff = 1e-9;
        for k in &self.kraus {
            let op = Operator::new(k.clone(), self.dims)?;
            let coeffs = operator::schmidt_coefficients(&op)?;
            if coeffs.iter().filter(|&&c| c > cutoff).count() > 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Heisenberg–Weyl displacement X^a Z^b on dimension d, with
/// X|j⟩ = |j+1 mod d⟩ and Z|j⟩ = ω^j |j⟩, ω = e^{2πi/d}.
#[must_use]
pub fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    for j in 0..d {
        m[((j + a) % d, j)] = cx(0.0, omega * (b * j) as f64).exp();
    }
    m
}

/// Completely depolarizing channel on one system of dimension d:
/// D(ρ) = tr(ρ) I/d, realized by the uniform Weyl twirl
/// {X^a Z^b / d : a, b < d}.
#[must_use]
pub fn depolarizing(d: usize) -> Channel {
    let mut kraus = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            kraus.push(weyl(d, a, b).map(|z| z / d as f64));
        }
    }
    Channel { kraus, dims: Dims::new(d, 1) }
}

/// Partially depolarizing channel (1−p) ρ + p tr(ρ) I/d on one system.
pub fn partial_depolarizing(d: usize, p: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability(p));
    }
    let mut kraus = vec![CMatrix::identity(d, d).map(|z| z * (1.0 - p).sqrt())];
    let dep = depolarizing(d);
    for k in dep.kraus() {
        kraus.push(k.map(|z| z * p.sqrt()));
    }
    Ok(Channel { kraus, dims: Dims::new(d, 1) })
}

/// Depolarize one side of a bipartite system completely, leave the other
/// side untouched.
#[must_use]
pub fn one_sided_depolarize(dims: Dims, side: Subsystem) -> Channel {
    match side {
        Subsystem::A => depolarizing(dims.a).tensor(&Channel::identity(Dims::new(dims.b, 1))),
        Subsystem::B => Channel::identity(Dims::new(dims.a, 1)).tensor(&depolarizing(dims.b)),
    }
}

/// Both sides depolarized independently and completely: ρ ↦ I/(d_A d_B).
#[must_use]
pub fn depolarize_both(dims: Dims) -> Channel {
    depolarizing(dims.a).tensor(&depolarizing(dims.b))
}

/// The noisy-gate model: each input subsystem is depolarized independently
/// with probability p, then the gate acts,
/// E_p(ρ) = U [(1−p)·id + p·D]⊗[(1−p)·id + p·D] (ρ) U†.
pub fn noisy_gate(u: &Operator, p: f64) -> Result<Channel> {
    let dims = u.dims();
    let noise_a = partial_depolarizing(dims.a, p)?;
    let noise_b = partial_depolarizing(dims.b, p)?;
    let gate = Channel::from_unitary(u)?;
    gate.compose(&noise_a.tensor(&noise_b))
}

/// Classically correlated CNOT: the truth table of CNOT applied without
/// coherence between the control-basis blocks,
/// F(ρ) = (|0⟩⟨0|⊗I) ρ (|0⟩⟨0|⊗I) + (|1⟩⟨1|⊗X) ρ (|1⟩⟨1|⊗X).
#[must_use]
pub fn classical_cnot() -> Channel {
    let mut p0 = CMatrix::zeros(2, 2);
    p0[(0, 0)] = cx(1.0, 0.0);
    let mut p1 = CMatrix::zeros(2, 2);
    p1[(1, 1)] = cx(1.0, 0.0);
    let kraus = vec![
        kron(&p0, &operator::pauli(0)),
        kron(&p1, &operator::pauli(1)),
    ];
    Channel { kraus, dims: Dims::new(2, 2) }
}

/// The worst separable noise for a gate: mispair the unitary Schmidt factors
/// of U = Σ_l u_l A_l ⊗ B_l,
///
///   F(ρ) = Σ_{k≠l} (u_k u_l / S) (a_k ⊗ b_l) ρ (a_k ⊗ b_l)†,
///
/// with S = Σ_{k≠l} u_k u_l and a_k = √d_A A_k, b_l = √d_B B_l the
/// unitary-normalized factors. Every Kraus operator is a product unitary, so
/// F preserves separability; one application while a noiseless U acts leaves
/// the output as far from U's as separable noise can.
///
/// Fails with [`Error::SeparableGate`] when U has Schmidt rank one, where no
/// mispairing exists.
pub fn worst_noise(u: &Operator) -> Result<Channel> {
    let dims = u.dims();
    let dec = operator::operator_schmidt_unitary_factors(u)?;
    let r = dec.rank();
    if r < 2 {
        return Err(Error::SeparableGate);
    }
    let da = (dims.a as f64).sqrt();
    let db = (dims.b as f64).sqrt();
    let mut s = 0.0;
    for k in 0..r {
        for l in 0..r {
            if k != l {
                s += dec.coefficients[k] * dec.coefficients[l];
            }
        }
    }
    let mut kraus = Vec::with_capacity(r * r - r);
    for k in 0..r {
        for l in 0..r {
            if k == l {
                continue;
            }
            let weight = (dec.coefficients[k] * dec.coefficients[l] / s).sqrt();
            let ak = dec.factors_a[k].map(|z| z * da);
            let bl = dec.factors_b[l].map(|z| z * db);
            kraus.push(kron(&ak, &bl).map(|z| z * weight));
        }
    }
    Channel::new(kraus, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{cnot, controlled_phase, swap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| {
            cx(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal))
        });
        let h = &g * g.adjoint();
        let tr = h.trace().re;
        h.map(|z| z / tr)
    }

    #[test]
    fn depolarizing_maps_everything_to_the_maximally_mixed_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in [2usize, 3, 4] {
            let dep = depolarizing(d);
            let rho = random_density(d, &mut rng);
            let out = dep.apply(&rho);
            let target = CMatrix::identity(d, d).map(|z| z / d as f64);
            assert!((out - target).norm() < 1e-12, "d = {d}");
            assert!(dep.is_unital(1e-10));
        }
    }

    #[test]
    fn partial_depolarizing_interpolates_linearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let rho = random_density(2, &mut rng);
        let p = 0.3;
        let chan = partial_depolarizing(2, p).unwrap();
        let expected =
            rho.map(|z| z * (1.0 - p)) + CMatrix::identity(2, 2).map(|z| z * (p / 2.0));
        assert!((chan.apply(&rho) - expected).norm() < 1e-12);
        assert!(partial_depolarizing(2, 1.5).is_err());
    }

    #[test]
    fn noisy_gate_matches_the_explicit_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u = cnot();
        let p = 0.2;
        let chan = noisy_gate(&u, p).unwrap();
        let rho = random_density(4, &mut rng);
        // Assemble (1−p)² UρU† + p(1−p)(D⊗I + I⊗D) + p² (D⊗D) by hand.
        let conj = |m: &CMatrix| u.matrix() * m * u.matrix().adjoint();
        let da = one_sided_depolarize(u.dims(), Subsystem::A);
        let db = one_sided_depolarize(u.dims(), Subsystem::B);
        let dboth = depolarize_both(u.dims());
        let expected = conj(&rho).map(|z| z * (1.0 - p) * (1.0 - p))
            + conj(&da.apply(&rho)).map(|z| z * p * (1.0 - p))
            + conj(&db.apply(&rho)).map(|z| z * p * (1.0 - p))
            + conj(&dboth.apply(&rho)).map(|z| z * p * p);
        assert!((chan.apply(&rho) - expected).norm() < 1e-10);
    }

    #[test]
    fn noisy_gate_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let u = cnot();
        let rho = random_density(4, &mut rng);
        let clean = noisy_gate(&u, 0.0).unwrap();
        assert!((clean.apply(&rho) - u.matrix() * &rho * u.matrix().adjoint()).norm() < 1e-12);
        let ruined = noisy_gate(&u, 1.0).unwrap();
        let target = CMatrix::identity(4, 4).map(|z| z / 4.0);
        assert!((ruined.apply(&rho) - target).norm() < 1e-12);
    }

    #[test]
    fn classical_cnot_acts_as_the_truth_table_and_kills_coherence() {
        let f = classical_cnot();
        // |10⟩⟨10| → |11⟩⟨11|
        let mut rho = CMatrix::zeros(4, 4);
        rho[(2, 2)] = cx(1.0, 0.0);
        let out = f.apply(&rho);
        let mut expected = CMatrix::zeros(4, 4);
        expected[(3, 3)] = cx(1.0, 0.0);
        assert!((out - expected).norm() < 1e-12);

        // |+0⟩⟨+0| → ½(|00⟩⟨00| + |11⟩⟨11|), the decohered Bell state.
        let mut plus0 = CMatrix::zeros(4, 4);
        for (i, j) in [(0usize, 0usize), (0, 2), (2, 0), (2, 2)] {
            plus0[(i, j)] = cx(0.5, 0.0);
        }
        let out = f.apply(&plus0);
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = cx(0.5, 0.0);
        expected[(3, 3)] = cx(0.5, 0.0);
        assert!((out - expected).norm() < 1e-12);
        assert!(f.has_product_kraus().unwrap());
    }

    #[test]
    fn one_sided_depolarize_wipes_only_one_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let rho_a = random_density(2, &mut rng);
        let rho_b = random_density(2, &mut rng);
        let joint = kron(&rho_a, &rho_b);
        let chan = one_sided_depolarize(Dims::new(2, 2), Subsystem::A);
        let expected = kron(&CMatrix::identity(2, 2).map(|z| z / 2.0), &rho_b);
        assert!((chan.apply(&joint) - expected).norm() < 1e-12);
    }

    #[test]
    fn composition_with_depolarizing_erases_the_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let rho = random_density(4, &mut rng);
        let gate = Channel::from_unitary(&cnot()).unwrap();
        let wipe = depolarize_both(Dims::new(2, 2));
        let chan = wipe.compose(&gate).unwrap();
        let target = CMatrix::identity(4, 4).map(|z| z / 4.0);
        assert!((chan.apply(&rho) - target).norm() < 1e-12);
    }

    #[test]
    fn worst_noise_of_cnot_is_trace_preserving_unital_and_product() {
        let f = worst_noise(&cnot()).unwrap();
        assert_eq!(f.kraus().len(), 2, "rank-2 gate has two mispairings");
        assert!(f.is_unital(1e-9));
        assert!(f.has_product_kraus().unwrap());
        // Weighted Kraus norms: each mispairing carries weight 1/2.
        for k in f.kraus() {
            let n = (k.adjoint() * k - CMatrix::identity(4, 4).map(|z| z * 0.5)).norm();
            assert!(n < 1e-9);
        }
    }

    #[test]
    fn worst_noise_exists_for_generic_gates_and_fails_for_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for theta in [0.4, 1.2] {
            let f = worst_noise(&controlled_phase(theta)).unwrap();
            assert!(f.is_unital(1e-8));
            assert!(f.has_product_kraus().unwrap());
        }
        let f = worst_noise(&swap(2)).unwrap();
        assert_eq!(f.kraus().len(), 12, "rank-4 gate has 12 mispairings");

        // A product unitary has Schmidt rank one: no mispairing exists.
        let a = linalg::haar_unitary(2, &mut rng);
        let b = linalg::haar_unitary(2, &mut rng);
        let u = Operator::new(kron(&a, &b), Dims::new(2, 2)).unwrap();
        assert!(matches!(worst_noise(&u), Err(Error::SeparableGate)));
    }
}
