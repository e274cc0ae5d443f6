//! Actual and reference source states, span projections, and the deviation
//! functionals that bound how far event probabilities can move when the
//! actual states are swapped for reference states.
//!
//! Every actual state has the form `(1-ε)|ψ_j⟩ + √(1-(1-ε)²)|ψ_j^⊥⟩`, where
//! `|ψ_j⟩` lives in the two-dimensional qubit space and the side-channel
//! vectors `|ψ_j^⊥⟩` are mutually orthonormal and orthogonal to the qubit.
//! The side-channel space therefore gets one extra dimension per setting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{check_unit_interval, Error, Result};

/// Gram determinants below this are treated as a degenerate basis.
pub const GRAM_DET_MIN: f64 = 1e-14;

/// Alice's preparation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Setting {
    Z0,
    Z1,
    X0,
    X1,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::Z0, Setting::Z1, Setting::X0, Setting::X1];

    pub fn index(self) -> usize {
        match self {
            Setting::Z0 => 0,
            Setting::Z1 => 1,
            Setting::X0 => 2,
            Setting::X1 => 3,
        }
    }

    /// Nominal phase-modulation value for this setting.
    pub fn nominal_phase(self) -> f64 {
        match self {
            Setting::Z0 => 0.0,
            Setting::Z1 => PI,
            Setting::X0 => PI / 2.0,
            Setting::X1 => 3.0 * PI / 2.0,
        }
    }

    /// Bloch half-angle of the flawed qubit state. The applied phase is
    /// proportional to the nominal one, scaled by `1 + δ/π`.
    pub fn qubit_angle(self, delta: f64) -> f64 {
        0.5 * self.nominal_phase() * (1.0 + delta / PI)
    }

    pub fn is_z(self) -> bool {
        matches!(self, Setting::Z0 | Setting::Z1)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Setting::Z0 => "0_Z",
            Setting::Z1 => "1_Z",
            Setting::X0 => "0_X",
            Setting::X1 => "1_X",
        };
        f.write_str(s)
    }
}

/// A pure state as a vector of complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self(amplitudes)
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Computational basis vector `e_index` in `dim` dimensions.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[index] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: Complex64, other: &StateVector) -> Result<Self> {
        same_dim(self, other)?;
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        ))
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(Complex64::new(1.0 / n, 0.0)))
    }
}

fn same_dim(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        })
    }
}

/// Hermitian inner product `⟨a|b⟩`, antilinear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    same_dim(a, b)?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x.conj() * y).sum())
}

/// Result of projecting a state onto the span of a set of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Normalised projection, phased so that `⟨projected|target⟩ ≥ 0`.
    /// `None` when the target is orthogonal to the span.
    pub projected: Option<StateVector>,
    /// `|⟨projected|target⟩|²` for a normalised target.
    pub overlap: f64,
}

/// Orthonormalise `basis` with modified Gram–Schmidt. Returns the
/// orthonormal vectors and the Gram determinant of the input.
pub fn orthonormalize(basis: &[StateVector]) -> Result<(Vec<StateVector>, f64)> {
    let mut out: Vec<StateVector> = Vec::with_capacity(basis.len());
    let mut gram_det = 1.0;
    for v in basis {
        let mut r = v.clone();
        for e in &out {
            let c = inner_product(e, &r)?;
            r = r.add_scaled(-c, e)?;
        }
        let n2 = r.norm_sqr();
        gram_det *= n2;
        if gram_det < GRAM_DET_MIN {
            return Err(Error::SingularBasis { gram_det });
        }
        out.push(r.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)));
    }
    Ok((out, gram_det))
}

/// Project `target` onto `span(basis)`. The normalised projection is the
/// unit vector in the span with maximal overlap with `target`.
pub fn project_onto_span(target: &StateVector, basis: &[StateVector]) -> Result<Projection> {
    let (ortho, _) = orthonormalize(basis)?;
    let mut proj = StateVector::new(vec![Complex64::new(0.0, 0.0); target.dim()]);
    for e in &ortho {
        let c = inner_product(e, target)?;
        proj = proj.add_scaled(c, e)?;
    }
    let captured = proj.norm_sqr();
    let target_norm = target.norm_sqr();
    if captured <= 1e-30 * target_norm.max(f64::MIN_POSITIVE) {
        return Ok(Projection {
            projected: None,
            overlap: 0.0,
        });
    }
    Ok(Projection {
        projected: proj.normalized(),
        overlap: (captured / target_norm).min(1.0),
    })
}

/// Qubit and side-channel weights of a nearest-neighbour correlated pulse,
/// `(1-ε, √(1-(1-ε)²))`.
pub fn nearest_neighbour_reduction(epsilon: f64) -> Result<(f64, f64)> {
    let eps = check_unit_interval("epsilon", epsilon)?;
    let q = 1.0 - eps;
    // 1-(1-ε)² = ε(2-ε), which keeps precision for tiny ε
    Ok((q, (eps * (2.0 - eps)).sqrt()))
}

/// Per-range correlation strengths `ε_1 … ε_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    per_range_epsilon: Vec<f64>,
    /// Phase offsets `θ_{j_k | j_{k-1}}`. The worst-case bounds never read
    /// them; they are kept so a characterised source can be recorded.
    pub phase_offsets: BTreeMap<(Setting, Setting), f64>,
}

impl CorrelationModel {
    pub fn new(per_range_epsilon: Vec<f64>) -> Result<Self> {
        if per_range_epsilon.is_empty() {
            return Err(Error::OutOfRange {
                name: "correlation range",
                value: 0.0,
            });
        }
        for &e in &per_range_epsilon {
            check_unit_interval("epsilon", e)?;
        }
        Ok(Self {
            per_range_epsilon,
            phase_offsets: BTreeMap::new(),
        })
    }

    /// Same ε for every range up to `range`.
    pub fn constant(epsilon: f64, range: usize) -> Result<Self> {
        Self::new(vec![epsilon; range])
    }

    pub fn range(&self) -> usize {
        self.per_range_epsilon.len()
    }

    pub fn per_range_epsilon(&self) -> &[f64] {
        &self.per_range_epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRangeAmplitude {
    /// Lower bound on the qubit amplitude, `∏ (1-ε_ζ)^{1/2}`.
    pub a_lower: f64,
    /// `1 - a_lower`, the ε to plug into the single-pulse state model.
    pub epsilon_eff: f64,
}

pub fn long_range_amplitude(model: &CorrelationModel) -> LongRangeAmplitude {
    let log_a: f64 = model
        .per_range_epsilon
        .iter()
        .map(|&e| 0.5 * (-e).ln_1p())
        .sum();
    LongRangeAmplitude {
        a_lower: log_a.exp(),
        epsilon_eff: -log_a.exp_m1(),
    }
}

/// Probability with which Alice picks each setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingProbabilities {
    pub z0: f64,
    pub z1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl SettingProbabilities {
    /// Z-basis probability split evenly over the two key bits; the X-basis
    /// probability goes to `0_X`, or is split evenly with `1_X` when the
    /// four-state variant is used.
    pub fn from_basis(p_za: f64, four_state: bool) -> Result<Self> {
        let p_za = check_unit_interval("P_ZA", p_za)?;
        let p_xa = 1.0 - p_za;
        let (x0, x1) = if four_state {
            (0.5 * p_xa, 0.5 * p_xa)
        } else {
            (p_xa, 0.0)
        };
        Ok(Self {
            z0: 0.5 * p_za,
            z1: 0.5 * p_za,
            x0,
            x1,
        })
    }

    pub fn get(&self, setting: Setting) -> f64 {
        match setting {
            Setting::Z0 => self.z0,
            Setting::Z1 => self.z1,
            Setting::X0 => self.x0,
            Setting::X1 => self.x1,
        }
    }

    pub fn p_za(&self) -> f64 {
        self.z0 + self.z1
    }
}

/// Actual states of the source together with the reference states used by
/// the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolStates {
    pub delta: f64,
    pub epsilon_eff: f64,
    pub probabilities: SettingProbabilities,
    settings: Vec<Setting>,
    actual: Vec<StateVector>,
    reference: Vec<StateVector>,
    overlaps: Vec<f64>,
}

impl ProtocolStates {
    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn four_state(&self) -> bool {
        self.settings.contains(&Setting::X1)
    }

    fn position(&self, setting: Setting) -> Result<usize> {
        self.settings
            .iter()
            .position(|&s| s == setting)
            .ok_or(Error::MissingSetting(setting))
    }

    pub fn actual(&self, setting: Setting) -> Result<&StateVector> {
        Ok(&self.actual[self.position(setting)?])
    }

    pub fn reference(&self, setting: Setting) -> Result<&StateVector> {
        Ok(&self.reference[self.position(setting)?])
    }

    /// `|⟨reference_j|actual_j⟩|²` as found by the projection.
    pub fn reference_overlap(&self, setting: Setting) -> Result<f64> {
        Ok(self.overlaps[self.position(setting)?])
    }

    /// `d_j` for one setting.
    pub fn d_j(&self, setting: Setting) -> Result<f64> {
        deviation_d_j(
            self.actual(setting)?,
            self.reference(setting)?,
            self.probabilities.get(setting),
        )
    }

    /// `d_key` over the two Z-basis key settings.
    pub fn d_key(&self) -> Result<f64> {
        let key = [Setting::Z0, Setting::Z1];
        let actual: Vec<StateVector> = key
            .iter()
            .map(|&s| self.actual(s).cloned())
            .collect::<Result<_>>()?;
        let reference: Vec<StateVector> = key
            .iter()
            .map(|&s| self.reference(s).cloned())
            .collect::<Result<_>>()?;
        let p: Vec<f64> = key.iter().map(|&s| self.probabilities.get(s)).collect();
        deviation_d_key(&actual, &reference, &p, key.len())
    }
}

/// Construct the flawed, correlated source states and their reference
/// states. Z states are shared verbatim; each X state's reference is its
/// projection onto `span{Ψ_{0_Z}, Ψ_{1_Z}}`.
pub fn build_protocol_states(
    delta: f64,
    epsilon_eff: f64,
    four_state: bool,
    p_za: f64,
) -> Result<ProtocolStates> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
        });
    }
    let (qubit_w, side_w) = nearest_neighbour_reduction(epsilon_eff)?;
    let probabilities = SettingProbabilities::from_basis(p_za, four_state)?;

    let settings: Vec<Setting> = if four_state {
        Setting::ALL.to_vec()
    } else {
        Setting::ALL[..3].to_vec()
    };
    let dim = 2 + settings.len();

    let actual: Vec<StateVector> = settings
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let theta = s.qubit_angle(delta);
            let mut amps = vec![0.0; dim];
            amps[0] = qubit_w * theta.cos();
            amps[1] = qubit_w * theta.sin();
            amps[2 + i] = side_w;
            StateVector::from_real(&amps)
        })
        .collect();

    let span = [actual[0].clone(), actual[1].clone()];
    let mut reference = Vec::with_capacity(settings.len());
    let mut overlaps = Vec::with_capacity(settings.len());
    for (s, psi) in settings.iter().zip(&actual) {
        if s.is_z() {
            reference.push(psi.clone());
            overlaps.push(1.0);
        } else {
            let p = project_onto_span(psi, &span)?;
            let phi = p.projected.ok_or(Error::SingularBasis { gram_det: 0.0 })?;
            reference.push(phi);
            overlaps.push(p.overlap);
        }
    }

    Ok(ProtocolStates {
        delta,
        epsilon_eff,
        probabilities,
        settings,
        actual,
        reference,
        overlaps,
    })
}

/// `d_j = p_j (1 - |⟨ψ_j|φ_j⟩|²)`.
pub fn deviation_d_j(psi: &StateVector, phi: &StateVector, p_j: f64) -> Result<f64> {
    let p_j = check_unit_interval("p_j", p_j)?;
    // dividing by the norms makes identical inputs give exactly zero
    let overlap =
        (inner_product(psi, phi)?.norm_sqr() / (psi.norm_sqr() * phi.norm_sqr())).min(1.0);
    Ok(p_j * (1.0 - overlap))
}

/// Deviation bound for key-basis events. The key-conditional states
/// `Σ_j |j⟩|ψ_j⟩/√p_key` (with `⟨j|i⟩ = δ_ij p_j`) are compared for the
/// actual and reference sets; `d_key = p_key (1 - |⟨key|Act|key|Ref⟩|²)`.
pub fn deviation_d_key(
    actual: &[StateVector],
    reference: &[StateVector],
    probabilities: &[f64],
    m_key: usize,
) -> Result<f64> {
    if m_key > actual.len() || m_key > reference.len() || m_key > probabilities.len() {
        return Err(Error::OutOfRange {
            name: "m_key",
            value: m_key as f64,
        });
    }
    let mut overlap = Complex64::new(0.0, 0.0);
    let mut p_key = 0.0;
    let (mut n_act, mut n_ref) = (0.0, 0.0);
    for j in 0..m_key {
        let p = check_unit_interval("p_j", probabilities[j])?;
        overlap += p * inner_product(&actual[j], &reference[j])?;
        n_act += p * actual[j].norm_sqr();
        n_ref += p * reference[j].norm_sqr();
        p_key += p;
    }
    if p_key == 0.0 {
        return Ok(0.0);
    }
    // n_act ≈ n_ref ≈ p_key for normalised inputs
    let fidelity = (overlap.norm_sqr() / (n_act * n_ref)).min(1.0);
    Ok(p_key * (1.0 - fidelity))
}
