//! Phase-error estimation with reference states.
//!
//! The reference states all live in one qubit, so the loss-tolerant
//! tomography relation holds for them exactly: observed X-basis yields
//! determine the Pauli transmission rates `q_{s|t}`, and those rates fix the
//! virtual phase-error yields. The actual third state differs from its
//! reference by at most `d` in any outcome probability, which enters the
//! solve as `Y + w·d` with `w ∈ [-1, 1]` chosen adversarially.

use crate::channel::{BasisProbabilities, YieldSet};
use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::states::{ProtocolStates, Setting, SettingProbabilities};

/// Systems whose ∞-norm condition number exceeds this are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Transmission rates of `{Id, σ_x, σ_z}` for one Bob outcome.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PauliRates {
    pub id: f64,
    pub x: f64,
    pub z: f64,
}

impl PauliRates {
    pub fn as_array(&self) -> [f64; 3] {
        [self.id, self.x, self.z]
    }
}

/// Rates for Bob's X outcomes `s = 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransmissionRates(pub [PauliRates; 2]);

/// Solve `rows · x = rhs` through the adjugate. Refuses near-singular
/// systems instead of returning garbage.
pub fn solve3(rows: [[f64; 3]; 3], rhs: [f64; 3]) -> Result<[f64; 3]> {
    let m = rows;
    let cof =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    // adjugate = transpose of the cofactor matrix
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];

    let inf_norm = |a: &[[f64; 3]; 3]| {
        a.iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let condition = if det == 0.0 {
        f64::INFINITY
    } else {
        inf_norm(&m) * inf_norm(&adj) / det.abs()
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }

    let mut x = [0.0; 3];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = (adj[i][0] * rhs[0] + adj[i][1] * rhs[1] + adj[i][2] * rhs[2]) / det;
    }
    Ok(x)
}

/// Observed X-basis yields for one outcome `s`, ordered `0_Z, 1_Z, third`.
pub fn x_yields_for(yields: &YieldSet, s: usize, third: Setting) -> [f64; 3] {
    [
        yields.x(s, Setting::Z0),
        yields.x(s, Setting::Z1),
        yields.x(s, third),
    ]
}

/// Invert the observed-yield relation for one outcome. `d · w` shifts the
/// third-state yield from actual to reference; `d = 0` is the plain
/// reference-state relation.
#[allow(clippy::too_many_arguments)]
pub fn solve_transmission_rates(
    x_yields: [f64; 3],
    coeffs: &CoefficientSet,
    third: Setting,
    probabilities: &SettingProbabilities,
    p_xb: f64,
    d: f64,
    w: f64,
) -> Result<PauliRates> {
    let settings = [Setting::Z0, Setting::Z1, third];
    let rows = settings.map(|s| coeffs.row(s));
    let mut rhs = [0.0; 3];
    for (i, s) in settings.iter().enumerate() {
        let scale = probabilities.get(*s) * p_xb;
        if !(scale > 0.0) {
            return Err(Error::UndefinedRate(
                "setting or X-basis probability is zero",
            ));
        }
        let shift = if i == 2 { w * d } else { 0.0 };
        rhs[i] = (x_yields[i] + shift) / scale;
    }
    let [id, x, z] = solve3(rows, rhs)?;
    Ok(PauliRates { id, x, z })
}

/// Virtual yield `Y^{(Z)es}_{s_X, α_X}` for the rates of outcome `s_X`.
pub fn estimated_yield(
    coeffs: &CoefficientSet,
    q: &PauliRates,
    alpha: usize,
    basis: &BasisProbabilities,
) -> f64 {
    let p = coeffs.est[alpha];
    basis.p_za * basis.p_zb * coeffs.a[alpha] * (q.id + p.x * q.x + p.z * q.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseErrorResult {
    /// Phase error rate clamped to `[0, 1]`.
    pub e_x: f64,
    /// Maximising deviation signs for Bob's outcomes `s_X = 0, 1`.
    pub w_max: [f64; 2],
    pub numerator: f64,
    pub denominator: f64,
    /// The deviation bound that was applied.
    pub d: f64,
}

impl PhaseErrorResult {
    pub fn unclamped(&self) -> f64 {
        self.numerator / self.denominator
    }

    /// No key can be distilled at or above 1/2.
    pub fn no_key(&self) -> bool {
        self.e_x >= 0.5
    }
}

/// Everything the estimator needs besides the yields.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorInputs<'a> {
    pub coeffs: &'a CoefficientSet,
    pub probabilities: &'a SettingProbabilities,
    pub basis: &'a BasisProbabilities,
    /// Third (non-key) state of this loss-tolerant instance.
    pub third: Setting,
}

/// Phase-error numerator for fixed deviation signs `w = [w_0, w_1]`.
#[allow(clippy::needless_range_loop)]
pub fn phase_error_numerator(
    yields: &YieldSet,
    inputs: &EstimatorInputs<'_>,
    d: f64,
    w: [f64; 2],
) -> Result<f64> {
    let mut total = 0.0;
    for s in 0..2 {
        let q = solve_transmission_rates(
            x_yields_for(yields, s, inputs.third),
            inputs.coeffs,
            inputs.third,
            inputs.probabilities,
            inputs.basis.p_xb(),
            d,
            w[s],
        )?;
        // phase error: Bob's X outcome disagrees with Alice's virtual bit
        total += estimated_yield(inputs.coeffs, &q, 1 - s, inputs.basis);
    }
    Ok(total)
}

pub fn phase_error_at(
    yields: &YieldSet,
    inputs: &EstimatorInputs<'_>,
    d: f64,
    w: [f64; 2],
) -> Result<f64> {
    let den = z_denominator(yields)?;
    Ok(phase_error_numerator(yields, inputs, d, w)? / den)
}

fn z_denominator(yields: &YieldSet) -> Result<f64> {
    let den: f64 = yields.obs_z.iter().flatten().sum();
    if den > 0.0 {
        Ok(den)
    } else {
        Err(Error::UndefinedRate("sifted Z yield is zero"))
    }
}

/// The four sign corners of `[-1, 1]²`. The numerator is affine in each
/// `w_s`, so its maximum sits on one of them.
pub const W_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]];

/// Upper bound on the phase error rate of the actual protocol.
pub fn phase_error_rate(
    yields: &YieldSet,
    inputs: &EstimatorInputs<'_>,
    d: f64,
) -> Result<PhaseErrorResult> {
    let denominator = z_denominator(yields)?;
    let mut best: Option<(f64, [f64; 2])> = None;
    for w in W_CORNERS {
        let num = phase_error_numerator(yields, inputs, d, w)?;
        if best.is_none_or(|(b, _)| num > b) {
            best = Some((num, w));
        }
    }
    let (numerator, w_max) = best.expect("corners are non-empty");
    Ok(PhaseErrorResult {
        e_x: (numerator / denominator).clamp(0.0, 1.0),
        w_max,
        numerator,
        denominator,
        d,
    })
}

/// `d_{0_X} = p_{0_X} (1 - overlap)`. Bob's basis probability is left out,
/// so the bound holds whatever his receiver does.
pub fn deviation_d0x(p_0x: f64, overlap: f64) -> Result<f64> {
    crate::error::check_unit_interval("overlap", overlap)?;
    crate::error::check_unit_interval("p_0X", p_0x)?;
    Ok(p_0x * (1.0 - overlap))
}

/// How the two sub-protocol bounds of the four-state variant are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combine {
    /// Weighted by how often each third state is sent.
    #[default]
    Average,
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourStateResult {
    /// Sub-protocols with third state `0_X` and `1_X`.
    pub branches: [PhaseErrorResult; 2],
    pub average: f64,
    pub worst_case: f64,
}

impl FourStateResult {
    pub fn combined(&self, combine: Combine) -> f64 {
        match combine {
            Combine::Average => self.average,
            Combine::WorstCase => self.worst_case,
        }
    }
}

/// Run the three-state estimator once per third state and merge.
pub fn four_state_phase_error(
    protocol: &ProtocolStates,
    yields: &YieldSet,
    coeffs: &CoefficientSet,
    basis: &BasisProbabilities,
) -> Result<FourStateResult> {
    let probs = &protocol.probabilities;
    let mut branches = [None, None];
    for (i, third) in [Setting::X0, Setting::X1].into_iter().enumerate() {
        let d = deviation_d0x(probs.get(third), protocol.reference_overlap(third)?)?;
        let inputs = EstimatorInputs {
            coeffs,
            probabilities: probs,
            basis,
            third,
        };
        branches[i] = Some(phase_error_rate(yields, &inputs, d)?);
    }
    let branches = branches.map(|b| b.expect("both branches evaluated"));
    let (w0, w1) = (probs.x0, probs.x1);
    let average = if w0 + w1 > 0.0 {
        (w0 * branches[0].e_x + w1 * branches[1].e_x) / (w0 + w1)
    } else {
        0.5 * (branches[0].e_x + branches[1].e_x)
    };
    Ok(FourStateResult {
        branches,
        average,
        worst_case: branches[0].e_x.max(branches[1].e_x),
    })
}
