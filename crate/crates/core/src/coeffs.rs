//! Bloch coefficients of the reference qubit.
//!
//! The qubit frame is `{e_A, e_B}`, the Gram–Schmidt basis of
//! `span{Ψ_{0_Z}, Ψ_{1_Z}}` with `e_A = Ψ_{0_Z}`. Observed coefficients
//! describe the (projected) states Alice sends; estimated coefficients
//! describe the virtual X-basis states `(Ψ_{0_Z} ± Ψ_{1_Z})` that define
//! phase errors.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::states::{inner_product, orthonormalize, ProtocolStates, Setting, StateVector};

/// Which trigonometric form the square-root arguments use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinConvention {
    /// `sin²(δ/2)` inside the square roots and `(1-ε)²` on the third-state
    /// cosine. This is what the state vectors produce.
    #[default]
    Squared,
    /// The literal printed coefficient table: bare `sin(δ/2)` in the square
    /// roots and `(1-ε)` on the third-state cosine. Does not give unit Bloch
    /// vectors for pure qubits; kept for comparison only.
    Printed,
}

/// Bloch components in the x–z plane (all states here are real, y = 0).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bloch {
    pub x: f64,
    pub z: f64,
}

impl Bloch {
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.z)
    }

    /// Bloch vector of the (possibly unnormalised) real qubit `(c0, c1)`.
    fn from_components(c0: f64, c1: f64) -> Self {
        let n = c0 * c0 + c1 * c1;
        Bloch {
            x: 2.0 * c0 * c1 / n,
            z: (c0 * c0 - c1 * c1) / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    /// `P^{α_X,es}` for α = 0, 1.
    pub est: [Bloch; 2],
    pub obs_z0: Bloch,
    pub obs_z1: Bloch,
    pub obs_x0: Bloch,
    pub obs_x1: Bloch,
    /// Probability `A_α` of Alice's virtual X outcome α given a Z emission.
    pub a: [f64; 2],
    /// `e_B` component of `Ψ_{0_X}`.
    pub c: f64,
}

impl CoefficientSet {
    pub fn obs(&self, setting: Setting) -> Bloch {
        match setting {
            Setting::Z0 => self.obs_z0,
            Setting::Z1 => self.obs_z1,
            Setting::X0 => self.obs_x0,
            Setting::X1 => self.obs_x1,
        }
    }

    /// Row `[1, P_x, P_z]` of the observed-state matrix.
    pub fn row(&self, setting: Setting) -> [f64; 3] {
        let b = self.obs(setting);
        [1.0, b.x, b.z]
    }

    /// Largest componentwise difference to `other`.
    pub fn max_abs_diff(&self, other: &CoefficientSet) -> f64 {
        let a = self.flatten();
        let b = other.flatten();
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn flatten(&self) -> [f64; 16] {
        [
            self.est[0].x,
            self.est[0].z,
            self.est[1].x,
            self.est[1].z,
            self.obs_z0.x,
            self.obs_z0.z,
            self.obs_z1.x,
            self.obs_z1.z,
            self.obs_x0.x,
            self.obs_x0.z,
            self.obs_x1.x,
            self.obs_x1.z,
            self.a[0],
            self.a[1],
            self.c,
            0.0,
        ]
    }
}

fn checked_sqrt(what: &'static str, value: f64) -> Result<f64> {
    if value < 0.0 {
        Err(Error::Domain { what, value })
    } else {
        Ok(value.sqrt())
    }
}

/// Closed-form coefficients for SPF `delta` and qubit amplitude `1 - epsilon`.
pub fn closed_form(delta: f64, epsilon: f64, convention: SinConvention) -> Result<CoefficientSet> {
    if !(0.0..PI / 2.0).contains(&delta) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
        });
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: epsilon,
        });
    }
    let a = 1.0 - epsilon;
    let a2 = a * a;
    let a4 = a2 * a2;
    let s = (delta / 2.0).sin();
    let s_root = match convention {
        SinConvention::Squared => s * s,
        SinConvention::Printed => s,
    };

    let root_es = checked_sqrt("P_x^{es}", 1.0 - a4 * s_root)?;
    let root_c = checked_sqrt("C", 1.0 - a4 * s * s)?;

    let est = [0usize, 1].map(|alpha| {
        let sign = if alpha == 0 { 1.0 } else { -1.0 };
        Bloch {
            x: sign * root_es,
            z: -sign * a2 * s,
        }
    });

    let obs_z0 = Bloch { x: 0.0, z: 1.0 };
    let obs_z1 = Bloch {
        x: -2.0 * a2 * s * root_es,
        z: 2.0 * a4 * s_root - 1.0,
    };

    // third state at qubit angle θ: components (u, C_θ) in {e_A, e_B}
    let third = |theta: f64| -> (f64, f64) {
        let u = match convention {
            SinConvention::Squared => a2 * theta.cos(),
            SinConvention::Printed => a * theta.cos(),
        };
        let c = (a2 * (theta - delta / 2.0).sin() + a4 * s * theta.cos()) / root_c;
        (u, c)
    };

    let (u0, c0) = third(Setting::X0.qubit_angle(delta));
    let (u1, c1) = third(Setting::X1.qubit_angle(delta));

    Ok(CoefficientSet {
        est,
        obs_z0,
        obs_z1,
        obs_x0: Bloch::from_components(u0, c0),
        obs_x1: Bloch::from_components(u1, c1),
        a: [0.5 * (1.0 - a2 * s), 0.5 * (1.0 + a2 * s)],
        c: c0,
    })
}

/// Rebuild the coefficients from explicit state vectors: orthonormalise the
/// Z states, then read off each relevant state's coordinates in that frame.
pub fn oracle_from_states(protocol: &ProtocolStates) -> Result<CoefficientSet> {
    let z0 = protocol.actual(Setting::Z0)?;
    let z1 = protocol.actual(Setting::Z1)?;
    let (frame, _) = orthonormalize(&[z0.clone(), z1.clone()])?;
    let coords = |v: &StateVector| -> Result<(f64, f64)> {
        let c0 = inner_product(&frame[0], v)?;
        let c1 = inner_product(&frame[1], v)?;
        Ok((c0.re, c1.re))
    };
    let bloch = |v: &StateVector| -> Result<Bloch> {
        let (c0, c1) = coords(v)?;
        Ok(Bloch::from_components(c0, c1))
    };

    let mut est = [Bloch::default(); 2];
    let mut a = [0.0; 2];
    for alpha in 0..2 {
        let sign = if alpha == 0 { 1.0 } else { -1.0 };
        let v = z0.add_scaled(Complex64::new(sign, 0.0), z1)?;
        a[alpha] = 0.25 * v.norm_sqr();
        est[alpha] = bloch(&v)?;
    }

    let obs_x0 = bloch(protocol.reference(Setting::X0)?)?;
    // the three-state protocol has no 1_X; report its would-be coefficients
    // from a four-state build so the set is always complete
    let obs_x1 = if protocol.four_state() {
        bloch(protocol.reference(Setting::X1)?)?
    } else {
        let full = crate::states::build_protocol_states(
            protocol.delta,
            protocol.epsilon_eff,
            true,
            protocol.probabilities.p_za(),
        )?;
        return oracle_from_states(&full);
    };

    let (_, c) = coords(protocol.actual(Setting::X0)?)?;

    Ok(CoefficientSet {
        est,
        obs_z0: bloch(z0)?,
        obs_z1: bloch(z1)?,
        obs_x0,
        obs_x1,
        a,
        c,
    })
}
