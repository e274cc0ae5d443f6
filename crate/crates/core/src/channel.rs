//! Honest lossy channel used to synthesise the statistics an experiment
//! would report.
//!
//! Model: pure loss with transmittance `η`, the identity acting on the
//! surviving qubit, an optional misalignment flip probability `e_d`, and
//! detector dark counts at first order in `p_d`. Double clicks are assigned
//! at random, which is what makes the dark-count term symmetric in `s`.

use crate::coeffs::CoefficientSet;
use crate::error::{check_unit_interval, Error, Result};
use crate::states::{Setting, SettingProbabilities};

/// Basis-choice probabilities of Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisProbabilities {
    pub p_za: f64,
    pub p_zb: f64,
}

impl BasisProbabilities {
    pub fn p_xb(&self) -> f64 {
        1.0 - self.p_zb
    }
}

impl Default for BasisProbabilities {
    fn default() -> Self {
        Self {
            p_za: 0.5,
            p_zb: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub loss_db: f64,
    pub dark_rate: f64,
    pub misalignment: f64,
    pub basis: BasisProbabilities,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_db >= 0.0) {
            return Err(Error::OutOfRange {
                name: "loss_db",
                value: self.loss_db,
            });
        }
        check_unit_interval("dark_rate", self.dark_rate)?;
        if !(0.0..=0.5).contains(&self.misalignment) {
            return Err(Error::OutOfRange {
                name: "misalignment",
                value: self.misalignment,
            });
        }
        check_unit_interval("P_ZA", self.basis.p_za)?;
        check_unit_interval("P_ZB", self.basis.p_zb)?;
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        transmittance(self.loss_db)
    }
}

/// `10^(-loss_db/10)`.
pub fn transmittance(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Joint per-pulse probabilities of (Alice setting, Bob basis, Bob bit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldSet {
    /// `Y^{(X)obs}_{s_X, setting}` indexed `[s][setting.index()]`.
    pub obs_x: [[f64; 4]; 2],
    /// `Y^{(Z)obs}_{s_Z, α_Z}` indexed `[s][α]`.
    pub obs_z: [[f64; 2]; 2],
}

impl YieldSet {
    pub fn x(&self, s: usize, setting: Setting) -> f64 {
        self.obs_x[s][setting.index()]
    }

    pub fn z(&self, s: usize, alpha: usize) -> f64 {
        self.obs_z[s][alpha]
    }

    /// Total detection probability per emitted pulse over every sifted and
    /// unsifted combination recorded here.
    pub fn total(&self) -> f64 {
        self.obs_x.iter().flatten().sum::<f64>() + self.obs_z.iter().flatten().sum::<f64>()
    }
}

fn sign(s: usize) -> f64 {
    if s == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Yields produced by the honest channel for every setting Alice uses.
pub fn simulate_observed_yields(
    coeffs: &CoefficientSet,
    params: &ChannelParams,
    probabilities: &SettingProbabilities,
) -> Result<YieldSet> {
    params.validate()?;
    let eta = params.eta();
    let visibility = 1.0 - 2.0 * params.misalignment;
    let dark = (1.0 - eta) * params.dark_rate;
    let p_xb = params.basis.p_xb();
    let p_zb = params.basis.p_zb;

    let mut obs_x = [[0.0; 4]; 2];
    let mut obs_z = [[0.0; 2]; 2];
    for s in 0..2 {
        for setting in Setting::ALL {
            let p = probabilities.get(setting);
            let b = coeffs.obs(setting);
            // q_Id = 1/2, q_x = ±(1-2e_d)/2, q_z = 0
            let signal = 0.5 + sign(s) * 0.5 * visibility * b.x;
            obs_x[s][setting.index()] = p * p_xb * (eta * signal + dark);
        }
        for (alpha, setting) in [Setting::Z0, Setting::Z1].into_iter().enumerate() {
            let p = probabilities.get(setting);
            let b = coeffs.obs(setting);
            let signal = 0.5 * (1.0 + sign(s) * b.z * visibility);
            obs_z[s][alpha] = p * p_zb * (eta * signal + dark);
        }
    }
    Ok(YieldSet { obs_x, obs_z })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZStats {
    /// Sifted Z-basis yield, the sum of all four Z entries.
    pub y_z: f64,
    /// Bit error rate in the key basis.
    pub e_z: f64,
}

pub fn z_basis_stats(yields: &YieldSet) -> Result<ZStats> {
    let y_z: f64 = yields.obs_z.iter().flatten().sum();
    if !(y_z > 0.0) {
        return Err(Error::UndefinedRate("sifted Z yield is zero"));
    }
    let errors = yields.z(1, 0) + yields.z(0, 1);
    Ok(ZStats {
        y_z,
        e_z: errors / y_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{closed_form, SinConvention};

    fn params(loss_db: f64, dark_rate: f64) -> ChannelParams {
        ChannelParams {
            loss_db,
            dark_rate,
            misalignment: 0.0,
            basis: BasisProbabilities::default(),
        }
    }

    #[test]
    fn transmittance_values() {
        assert_eq!(transmittance(0.0), 1.0);
        assert!((transmittance(10.0) - 0.1).abs() < 1e-16);
        assert!((transmittance(33.0) - 10f64.powf(-3.3)).abs() < 1e-18);
    }

    #[test]
    fn perfect_channel_ideal_states() {
        let c = closed_form(0.0, 0.0, SinConvention::Squared).unwrap();
        let p = SettingProbabilities::from_basis(0.5, false).unwrap();
        let y = simulate_observed_yields(&c, &params(0.0, 0.0), &p).unwrap();
        assert!((y.x(0, Setting::X0) - 0.5 * 0.5).abs() < 1e-16);
        assert!(y.x(1, Setting::X0).abs() < 1e-16);
        let z = z_basis_stats(&y).unwrap();
        assert_eq!(z.e_z, 0.0);
        assert!((z.y_z - 0.25).abs() < 1e-16);
    }

    #[test]
    fn dark_counts_only() {
        let c = closed_form(0.063, 1e-3, SinConvention::Squared).unwrap();
        let p = SettingProbabilities::from_basis(0.5, true).unwrap();
        let pd = 1e-7;
        let y = simulate_observed_yields(&c, &params(f64::INFINITY, pd), &p).unwrap();
        for s in 0..2 {
            for setting in Setting::ALL {
                let want = p.get(setting) * 0.5 * pd;
                assert!((y.x(s, setting) - want).abs() < 1e-22);
            }
        }
        let z = z_basis_stats(&y).unwrap();
        assert!((z.e_z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_eta_z_error_rate() {
        // δ = 0: Z states orthogonal, so only dark counts cause bit errors.
        let c = closed_form(0.0, 0.0, SinConvention::Squared).unwrap();
        let p = SettingProbabilities::from_basis(0.5, false).unwrap();
        let loss = 40.0; // η = 1e-4
        let pd = 1e-7;
        let y = simulate_observed_yields(&c, &params(loss, pd), &p).unwrap();
        let eta = 1e-4;
        let dark = (1.0 - eta) * pd;
        let want = dark / (eta + 2.0 * dark);
        let z = z_basis_stats(&y).unwrap();
        assert!((z.e_z - want).abs() < 1e-12 * want);
    }

    #[test]
    fn zero_yield_is_an_error() {
        let c = closed_form(0.0, 0.0, SinConvention::Squared).unwrap();
        let p = SettingProbabilities::from_basis(0.5, false).unwrap();
        let y = simulate_observed_yields(&c, &params(f64::INFINITY, 0.0), &p).unwrap();
        assert!(matches!(z_basis_stats(&y), Err(Error::UndefinedRate(_))));
    }

    #[test]
    fn invalid_params_rejected() {
        let c = closed_form(0.0, 0.0, SinConvention::Squared).unwrap();
        let p = SettingProbabilities::from_basis(0.5, false).unwrap();
        let mut bad = params(-1.0, 0.0);
        assert!(simulate_observed_yields(&c, &bad, &p).is_err());
        bad.loss_db = 1.0;
        bad.misalignment = 0.6;
        assert!(simulate_observed_yields(&c, &bad, &p).is_err());
    }
}
