//! Asymptotic secret key rate and loss scans.

use rayon::prelude::*;

use crate::channel::{simulate_observed_yields, z_basis_stats, ChannelParams};
use crate::cli::ScanConfig;
use crate::coeffs::closed_form;
use crate::concentration::{finite_size_phase_error, FiniteSizeInputs, FiniteSizeOutcome};
use crate::error::{check_unit_interval, Error, Result};
use crate::rt::{deviation_d0x, four_state_phase_error, phase_error_rate, EstimatorInputs};
use crate::states::{build_protocol_states, long_range_amplitude, Setting};

/// Binary entropy in bits, continuous at the endpoints.
pub fn binary_entropy(x: f64) -> Result<f64> {
    let x = check_unit_interval("entropy argument", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// `max(0, Y_Z (1 - h(e_X) - f h(e_Z)))`.
pub fn secret_key_rate(y_z: f64, e_x: f64, e_z: f64, f: f64) -> Result<f64> {
    if !(f >= 1.0) {
        return Err(Error::OutOfRange {
            name: "error-correction efficiency",
            value: f,
        });
    }
    let e_x = e_x.min(0.5);
    let r = y_z * (1.0 - binary_entropy(e_x)? - f * binary_entropy(e_z)?);
    Ok(r.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    /// Phase error rate at or above 1/2.
    NoKey,
    /// Finite-size deviations left the physical range.
    Inconclusive(String),
    Error(String),
}

impl PointStatus {
    pub fn label(&self) -> String {
        match self {
            PointStatus::Ok => "ok".into(),
            PointStatus::NoKey => "no_key".into(),
            PointStatus::Inconclusive(m) => format!("inconclusive: {m}"),
            PointStatus::Error(m) => format!("error: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRatePoint {
    pub loss_db: f64,
    pub eta: f64,
    pub e_x: f64,
    pub e_z: f64,
    pub y_z: f64,
    /// Secret bits per emitted pulse.
    pub rate: f64,
    /// Deviation sign chosen for Bob's outcome `s_X = 0`.
    pub w_max: f64,
    pub d0x: f64,
    pub status: PointStatus,
}

impl KeyRatePoint {
    fn failed(loss_db: f64, err: &Error) -> Self {
        Self {
            loss_db,
            eta: crate::channel::transmittance(loss_db),
            e_x: f64::NAN,
            e_z: f64::NAN,
            y_z: f64::NAN,
            rate: 0.0,
            w_max: f64::NAN,
            d0x: f64::NAN,
            status: PointStatus::Error(err.to_string()),
        }
    }
}

/// Channel → yields → phase-error bound → key rate for one loss value.
pub fn evaluate_point(config: &ScanConfig, loss_db: f64) -> Result<KeyRatePoint> {
    let model = config.correlation_model()?;
    let epsilon_eff = long_range_amplitude(&model).epsilon_eff;
    let states = build_protocol_states(
        config.delta,
        epsilon_eff,
        config.four_state,
        config.basis.p_za,
    )?;
    let coeffs = closed_form(config.delta, epsilon_eff, config.sin_convention)?;
    let params = ChannelParams {
        loss_db,
        dark_rate: config.dark_rate,
        misalignment: config.misalignment,
        basis: config.basis,
    };
    let yields = simulate_observed_yields(&coeffs, &params, &states.probabilities)?;
    let z = z_basis_stats(&yields)?;

    let probs = states.probabilities;
    let x0_inputs = EstimatorInputs {
        coeffs: &coeffs,
        probabilities: &probs,
        basis: &config.basis,
        third: Setting::X0,
    };
    let d0x = deviation_d0x(probs.x0, states.reference_overlap(Setting::X0)?)?;

    let (mut e_x, w_max) = if config.four_state {
        let r = four_state_phase_error(&states, &yields, &coeffs, &config.basis)?;
        (r.combined(config.combine), r.branches[0].w_max[0])
    } else {
        let r = phase_error_rate(&yields, &x0_inputs, d0x)?;
        (r.e_x, r.w_max[0])
    };

    let mut status = PointStatus::Ok;
    if let Some(fs) = &config.finite_size {
        let n_det = fs.pulses * yields.total();
        let budget = fs.budget(n_det)?;
        let thirds: &[Setting] = if config.four_state {
            &[Setting::X0, Setting::X1]
        } else {
            &[Setting::X0]
        };
        let mut bounds = Vec::with_capacity(thirds.len());
        for &third in thirds {
            let d = deviation_d0x(probs.get(third), states.reference_overlap(third)?)?;
            let inputs = FiniteSizeInputs {
                yields: &yields,
                estimator: EstimatorInputs { third, ..x0_inputs },
                d_j: d,
                d_key: states.d_key()?,
            };
            match finite_size_phase_error(&inputs, &budget)? {
                FiniteSizeOutcome::Bounded(v) => bounds.push((probs.get(third), v)),
                FiniteSizeOutcome::Inconclusive(why) => {
                    status = PointStatus::Inconclusive(why);
                    break;
                }
            }
        }
        if status == PointStatus::Ok {
            e_x = match config.combine {
                crate::rt::Combine::WorstCase => bounds.iter().map(|b| b.1).fold(0.0, f64::max),
                crate::rt::Combine::Average => {
                    let wsum: f64 = bounds.iter().map(|b| b.0).sum();
                    bounds.iter().map(|b| b.0 * b.1).sum::<f64>() / wsum
                }
            };
        } else {
            e_x = 1.0;
        }
    }

    let rate = if status == PointStatus::Ok {
        secret_key_rate(z.y_z, e_x, z.e_z, config.ec_efficiency)?
    } else {
        0.0
    };
    if status == PointStatus::Ok && e_x >= 0.5 {
        status = PointStatus::NoKey;
    }

    Ok(KeyRatePoint {
        loss_db,
        eta: params.eta(),
        e_x,
        e_z: z.e_z,
        y_z: z.y_z,
        rate,
        w_max,
        d0x,
        status,
    })
}

/// Evaluate every grid point. Points run in parallel; the output is in
/// grid order, and a failing point is recorded rather than aborting.
pub fn scan(config: &ScanConfig) -> Vec<KeyRatePoint> {
    config
        .loss_grid()
        .into_par_iter()
        .map(|loss| evaluate_point(config, loss).unwrap_or_else(|e| KeyRatePoint::failed(loss, &e)))
        .collect()
}
