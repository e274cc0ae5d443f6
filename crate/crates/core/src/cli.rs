//! Scan configuration, its text format, and CSV output.
//!
//! The config file is line oriented: `key = value`, one per line, with `#`
//! starting a comment. Unknown keys are rejected. Only the loss grid is
//! required:
//!
//! ```text
//! loss_start = 0
//! loss_stop = 60
//! loss_step = 1
//! delta = 0.063            # SPF in radians (default 0)
//! epsilon = 1e-6           # per-step correlation strength (default 0)
//! range = 10               # correlation length L (default 1)
//! # epsilon_list = 1e-3, 1e-4   (alternative to epsilon/range)
//! dark_rate = 1e-7
//! ec_efficiency = 1.16
//! misalignment = 0
//! p_za = 0.5
//! p_zb = 0.5
//! four_state = false
//! sin_convention = squared # or printed
//! combine = average        # or worst_case
//! finite_pulses = 1e12     # enables the finite-size bound
//! failure_eps = 1e-10
//! output = rates.csv
//! ```
//!
//! Command-line flags override values read from the file.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::channel::BasisProbabilities;
use crate::coeffs::SinConvention;
use crate::concentration::CountBudget;
use crate::error::{Error, Result};
use crate::keyrate::{scan, KeyRatePoint};
use crate::rt::Combine;
use crate::states::CorrelationModel;

pub const CSV_HEADER: &str = "loss_db,eta,e_X,e_Z,Y_Z,R,w_max,d0x,status";

#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationSpec {
    Constant { epsilon: f64, range: usize },
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizeConfig {
    pub pulses: f64,
    pub failure_eps: f64,
}

impl FiniteSizeConfig {
    pub fn budget(&self, n_det: f64) -> Result<CountBudget> {
        CountBudget::new(self.pulses, n_det, self.failure_eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub loss_start: f64,
    pub loss_stop: f64,
    pub loss_step: f64,
    pub delta: f64,
    pub correlation: CorrelationSpec,
    pub dark_rate: f64,
    pub ec_efficiency: f64,
    pub misalignment: f64,
    pub basis: BasisProbabilities,
    pub four_state: bool,
    pub sin_convention: SinConvention,
    pub combine: Combine,
    pub finite_size: Option<FiniteSizeConfig>,
    pub output: Option<PathBuf>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            loss_start: 0.0,
            loss_stop: 0.0,
            loss_step: 1.0,
            delta: 0.0,
            correlation: CorrelationSpec::Constant {
                epsilon: 0.0,
                range: 1,
            },
            dark_rate: 1e-7,
            ec_efficiency: 1.16,
            misalignment: 0.0,
            basis: BasisProbabilities::default(),
            four_state: false,
            sin_convention: SinConvention::Squared,
            combine: Combine::Average,
            finite_size: None,
            output: None,
        }
    }
}

impl ScanConfig {
    /// Grid points `start + i·step` up to `stop`, without accumulated drift.
    pub fn loss_grid(&self) -> Vec<f64> {
        let span = (self.loss_stop - self.loss_start) / self.loss_step;
        let n = (span + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.loss_start + i as f64 * self.loss_step)
            .collect()
    }

    pub fn correlation_model(&self) -> Result<CorrelationModel> {
        match &self.correlation {
            CorrelationSpec::Constant { epsilon, range } => {
                CorrelationModel::constant(*epsilon, *range)
            }
            CorrelationSpec::List(v) => CorrelationModel::new(v.clone()),
        }
    }

    /// Range checks shared by the parser and programmatic construction.
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, value: f64| Error::Config {
            line: 0,
            msg: format!("{name} = {value} is out of range"),
        };
        if !(self.loss_start >= 0.0) || !self.loss_start.is_finite() {
            return Err(bad("loss_start", self.loss_start));
        }
        if !(self.loss_stop >= self.loss_start) || !self.loss_stop.is_finite() {
            return Err(bad("loss_stop", self.loss_stop));
        }
        if !(self.loss_step > 0.0) || !self.loss_step.is_finite() {
            return Err(bad("loss_step", self.loss_step));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.delta) {
            return Err(bad("delta", self.delta));
        }
        let model = self.correlation_model().map_err(|e| Error::Config {
            line: 0,
            msg: e.to_string(),
        })?;
        if model.per_range_epsilon().iter().any(|&e| e >= 1.0) {
            return Err(bad("epsilon", 1.0));
        }
        if !(0.0..=1.0).contains(&self.dark_rate) {
            return Err(bad("dark_rate", self.dark_rate));
        }
        if !(self.ec_efficiency >= 1.0) || !self.ec_efficiency.is_finite() {
            return Err(bad("ec_efficiency", self.ec_efficiency));
        }
        if !(0.0..=0.5).contains(&self.misalignment) {
            return Err(bad("misalignment", self.misalignment));
        }
        if !(self.basis.p_za > 0.0 && self.basis.p_za < 1.0) {
            return Err(bad("p_za", self.basis.p_za));
        }
        if !(self.basis.p_zb > 0.0 && self.basis.p_zb < 1.0) {
            return Err(bad("p_zb", self.basis.p_zb));
        }
        if let Some(fs) = &self.finite_size {
            if !(fs.pulses >= 1.0) || !fs.pulses.is_finite() {
                return Err(bad("finite_pulses", fs.pulses));
            }
            if !(fs.failure_eps > 0.0 && fs.failure_eps < 1.0) {
                return Err(bad("failure_eps", fs.failure_eps));
            }
        }
        Ok(())
    }

    /// Text form accepted by [`parse_config`]. Floats use Rust's shortest
    /// round-trip representation.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("loss_start", format!("{:?}", self.loss_start));
        kv("loss_stop", format!("{:?}", self.loss_stop));
        kv("loss_step", format!("{:?}", self.loss_step));
        kv("delta", format!("{:?}", self.delta));
        match &self.correlation {
            CorrelationSpec::Constant { epsilon, range } => {
                kv("epsilon", format!("{epsilon:?}"));
                kv("range", range.to_string());
            }
            CorrelationSpec::List(v) => {
                let items: Vec<String> = v.iter().map(|e| format!("{e:?}")).collect();
                kv("epsilon_list", items.join(","));
            }
        }
        kv("dark_rate", format!("{:?}", self.dark_rate));
        kv("ec_efficiency", format!("{:?}", self.ec_efficiency));
        kv("misalignment", format!("{:?}", self.misalignment));
        kv("p_za", format!("{:?}", self.basis.p_za));
        kv("p_zb", format!("{:?}", self.basis.p_zb));
        kv("four_state", self.four_state.to_string());
        kv(
            "sin_convention",
            match self.sin_convention {
                SinConvention::Squared => "squared",
                SinConvention::Printed => "printed",
            }
            .into(),
        );
        kv(
            "combine",
            match self.combine {
                Combine::Average => "average",
                Combine::WorstCase => "worst_case",
            }
            .into(),
        );
        if let Some(fs) = &self.finite_size {
            kv("finite_pulses", format!("{:?}", fs.pulses));
            kv("failure_eps", format!("{:?}", fs.failure_eps));
        }
        if let Some(p) = &self.output {
            kv("output", p.display().to_string());
        }
        s
    }
}

fn strip_quotes(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(v)
}

/// Parse and validate a scan configuration.
pub fn parse_config(text: &str) -> Result<ScanConfig> {
    let mut cfg = ScanConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut epsilon: Option<(f64, usize)> = None;
    let mut range: Option<(usize, usize)> = None;
    let mut list: Option<(Vec<f64>, usize)> = None;
    let mut pulses: Option<f64> = None;
    let mut failure_eps: Option<f64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| Error::Config { line, msg };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = strip_quotes(value);
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| !x.is_nan())
                .ok_or_else(|| err(format!("malformed number `{v}` for {key}")))
        };
        let flag = |v: &str| -> Result<bool> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(err(format!("expected true/false for {key}, got `{v}`"))),
            }
        };

        let known = [
            "loss_start",
            "loss_stop",
            "loss_step",
            "delta",
            "epsilon",
            "range",
            "epsilon_list",
            "dark_rate",
            "ec_efficiency",
            "misalignment",
            "p_za",
            "p_zb",
            "four_state",
            "sin_convention",
            "combine",
            "finite_pulses",
            "failure_eps",
            "output",
        ];
        let Some(&key) = known.iter().find(|k| **k == key) else {
            return Err(err(format!("unknown key `{key}`")));
        };
        if seen.contains(&key) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        seen.push(key);

        match key {
            "loss_start" => cfg.loss_start = num(value)?,
            "loss_stop" => cfg.loss_stop = num(value)?,
            "loss_step" => {
                cfg.loss_step = num(value)?;
                if !(cfg.loss_step > 0.0) {
                    return Err(err("loss_step must be positive".into()));
                }
            }
            "delta" => cfg.delta = num(value)?,
            "epsilon" => epsilon = Some((num(value)?, line)),
            "range" => {
                let r: usize = value.parse().ok().filter(|&r| r >= 1).ok_or_else(|| {
                    err(format!("range must be a positive integer, got `{value}`"))
                })?;
                range = Some((r, line));
            }
            "epsilon_list" => {
                let v = value.split(',').map(&num).collect::<Result<Vec<f64>>>()?;
                list = Some((v, line));
            }
            "dark_rate" => cfg.dark_rate = num(value)?,
            "ec_efficiency" => cfg.ec_efficiency = num(value)?,
            "misalignment" => cfg.misalignment = num(value)?,
            "p_za" => cfg.basis.p_za = num(value)?,
            "p_zb" => cfg.basis.p_zb = num(value)?,
            "four_state" => cfg.four_state = flag(value)?,
            "sin_convention" => {
                cfg.sin_convention = match value {
                    "squared" => SinConvention::Squared,
                    "printed" => SinConvention::Printed,
                    _ => {
                        return Err(err(format!(
                            "sin_convention must be squared or printed, got `{value}`"
                        )))
                    }
                }
            }
            "combine" => {
                cfg.combine = match value {
                    "average" => Combine::Average,
                    "worst_case" => Combine::WorstCase,
                    _ => {
                        return Err(err(format!(
                            "combine must be average or worst_case, got `{value}`"
                        )))
                    }
                }
            }
            "finite_pulses" => pulses = Some(num(value)?),
            "failure_eps" => failure_eps = Some(num(value)?),
            "output" => cfg.output = Some(PathBuf::from(value)),
            _ => unreachable!(),
        }
    }

    for required in ["loss_start", "loss_stop", "loss_step"] {
        if !seen.contains(&required) {
            return Err(Error::Config {
                line: 0,
                msg: format!("missing required key `{required}`"),
            });
        }
    }

    cfg.correlation = match (list, epsilon, range) {
        (Some((_, line)), Some(_), _) | (Some((_, line)), _, Some(_)) => {
            return Err(Error::Config {
                line,
                msg: "epsilon_list cannot be combined with epsilon/range".into(),
            })
        }
        (Some((v, _)), None, None) => CorrelationSpec::List(v),
        (None, e, r) => CorrelationSpec::Constant {
            epsilon: e.map_or(0.0, |x| x.0),
            range: r.map_or(1, |x| x.0),
        },
    };

    cfg.finite_size = match (pulses, failure_eps) {
        (Some(p), e) => Some(FiniteSizeConfig {
            pulses: p,
            failure_eps: e.unwrap_or(1e-10),
        }),
        (None, Some(_)) => {
            return Err(Error::Config {
                line: 0,
                msg: "failure_eps given without finite_pulses".into(),
            })
        }
        (None, None) => None,
    };

    cfg.validate()?;
    Ok(cfg)
}

/// 17 significant digits.
fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_csv(points: &[KeyRatePoint]) -> String {
    let mut out = String::with_capacity(64 * (points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        let status = p.status.label().replace([',', '\n'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(p.loss_db),
            fmt_num(p.eta),
            fmt_num(p.e_x),
            fmt_num(p.e_z),
            fmt_num(p.y_z),
            fmt_num(p.rate),
            fmt_num(p.w_max),
            fmt_num(p.d0x),
            status
        );
    }
    out
}

/// Run the scan and write the CSV to `path`.
pub fn run(config: &ScanConfig, path: &Path) -> io::Result<Vec<KeyRatePoint>> {
    let points = scan(config);
    std::fs::write(path, format_csv(&points))?;
    Ok(points)
}
