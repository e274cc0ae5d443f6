use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{name} = {value} is outside its admissible range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("basis is numerically degenerate (Gram determinant {gram_det:e})")]
    SingularBasis { gram_det: f64 },

    #[error("linear system is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("undefined rate: {0}")]
    UndefinedRate(&'static str),

    #[error("square-root argument {value:e} is negative in {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("setting {0} is not part of this protocol")]
    MissingSetting(crate::states::Setting),

    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange { name, value })
    }
}
