//! Exit-code contract.

use fpme_core::Error;

pub const OK: u8 = 0;
pub const CHECK: u8 = 1;
pub const CONFIG: u8 = 2;
pub const DATA: u8 = 3;
pub const SOLVER: u8 = 4;

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: DATA,
            message: message.into(),
        }
    }

    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn kind(&self) -> &'static str {
        match self.code {
            CHECK => "check failure",
            CONFIG => "config error",
            DATA => "data error",
            SOLVER => "solver nonconvergence",
            _ => "error",
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) | Error::WeightTail(_) => CONFIG,
            Error::QuadratureNonconvergence { .. }
            | Error::FitDivergence { .. }
            | Error::InnerNonconvergence { .. }
            | Error::Negativity { .. } => SOLVER,
            Error::HorizonTooShort { .. } => CHECK,
            Error::GridMismatch(_)
            | Error::NonFinite(_)
            | Error::Resolution { .. }
            | Error::MissingRecords(_)
            | Error::Io { .. }
            | Error::Data(_) => DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_error_kinds() {
        assert_eq!(Failure::from(Error::Domain("x".into())).code, CONFIG);
        assert_eq!(Failure::from(Error::Data("x".into())).code, DATA);
        let e = Error::InnerNonconvergence { step: 3, residual: 1.0, iterations: 9 };
        let f = Failure::from(e);
        assert_eq!(f.code, SOLVER);
        assert!(f.message.contains("step 3"));
    }
}
