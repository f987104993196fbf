//! Exit-code classification.

use std::fmt;

use cbl_core::Error;

/// A command failure with its process exit code: 2 usage or config, 3 data
/// audit, 4 runtime.
#[derive(Debug)]
pub struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn audit(message: impl Into<String>) -> Failure {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Failure {
        Failure {
            code: 4,
            message: message.into(),
        }
    }

    pub fn code(&self) -> i32 {
        self.code
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let message = e.to_string();
        match e {
            Error::BadConfig(_)
            | Error::BadGenConfig(_)
            | Error::BadRepetition(_)
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::IncompatibleParadigm(_)
            | Error::VocabMismatch(_)
            | Error::TooFewSamples(_)
            | Error::Checkpoint(_) => Failure::usage(message),
            _ => Failure::runtime(message),
        }
    }
}

/// Re-tags a core error as a usage failure, for errors raised while reading
/// user-supplied inputs.
pub trait InputContext<T> {
    fn input(self) -> Result<T, Failure>;
}

impl<T> InputContext<T> for Result<T, Error> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::usage(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(Failure::usage("x").code(), 2);
        assert_eq!(Failure::audit("x").code(), 3);
        assert_eq!(Failure::runtime("x").code(), 4);
        assert_eq!(Failure::from(Error::BadConfig("x".into())).code(), 2);
        assert_eq!(Failure::from(Error::Parse { line: 3, message: "x".into() }).code(), 2);
        assert_eq!(Failure::from(Error::NonFiniteGradient(0)).code(), 4);
        assert_eq!(Failure::from(Error::EmptyDataset).code(), 4);
        let io: Result<(), Error> = Err(Error::Checkpoint("truncated".into()));
        assert_eq!(io.input().unwrap_err().code(), 2);
    }
}
