use std::fmt;
use std::process::ExitCode;

use casad::frame::FrameError;
use casad::sim::SimError;
use casad::ssa::SsaError;
use casad::tuner::TunerError;

/// Failure classes, one exit code each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind,
            error: error.into(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        CliError::new(Kind::Usage, anyhow::anyhow!("{message}"))
    }

    pub fn data(message: impl fmt::Display) -> Self {
        CliError::new(Kind::Data, anyhow::anyhow!("{message}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Several library errors already print their source; skip the repeat.
        let mut text = String::new();
        for cause in self.error.chain() {
            let part = cause.to_string();
            if text.ends_with(&part) {
                continue;
            }
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
        f.write_str(&text)
    }
}

fn ssa_kind(err: &SsaError) -> Kind {
    match err {
        SsaError::InvalidConfig(_) => Kind::Usage,
        SsaError::NumericalFailure(_) => Kind::Numerical,
        _ => Kind::Data,
    }
}

impl From<SsaError> for CliError {
    fn from(err: SsaError) -> Self {
        CliError::new(ssa_kind(&err), err)
    }
}

impl From<TunerError> for CliError {
    fn from(err: TunerError) -> Self {
        let kind = match &err {
            TunerError::Ssa(inner) => ssa_kind(inner),
            TunerError::DegenerateScores(_) => Kind::Numerical,
            TunerError::InvalidParameter(_) => Kind::Usage,
            _ => Kind::Data,
        };
        CliError::new(kind, err)
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        CliError::new(Kind::Data, err)
    }
}

impl From<FrameError> for CliError {
    fn from(err: FrameError) -> Self {
        CliError::new(Kind::Data, err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::new(Kind::Data, err)
    }
}

/// Attaches a message to any error convertible into [`CliError`], keeping its kind.
pub trait Context<T> {
    fn context(self, message: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn context(self, message: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| {
            let e = e.into();
            CliError {
                kind: e.kind,
                error: e.error.context(message.to_string()),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_follow_the_failure_class() {
        assert_eq!(CliError::from(SsaError::InvalidConfig("r".into())).kind, Kind::Usage);
        assert_eq!(
            CliError::from(SsaError::SeriesTooShort {
                needed: 2,
                available: 1
            })
            .kind,
            Kind::Data
        );
        assert_eq!(
            CliError::from(SsaError::NumericalFailure("nan".into())).kind,
            Kind::Numerical
        );
        assert_eq!(CliError::from(TunerError::DegenerateScores(1.0)).kind, Kind::Numerical);
        assert_eq!(
            CliError::from(TunerError::Ssa(SsaError::NumericalFailure("x".into()))).kind,
            Kind::Numerical
        );
        assert_eq!(CliError::from(TunerError::NoAttackInstances).kind, Kind::Data);
    }

    #[test]
    fn context_keeps_kind_and_chains_messages() {
        let r: Result<(), SsaError> = Err(SsaError::InvalidConfig("lag".into()));
        let e = r.context("training").unwrap_err();
        assert_eq!(e.kind, Kind::Usage);
        assert_eq!(e.to_string(), "training: invalid configuration: lag");
    }

    #[test]
    fn sources_already_in_the_message_are_not_repeated() {
        let inner = FrameError::EmptyFilter;
        let r: Result<(), FrameError> = Err(FrameError::AtLine {
            line: 3,
            source: Box::new(inner),
        });
        let e = r.context("reading x.log").unwrap_err();
        assert_eq!(e.to_string(), "reading x.log: line 3: id filter must not be empty");
    }
}
