use multiplicity_core::data::DataError;
use multiplicity_core::metrics::MetricsError;
use multiplicity_core::multiplicity::MultiplicityError;
use multiplicity_core::oracle::OracleError;
use multiplicity_core::rashomon::RashomonError;
use multiplicity_core::tree::TreeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl AuditError {
    /// 2 config, 3 data, 4 runtime.
    pub fn exit_code(&self) -> u8 {
        match self {
            AuditError::Config(_) => 2,
            AuditError::Data(_) => 3,
            AuditError::Runtime(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        AuditError::Runtime(format!("{}: {e}", path.display()))
    }
}

impl From<DataError> for AuditError {
    fn from(e: DataError) -> Self {
        AuditError::Data(e.to_string())
    }
}

impl From<TreeError> for AuditError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::InvalidParams(_) | TreeError::GridTooSmall { .. } => {
                AuditError::Config(e.to_string())
            }
            TreeError::WidthMismatch { .. }
            | TreeError::MissingFeature(_)
            | TreeError::EmptyDataset => AuditError::Data(e.to_string()),
            TreeError::Data(d) => d.into(),
            TreeError::Malformed(_) => AuditError::Runtime(e.to_string()),
        }
    }
}

impl From<MultiplicityError> for AuditError {
    fn from(e: MultiplicityError) -> Self {
        AuditError::Config(e.to_string())
    }
}

impl From<RashomonError> for AuditError {
    fn from(e: RashomonError) -> Self {
        match e {
            RashomonError::Config(_) => AuditError::Config(e.to_string()),
            RashomonError::Tree(t) => t.into(),
            RashomonError::Multiplicity(m) => m.into(),
            RashomonError::Data(d) => d.into(),
            _ => AuditError::Runtime(e.to_string()),
        }
    }
}

impl From<MetricsError> for AuditError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Rashomon(r) => r.into(),
            MetricsError::DeltaOutOfRange(_) => AuditError::Config(e.to_string()),
            MetricsError::FingerprintMismatch(..) | MetricsError::MissingTags => {
                AuditError::Data(e.to_string())
            }
            _ => AuditError::Runtime(e.to_string()),
        }
    }
}

impl From<OracleError> for AuditError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NonBinary(_) | OracleError::Data(_) => AuditError::Data(e.to_string()),
            OracleError::Rashomon(r) => r.into(),
            OracleError::Tree(t) => t.into(),
            _ => AuditError::Config(e.to_string()),
        }
    }
}
