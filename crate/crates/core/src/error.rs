use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building scenarios, evaluating policies or writing reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transmit powers must satisfy P_B >= P_R >= P_U (got P_B={power_bs_dbm} dBm, P_R={power_rs_dbm} dBm, P_U{ue}={power_ue_dbm} dBm)")]
    PowerOrdering {
        power_bs_dbm: f64,
        power_rs_dbm: f64,
        ue: usize,
        power_ue_dbm: f64,
    },

    #[error("missing average gain for link {0}")]
    MissingLink(String),

    #[error("unknown link identifier `{0}`")]
    UnknownLink(String),

    #[error("protocol {protocol} needs at least 2 UEs, scenario has {num_ues}")]
    TooFewUes { protocol: &'static str, num_ues: usize },

    #[error("dual pair (lambda3={lambda3}, lambda4={lambda4}) lies outside every decision case")]
    NoDecisionCase { lambda3: f64, lambda4: f64 },

    #[error("capacity of negative SNR {0}")]
    NegativeSnr(f64),

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
