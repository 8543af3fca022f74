//! TOML run configuration.
//!
//! ```toml
//! num_ues = 2
//! power_ue_dbm = [20, 20]
//! power_rs_dbm = 20
//! power_bs_dbm = 46
//! frames = 100000
//! seed = 1
//! protocol = "odba"
//! buffer_cap = inf
//!
//! [omega_db]
//! U1R = -6
//! U2R = -8
//! U1B = -40
//! U2B = -41
//! RB = 0
//!
//! [search]
//! step0 = 0.05
//!
//! [sweep]
//! axis = "omega:U1B"
//! values = [-50, -40, -30]
//! protocols = ["odba", "nodba", "benchmark"]
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{default_frames, default_noise_power, Link, ScenarioConfig, ScenarioDb};
use crate::odba::CouplingRule;
use crate::outcome::Protocol;
use crate::search::SearchConfig;
use crate::sim::{RunSpec, DEFAULT_QUEUE_GAIN};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    num_ues: usize,
    power_ue_dbm: Vec<f64>,
    power_rs_dbm: f64,
    power_bs_dbm: f64,
    omega_db: BTreeMap<String, f64>,
    #[serde(default = "default_noise_power")]
    noise_power: f64,
    #[serde(default = "default_frames")]
    frames: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    protocol: Option<String>,
    #[serde(default)]
    buffer_cap: Option<f64>,
    #[serde(default)]
    coupling: CouplingRule,
    #[serde(default = "default_queue_gain")]
    queue_gain: f64,
    #[serde(default)]
    fixed_duals: Option<[f64; 2]>,
    #[serde(default)]
    search: SearchConfig,
    #[serde(default)]
    sweep: Option<SweepFile>,
}

fn default_queue_gain() -> f64 {
    DEFAULT_QUEUE_GAIN
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    axis: String,
    values: Vec<f64>,
    #[serde(default)]
    protocols: Option<Vec<String>>,
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Average gain of one link, dB.
    Omega(Link),
    /// Transmit power of every UE, dBm.
    PowerUe,
    PowerRs,
    PowerBs,
    /// Per-queue buffer capacity; `inf` means unbounded.
    BufferCap,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepAxis::Omega(l) => write!(f, "omega:{l}"),
            SweepAxis::PowerUe => f.write_str("power_ue"),
            SweepAxis::PowerRs => f.write_str("power_rs"),
            SweepAxis::PowerBs => f.write_str("power_bs"),
            SweepAxis::BufferCap => f.write_str("buffer_cap"),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(link) = t.strip_prefix("omega:").or_else(|| t.strip_prefix("omega_")) {
            return Ok(SweepAxis::Omega(link.parse()?));
        }
        match t {
            "power_ue" | "power_ue_dbm" => Ok(SweepAxis::PowerUe),
            "power_rs" | "power_rs_dbm" => Ok(SweepAxis::PowerRs),
            "power_bs" | "power_bs_dbm" => Ok(SweepAxis::PowerBs),
            "buffer_cap" => Ok(SweepAxis::BufferCap),
            _ => Err(Error::Invalid(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub protocols: Vec<Protocol>,
}

/// A parsed configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Scenario in file units, kept so sweeps can vary dB/dBm values.
    pub scenario_db: ScenarioDb,
    pub run: RunSpec,
    pub sweep: Option<SweepSpec>,
}

impl Config {
    /// Applies command-line overrides and rebuilds the linear scenario.
    pub fn override_with(&mut self, seed: Option<u64>, frames: Option<u64>) -> Result<()> {
        if let Some(s) = seed {
            self.scenario_db.seed = s;
        }
        if let Some(n) = frames {
            self.scenario_db.frames = n;
        }
        self.run.scenario = ScenarioConfig::from_db(&self.scenario_db)?;
        self.run.validate()
    }
}

fn parse_protocol(s: &str) -> Result<Protocol> {
    s.parse()
}

pub fn parse_config(text: &str) -> Result<Config> {
    let file: ConfigFile = toml::from_str(text)?;

    let mut omega_db = BTreeMap::new();
    for (k, v) in &file.omega_db {
        omega_db.insert(k.parse::<Link>()?, *v);
    }
    let scenario_db = ScenarioDb {
        num_ues: file.num_ues,
        power_ue_dbm: file.power_ue_dbm,
        power_rs_dbm: file.power_rs_dbm,
        power_bs_dbm: file.power_bs_dbm,
        omega_db,
        noise_power: file.noise_power,
        frames: file.frames,
        seed: file.seed,
    };
    let scenario = ScenarioConfig::from_db(&scenario_db)?;

    let protocol = file.protocol.as_deref().map(parse_protocol).transpose()?.unwrap_or(Protocol::Odba);
    let buffer_cap = match file.buffer_cap {
        Some(c) if c.is_infinite() && c > 0.0 => None,
        other => other,
    };
    let run = RunSpec {
        scenario,
        protocol,
        search: file.search,
        buffer_cap,
        fixed_duals: file.fixed_duals,
        coupling: file.coupling,
        queue_gain: file.queue_gain,
    };

    let sweep = match file.sweep {
        None => None,
        Some(sw) => {
            let protocols = match sw.protocols {
                Some(ps) => ps.iter().map(|p| parse_protocol(p)).collect::<Result<Vec<_>>>()?,
                None => vec![protocol],
            };
            let spec = SweepSpec { axis: sw.axis.parse()?, values: sw.values, protocols };
            validate_sweep(&spec, &run)?;
            Some(spec)
        }
    };
    if sweep.is_none() {
        run.validate()?;
    }
    Ok(Config { scenario_db, run, sweep })
}

pub(crate) fn validate_sweep(spec: &SweepSpec, run: &RunSpec) -> Result<()> {
    if spec.values.is_empty() {
        return Err(Error::Invalid("sweep.values is empty".into()));
    }
    if spec.protocols.is_empty() {
        return Err(Error::Invalid("sweep.protocols is empty".into()));
    }
    if spec.values.iter().any(|v| v.is_nan()) {
        return Err(Error::Invalid("sweep.values contains NaN".into()));
    }
    if spec.axis != SweepAxis::BufferCap && spec.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("sweep over {} needs finite values", spec.axis)));
    }
    for &p in &spec.protocols {
        RunSpec { protocol: p, ..run.clone() }.validate()?;
    }
    Ok(())
}
