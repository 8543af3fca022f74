//! Monte-Carlo simulator for two-way multiuser relaying with buffer-aided
//! decoupled UL/DL scheduling.
//!
//! Three protocols are modelled: orthogonal decoupled scheduling (ODBA),
//! non-orthogonal decoupled scheduling with SIC at the relay and BS (NODBA),
//! and a round-robin benchmark. Each is driven by threshold multipliers found
//! with a stochastic dual search and then evaluated on a buffered simulation.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod model;
pub mod nodba;
pub mod odba;
pub mod outcome;
pub mod par;
pub mod report;
pub mod search;
pub mod sim;
pub mod stream;
pub mod sweep;

pub use config::{parse_config, Config, SweepAxis, SweepSpec};
pub use error::{Error, Result};
pub use model::{BufferPair, Link, ScenarioConfig, ScenarioDb};
pub use outcome::{Mode, Protocol};
pub use par::Execution;
pub use report::{write_report, Format, Report};
pub use search::{SearchConfig, SearchResult};
pub use sim::{run_simulation, simulate, RunSpec, SimOptions, SimReport};
pub use sweep::{sweep, SweepReport};
