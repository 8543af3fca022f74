use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::BufferPair;

/// Frame-level transmission mode across all protocols, in report order.
///
/// ODBA frames are labelled by their (UL, DL) slot pair: `W1..W3` are the
/// direct, UE-to-relay and relay-to-BS uplink slots, `W4..W6` the direct,
/// relay-to-UE and BS-to-relay downlink slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    W1W4,
    W1W5,
    W1W6,
    W2W4,
    W2W5,
    W2W6,
    W3W4,
    W3W5,
    W3W6,
    T1,
    T2,
    T3,
    T4,
    Idle,
    Z1,
    Z2,
    Z3,
    Z4,
}

impl Mode {
    pub const ALL: [Mode; 18] = [
        Mode::W1W4,
        Mode::W1W5,
        Mode::W1W6,
        Mode::W2W4,
        Mode::W2W5,
        Mode::W2W6,
        Mode::W3W4,
        Mode::W3W5,
        Mode::W3W6,
        Mode::T1,
        Mode::T2,
        Mode::T3,
        Mode::T4,
        Mode::Idle,
        Mode::Z1,
        Mode::Z2,
        Mode::Z3,
        Mode::Z4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// ODBA mode from UL slot type (0..3 for W1..W3) and DL slot type (0..3 for W4..W6).
    pub fn odba(ul_type: usize, dl_type: usize) -> Mode {
        Mode::ALL[ul_type * 3 + dl_type]
    }

    pub fn protocol(self) -> Protocol {
        match self.index() {
            0..=8 => Protocol::Odba,
            9..=13 => Protocol::Nodba,
            _ => Protocol::Benchmark,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Odba,
    Nodba,
    Benchmark,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Odba, Protocol::Nodba, Protocol::Benchmark];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Odba => "odba",
            Protocol::Nodba => "nodba",
            Protocol::Benchmark => "benchmark",
        }
    }

    pub fn modes(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |m| m.protocol() == self)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "odba" => Ok(Protocol::Odba),
            "nodba" => Ok(Protocol::Nodba),
            "benchmark" => Ok(Protocol::Benchmark),
            _ => Err(crate::Error::Invalid(format!("unknown protocol `{s}`"))),
        }
    }
}

/// Result of applying one frame's selection to the relay buffers.
///
/// `*_counted` follow the sum-rate definitions (the ODBA downlink counts the
/// BS-to-relay feed); `*_delivered` count bits that reached their final
/// destination. `*_fed`/`*_drained` are the buffer arrivals/departures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameOutcome {
    pub mode: Mode,
    pub ul_counted: f64,
    pub dl_counted: f64,
    pub ul_delivered: f64,
    pub dl_delivered: f64,
    pub ul_fed: f64,
    pub ul_drained: f64,
    pub dl_fed: f64,
    pub dl_drained: f64,
    pub buffer_after: BufferPair,
    pub coupled: Option<bool>,
}

impl FrameOutcome {
    pub(crate) fn idle(mode: Mode, buf: BufferPair) -> Self {
        FrameOutcome {
            mode,
            ul_counted: 0.0,
            dl_counted: 0.0,
            ul_delivered: 0.0,
            dl_delivered: 0.0,
            ul_fed: 0.0,
            ul_drained: 0.0,
            dl_fed: 0.0,
            dl_drained: 0.0,
            buffer_after: buf,
            coupled: None,
        }
    }
}

/// Amount actually accepted when pushing `amount` into a queue with `headroom` left.
pub(crate) fn accept(amount: f64, headroom: f64) -> f64 {
    amount.min(headroom).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_order_is_stable() {
        for (i, m) in Mode::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
        }
        assert_eq!(Mode::odba(0, 0), Mode::W1W4);
        assert_eq!(Mode::odba(2, 1), Mode::W3W5);
        assert_eq!(Protocol::Odba.modes().count(), 9);
        assert_eq!(Protocol::Nodba.modes().count(), 5);
        assert_eq!(Protocol::Benchmark.modes().count(), 4);
    }
}
