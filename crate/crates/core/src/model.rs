//! Scenario parameters, block-fading channel draws and the SNR/capacity view
//! shared by every transmission policy.
//!
//! Powers and average gains enter in dBm/dB through [`ScenarioDb`] and are
//! linearized once by [`ScenarioConfig::from_db`]. UE indices are 0-based in
//! code; link identifiers print 1-based (`U1R`, `U2B`, `RB`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Per-UE values; two UEs is the common case, small scenarios never spill.
pub type PerUe = SmallVec<[f64; 4]>;

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Shannon capacity `log2(1 + snr)` in bits/symbol.
pub fn capacity(snr: f64) -> Result<f64> {
    if snr < 0.0 || snr.is_nan() {
        return Err(Error::NegativeSnr(snr));
    }
    Ok(cap(snr))
}

/// Unchecked capacity for the hot paths; SNRs built by [`snr_view`] are never negative.
#[inline]
pub(crate) fn cap(snr: f64) -> f64 {
    snr.ln_1p() * std::f64::consts::LOG2_E
}

/// Undirected link. Channel reciprocity means one fading gain serves both directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Link {
    UeRelay(usize),
    UeBs(usize),
    RelayBs,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Link::UeRelay(m) => write!(f, "U{}R", m + 1),
            Link::UeBs(m) => write!(f, "U{}B", m + 1),
            Link::RelayBs => f.write_str("RB"),
        }
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownLink(s.to_string());
        let t = s.trim();
        if t.eq_ignore_ascii_case("RB") || t.eq_ignore_ascii_case("BR") {
            return Ok(Link::RelayBs);
        }
        let rest = t.strip_prefix(['U', 'u']).ok_or_else(unknown)?;
        let split = rest.find(|c: char| !c.is_ascii_digit()).ok_or_else(unknown)?;
        let (num, tail) = rest.split_at(split);
        let m: usize = num.parse().map_err(|_| unknown())?;
        if m == 0 {
            return Err(unknown());
        }
        match tail {
            "R" | "r" => Ok(Link::UeRelay(m - 1)),
            "B" | "b" => Ok(Link::UeBs(m - 1)),
            _ => Err(unknown()),
        }
    }
}

impl Serialize for Link {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Link {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All undirected links of an `m`-UE scenario in canonical order:
/// `U1R..UMR, U1B..UMB, RB`.
pub fn links(num_ues: usize) -> impl Iterator<Item = Link> {
    (0..num_ues)
        .map(Link::UeRelay)
        .chain((0..num_ues).map(Link::UeBs))
        .chain(std::iter::once(Link::RelayBs))
}

/// Scenario as written in a config file: powers in dBm, average gains in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDb {
    pub num_ues: usize,
    pub power_ue_dbm: Vec<f64>,
    pub power_rs_dbm: f64,
    pub power_bs_dbm: f64,
    pub omega_db: BTreeMap<Link, f64>,
    #[serde(default = "default_noise_power")]
    pub noise_power: f64,
    #[serde(default = "default_frames")]
    pub frames: u64,
    #[serde(default)]
    pub seed: u64,
}

pub(crate) fn default_noise_power() -> f64 {
    1.0
}

pub(crate) fn default_frames() -> u64 {
    100_000
}

impl ScenarioDb {
    /// Two-UE scenario with equal UE powers and `omega_db` in the order
    /// `[U1R, U2R, U1B, U2B, RB]`.
    pub fn two_ue(power_ue_dbm: f64, power_rs_dbm: f64, power_bs_dbm: f64, omega_db: [f64; 5]) -> Self {
        let omega = [
            (Link::UeRelay(0), omega_db[0]),
            (Link::UeRelay(1), omega_db[1]),
            (Link::UeBs(0), omega_db[2]),
            (Link::UeBs(1), omega_db[3]),
            (Link::RelayBs, omega_db[4]),
        ];
        ScenarioDb {
            num_ues: 2,
            power_ue_dbm: vec![power_ue_dbm; 2],
            power_rs_dbm,
            power_bs_dbm,
            omega_db: omega.into_iter().collect(),
            noise_power: default_noise_power(),
            frames: default_frames(),
            seed: 0,
        }
    }
}

/// Linearized scenario. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub num_ues: usize,
    pub power_ue: PerUe,
    pub power_rs: f64,
    pub power_bs: f64,
    pub omega_ue_relay: PerUe,
    pub omega_ue_bs: PerUe,
    pub omega_relay_bs: f64,
    pub noise_power: f64,
    pub frames: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_db(db: &ScenarioDb) -> Result<Self> {
        let m = db.num_ues;
        if m == 0 {
            return Err(Error::Invalid("num_ues must be at least 1".into()));
        }
        if db.power_ue_dbm.len() != m {
            return Err(Error::Invalid(format!(
                "power_ue_dbm has {} entries, expected {m}",
                db.power_ue_dbm.len()
            )));
        }
        if !(db.noise_power > 0.0 && db.noise_power.is_finite()) {
            return Err(Error::Invalid(format!("noise_power must be positive, got {}", db.noise_power)));
        }
        if db.frames == 0 {
            return Err(Error::Invalid("frames must be positive".into()));
        }
        for (&link, &v) in &db.omega_db {
            let in_range = match link {
                Link::UeRelay(i) | Link::UeBs(i) => i < m,
                Link::RelayBs => true,
            };
            if !in_range {
                return Err(Error::UnknownLink(link.to_string()));
            }
            if !v.is_finite() {
                return Err(Error::Invalid(format!("average gain of {link} is not finite")));
            }
        }
        let omega = |link: Link| {
            db.omega_db
                .get(&link)
                .map(|&v| db_to_linear(v))
                .ok_or_else(|| Error::MissingLink(link.to_string()))
        };

        let power_rs = db_to_linear(db.power_rs_dbm);
        let power_bs = db_to_linear(db.power_bs_dbm);
        let power_ue: PerUe = db.power_ue_dbm.iter().map(|&p| db_to_linear(p)).collect();
        for (i, &p) in power_ue.iter().enumerate() {
            if !(power_bs >= power_rs && power_rs >= p) {
                return Err(Error::PowerOrdering {
                    power_bs_dbm: db.power_bs_dbm,
                    power_rs_dbm: db.power_rs_dbm,
                    ue: i + 1,
                    power_ue_dbm: db.power_ue_dbm[i],
                });
            }
        }

        Ok(ScenarioConfig {
            num_ues: m,
            power_ue,
            power_rs,
            power_bs,
            omega_ue_relay: (0..m).map(|i| omega(Link::UeRelay(i))).collect::<Result<_>>()?,
            omega_ue_bs: (0..m).map(|i| omega(Link::UeBs(i))).collect::<Result<_>>()?,
            omega_relay_bs: omega(Link::RelayBs)?,
            noise_power: db.noise_power,
            frames: db.frames,
            seed: db.seed,
        })
    }

    /// Linear average gain of `link`, if it belongs to the scenario.
    pub fn omega(&self, link: Link) -> Option<f64> {
        match link {
            Link::UeRelay(i) => self.omega_ue_relay.get(i).copied(),
            Link::UeBs(i) => self.omega_ue_bs.get(i).copied(),
            Link::RelayBs => Some(self.omega_relay_bs),
        }
    }
}

/// One frame of block fading: `|h|^2` for every undirected link.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub ue_relay: PerUe,
    pub ue_bs: PerUe,
    pub relay_bs: f64,
}

impl ChannelRealization {
    pub fn gain(&self, link: Link) -> Option<f64> {
        match link {
            Link::UeRelay(i) => self.ue_relay.get(i).copied(),
            Link::UeBs(i) => self.ue_bs.get(i).copied(),
            Link::RelayBs => Some(self.relay_bs),
        }
    }
}

/// Rayleigh block fading: each `|h|^2` is exponential with mean equal to the
/// link's linear average gain. Draw order is `U1R..UMR, U1B..UMB, RB`.
pub fn sample_channel<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> ChannelRealization {
    let mut draw = |mean: f64| -> f64 {
        let e: f64 = rng.sample(Exp1);
        e * mean
    };
    let ue_relay = cfg.omega_ue_relay.iter().map(|&w| draw(w)).collect();
    let ue_bs = cfg.omega_ue_bs.iter().map(|&w| draw(w)).collect();
    let relay_bs = draw(cfg.omega_relay_bs);
    ChannelRealization { ue_relay, ue_bs, relay_bs }
}

/// Uplink SNRs on `S^UL = {U_mR, U_mB, RB}`.
#[derive(Clone, Debug, PartialEq)]
pub struct UplinkSnr {
    pub ue_relay: PerUe,
    pub ue_bs: PerUe,
    pub relay_bs: f64,
}

/// Downlink SNRs on `S^DL = {RU_m, BU_m, BR}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DownlinkSnr {
    pub relay_ue: PerUe,
    pub bs_ue: PerUe,
    pub bs_relay: f64,
}

/// Directed-link SNRs `P_tx |h|^2 / N0` for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrView {
    pub ul: UplinkSnr,
    pub dl: DownlinkSnr,
}

impl SnrView {
    pub fn num_ues(&self) -> usize {
        self.ul.ue_bs.len()
    }
}

pub fn snr_view(real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<SnrView> {
    let m = cfg.num_ues;
    if real.ue_relay.len() < m {
        return Err(Error::MissingLink(Link::UeRelay(real.ue_relay.len()).to_string()));
    }
    if real.ue_bs.len() < m {
        return Err(Error::MissingLink(Link::UeBs(real.ue_bs.len()).to_string()));
    }
    let n0 = cfg.noise_power;
    let ul = UplinkSnr {
        ue_relay: (0..m).map(|i| cfg.power_ue[i] * real.ue_relay[i] / n0).collect(),
        ue_bs: (0..m).map(|i| cfg.power_ue[i] * real.ue_bs[i] / n0).collect(),
        relay_bs: cfg.power_rs * real.relay_bs / n0,
    };
    let dl = DownlinkSnr {
        relay_ue: (0..m).map(|i| cfg.power_rs * real.ue_relay[i] / n0).collect(),
        bs_ue: (0..m).map(|i| cfg.power_bs * real.ue_bs[i] / n0).collect(),
        bs_relay: cfg.power_bs * real.relay_bs / n0,
    };
    Ok(SnrView { ul, dl })
}

/// Relay queue occupancies in bits/symbol. `cap` bounds each queue separately.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferPair {
    pub q_ul: f64,
    pub q_dl: f64,
    pub cap: Option<f64>,
}

impl BufferPair {
    pub fn empty(cap: Option<f64>) -> Self {
        BufferPair { q_ul: 0.0, q_dl: 0.0, cap }
    }

    pub fn headroom_ul(&self) -> f64 {
        self.cap.map_or(f64::INFINITY, |c| c - self.q_ul)
    }

    pub fn headroom_dl(&self) -> f64 {
        self.cap.map_or(f64::INFINITY, |c| c - self.q_dl)
    }

    pub fn is_finite(&self) -> bool {
        self.cap.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_cfg() -> ScenarioConfig {
        let db = ScenarioDb::two_ue(0.0, 0.0, 0.0, [0.0; 5]);
        ScenarioConfig::from_db(&db).unwrap()
    }

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((db_to_linear(-3.0) - 0.501_187_233_627_272_2).abs() < 1e-12);
    }

    #[test]
    fn capacity_values() {
        assert_eq!(capacity(0.0).unwrap(), 0.0);
        assert!((capacity(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((capacity(3.0).unwrap() - 2.0).abs() < 1e-15);
        for k in 0..40 {
            let x = 2f64.powi(k) - 1.0;
            assert!((capacity(x).unwrap() - k as f64).abs() < 1e-12, "k={k}");
        }
        assert!(matches!(capacity(-0.1), Err(Error::NegativeSnr(_))));
    }

    #[test]
    fn link_ids_round_trip() {
        for link in links(3) {
            assert_eq!(link.to_string().parse::<Link>().unwrap(), link);
        }
        assert_eq!("U1R".parse::<Link>().unwrap(), Link::UeRelay(0));
        assert_eq!("U12B".parse::<Link>().unwrap(), Link::UeBs(11));
        assert!("U0R".parse::<Link>().is_err());
        assert!("X1R".parse::<Link>().is_err());
        assert!("U1".parse::<Link>().is_err());
    }

    #[test]
    fn power_ordering_rejected() {
        let mut db = ScenarioDb::two_ue(20.0, 50.0, 46.0, [-6.0, -8.0, -40.0, -41.0, 0.0]);
        assert!(matches!(ScenarioConfig::from_db(&db), Err(Error::PowerOrdering { .. })));
        db.power_rs_dbm = 20.0;
        db.power_ue_dbm[1] = 25.0;
        assert!(matches!(ScenarioConfig::from_db(&db), Err(Error::PowerOrdering { ue: 2, .. })));
    }

    #[test]
    fn missing_link_rejected() {
        let mut db = ScenarioDb::two_ue(20.0, 20.0, 46.0, [0.0; 5]);
        db.omega_db.remove(&Link::UeBs(1));
        match ScenarioConfig::from_db(&db) {
            Err(Error::MissingLink(id)) => assert_eq!(id, "U2B"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = unit_cfg();
        let a = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let b = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_means_follow_omega() {
        // Law of large numbers: 1e6 exponential draws, relative std-err 1e-3.
        for (omega_db, expected) in [(0.0, 1.0), (-10.0, 0.1)] {
            let mut db = ScenarioDb::two_ue(0.0, 0.0, 0.0, [0.0; 5]);
            db.omega_db.insert(Link::RelayBs, omega_db);
            let cfg = ScenarioConfig::from_db(&db).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(2024);
            let n = 1_000_000;
            let mean = (0..n).map(|_| sample_channel(&cfg, &mut rng).relay_bs).sum::<f64>() / n as f64;
            assert!((mean / expected - 1.0).abs() < 0.01, "mean {mean} vs {expected}");
        }
    }

    #[test]
    fn snr_examples() {
        let mut cfg = unit_cfg();
        let real = ChannelRealization {
            ue_relay: PerUe::from_slice(&[0.5, 0.25]),
            ue_bs: PerUe::from_slice(&[2.0, 1.0]),
            relay_bs: 1.0,
        };
        cfg.power_rs = 4.0;
        cfg.power_bs = 8.0;
        let v = snr_view(&real, &cfg).unwrap();
        assert_eq!(v.ul.ue_bs[0], 2.0);
        assert_eq!(v.ul.relay_bs, 4.0);
        assert_eq!(v.dl.bs_relay, 8.0);
        assert_eq!(v.dl.relay_ue[0], 2.0);

        let zero = ChannelRealization {
            ue_relay: PerUe::from_slice(&[0.0, 0.0]),
            ue_bs: PerUe::from_slice(&[0.0, 0.0]),
            relay_bs: 0.0,
        };
        let z = snr_view(&zero, &cfg).unwrap();
        assert!(z.ul.ue_relay.iter().chain(&z.ul.ue_bs).chain(&z.dl.relay_ue).chain(&z.dl.bs_ue).all(|&g| g == 0.0));
        assert_eq!(z.ul.relay_bs + z.dl.bs_relay, 0.0);

        let short = ChannelRealization { ue_relay: PerUe::from_slice(&[1.0]), ..real };
        assert!(matches!(snr_view(&short, &cfg), Err(Error::MissingLink(id)) if id == "U2R"));
    }

    #[test]
    fn reciprocity_shares_gain() {
        let db = ScenarioDb::two_ue(20.0, 30.0, 46.0, [-6.0, -8.0, -40.0, -41.0, 0.0]);
        let cfg = ScenarioConfig::from_db(&db).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let v = snr_view(&sample_channel(&cfg, &mut rng), &cfg).unwrap();
            for m in 0..2 {
                let lhs = v.ul.ue_relay[m] * cfg.power_rs;
                let rhs = v.dl.relay_ue[m] * cfg.power_ue[m];
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn defaults_apply() {
        let text = r#"
            num_ues = 1
            power_ue_dbm = [20.0]
            power_rs_dbm = 20.0
            power_bs_dbm = 46.0
            [omega_db]
            U1R = -6.0
            U1B = -40.0
            RB = 0.0
        "#;
        let db: ScenarioDb = toml::from_str(text).unwrap();
        assert_eq!(db.noise_power, 1.0);
        assert_eq!(db.frames, 100_000);
        ScenarioConfig::from_db(&db).unwrap();
    }
}
