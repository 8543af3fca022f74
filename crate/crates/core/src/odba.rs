//! Orthogonal decoupled UL/DL buffer-aided relaying.
//!
//! Each frame has an UL half-slot and a DL half-slot, and each slot activates
//! exactly one link. The per-slot rule is the Lagrangian threshold policy:
//! with the dual variable `λ` strictly inside `(-1, 0)` the slot picks the
//! largest of
//!
//! * `R_direct[j]` for every UE,
//! * `-λ · R_ue_side[j]` (UE-to-relay in UL, relay-to-UE in DL),
//! * `(1 + λ) · R_relay_bs` (relay-to-BS in UL, BS-to-relay in DL);
//!
//! any other `λ` disables the relay and the slot serves the best direct link.

use serde::{Deserialize, Serialize};

use crate::model::{cap, BufferPair, PerUe, SnrView};
use crate::outcome::{accept, FrameOutcome, Mode};

/// Candidate half-slot rates (bits/channel use), buffer state not applied.
#[derive(Clone, Debug, PartialEq)]
pub struct OdbaRateTable {
    pub ul_direct: PerUe,
    pub ul_to_relay: PerUe,
    pub ul_relay_out: f64,
    pub dl_direct: PerUe,
    pub dl_from_relay: PerUe,
    pub dl_relay_in: f64,
}

pub fn odba_rates(snr: &SnrView) -> OdbaRateTable {
    let half = |g: &f64| 0.5 * cap(*g);
    OdbaRateTable {
        ul_direct: snr.ul.ue_bs.iter().map(half).collect(),
        ul_to_relay: snr.ul.ue_relay.iter().map(half).collect(),
        ul_relay_out: half(&snr.ul.relay_bs),
        dl_direct: snr.dl.bs_ue.iter().map(half).collect(),
        dl_from_relay: snr.dl.relay_ue.iter().map(half).collect(),
        dl_relay_in: half(&snr.dl.bs_relay),
    }
}

impl OdbaRateTable {
    pub fn num_ues(&self) -> usize {
        self.ul_direct.len()
    }

    /// Relay outputs capped by what the queues hold.
    pub fn limited_by(&self, buf: &BufferPair) -> Self {
        OdbaRateTable {
            ul_relay_out: self.ul_relay_out.min(buf.q_ul),
            dl_from_relay: self.dl_from_relay.iter().map(|r| r.min(buf.q_dl)).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &PerUe| v.iter().map(|x| x * c).collect();
        OdbaRateTable {
            ul_direct: s(&self.ul_direct),
            ul_to_relay: s(&self.ul_to_relay),
            ul_relay_out: self.ul_relay_out * c,
            dl_direct: s(&self.dl_direct),
            dl_from_relay: s(&self.dl_from_relay),
            dl_relay_in: self.dl_relay_in * c,
        }
    }
}

/// UL slot activation (UE indices 0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UlChoice {
    Direct(usize),
    ToRelay(usize),
    RelayOut,
}

/// DL slot activation (UE indices 0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DlChoice {
    Direct(usize),
    FromRelay(usize),
    RelayIn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OdbaSelection {
    pub ul: UlChoice,
    pub dl: DlChoice,
}

/// How a frame is classified as coupled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    /// DL is the exact mirror of UL for the same node pair.
    #[default]
    Mirror,
    /// Both slots direct, or both slots use the relay.
    SamePath,
}

impl OdbaSelection {
    pub fn is_coupled(&self, rule: CouplingRule) -> bool {
        match rule {
            CouplingRule::Mirror => matches!(
                (self.ul, self.dl),
                (UlChoice::Direct(a), DlChoice::Direct(b)) | (UlChoice::ToRelay(a), DlChoice::FromRelay(b)) if a == b
            ) || matches!((self.ul, self.dl), (UlChoice::RelayOut, DlChoice::RelayIn)),
            CouplingRule::SamePath => {
                matches!(self.ul, UlChoice::Direct(_)) == matches!(self.dl, DlChoice::Direct(_))
            }
        }
    }

    pub fn mode(&self) -> Mode {
        let ul = match self.ul {
            UlChoice::Direct(_) => 0,
            UlChoice::ToRelay(_) => 1,
            UlChoice::RelayOut => 2,
        };
        let dl = match self.dl {
            DlChoice::Direct(_) => 0,
            DlChoice::FromRelay(_) => 1,
            DlChoice::RelayIn => 2,
        };
        Mode::odba(ul, dl)
    }
}

/// Whether the dual variable puts a slot in its relay-enabled case.
pub fn relay_enabled(lambda: f64) -> bool {
    -1.0 < lambda && lambda < 0.0
}

/// Slot-agnostic candidate: direct link, UE-side relay link, relay-BS link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Direct(usize),
    UeSide(usize),
    RelayBs,
}

/// Argmax over the slot's candidates in tie-break order
/// `Direct(0..M) < UeSide(0..M) < RelayBs`; the first maximum wins.
/// `allow` filters out candidates the buffers cannot serve.
fn decide_slot(
    direct: &[f64],
    ue_side: &[f64],
    relay_bs: f64,
    lambda: f64,
    allow: impl Fn(Slot) -> bool,
) -> Slot {
    let mut best = Slot::Direct(0);
    let mut best_score = f64::NEG_INFINITY;
    let mut consider = |cand: Slot, score: f64| {
        if score > best_score && allow(cand) {
            best = cand;
            best_score = score;
        }
    };
    for (j, &r) in direct.iter().enumerate() {
        consider(Slot::Direct(j), r);
    }
    if relay_enabled(lambda) {
        for (j, &r) in ue_side.iter().enumerate() {
            consider(Slot::UeSide(j), -lambda * r);
        }
        consider(Slot::RelayBs, (1.0 + lambda) * relay_bs);
    }
    best
}

fn to_ul(s: Slot) -> UlChoice {
    match s {
        Slot::Direct(j) => UlChoice::Direct(j),
        Slot::UeSide(j) => UlChoice::ToRelay(j),
        Slot::RelayBs => UlChoice::RelayOut,
    }
}

fn to_dl(s: Slot) -> DlChoice {
    match s {
        Slot::Direct(j) => DlChoice::Direct(j),
        Slot::UeSide(j) => DlChoice::FromRelay(j),
        Slot::RelayBs => DlChoice::RelayIn,
    }
}

pub fn odba_decide_ul(rates: &OdbaRateTable, lambda1: f64) -> UlChoice {
    to_ul(decide_slot(&rates.ul_direct, &rates.ul_to_relay, rates.ul_relay_out, lambda1, |_| true))
}

pub fn odba_decide_dl(rates: &OdbaRateTable, lambda2: f64) -> DlChoice {
    to_dl(decide_slot(&rates.dl_direct, &rates.dl_from_relay, rates.dl_relay_in, lambda2, |_| true))
}

/// UL decision with the finite-buffer guard: no feed without room for the
/// whole transfer, no output from an empty queue. Without a cap this is
/// [`odba_decide_ul`].
pub fn odba_decide_ul_guarded(rates: &OdbaRateTable, lambda1: f64, buf: &BufferPair) -> UlChoice {
    if !buf.is_finite() {
        return odba_decide_ul(rates, lambda1);
    }
    let room = buf.headroom_ul();
    let allow = |s: Slot| match s {
        Slot::Direct(_) => true,
        Slot::UeSide(j) => rates.ul_to_relay[j] <= room,
        Slot::RelayBs => buf.q_ul > 0.0,
    };
    to_ul(decide_slot(&rates.ul_direct, &rates.ul_to_relay, rates.ul_relay_out, lambda1, allow))
}

pub fn odba_decide_dl_guarded(rates: &OdbaRateTable, lambda2: f64, buf: &BufferPair) -> DlChoice {
    if !buf.is_finite() {
        return odba_decide_dl(rates, lambda2);
    }
    let room = buf.headroom_dl();
    let allow = |s: Slot| match s {
        Slot::Direct(_) => true,
        Slot::UeSide(_) => buf.q_dl > 0.0,
        Slot::RelayBs => rates.dl_relay_in <= room,
    };
    to_dl(decide_slot(&rates.dl_direct, &rates.dl_from_relay, rates.dl_relay_in, lambda2, allow))
}

pub fn odba_decide(rates: &OdbaRateTable, lambda1: f64, lambda2: f64, buf: &BufferPair) -> OdbaSelection {
    OdbaSelection {
        ul: odba_decide_ul_guarded(rates, lambda1, buf),
        dl: odba_decide_dl_guarded(rates, lambda2, buf),
    }
}

/// Applies the selected UL/DL transfers. Relay outputs move
/// `min(queue, candidate)`; feeds are clamped to the remaining capacity.
pub fn odba_apply_frame(
    sel: &OdbaSelection,
    rates: &OdbaRateTable,
    buf: &BufferPair,
    rule: CouplingRule,
) -> FrameOutcome {
    let mut out = FrameOutcome::idle(sel.mode(), *buf);
    let mut after = *buf;

    match sel.ul {
        UlChoice::Direct(m) => {
            out.ul_counted = rates.ul_direct[m];
            out.ul_delivered = rates.ul_direct[m];
        }
        UlChoice::ToRelay(m) => {
            out.ul_fed = accept(rates.ul_to_relay[m], buf.headroom_ul());
            after.q_ul += out.ul_fed;
        }
        UlChoice::RelayOut => {
            out.ul_drained = buf.q_ul.min(rates.ul_relay_out);
            after.q_ul -= out.ul_drained;
            out.ul_counted = out.ul_drained;
            out.ul_delivered = out.ul_drained;
        }
    }

    match sel.dl {
        DlChoice::Direct(m) => {
            out.dl_counted = rates.dl_direct[m];
            out.dl_delivered = rates.dl_direct[m];
        }
        DlChoice::FromRelay(m) => {
            out.dl_drained = buf.q_dl.min(rates.dl_from_relay[m]);
            after.q_dl -= out.dl_drained;
            out.dl_delivered = out.dl_drained;
        }
        DlChoice::RelayIn => {
            out.dl_fed = accept(rates.dl_relay_in, buf.headroom_dl());
            after.q_dl += out.dl_fed;
            out.dl_counted = out.dl_fed;
        }
    }

    out.buffer_after = after;
    out.coupled = Some(sel.is_coupled(rule));
    out
}
