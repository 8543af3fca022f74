//! Non-orthogonal decoupled UL/DL buffer-aided relaying.
//!
//! One transmission type occupies the whole frame:
//!
//! * `T1(m, l)`: `U_m` feeds the relay while the BS serves `U_l` directly; the
//!   relay cancels the BS signal first, so the BS rate is capped by
//!   `C(γ_BR / (1 + γ_UmR))`.
//! * `T2(m, l)`: `U_m` sends to the BS while the relay serves `U_l` from its DL
//!   queue; the BS cancels the relay signal first, capping the relay rate by
//!   `C(γ_RB / (1 + γ_UmB))`.
//! * `T3`: relay drains the UL queue to the BS.
//! * `T4`: BS feeds the DL queue at the relay.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cap, BufferPair, SnrView};
use crate::outcome::{accept, FrameOutcome, Mode};

/// Rates of one ordered UE pair `(m, l)`, `m != l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairRates {
    pub m: usize,
    pub l: usize,
    /// Rate of `U_m`'s uplink (to the relay in T1, to the BS in T2).
    pub ul: f64,
    /// Rate of `U_l`'s downlink (from the BS in T1, from the relay in T2).
    pub dl: f64,
}

/// Full-frame candidate rates. `t1`/`t2` hold the off-diagonal pairs in
/// row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct NodbaRateTable {
    pub num_ues: usize,
    pub t1: Vec<PairRates>,
    pub t2: Vec<PairRates>,
    pub t3: f64,
    pub t4: f64,
}

/// Row-major position of the off-diagonal pair `(m, l)`.
pub fn pair_index(num_ues: usize, m: usize, l: usize) -> usize {
    debug_assert!(m != l && m < num_ues && l < num_ues);
    m * (num_ues - 1) + if l > m { l - 1 } else { l }
}

/// Ordered off-diagonal pairs `(m, l)` in row-major order.
pub fn pairs(num_ues: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..num_ues).flat_map(move |m| (0..num_ues).filter(move |&l| l != m).map(move |l| (m, l)))
}

/// Candidate rates. With `buf` the relay outputs are also capped by the queue
/// contents; without it the buffers are ignored.
pub fn nodba_rates(snr: &SnrView, buf: Option<&BufferPair>) -> Result<NodbaRateTable> {
    let num_ues = snr.num_ues();
    if num_ues < 2 {
        return Err(Error::TooFewUes { protocol: "nodba", num_ues });
    }
    let (q_ul, q_dl) = buf.map_or((f64::INFINITY, f64::INFINITY), |b| (b.q_ul, b.q_dl));
    let ul = &snr.ul;
    let dl = &snr.dl;

    let t1 = pairs(num_ues)
        .map(|(m, l)| {
            let sic = cap(dl.bs_relay / (1.0 + ul.ue_relay[m]));
            PairRates { m, l, ul: cap(ul.ue_relay[m]), dl: cap(dl.bs_ue[l]).min(sic) }
        })
        .collect();
    let t2 = pairs(num_ues)
        .map(|(m, l)| {
            let sic = cap(ul.relay_bs / (1.0 + ul.ue_bs[m]));
            PairRates { m, l, ul: cap(ul.ue_bs[m]), dl: q_dl.min(cap(dl.relay_ue[l])).min(sic) }
        })
        .collect();

    Ok(NodbaRateTable { num_ues, t1, t2, t3: q_ul.min(cap(ul.relay_bs)), t4: cap(dl.bs_relay) })
}

impl NodbaRateTable {
    pub fn t1_at(&self, m: usize, l: usize) -> &PairRates {
        &self.t1[pair_index(self.num_ues, m, l)]
    }

    pub fn t2_at(&self, m: usize, l: usize) -> &PairRates {
        &self.t2[pair_index(self.num_ues, m, l)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<PairRates>| v.iter().map(|p| PairRates { ul: p.ul * c, dl: p.dl * c, ..*p }).collect();
        NodbaRateTable { num_ues: self.num_ues, t1: s(&self.t1), t2: s(&self.t2), t3: self.t3 * c, t4: self.t4 * c }
    }
}

/// Lagrangian selection scores, aligned with the rate table's pair order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub num_ues: usize,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub t3: f64,
    pub t4: f64,
}

impl ScoreTable {
    pub fn t1_at(&self, m: usize, l: usize) -> f64 {
        self.t1[pair_index(self.num_ues, m, l)]
    }

    pub fn t2_at(&self, m: usize, l: usize) -> f64 {
        self.t2[pair_index(self.num_ues, m, l)]
    }
}

pub fn selection_scores(rates: &NodbaRateTable, lambda3: f64, lambda4: f64) -> ScoreTable {
    ScoreTable {
        num_ues: rates.num_ues,
        t1: rates.t1.iter().map(|p| p.dl - lambda3 * p.ul).collect(),
        t2: rates.t2.iter().map(|p| p.ul + (1.0 + lambda4) * p.dl).collect(),
        t3: (1.0 + lambda3) * rates.t3,
        t4: -lambda4 * rates.t4,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodbaSelection {
    T1 { m: usize, l: usize },
    T2 { m: usize, l: usize },
    T3,
    T4,
}

impl NodbaSelection {
    pub fn mode(&self) -> Mode {
        match self {
            NodbaSelection::T1 { .. } => Mode::T1,
            NodbaSelection::T2 { .. } => Mode::T2,
            NodbaSelection::T3 => Mode::T3,
            NodbaSelection::T4 => Mode::T4,
        }
    }
}

/// Region of the `(λ3, λ4)` plane, each with its own candidate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodbaCase {
    /// `λ3 > -1, λ4 < 0`: every type competes.
    I,
    /// `λ3 > -1, λ4 >= 0`: only T1 and T3.
    II,
    /// `λ3 <= -1, λ4 < 0`: only T2 and T4.
    III,
}

impl fmt::Display for NodbaCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodbaCase::I => "I",
            NodbaCase::II => "II",
            NodbaCase::III => "III",
        };
        f.write_str(s)
    }
}

impl NodbaCase {
    pub fn classify(lambda3: f64, lambda4: f64) -> Result<Self> {
        match (lambda3 > -1.0, lambda4 < 0.0) {
            (true, true) => Ok(NodbaCase::I),
            (true, false) => Ok(NodbaCase::II),
            (false, true) => Ok(NodbaCase::III),
            (false, false) => Err(Error::NoDecisionCase { lambda3, lambda4 }),
        }
    }

    fn allows(self, mode: Mode) -> bool {
        match self {
            NodbaCase::I => true,
            NodbaCase::II => matches!(mode, Mode::T1 | Mode::T3),
            NodbaCase::III => matches!(mode, Mode::T2 | Mode::T4),
        }
    }
}

/// Argmax over the case's candidates in order T1 (row-major), T2, T3, T4;
/// the first maximum wins. `None` when `allow` rejects everything.
fn argmax(scores: &ScoreTable, case: NodbaCase, allow: impl Fn(&NodbaSelection) -> bool) -> Option<NodbaSelection> {
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    let mut consider = |cand: NodbaSelection, score: f64| {
        if case.allows(cand.mode()) && (best.is_none() || score > best_score) && allow(&cand) {
            best = Some(cand);
            best_score = score;
        }
    };
    for ((m, l), &s) in pairs(scores.num_ues).zip(&scores.t1) {
        consider(NodbaSelection::T1 { m, l }, s);
    }
    for ((m, l), &s) in pairs(scores.num_ues).zip(&scores.t2) {
        consider(NodbaSelection::T2 { m, l }, s);
    }
    consider(NodbaSelection::T3, scores.t3);
    consider(NodbaSelection::T4, scores.t4);
    best
}

pub fn nodba_decide(scores: &ScoreTable, lambda3: f64, lambda4: f64) -> Result<NodbaSelection> {
    let case = NodbaCase::classify(lambda3, lambda4)?;
    Ok(argmax(scores, case, |_| true).expect("every case has candidates"))
}

/// Decision with the finite-buffer guard (no feed without room for the whole
/// transfer, no relay output from an empty queue). `None` means the frame
/// stays idle. Without a cap this is [`nodba_decide`].
pub fn nodba_decide_guarded(
    rates: &NodbaRateTable,
    scores: &ScoreTable,
    lambda3: f64,
    lambda4: f64,
    buf: &BufferPair,
) -> Result<Option<NodbaSelection>> {
    let case = NodbaCase::classify(lambda3, lambda4)?;
    if !buf.is_finite() {
        return Ok(argmax(scores, case, |_| true));
    }
    let (room_ul, room_dl) = (buf.headroom_ul(), buf.headroom_dl());
    Ok(argmax(scores, case, |sel| match *sel {
        NodbaSelection::T1 { m, l } => rates.t1_at(m, l).ul <= room_ul,
        NodbaSelection::T2 { .. } => buf.q_dl > 0.0,
        NodbaSelection::T3 => buf.q_ul > 0.0,
        NodbaSelection::T4 => rates.t4 <= room_dl,
    }))
}

pub fn nodba_apply_frame(sel: Option<&NodbaSelection>, rates: &NodbaRateTable, buf: &BufferPair) -> FrameOutcome {
    let Some(sel) = sel else {
        return FrameOutcome::idle(Mode::Idle, *buf);
    };
    let mut out = FrameOutcome::idle(sel.mode(), *buf);
    let mut after = *buf;
    match *sel {
        NodbaSelection::T1 { m, l } => {
            let p = rates.t1_at(m, l);
            out.ul_fed = accept(p.ul, buf.headroom_ul());
            after.q_ul += out.ul_fed;
            out.dl_counted = p.dl;
            out.dl_delivered = p.dl;
        }
        NodbaSelection::T2 { m, l } => {
            let p = rates.t2_at(m, l);
            out.dl_drained = buf.q_dl.min(p.dl);
            after.q_dl -= out.dl_drained;
            out.ul_counted = p.ul;
            out.ul_delivered = p.ul;
            out.dl_counted = out.dl_drained;
            out.dl_delivered = out.dl_drained;
        }
        NodbaSelection::T3 => {
            out.ul_drained = buf.q_ul.min(rates.t3);
            after.q_ul -= out.ul_drained;
            out.ul_counted = out.ul_drained;
            out.ul_delivered = out.ul_drained;
        }
        NodbaSelection::T4 => {
            out.dl_fed = accept(rates.t4, buf.headroom_dl());
            after.q_dl += out.dl_fed;
        }
    }
    out.buffer_after = after;
    out
}
