//! Stochastic dual search for the threshold multipliers.
//!
//! Each iteration draws a fresh batch of fading frames, applies the current
//! threshold policy with the buffers ignored, and estimates the drift of
//! each relay queue as the sample mean of `departure - arrival`. The
//! multiplier then moves by `δ[t] · drift` in the direction that pushes the
//! queue back toward equilibrium:
//!
//! | multiplier | raises arrivals when it | update |
//! |------------|-------------------------|--------|
//! | `λ1` (ODBA UL)  | decreases | `λ1 -= δ·Δ1` |
//! | `λ2` (ODBA DL)  | increases | `λ2 += δ·Δ2` |
//! | `λ3` (NODBA UL) | decreases | `λ3 -= δ·Δ3` |
//! | `λ4` (NODBA DL) | decreases | `λ4 -= δ·Δ4` |
//!
//! The ODBA DL sign differs because its sum rate counts the BS-to-relay feed,
//! which puts the `(1 + λ2)` weight on the arrival side.
//!
//! A coordinate that starts where its relay path is enabled is kept there,
//! `RELAY_MARGIN` away from the boundary. Past the boundary the relay path is
//! never chosen, the drift is identically zero and the search would freeze;
//! near it the relay feed scores almost nothing, so an interior equilibrium
//! exists whenever the relay can drain at all and a crossing is only ever a
//! step overshoot.
//!
//! The benchmark's criterion consults the queues, so its drift is measured on
//! a buffered rollout whose queues persist across iterations.

use serde::{Deserialize, Serialize};

use crate::benchmark::{benchmark_apply_frame, benchmark_decide};
use crate::error::Result;
use crate::model::{sample_channel, snr_view, BufferPair, ScenarioConfig};
use crate::nodba::{nodba_decide, nodba_rates, selection_scores, NodbaCase, NodbaSelection};
use crate::odba::{odba_decide_dl, odba_decide_ul, odba_rates, relay_enabled, DlChoice, UlChoice};
use crate::outcome::Protocol;
use crate::par::Execution;
use crate::stream::{chunks, substream, Purpose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Starting multipliers `[UL, DL]` (`[λ1, λ2]`, `[λ3, λ4]` or `[μ_ul, μ_dl]`).
    pub lambda_init: [f64; 2],
    pub step0: f64,
    pub decay: f64,
    pub batch_frames: usize,
    pub max_iters: usize,
    /// Threshold on the per-iteration multiplier change `|δ[t]·Δ[t]|`.
    pub tol: f64,
    /// Consecutive iterations under `tol` needed to stop.
    pub patience: usize,
    /// Multipliers reported are the mean of the last `average_tail` iterates
    /// (1 = last iterate).
    pub average_tail: usize,
    /// Overrides the scenario seed for the search draws.
    pub seed: Option<u64>,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            lambda_init: [-0.5, -0.5],
            step0: 0.05,
            decay: 0.02,
            batch_frames: 10_000,
            max_iters: 300,
            tol: 1e-3,
            patience: 5,
            average_tail: 1,
            seed: None,
            execution: Execution::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(crate::Error::Invalid(msg));
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad(format!("search.step0 must be positive, got {}", self.step0));
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return bad(format!("search.decay must be non-negative, got {}", self.decay));
        }
        if self.batch_frames < 1000 {
            return bad(format!("search.batch_frames must be at least 1000, got {}", self.batch_frames));
        }
        if self.max_iters == 0 || self.patience == 0 || self.average_tail == 0 {
            return bad("search.max_iters, patience and average_tail must be positive".into());
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("search.tol must be positive, got {}", self.tol));
        }
        if self.lambda_init.iter().any(|l| !l.is_finite()) {
            return bad("search.lambda_init must be finite".into());
        }
        Ok(())
    }
}

/// `δ[t] = step0 / (1 + decay·t)`.
pub fn step_schedule(t: usize, sc: &SearchConfig) -> f64 {
    sc.step0 / (1.0 + sc.decay * t as f64)
}

/// Sample-mean drift (`departure - arrival`) of the UL and DL relay queues
/// with standard errors over one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftEstimate {
    pub drift: [f64; 2],
    pub std_err: [f64; 2],
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    sum: [f64; 2],
    sum_sq: [f64; 2],
}

impl Moments {
    fn push(&mut self, d: [f64; 2]) {
        self.n += 1.0;
        for (k, x) in d.into_iter().enumerate() {
            self.sum[k] += x;
            self.sum_sq[k] += x * x;
        }
    }

    fn merge(mut self, o: &Moments) -> Moments {
        self.n += o.n;
        for k in 0..2 {
            self.sum[k] += o.sum[k];
            self.sum_sq[k] += o.sum_sq[k];
        }
        self
    }

    fn estimate(&self) -> DriftEstimate {
        let mut drift = [0.0; 2];
        let mut std_err = [0.0; 2];
        for k in 0..2 {
            let mean = self.sum[k] / self.n;
            let var = (self.sum_sq[k] / self.n - mean * mean).max(0.0) * self.n / (self.n - 1.0).max(1.0);
            drift[k] = mean;
            std_err[k] = (var / self.n).sqrt();
        }
        DriftEstimate { drift, std_err }
    }
}

/// Runs `per_frame` over `frames` fresh channel draws split into counter-keyed
/// chunks; chunk results are merged in index order.
fn batch_moments<F>(
    cfg: &ScenarioConfig,
    frames: usize,
    seed: u64,
    purpose: Purpose,
    iteration: u64,
    exec: Execution,
    per_frame: F,
) -> Moments
where
    F: Fn(&crate::model::SnrView) -> [f64; 2] + Sync + Send,
{
    let spans: Vec<(u64, usize)> = chunks(frames).collect();
    let parts = exec.map(spans.len(), |i| {
        let (chunk, n) = spans[i];
        let mut rng = substream(seed, purpose, iteration, chunk);
        let mut acc = Moments::default();
        for _ in 0..n {
            let real = sample_channel(cfg, &mut rng);
            let snr = snr_view(&real, cfg).expect("realization drawn from the same scenario");
            acc.push(per_frame(&snr));
        }
        acc
    });
    parts.iter().fold(Moments::default(), |a, b| a.merge(b))
}

/// ODBA drift `(Δλ1, Δλ2)` at fixed multipliers, buffers ignored.
pub fn estimate_drift_odba(
    cfg: &ScenarioConfig,
    lambda1: f64,
    lambda2: f64,
    frames: usize,
    seed: u64,
    iteration: u64,
    exec: Execution,
) -> DriftEstimate {
    batch_moments(cfg, frames, seed, Purpose::SearchOdba, iteration, exec, |snr| {
        let rates = odba_rates(snr);
        let d_ul = match odba_decide_ul(&rates, lambda1) {
            UlChoice::RelayOut => rates.ul_relay_out,
            UlChoice::ToRelay(m) => -rates.ul_to_relay[m],
            UlChoice::Direct(_) => 0.0,
        };
        let d_dl = match odba_decide_dl(&rates, lambda2) {
            DlChoice::FromRelay(m) => rates.dl_from_relay[m],
            DlChoice::RelayIn => -rates.dl_relay_in,
            DlChoice::Direct(_) => 0.0,
        };
        [d_ul, d_dl]
    })
    .estimate()
}

/// NODBA drift `(Δλ3, Δλ4)` at fixed multipliers, buffers ignored.
pub fn estimate_drift_nodba(
    cfg: &ScenarioConfig,
    lambda3: f64,
    lambda4: f64,
    frames: usize,
    seed: u64,
    iteration: u64,
    exec: Execution,
) -> Result<DriftEstimate> {
    NodbaCase::classify(lambda3, lambda4)?;
    if cfg.num_ues < 2 {
        return Err(crate::Error::TooFewUes { protocol: "nodba", num_ues: cfg.num_ues });
    }
    Ok(batch_moments(cfg, frames, seed, Purpose::SearchNodba, iteration, exec, |snr| {
        let rates = nodba_rates(snr, None).expect("checked num_ues");
        let scores = selection_scores(&rates, lambda3, lambda4);
        match nodba_decide(&scores, lambda3, lambda4).expect("checked case") {
            NodbaSelection::T1 { m, l } => [-rates.t1_at(m, l).ul, 0.0],
            NodbaSelection::T2 { m, l } => [0.0, rates.t2_at(m, l).dl],
            NodbaSelection::T3 => [rates.t3, 0.0],
            NodbaSelection::T4 => [0.0, -rates.t4],
        }
    })
    .estimate())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub protocol: Protocol,
    /// Converged multipliers `[UL, DL]`.
    pub lambda_star: [f64; 2],
    pub iterations: usize,
    /// Multiplier iterate after each update.
    pub lambda_trace: Vec<[f64; 2]>,
    /// Drift `departure - arrival` measured at each iteration.
    pub drift_trace: Vec<[f64; 2]>,
    pub case_label: String,
    pub converged: bool,
    /// Updates pulled back into the starting relay-enabled range or out of
    /// the region where no decision case applies.
    pub clamp_events: usize,
}

/// Case label of the converged ODBA multipliers, e.g. `UL:I DL:II`.
pub fn odba_case_label(lambda: [f64; 2]) -> String {
    let c = |l: f64| if relay_enabled(l) { "I" } else { "II" };
    format!("UL:{} DL:{}", c(lambda[0]), c(lambda[1]))
}

struct Iterate {
    lambda: [f64; 2],
    lambda_trace: Vec<[f64; 2]>,
    drift_trace: Vec<[f64; 2]>,
    quiet: usize,
    converged: bool,
}

impl Iterate {
    fn new(sc: &SearchConfig) -> Self {
        Iterate {
            lambda: sc.lambda_init,
            lambda_trace: Vec::new(),
            drift_trace: Vec::new(),
            quiet: 0,
            converged: false,
        }
    }

    /// Records one update and returns true when the stopping rule fires.
    fn record(&mut self, t: usize, sc: &SearchConfig, drift: [f64; 2], next: [f64; 2]) -> bool {
        let change = (next[0] - self.lambda[0]).abs().max((next[1] - self.lambda[1]).abs());
        self.lambda = next;
        self.lambda_trace.push(next);
        self.drift_trace.push(drift);
        self.quiet = if change <= sc.tol { self.quiet + 1 } else { 0 };
        // An infinite tolerance accepts the first iterate outright.
        let needed = if sc.tol.is_infinite() { 1 } else { sc.patience };
        self.converged = self.quiet >= needed;
        self.converged || t + 1 >= sc.max_iters
    }

    fn finish(self, protocol: Protocol, sc: &SearchConfig, clamp_events: usize, label: impl Fn([f64; 2]) -> String) -> SearchResult {
        let k = sc.average_tail.min(self.lambda_trace.len()).max(1);
        let tail = &self.lambda_trace[self.lambda_trace.len() - k..];
        let mut star = [0.0; 2];
        for l in tail {
            star[0] += l[0];
            star[1] += l[1];
        }
        star = [star[0] / k as f64, star[1] / k as f64];
        SearchResult {
            protocol,
            lambda_star: star,
            iterations: self.lambda_trace.len(),
            case_label: label(star),
            lambda_trace: self.lambda_trace,
            drift_trace: self.drift_trace,
            converged: self.converged,
            clamp_events,
        }
    }
}

/// Distance kept from the edge of the relay-enabled range.
pub const RELAY_MARGIN: f64 = 1e-3;

/// Sign `s` in `λ -= s·δ·Δ` for the UL and DL multiplier of `protocol`. A
/// backlog `q` built from the same drift moves the multiplier by `+s·q`.
pub fn orientation(protocol: Protocol) -> [f64; 2] {
    match protocol {
        Protocol::Odba => [1.0, -1.0],
        Protocol::Nodba | Protocol::Benchmark => [1.0, 1.0],
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    const FREE: Range = Range { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub(crate) fn keep(self, x: f64) -> (f64, bool) {
        let y = x.clamp(self.lo, self.hi);
        (y, y != x)
    }
}

/// Ranges the UL and DL multipliers are held in, given where they start.
pub(crate) fn relay_ranges(protocol: Protocol, init: [f64; 2]) -> [Range; 2] {
    let odba = |l: f64| {
        if relay_enabled(l) {
            Range { lo: -1.0 + RELAY_MARGIN, hi: -RELAY_MARGIN }
        } else {
            Range::FREE
        }
    };
    match protocol {
        Protocol::Odba => [odba(init[0]), odba(init[1])],
        Protocol::Nodba => [
            if init[0] > -1.0 { Range { lo: -1.0 + RELAY_MARGIN, hi: f64::INFINITY } } else { Range::FREE },
            if init[1] < 0.0 { Range { lo: f64::NEG_INFINITY, hi: -RELAY_MARGIN } } else { Range::FREE },
        ],
        Protocol::Benchmark => [Range::FREE, Range::FREE],
    }
}

pub(crate) fn keep_all(ranges: [Range; 2], next: [f64; 2]) -> ([f64; 2], usize) {
    let (a, ca) = ranges[0].keep(next[0]);
    let (b, cb) = ranges[1].keep(next[1]);
    ([a, b], ca as usize + cb as usize)
}

/// Independent UL and DL one-dimensional searches for `(λ1*, λ2*)`.
pub fn search_1d(cfg: &ScenarioConfig, sc: &SearchConfig) -> Result<SearchResult> {
    sc.validate()?;
    let seed = sc.seed.unwrap_or(cfg.seed);
    let mut it = Iterate::new(sc);
    let ranges = relay_ranges(Protocol::Odba, sc.lambda_init);
    let s = orientation(Protocol::Odba);
    let mut clamps = 0;
    for t in 0..sc.max_iters {
        let [l1, l2] = it.lambda;
        let est = estimate_drift_odba(cfg, l1, l2, sc.batch_frames, seed, t as u64, sc.execution);
        let step = step_schedule(t, sc);
        let (next, c) = keep_all(ranges, [l1 - s[0] * step * est.drift[0], l2 - s[1] * step * est.drift[1]]);
        clamps += c;
        if it.record(t, sc, est.drift, next) {
            break;
        }
    }
    Ok(it.finish(Protocol::Odba, sc, clamps, odba_case_label))
}

/// Pulls an update that lands where no NODBA case applies (`λ3 <= -1` and
/// `λ4 >= 0`) back by undoing the move of the coordinate that crossed.
fn clamp_nodba(prev: [f64; 2], next: [f64; 2]) -> ([f64; 2], bool) {
    if NodbaCase::classify(next[0], next[1]).is_ok() {
        return (next, false);
    }
    if prev[0] > -1.0 {
        ([prev[0], next[1]], true)
    } else {
        ([next[0], prev[1]], true)
    }
}

/// Joint two-dimensional search for `(λ3*, λ4*)`.
pub fn search_2d(cfg: &ScenarioConfig, sc: &SearchConfig) -> Result<SearchResult> {
    sc.validate()?;
    let seed = sc.seed.unwrap_or(cfg.seed);
    let mut it = Iterate::new(sc);
    let mut clamps = 0;
    if NodbaCase::classify(it.lambda[0], it.lambda[1]).is_err() {
        return Err(crate::Error::Invalid("search.lambda_init lies outside every NODBA case".into()));
    }
    let ranges = relay_ranges(Protocol::Nodba, sc.lambda_init);
    for t in 0..sc.max_iters {
        let [l3, l4] = it.lambda;
        let est = estimate_drift_nodba(cfg, l3, l4, sc.batch_frames, seed, t as u64, sc.execution)?;
        let step = step_schedule(t, sc);
        let (kept, c) = keep_all(ranges, [l3 - step * est.drift[0], l4 - step * est.drift[1]]);
        let (next, clamped) = clamp_nodba(it.lambda, kept);
        clamps += c + clamped as usize;
        if it.record(t, sc, est.drift, next) {
            break;
        }
    }
    Ok(it.finish(Protocol::Nodba, sc, clamps, |l| {
        NodbaCase::classify(l[0], l[1]).map_or_else(|_| "none".to_string(), |c| c.to_string())
    }))
}

/// Two-dimensional search for the benchmark multipliers `(μ_ul, μ_dl)`,
/// measuring drift on a buffered rollout that carries the queues from one
/// iteration to the next.
pub fn search_benchmark(cfg: &ScenarioConfig, sc: &SearchConfig) -> Result<SearchResult> {
    sc.validate()?;
    let seed = sc.seed.unwrap_or(cfg.seed);
    let mut it = Iterate::new(sc);
    let mut buf = BufferPair::empty(None);
    let mut frame_no = 0u64;
    for t in 0..sc.max_iters {
        let duals = (it.lambda[0], it.lambda[1]);
        let mut m = Moments::default();
        for (chunk, n) in chunks(sc.batch_frames) {
            let mut rng = substream(seed, Purpose::SearchBenchmark, t as u64, chunk);
            for _ in 0..n {
                frame_no += 1;
                let snr = snr_view(&sample_channel(cfg, &mut rng), cfg)?;
                let sel = benchmark_decide(frame_no, &snr, Some(&buf), duals);
                let o = benchmark_apply_frame(&sel, &buf);
                buf = o.buffer_after;
                m.push([o.ul_drained - o.ul_fed, o.dl_drained - o.dl_fed]);
            }
        }
        let est = m.estimate();
        let step = step_schedule(t, sc);
        let next = [duals.0 - step * est.drift[0], duals.1 - step * est.drift[1]];
        if it.record(t, sc, est.drift, next) {
            break;
        }
    }
    Ok(it.finish(Protocol::Benchmark, sc, 0, |_| "n/a".to_string()))
}

/// Dispatches to the search matching `protocol`.
pub fn search(protocol: Protocol, cfg: &ScenarioConfig, sc: &SearchConfig) -> Result<SearchResult> {
    match protocol {
        Protocol::Odba => search_1d(cfg, sc),
        Protocol::Nodba => search_2d(cfg, sc),
        Protocol::Benchmark => search_benchmark(cfg, sc),
    }
}
