//! Buffered frame-by-frame simulation at fixed multipliers.
//!
//! A run first finds the multipliers with the dual search (unless they are
//! given), then replays `frames` fresh channel draws with the relay queues
//! carried from frame to frame. Relay outputs never move more than the queue
//! holds, so every frame's decision sees the buffer-limited rates.
//!
//! With `queue_gain = κ > 0` each frame decides with `λ + s·κ·q` instead of
//! `λ`, where `q` is the current backlog and `s` the search orientation of the
//! multiplier. This is where the multiplier would sit had the dual update kept
//! running on the real queues since the start of the run. A fixed threshold
//! cannot time-share between modes whose scores cross at the same `λ` in
//! almost every frame; the offset lets the backlog settle at that crossing.

use serde::{Deserialize, Serialize};

use crate::benchmark::{benchmark_apply_frame, benchmark_decide, APPROXIMATION_NOTE};
use crate::error::{Error, Result};
use crate::model::{sample_channel, snr_view, BufferPair, ScenarioConfig, SnrView};
use crate::nodba::{nodba_apply_frame, nodba_decide_guarded, nodba_rates, selection_scores, NodbaCase};
use crate::odba::{odba_apply_frame, odba_decide, odba_rates, CouplingRule};
use crate::outcome::{FrameOutcome, Mode, Protocol};
use crate::par::Execution;
use crate::search::{keep_all, orientation, relay_ranges, search, SearchConfig, SearchResult};
use crate::stream::{chunks, substream, Purpose, CHUNK_FRAMES};

/// Everything needed for one protocol run on one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub scenario: ScenarioConfig,
    pub protocol: Protocol,
    pub search: SearchConfig,
    /// Per-queue capacity in bits/symbol; `None` is an infinite buffer.
    pub buffer_cap: Option<f64>,
    /// Skip the search and simulate at these multipliers.
    pub fixed_duals: Option<[f64; 2]>,
    pub coupling: CouplingRule,
    /// Backlog feedback on the multipliers, per bit; 0 keeps them fixed.
    pub queue_gain: f64,
}

pub const DEFAULT_QUEUE_GAIN: f64 = 1e-4;

/// Phase-two settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub buffer_cap: Option<f64>,
    pub coupling: CouplingRule,
    pub queue_gain: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { buffer_cap: None, coupling: CouplingRule::default(), queue_gain: DEFAULT_QUEUE_GAIN }
    }
}

impl RunSpec {
    pub fn new(scenario: ScenarioConfig, protocol: Protocol) -> Self {
        RunSpec {
            scenario,
            protocol,
            search: SearchConfig::default(),
            buffer_cap: None,
            fixed_duals: None,
            coupling: CouplingRule::default(),
            queue_gain: DEFAULT_QUEUE_GAIN,
        }
    }

    pub fn options(&self) -> SimOptions {
        SimOptions { buffer_cap: self.buffer_cap, coupling: self.coupling, queue_gain: self.queue_gain }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.search.execution = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.protocol == Protocol::Nodba && self.scenario.num_ues < 2 {
            return Err(Error::TooFewUes { protocol: "nodba", num_ues: self.scenario.num_ues });
        }
        if let Some(c) = self.buffer_cap {
            if c.is_nan() || c <= 0.0 || c.is_infinite() {
                return Err(Error::Invalid(format!("buffer_cap must be positive and finite, got {c}")));
            }
        }
        if !(self.queue_gain >= 0.0 && self.queue_gain.is_finite()) {
            return Err(Error::Invalid(format!("queue_gain must be non-negative, got {}", self.queue_gain)));
        }
        if self.scenario.frames == 0 {
            return Err(Error::Invalid("frames must be positive".into()));
        }
        if let Some(d) = self.fixed_duals {
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("fixed_duals must be finite".into()));
            }
            if self.protocol == Protocol::Nodba {
                NodbaCase::classify(d[0], d[1])?;
            }
        }
        self.search.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeStat {
    pub mode: Mode,
    pub frames: u64,
    pub fraction: f64,
    /// Per-frame averages of the counted and delivered UL/DL rates, taken
    /// over the whole run.
    pub ul_counted: f64,
    pub dl_counted: f64,
    pub ul_delivered: f64,
    pub dl_delivered: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    pub mean_ul: f64,
    pub mean_dl: f64,
    pub max_ul: f64,
    pub max_dl: f64,
    pub final_ul: f64,
    pub final_dl: f64,
    pub fed_ul: f64,
    pub drained_ul: f64,
    pub fed_dl: f64,
    pub drained_dl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub protocol: Protocol,
    pub frames: u64,
    pub seed: u64,
    pub buffer_cap: Option<f64>,
    pub queue_gain: f64,
    pub tau_ul: f64,
    pub tau_dl: f64,
    pub tau_sum: f64,
    /// Standard error of `tau_sum` treating frames as independent.
    pub tau_sum_std_err: f64,
    pub delivered_ul: f64,
    pub delivered_dl: f64,
    /// Multipliers from the search (or given): `[λ1, λ2]`, `[λ3, λ4]` or
    /// `[μ_ul, μ_dl]`.
    pub duals: [f64; 2],
    /// Frame average of the multipliers actually used.
    pub duals_mean: [f64; 2],
    pub modes: Vec<ModeStat>,
    /// ODBA only.
    pub frac_coupled: Option<f64>,
    pub frac_decoupled: Option<f64>,
    pub queues: QueueStats,
    /// Per-frame arrival and departure rates of the relay queues.
    pub arrival_ul: f64,
    pub departure_ul: f64,
    pub arrival_dl: f64,
    pub departure_dl: f64,
    pub search: Option<SearchResult>,
    pub note: Option<String>,
}

impl SimReport {
    /// Relative mismatch `|arrival - departure| / arrival` of the UL and DL
    /// queues (0 for a queue that never received anything).
    pub fn equilibrium_residual(&self) -> [f64; 2] {
        let rel = |a: f64, d: f64| if a > 0.0 { (a - d).abs() / a } else { 0.0 };
        [rel(self.arrival_ul, self.departure_ul), rel(self.arrival_dl, self.departure_dl)]
    }

    /// Columns `lambda1..lambda4`; the benchmark's `μ_ul, μ_dl` sit in the
    /// first two.
    pub fn lambda_columns(&self) -> [Option<f64>; 4] {
        let [a, b] = self.duals;
        match self.protocol {
            Protocol::Odba | Protocol::Benchmark => [Some(a), Some(b), None, None],
            Protocol::Nodba => [None, None, Some(a), Some(b)],
        }
    }

    pub fn mode_fraction(&self, mode: Mode) -> f64 {
        self.modes.iter().find(|s| s.mode == mode).map_or(0.0, |s| s.fraction)
    }

    /// Most frequent mode; the earlier mode wins a tie.
    pub fn modal_mode(&self) -> Mode {
        let mut best = &self.modes[0];
        for s in &self.modes[1..] {
            if s.frames > best.frames {
                best = s;
            }
        }
        best.mode
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    frames: u64,
    ul_counted: f64,
    dl_counted: f64,
    ul_delivered: f64,
    dl_delivered: f64,
}

struct Accumulator {
    tallies: [Tally; Mode::ALL.len()],
    dual_sum: [f64; 2],
    rate_sq: f64,
    coupled: u64,
    q_sum: [f64; 2],
    q_max: [f64; 2],
    fed: [f64; 2],
    drained: [f64; 2],
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            tallies: [Tally::default(); Mode::ALL.len()],
            dual_sum: [0.0; 2],
            rate_sq: 0.0,
            coupled: 0,
            q_sum: [0.0; 2],
            q_max: [0.0; 2],
            fed: [0.0; 2],
            drained: [0.0; 2],
        }
    }

    fn push(&mut self, o: &FrameOutcome) {
        let t = &mut self.tallies[o.mode.index()];
        t.frames += 1;
        t.ul_counted += o.ul_counted;
        t.dl_counted += o.dl_counted;
        t.ul_delivered += o.ul_delivered;
        t.dl_delivered += o.dl_delivered;
        let r = o.ul_counted + o.dl_counted;
        self.rate_sq += r * r;
        self.coupled += (o.coupled == Some(true)) as u64;
        let q = [o.buffer_after.q_ul, o.buffer_after.q_dl];
        for (k, x) in q.into_iter().enumerate() {
            self.q_sum[k] += x;
            self.q_max[k] = self.q_max[k].max(x);
        }
        self.fed[0] += o.ul_fed;
        self.fed[1] += o.dl_fed;
        self.drained[0] += o.ul_drained;
        self.drained[1] += o.dl_drained;
    }
}

/// Per-frame policy closure: decide and apply for one frame.
type FrameStep = Box<dyn Fn(u64, &SnrView, &BufferPair, [f64; 2]) -> Result<FrameOutcome>>;

fn frame_step(protocol: Protocol, coupling: CouplingRule) -> FrameStep {
    match protocol {
        Protocol::Odba => Box::new(move |_, snr, buf, [a, b]| {
            let rates = odba_rates(snr).limited_by(buf);
            let sel = odba_decide(&rates, a, b, buf);
            Ok(odba_apply_frame(&sel, &rates, buf, coupling))
        }),
        Protocol::Nodba => Box::new(move |_, snr, buf, [a, b]| {
            let rates = nodba_rates(snr, Some(buf))?;
            let scores = selection_scores(&rates, a, b);
            let sel = nodba_decide_guarded(&rates, &scores, a, b, buf)?;
            Ok(nodba_apply_frame(sel.as_ref(), &rates, buf))
        }),
        Protocol::Benchmark => Box::new(move |frame_no, snr, buf, [a, b]| {
            let sel = benchmark_decide(frame_no, snr, Some(buf), (a, b));
            Ok(benchmark_apply_frame(&sel, buf))
        }),
    }
}

/// Buffered simulation around the multipliers `duals`.
pub fn simulate(cfg: &ScenarioConfig, protocol: Protocol, duals: [f64; 2], opts: &SimOptions) -> Result<SimReport> {
    if protocol == Protocol::Nodba {
        NodbaCase::classify(duals[0], duals[1])?;
    }
    let step = frame_step(protocol, opts.coupling);
    let ranges = relay_ranges(protocol, duals);
    let s = orientation(protocol);
    let kappa = opts.queue_gain;
    let mut buf = BufferPair::empty(opts.buffer_cap);
    let mut acc = Accumulator::new();
    for (chunk, n) in chunks(cfg.frames as usize) {
        let mut rng = substream(cfg.seed, Purpose::Simulation, 0, chunk);
        for k in 0..n {
            let frame_no = chunk * CHUNK_FRAMES as u64 + k as u64 + 1;
            let snr = snr_view(&sample_channel(cfg, &mut rng), cfg)?;
            let used = if kappa > 0.0 {
                let shifted = [duals[0] + s[0] * kappa * buf.q_ul, duals[1] + s[1] * kappa * buf.q_dl];
                keep_all(ranges, shifted).0
            } else {
                duals
            };
            let o = step(frame_no, &snr, &buf, used)?;
            acc.push(&o);
            acc.dual_sum[0] += used[0];
            acc.dual_sum[1] += used[1];
            buf = o.buffer_after;
        }
    }
    Ok(build_report(cfg, protocol, duals, opts, &acc, buf))
}

fn build_report(
    cfg: &ScenarioConfig,
    protocol: Protocol,
    duals: [f64; 2],
    opts: &SimOptions,
    acc: &Accumulator,
    last: BufferPair,
) -> SimReport {
    let n = cfg.frames as f64;
    let modes: Vec<ModeStat> = protocol
        .modes()
        .map(|mode| {
            let t = acc.tallies[mode.index()];
            ModeStat {
                mode,
                frames: t.frames,
                fraction: t.frames as f64 / n,
                ul_counted: t.ul_counted / n,
                dl_counted: t.dl_counted / n,
                ul_delivered: t.ul_delivered / n,
                dl_delivered: t.dl_delivered / n,
            }
        })
        .collect();
    let sum = |f: fn(&ModeStat) -> f64| modes.iter().map(f).sum::<f64>();
    let tau_ul = sum(|s| s.ul_counted);
    let tau_dl = sum(|s| s.dl_counted);
    let (frac_coupled, frac_decoupled) = match protocol {
        Protocol::Odba => {
            let c = acc.coupled as f64 / n;
            (Some(c), Some(1.0 - c))
        }
        _ => (None, None),
    };
    SimReport {
        protocol,
        frames: cfg.frames,
        seed: cfg.seed,
        buffer_cap: opts.buffer_cap,
        queue_gain: opts.queue_gain,
        tau_ul,
        tau_dl,
        tau_sum: tau_ul + tau_dl,
        tau_sum_std_err: {
            let mean = tau_ul + tau_dl;
            let var = (acc.rate_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            (var / n).sqrt()
        },
        delivered_ul: sum(|s| s.ul_delivered),
        delivered_dl: sum(|s| s.dl_delivered),
        duals,
        duals_mean: [acc.dual_sum[0] / n, acc.dual_sum[1] / n],
        modes,
        frac_coupled,
        frac_decoupled,
        queues: QueueStats {
            mean_ul: acc.q_sum[0] / n,
            mean_dl: acc.q_sum[1] / n,
            max_ul: acc.q_max[0],
            max_dl: acc.q_max[1],
            final_ul: last.q_ul,
            final_dl: last.q_dl,
            fed_ul: acc.fed[0],
            drained_ul: acc.drained[0],
            fed_dl: acc.fed[1],
            drained_dl: acc.drained[1],
        },
        arrival_ul: acc.fed[0] / n,
        departure_ul: acc.drained[0] / n,
        arrival_dl: acc.fed[1] / n,
        departure_dl: acc.drained[1] / n,
        search: None,
        note: (protocol == Protocol::Benchmark).then(|| APPROXIMATION_NOTE.to_string()),
    }
}

/// Search (unless `fixed_duals` is set), then simulate.
pub fn run_simulation(spec: &RunSpec) -> Result<SimReport> {
    spec.validate()?;
    let (duals, found) = match spec.fixed_duals {
        Some(d) => (d, None),
        None => {
            let r = search(spec.protocol, &spec.scenario, &spec.search)?;
            (r.lambda_star, Some(r))
        }
    };
    let mut report = simulate(&spec.scenario, spec.protocol, duals, &spec.options())?;
    report.search = found;
    Ok(report)
}
