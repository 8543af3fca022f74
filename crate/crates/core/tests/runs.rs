use relaysim::config::{SweepAxis, SweepSpec};
use relaysim::model::Link;
use relaysim::{run_simulation, sweep, Protocol, RunSpec, ScenarioConfig, ScenarioDb};

fn small_cell(seed: u64) -> ScenarioDb {
    let mut db = ScenarioDb::two_ue(20.0, 20.0, 46.0, [-6.0, -8.0, -40.0, -41.0, 0.0]);
    db.seed = seed;
    db
}

#[test]
fn counted_and_delivered_downlink_agree_at_equilibrium() {
    for p in [Protocol::Odba, Protocol::Nodba] {
        let r = run_simulation(&RunSpec::new(ScenarioConfig::from_db(&small_cell(2)).unwrap(), p)).unwrap();
        let rel = (r.tau_dl - r.delivered_dl).abs() / r.tau_dl;
        assert!(rel <= 0.02, "{p}: tau_dl {} delivered_dl {}", r.tau_dl, r.delivered_dl);
    }
}

#[test]
fn unconverged_search_is_reported_not_fatal() {
    let mut spec = RunSpec::new(ScenarioConfig::from_db(&small_cell(2)).unwrap(), Protocol::Nodba);
    spec.search.max_iters = 2;
    spec.search.batch_frames = 1000;
    spec.scenario.frames = 5000;
    let r = run_simulation(&spec).unwrap();
    assert!(!r.search.unwrap().converged);
    assert_eq!(r.frames, 5000);
}

#[test]
fn fixed_duals_skip_the_search() {
    let mut spec = RunSpec::new(ScenarioConfig::from_db(&small_cell(2)).unwrap(), Protocol::Odba);
    spec.fixed_duals = Some([-0.6, -0.8]);
    spec.queue_gain = 0.0;
    spec.scenario.frames = 5000;
    let r = run_simulation(&spec).unwrap();
    assert!(r.search.is_none());
    assert_eq!(r.duals, [-0.6, -0.8]);
}

#[test]
fn strong_backhaul_sum_rate_grows_with_direct_gain() {
    let mut db = ScenarioDb::two_ue(20.0, 20.0, 46.0, [-13.0, -12.0, -30.0, -49.0, 0.0]);
    db.seed = 21;
    let mut template = RunSpec::new(ScenarioConfig::from_db(&db).unwrap(), Protocol::Odba);
    template.search.batch_frames = 5000;
    let spec = SweepSpec {
        axis: SweepAxis::Omega(Link::UeBs(0)),
        values: (0..=25).map(|k| -50.0 + 2.0 * k as f64).collect(),
        protocols: Protocol::ALL.to_vec(),
    };
    let r = sweep(&template, &db, &spec).unwrap();
    assert_eq!(r.rows.len(), 78);
    for p in Protocol::ALL {
        let s: Vec<_> = r.series(p).map(|x| &x.report).collect();
        for w in s.windows(2) {
            let tol = 2.0 * w[0].tau_sum_std_err.hypot(w[1].tau_sum_std_err);
            assert!(w[1].tau_sum >= w[0].tau_sum - tol, "{p}: {} then {}", w[0].tau_sum, w[1].tau_sum);
        }
    }
}
