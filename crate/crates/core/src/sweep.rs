use serde::{Deserialize, Serialize};

use crate::config::{validate_sweep, SweepAxis, SweepSpec};
use crate::error::Result;
use crate::model::{ScenarioConfig, ScenarioDb};
use crate::outcome::Protocol;
use crate::sim::{run_simulation, RunSpec, SimReport};
use crate::stream::mix64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(with = "maybe_infinite")]
    pub axis_value: f64,
    pub report: SimReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    /// Sorted by axis value, then protocol.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Rows of one protocol in axis order.
    pub fn series(&self, protocol: Protocol) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.report.protocol == protocol)
    }
}

fn protocol_id(p: Protocol) -> u64 {
    match p {
        Protocol::Odba => 1,
        Protocol::Nodba => 2,
        Protocol::Benchmark => 3,
    }
}

/// Seed of the run at position `index` of the value list.
pub fn row_seed(base: u64, index: usize, protocol: Protocol) -> u64 {
    base ^ mix64(((index as u64) << 8) | protocol_id(protocol))
}

fn row_spec(template: &RunSpec, db: &ScenarioDb, axis: SweepAxis, value: f64, seed: u64, p: Protocol) -> Result<RunSpec> {
    let mut db = db.clone();
    let mut spec = RunSpec { protocol: p, ..template.clone() };
    match axis {
        SweepAxis::Omega(link) => {
            db.omega_db.insert(link, value);
        }
        SweepAxis::PowerUe => db.power_ue_dbm.iter_mut().for_each(|x| *x = value),
        SweepAxis::PowerRs => db.power_rs_dbm = value,
        SweepAxis::PowerBs => db.power_bs_dbm = value,
        SweepAxis::BufferCap => spec.buffer_cap = (value.is_finite()).then_some(value),
    }
    db.seed = seed;
    spec.scenario = ScenarioConfig::from_db(&db)?;
    Ok(spec)
}

/// One full run per value and protocol. `db` is the scenario the template
/// was built from.
pub fn sweep(template: &RunSpec, db: &ScenarioDb, spec: &SweepSpec) -> Result<SweepReport> {
    validate_sweep(spec, template)?;
    let mut jobs = Vec::new();
    for (i, &v) in spec.values.iter().enumerate() {
        for &p in &spec.protocols {
            jobs.push((v, row_spec(template, db, spec.axis, v, row_seed(db.seed, i, p), p)?));
        }
    }
    let results = template.search.execution.map(jobs.len(), |k| run_simulation(&jobs[k].1));
    let mut rows = Vec::with_capacity(jobs.len());
    for ((v, _), r) in jobs.iter().zip(results) {
        rows.push(SweepRow { axis_value: *v, report: r? });
    }
    rows.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value).then(a.report.protocol.cmp(&b.report.protocol)));
    Ok(SweepReport { axis: spec.axis.to_string(), rows })
}

/// Writes infinite values as the strings `"inf"` / `"-inf"`.
mod maybe_infinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got `{t}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Link;

    fn template() -> (RunSpec, ScenarioDb) {
        let mut db = ScenarioDb::two_ue(20.0, 20.0, 46.0, [-13.0, -12.0, -30.0, -49.0, 0.0]);
        db.frames = 2000;
        db.seed = 5;
        let mut spec = RunSpec::new(ScenarioConfig::from_db(&db).unwrap(), Protocol::Odba);
        spec.search.batch_frames = 1000;
        spec.search.max_iters = 10;
        (spec, db)
    }

    #[test]
    fn rows_sorted_and_seeded_independently() {
        let (t, db) = template();
        let spec = SweepSpec {
            axis: SweepAxis::Omega(Link::UeBs(0)),
            values: vec![-20.0, -40.0, -30.0],
            protocols: vec![Protocol::Benchmark, Protocol::Odba],
        };
        let r = sweep(&t, &db, &spec).unwrap();
        assert_eq!(r.rows.len(), 6);
        let xs: Vec<f64> = r.rows.iter().map(|x| x.axis_value).collect();
        assert_eq!(xs, vec![-40.0, -40.0, -30.0, -30.0, -20.0, -20.0]);
        assert_eq!(r.rows[0].report.protocol, Protocol::Odba);
        assert_eq!(r.rows[0].report.seed, row_seed(5, 1, Protocol::Odba));
        let mut seeds: Vec<u64> = r.rows.iter().map(|x| x.report.seed).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 6);
        assert_eq!(r.axis, "omega:U1B");
    }

    #[test]
    fn single_value_gives_one_row() {
        let (t, db) = template();
        let spec = SweepSpec { axis: SweepAxis::PowerRs, values: vec![30.0], protocols: vec![Protocol::Odba] };
        assert_eq!(sweep(&t, &db, &spec).unwrap().rows.len(), 1);
    }

    #[test]
    fn empty_values_rejected() {
        let (t, db) = template();
        let spec = SweepSpec { axis: SweepAxis::PowerRs, values: vec![], protocols: vec![Protocol::Odba] };
        assert!(sweep(&t, &db, &spec).is_err());
    }

    #[test]
    fn invalid_axis_value_rejected() {
        let (t, db) = template();
        let spec = SweepSpec { axis: SweepAxis::PowerRs, values: vec![50.0], protocols: vec![Protocol::Odba] };
        assert!(matches!(sweep(&t, &db, &spec), Err(crate::Error::PowerOrdering { .. })));
    }

    #[test]
    fn buffer_cap_axis_accepts_infinity() {
        let (t, db) = template();
        let spec = SweepSpec {
            axis: SweepAxis::BufferCap,
            values: vec![f64::INFINITY, 2.0],
            protocols: vec![Protocol::Odba],
        };
        let r = sweep(&t, &db, &spec).unwrap();
        assert_eq!(r.rows[0].report.buffer_cap, Some(2.0));
        assert_eq!(r.rows[1].report.buffer_cap, None);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<SweepReport>(&json).unwrap(), r);
    }
}
