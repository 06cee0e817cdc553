use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::dsl::{FeatureSpace, Object};
use crate::error::{Error, Result};

use super::{Condition, Regime};

/// One generalization choice. `trial` is the 1-based task id within the
/// condition; a participant's rows appear in presentation order.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralRecord {
    pub participant: String,
    pub condition: String,
    pub regime: Regime,
    pub trial: usize,
    pub agent: Object,
    pub recipient: Object,
    pub choice: Object,
}

fn header(space: &FeatureSpace) -> Vec<String> {
    let mut h: Vec<String> = ["participant", "condition", "regime", "trial"].map(String::from).to_vec();
    for role in ["a", "r", "choice"] {
        h.extend(space.features().iter().map(|f| format!("{role}_{}", f.name)));
    }
    h
}

/// Write records in the `participant,condition,regime,trial,a_*,r_*,choice_*`
/// layout. All records must share `space`.
pub fn write_records_csv<W: Write>(records: &[BehavioralRecord], space: &FeatureSpace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(space))?;
    for rec in records {
        let mut row = vec![
            rec.participant.clone(),
            rec.condition.clone(),
            rec.regime.name().to_string(),
            rec.trial.to_string(),
        ];
        for o in [&rec.agent, &rec.recipient, &rec.choice] {
            row.extend((0..space.len()).map(|k| space.label(o, k).to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Read and validate records against their conditions. Row numbers in
/// errors count the header as row 1.
pub fn read_records_csv<R: Read>(input: R, conditions: &[Condition]) -> Result<Vec<BehavioralRecord>> {
    let by_id: BTreeMap<&str, &Condition> = conditions.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let head: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let col = |name: &str| head.iter().position(|h| h == name);
    let fixed: Vec<usize> = ["participant", "condition", "regime", "trial"]
        .iter()
        .map(|n| col(n).ok_or_else(|| Error::Record { row: 1, msg: format!("missing column `{n}`") }))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let rownum = i + 2;
        let bad = |msg: String| Error::Record { row: rownum, msg };
        let row = row?;
        let get = |c: usize| row.get(c).unwrap_or("");
        let cond_id = get(fixed[1]);
        let cond = by_id.get(cond_id).ok_or_else(|| bad(format!("unknown condition `{cond_id}`")))?;
        let space = cond.feature_space();
        let object = |role: &str| -> Result<Object> {
            let labels = space
                .features()
                .iter()
                .map(|f| {
                    let name = format!("{role}_{}", f.name);
                    col(&name).map(get).ok_or_else(|| bad(format!("missing column `{name}`")))
                })
                .collect::<Result<Vec<&str>>>()?;
            space.object(&labels).map_err(|e| bad(format!("{role}: {e}")))
        };
        let regime = Regime::parse(get(fixed[2])).map_err(|e| bad(e.to_string()))?;
        let trial: usize = get(fixed[3]).parse().map_err(|_| bad(format!("trial `{}` is not a task id", get(fixed[3]))))?;
        let task = cond.task(trial).ok_or_else(|| bad(format!("condition {cond_id} has no task {trial}")))?;
        let rec = BehavioralRecord {
            participant: get(fixed[0]).to_string(),
            condition: cond_id.to_string(),
            regime,
            trial,
            agent: object("a")?,
            recipient: object("r")?,
            choice: object("choice")?,
        };
        if rec.agent != task.agent || rec.recipient != task.recipient {
            return Err(bad(format!("objects do not match task {trial} of condition {cond_id}")));
        }
        if !task.candidates.contains(&rec.choice) {
            return Err(bad("choice is not among the task's candidates".into()));
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Record {
            row: 1,
            msg: "no records".into(),
        });
    }
    Ok(out)
}

/// Key of one participant's run: (condition, regime, participant).
pub type RunKey = (String, Regime, String);

/// Group records into runs, each in file (presentation) order, keyed and
/// sorted by (condition, regime, participant).
pub fn group_runs(records: &[BehavioralRecord]) -> BTreeMap<RunKey, Vec<&BehavioralRecord>> {
    let mut out: BTreeMap<RunKey, Vec<&BehavioralRecord>> = BTreeMap::new();
    for r in records {
        out.entry((r.condition.clone(), r.regime, r.participant.clone()))
            .or_default()
            .push(r);
    }
    out
}
