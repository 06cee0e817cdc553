use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{CausalFunction, FeatureSpace, Object, Observation, SpaceDocument};
use crate::error::{Error, Result};
use crate::process::Query;

type ObjectMap = BTreeMap<String, String>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    /// `exp1`, `exp2`, or a path relative to the condition file.
    Named(String),
    Inline(SpaceDocument),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CandidateDoc {
    /// `"all"`: every object of the space.
    All(String),
    List(Vec<ObjectMap>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningDoc {
    pub a: ObjectMap,
    pub r: ObjectMap,
    pub rp: ObjectMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskDoc {
    pub a: ObjectMap,
    pub r: ObjectMap,
    pub candidates: CandidateDoc,
    #[serde(default = "yes")]
    pub scored: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counterbalance {
    /// 1-based task ids swapped together.
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
    /// Two inclusive 1-based ranges of equal length swapped as blocks.
    #[serde(default)]
    pub blocks: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default)]
    pub experiment: Option<u8>,
    #[serde(default)]
    pub rule: Option<u8>,
    #[serde(default)]
    pub evidence_balance: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub counterbalance: Option<Counterbalance>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// On-disk condition schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionDoc {
    pub id: String,
    pub space: SpaceRef,
    pub learning: Vec<LearningDoc>,
    pub tasks: Vec<TaskDoc>,
    #[serde(default)]
    pub meta: Meta,
}

/// One generalization task. `id` is 1-based in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: usize,
    pub agent: Object,
    pub recipient: Object,
    pub candidates: Vec<Object>,
    pub scored: bool,
}

impl Task {
    pub fn query(&self) -> Query {
        Query {
            agent: self.agent.clone(),
            recipient: self.recipient.clone(),
            candidates: self.candidates.clone(),
        }
    }
}

/// A fully materialized experimental condition.
#[derive(Debug, Clone)]
pub struct Condition {
    pub id: String,
    pub space: SpaceDocument,
    pub learning: Vec<Observation>,
    pub tasks: Vec<Task>,
    pub meta: Meta,
}

/// Presentation order of generalization tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Near,
    Far,
    Random,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Near => "near",
            Regime::Far => "far",
            Regime::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "near" => Ok(Regime::Near),
            "far" => Ok(Regime::Far),
            "random" => Ok(Regime::Random),
            other => Err(Error::schema("regime", format!("expected near, far or random, got `{other}`"))),
        }
    }
}

impl Condition {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ConditionDoc = serde_json::from_str(&text).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
        Condition::from_doc(doc, path.parent())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ConditionDoc = serde_json::from_str(text).map_err(|e| Error::schema("condition", e.to_string()))?;
        Condition::from_doc(doc, None)
    }

    pub fn from_doc(doc: ConditionDoc, base: Option<&Path>) -> Result<Self> {
        let space = match &doc.space {
            SpaceRef::Inline(s) => s.clone(),
            SpaceRef::Named(name) if name == "exp1" || name == "exp2" => SpaceDocument::load(Path::new(name))?,
            SpaceRef::Named(name) => {
                let p = base.map_or_else(|| PathBuf::from(name), |b| b.join(name));
                SpaceDocument::load(&p)?
            }
        };
        let fs = space.space();
        let obj = |m: &ObjectMap, field: String| fs.object_from_map(m).map_err(|e| Error::schema(field, e.to_string()));
        let learning = doc
            .learning
            .iter()
            .enumerate()
            .map(|(i, l)| {
                Ok(Observation::new(
                    obj(&l.a, format!("learning[{i}].a"))?,
                    obj(&l.r, format!("learning[{i}].r"))?,
                    obj(&l.rp, format!("learning[{i}].rp"))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let tasks = doc
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let candidates = match &t.candidates {
                    CandidateDoc::All(s) if s == "all" => fs.objects().collect(),
                    CandidateDoc::All(s) => {
                        return Err(Error::schema(format!("tasks[{i}].candidates"), format!("expected \"all\" or a list, got `{s}`")))
                    }
                    CandidateDoc::List(list) => list
                        .iter()
                        .enumerate()
                        .map(|(j, m)| obj(m, format!("tasks[{i}].candidates[{j}]")))
                        .collect::<Result<Vec<_>>>()?,
                };
                Ok(Task {
                    id: i + 1,
                    agent: obj(&t.a, format!("tasks[{i}].a"))?,
                    recipient: obj(&t.r, format!("tasks[{i}].r"))?,
                    candidates,
                    scored: t.scored,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cond = Condition {
            id: doc.id,
            space,
            learning,
            tasks,
            meta: doc.meta,
        };
        cond.validate()?;
        Ok(cond)
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::schema("id", "must not be empty"));
        }
        if self.learning.is_empty() {
            return Err(Error::schema("learning", "need at least one learning observation"));
        }
        if self.tasks.is_empty() {
            return Err(Error::schema("tasks", "need at least one task"));
        }
        for t in &self.tasks {
            if t.candidates.is_empty() {
                return Err(Error::schema(format!("tasks[{}].candidates", t.id - 1), "empty candidate set"));
            }
        }
        let scored = self.scored_tasks().count();
        let universe = self.space.space().object_count();
        let check = |ok: bool, field: &str, msg: String| if ok { Ok(()) } else { Err(Error::schema(field, msg)) };
        match self.meta.experiment {
            Some(1) => {
                check(self.learning.len() == 1, "learning", format!("experiment 1 has one learning observation, got {}", self.learning.len()))?;
                check(scored == 15, "tasks", format!("experiment 1 has 15 tasks, got {scored}"))?;
                check(self.tasks.iter().all(|t| t.candidates.len() == 9), "tasks", "experiment 1 panels have 9 candidates".into())?;
            }
            Some(2) => {
                check(self.learning.len() == 6, "learning", format!("experiment 2 has six learning observations, got {}", self.learning.len()))?;
                check(scored == 16, "tasks", format!("experiment 2 has 16 scored tasks, got {scored}"))?;
                check(self.tasks.iter().all(|t| t.candidates.len() == 20), "tasks", "experiment 2 menus have 20 candidates".into())?;
            }
            _ => {}
        }
        let distinct = |f: fn(&Observation) -> &Object| {
            let mut v: Vec<&Object> = self.learning.iter().map(f).collect();
            v.sort();
            v.dedup();
            v.len()
        };
        match self.meta.evidence_balance.as_deref() {
            Some("fixed-agent") => check(distinct(|d| &d.agent) == 1, "learning", "fixed-agent condition shows more than one agent".into())?,
            Some("fixed-recipient") => check(distinct(|d| &d.recipient) == 1, "learning", "fixed-recipient condition shows more than one recipient".into())?,
            _ => {}
        }
        if let Some(cb) = &self.meta.counterbalance {
            let n = self.tasks.len();
            for p in &cb.pairs {
                check(p.iter().all(|&i| (1..=n).contains(&i)), "meta.counterbalance.pairs", format!("task id out of range in {p:?}"))?;
            }
            check(cb.blocks.is_empty() || cb.blocks.len() == 2, "meta.counterbalance.blocks", "need exactly two blocks".into())?;
            if let [x, y] = cb.blocks.as_slice() {
                check(
                    x[0] <= x[1] && y[0] <= y[1] && x[1] - x[0] == y[1] - y[0] && x[1] <= n && y[1] <= n && x[0] >= 1 && y[0] >= 1,
                    "meta.counterbalance.blocks",
                    "blocks must be equal-length ranges of task ids".into(),
                )?;
            }
        }
        check(universe > 0, "space", "empty universe".into())
    }

    pub fn feature_space(&self) -> &FeatureSpace {
        self.space.space()
    }

    pub fn scored_tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.iter().filter(|t| t.scored)
    }

    pub fn experiment(&self) -> Option<u8> {
        self.meta.experiment
    }

    /// Task ids (1-based) in presentation order.
    ///
    /// Near-first runs tasks in file order and far-first reverses it; with a
    /// counterbalance block, one fair coin decides whether the swap pairs and
    /// blocks are exchanged. Random is a uniform permutation and is the only
    /// order allowed for conditions without a counterbalance block.
    pub fn sequence_tasks<R: Rng + ?Sized>(&self, regime: Regime, rng: &mut R) -> Result<Vec<usize>> {
        let mut ids: Vec<usize> = (1..=self.tasks.len()).collect();
        match (regime, &self.meta.counterbalance) {
            (Regime::Random, _) => {
                ids.shuffle(rng);
                Ok(ids)
            }
            (_, None) => Err(Error::InvalidParam {
                name: "regime",
                msg: format!("condition {} has no near/far ordering; use random", self.id),
            }),
            (_, Some(cb)) => {
                if rng.random_bool(0.5) {
                    for [x, y] in &cb.pairs {
                        ids.swap(x - 1, y - 1);
                    }
                    if let [x, y] = cb.blocks.as_slice() {
                        for k in 0..=(x[1] - x[0]) {
                            ids.swap(x[0] - 1 + k, y[0] - 1 + k);
                        }
                    }
                }
                if regime == Regime::Far {
                    ids.reverse();
                }
                Ok(ids)
            }
        }
    }

    pub fn task(&self, id: usize) -> Option<&Task> {
        id.checked_sub(1).and_then(|i| self.tasks.get(i))
    }

    /// `|F_task \ F_learning|`: (feature, value) pairs present in the task's
    /// agent or recipient but in no learning agent, recipient or result.
    pub fn dissimilarity(&self, task: &Task) -> usize {
        let n = self.feature_space().len();
        let seen: std::collections::BTreeSet<(usize, usize)> = self
            .learning
            .iter()
            .flat_map(|d| [Some(&d.agent), Some(&d.recipient), d.result.as_ref()])
            .flatten()
            .flat_map(|o| (0..n).map(move |k| (k, o.value(k))))
            .collect();
        let task_values: std::collections::BTreeSet<(usize, usize)> = [&task.agent, &task.recipient]
            .iter()
            .flat_map(|o| (0..n).map(move |k| (k, o.value(k))))
            .collect();
        task_values.difference(&seen).count()
    }
}

/// The two hand-designed laws of the ordinal experiment, on the builtin
/// shade/edges space.
pub fn ground_truth_rule(id: u8) -> Result<CausalFunction> {
    let space = FeatureSpace::exp2();
    let text = match id {
        1 => "and(edges(rp)<-edges(a)+1, shade(rp)<-shade(r)+1)",
        2 => "and(shade(rp)<-shade(a)+1, edges(rp)<-edges(r)+1)",
        _ => {
            return Err(Error::InvalidParam {
                name: "rule",
                msg: format!("expected 1 or 2, got {id}"),
            })
        }
    };
    CausalFunction::parse(text, &space)
}

/// Load every `*.json` condition in a directory, sorted by id.
pub fn load_conditions(dir: &Path) -> Result<Vec<Condition>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for p in paths {
        out.push(Condition::load(&p)?);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    if out.is_empty() {
        return Err(Error::schema(dir.display().to_string(), "no condition files found"));
    }
    Ok(out)
}

const BUILTIN: [(&str, &str); 10] = [
    ("A1", include_str!("../../data/conditions/exp1/A1.json")),
    ("A2", include_str!("../../data/conditions/exp1/A2.json")),
    ("A3", include_str!("../../data/conditions/exp1/A3.json")),
    ("A4", include_str!("../../data/conditions/exp1/A4.json")),
    ("A5", include_str!("../../data/conditions/exp1/A5.json")),
    ("A6", include_str!("../../data/conditions/exp1/A6.json")),
    ("B1", include_str!("../../data/conditions/exp2/B1.json")),
    ("B2", include_str!("../../data/conditions/exp2/B2.json")),
    ("B3", include_str!("../../data/conditions/exp2/B3.json")),
    ("B4", include_str!("../../data/conditions/exp2/B4.json")),
];

/// A shipped condition by id (`A1`..`A6`, `B1`..`B4`).
pub fn builtin_condition(id: &str) -> Option<Condition> {
    BUILTIN
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, text)| Condition::from_json(text).expect("shipped condition files are valid"))
}

/// All shipped conditions of experiment `1` or `2`.
pub fn builtin_conditions(experiment: u8) -> Vec<Condition> {
    let prefix = if experiment == 1 { "A" } else { "B" };
    BUILTIN
        .iter()
        .filter(|(k, _)| k.starts_with(prefix))
        .filter_map(|(k, _)| builtin_condition(k))
        .collect()
}

/// Resolve `--condition` arguments: a builtin id, `exp1`/`exp2` for the whole
/// set, a condition file, or a directory of condition files.
pub fn resolve_conditions(arg: &str) -> Result<Vec<Condition>> {
    match arg {
        "exp1" => return Ok(builtin_conditions(1)),
        "exp2" => return Ok(builtin_conditions(2)),
        _ => {}
    }
    if let Some(c) = builtin_condition(arg) {
        return Ok(vec![c]);
    }
    let p = Path::new(arg);
    if p.is_dir() {
        load_conditions(p)
    } else {
        Ok(vec![Condition::load(p)?])
    }
}
