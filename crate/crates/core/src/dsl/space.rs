use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the support size of one feature; satisfying sets are
/// stored as 64-bit masks.
pub const MAX_VALUES_PER_FEATURE: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub values: Vec<String>,
    #[serde(default)]
    pub ordinal: bool,
}

impl FeatureDef {
    pub fn new<S: Into<String>>(name: S, values: &[&str], ordinal: bool) -> Self {
        FeatureDef {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
            ordinal,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// The ordered features that define the object universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDef>", into = "Vec<FeatureDef>")]
pub struct FeatureSpace {
    features: Vec<FeatureDef>,
}

impl TryFrom<Vec<FeatureDef>> for FeatureSpace {
    type Error = Error;

    fn try_from(features: Vec<FeatureDef>) -> Result<Self> {
        FeatureSpace::new(features)
    }
}

impl From<FeatureSpace> for Vec<FeatureDef> {
    fn from(space: FeatureSpace) -> Self {
        space.features
    }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FeatureSpace {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSpace("at least one feature is required".into()));
        }
        for (i, f) in features.iter().enumerate() {
            if !is_identifier(&f.name) {
                return Err(Error::InvalidSpace(format!(
                    "feature name `{}` must be alphanumeric/underscore",
                    f.name
                )));
            }
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidSpace(format!("duplicate feature `{}`", f.name)));
            }
            if f.values.len() < 2 {
                return Err(Error::InvalidSpace(format!(
                    "feature `{}` needs at least 2 values",
                    f.name
                )));
            }
            if f.values.len() > MAX_VALUES_PER_FEATURE {
                return Err(Error::InvalidSpace(format!(
                    "feature `{}` has more than {MAX_VALUES_PER_FEATURE} values",
                    f.name
                )));
            }
            for (j, v) in f.values.iter().enumerate() {
                if !is_identifier(v) {
                    return Err(Error::InvalidSpace(format!(
                        "value `{v}` of feature `{}` must be alphanumeric/underscore",
                        f.name
                    )));
                }
                if f.values[..j].contains(v) {
                    return Err(Error::InvalidSpace(format!(
                        "duplicate value `{v}` in feature `{}`",
                        f.name
                    )));
                }
            }
        }
        Ok(FeatureSpace { features })
    }

    /// Experiment 1 stones: color × shape, both categorical.
    pub fn exp1() -> Self {
        FeatureSpace::new(vec![
            FeatureDef::new("color", &["red", "yellow", "blue"], false),
            FeatureDef::new("shape", &["circle", "square", "diamond"], false),
        ])
        .expect("builtin space")
    }

    /// Experiment 2 stones: shade 1..4 (light to dark) × edges 3..7, both ordinal.
    pub fn exp2() -> Self {
        FeatureSpace::new(vec![
            FeatureDef::new("shade", &["1", "2", "3", "4"], true),
            FeatureDef::new("edges", &["3", "4", "5", "6", "7"], true),
        ])
        .expect("builtin space")
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn feature(&self, k: usize) -> &FeatureDef {
        &self.features[k]
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Support sizes, one per feature.
    pub fn radices(&self) -> Vec<usize> {
        self.features.iter().map(FeatureDef::len).collect()
    }

    /// Number of distinct objects.
    pub fn object_count(&self) -> usize {
        self.features.iter().map(FeatureDef::len).product()
    }

    /// Mixed-radix index with the first feature most significant, so index
    /// order equals lexicographic value order.
    pub fn index_of(&self, obj: &Object) -> usize {
        obj.0
            .iter()
            .zip(&self.features)
            .fold(0, |acc, (&v, f)| acc * f.len() + v)
    }

    pub fn object_at(&self, mut index: usize) -> Object {
        let mut values = vec![0; self.len()];
        for (k, f) in self.features.iter().enumerate().rev() {
            values[k] = index % f.len();
            index /= f.len();
        }
        Object(values)
    }

    /// Every object of the universe, in index order.
    pub fn objects(&self) -> impl Iterator<Item = Object> + '_ {
        (0..self.object_count()).map(|i| self.object_at(i))
    }

    pub fn contains(&self, obj: &Object) -> bool {
        obj.0.len() == self.len() && obj.0.iter().zip(&self.features).all(|(&v, f)| v < f.len())
    }

    /// Build an object from value labels listed in feature order.
    pub fn object(&self, labels: &[&str]) -> Result<Object> {
        if labels.len() != self.len() {
            return Err(Error::InvalidSpace(format!(
                "expected {} feature values, got {}",
                self.len(),
                labels.len()
            )));
        }
        labels
            .iter()
            .zip(&self.features)
            .map(|(l, f)| {
                f.value_index(l).ok_or_else(|| {
                    Error::InvalidSpace(format!("`{l}` is not a value of feature `{}`", f.name))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Object)
    }

    /// Parse the dash-joined short form, e.g. `red-square` or `2-4`.
    pub fn parse_object(&self, text: &str) -> Result<Object> {
        let labels: Vec<&str> = text.split('-').collect();
        self.object(&labels)
    }

    /// Build an object from a `feature -> label` map; every feature must be
    /// present and no extra keys are allowed.
    pub fn object_from_map(&self, map: &BTreeMap<String, String>) -> Result<Object> {
        if let Some(extra) = map.keys().find(|k| self.feature_index(k).is_none()) {
            return Err(Error::InvalidSpace(format!("unknown feature `{extra}`")));
        }
        self.features
            .iter()
            .map(|f| {
                let label = map
                    .get(&f.name)
                    .ok_or_else(|| Error::InvalidSpace(format!("missing feature `{}`", f.name)))?;
                f.value_index(label).ok_or_else(|| {
                    Error::InvalidSpace(format!("`{label}` is not a value of feature `{}`", f.name))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Object)
    }

    pub fn object_to_map(&self, obj: &Object) -> BTreeMap<String, String> {
        self.features
            .iter()
            .zip(&obj.0)
            .map(|(f, &v)| (f.name.clone(), f.values[v].clone()))
            .collect()
    }

    pub fn label<'a>(&'a self, obj: &Object, k: usize) -> &'a str {
        &self.features[k].values[obj.0[k]]
    }

    pub fn display<'a>(&'a self, obj: &'a Object) -> ObjectDisplay<'a> {
        ObjectDisplay { space: self, obj }
    }
}

/// One value index per feature of the governing [`FeatureSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Object(pub Vec<usize>);

impl Object {
    pub fn value(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

pub struct ObjectDisplay<'a> {
    space: &'a FeatureSpace,
    obj: &'a Object,
}

impl fmt::Display for ObjectDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.space.len() {
            if k > 0 {
                f.write_str("-")?;
            }
            f.write_str(self.space.label(self.obj, k))?;
        }
        Ok(())
    }
}

/// One causal interaction. `result` is `None` for generalization queries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub agent: Object,
    pub recipient: Object,
    pub result: Option<Object>,
}

impl Observation {
    pub fn new(agent: Object, recipient: Object, result: Object) -> Self {
        Observation {
            agent,
            recipient,
            result: Some(result),
        }
    }

    pub fn query(agent: Object, recipient: Object) -> Self {
        Observation {
            agent,
            recipient,
            result: None,
        }
    }
}

/// Probabilistic-grammar settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarConfig {
    /// Enumeration cap on the number of conjuncts; clamped to the feature count.
    pub max_conjuncts: usize,
    /// Probability of the `AND(B, S)` branch of the bind-additional row.
    pub conjunction_prob: f64,
    /// Soft-likelihood mixing weight; 0 gives the hard likelihood.
    pub epsilon: f64,
    /// Adds `+1, -1, >, <` relations on ordinal features.
    pub extended_relations: bool,
    /// Overflow guard for enumeration.
    pub max_hypotheses: usize,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            max_conjuncts: usize::MAX,
            conjunction_prob: 0.5,
            epsilon: 0.0,
            extended_relations: false,
            max_hypotheses: 1_000_000,
        }
    }
}

impl GrammarConfig {
    pub fn extended() -> Self {
        GrammarConfig {
            extended_relations: true,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.conjunction_prob) {
            return Err(Error::InvalidParam {
                name: "conjunction_prob",
                msg: format!("{} not in [0, 1]", self.conjunction_prob),
            });
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParam {
                name: "epsilon",
                msg: format!("{} not in [0, 1)", self.epsilon),
            });
        }
        if self.max_conjuncts < 1 {
            return Err(Error::InvalidParam {
                name: "max_conjuncts",
                msg: "cap must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn cap_for(&self, space: &FeatureSpace) -> usize {
        self.max_conjuncts.min(space.len())
    }
}

/// JSON document holding a feature space together with grammar options:
/// `{"features":[{"name","values",["ordinal"]}], "extended_relations":bool, "epsilon":number}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDocument {
    pub features: FeatureSpace,
    #[serde(default)]
    pub extended_relations: bool,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_conjuncts: Option<usize>,
}

impl SpaceDocument {
    pub fn new(space: FeatureSpace, grammar: &GrammarConfig) -> Self {
        SpaceDocument {
            features: space,
            extended_relations: grammar.extended_relations,
            epsilon: grammar.epsilon,
            max_conjuncts: (grammar.max_conjuncts != usize::MAX).then_some(grammar.max_conjuncts),
        }
    }

    pub fn exp1() -> Self {
        SpaceDocument::new(FeatureSpace::exp1(), &GrammarConfig::default())
    }

    pub fn exp2() -> Self {
        SpaceDocument::new(FeatureSpace::exp2(), &GrammarConfig::extended())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpaceDocument = serde_json::from_str(text)?;
        doc.grammar().validate()?;
        Ok(doc)
    }

    /// Load from a path, or from the builtin names `exp1` / `exp2`.
    pub fn load(path: &Path) -> Result<Self> {
        match path.to_str() {
            Some("exp1") => return Ok(Self::exp1()),
            Some("exp2") => return Ok(Self::exp2()),
            _ => {}
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.features
    }

    pub fn grammar(&self) -> GrammarConfig {
        GrammarConfig {
            extended_relations: self.extended_relations,
            epsilon: self.epsilon,
            max_conjuncts: self.max_conjuncts.unwrap_or(usize::MAX),
            ..Default::default()
        }
    }
}
