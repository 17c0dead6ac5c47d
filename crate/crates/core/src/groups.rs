//! Protected-group definitions and intersectional enumeration.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("attribute '{0}' is not part of the dataset schema")]
    UnknownAttribute(String),
    #[error("attribute '{0}' listed more than once")]
    DuplicateAttribute(String),
    #[error("value '{value}' is not declared for attribute '{attribute}'")]
    UnknownValue { attribute: String, value: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("row index {index} out of range for dataset of {len} rows")]
    StaleIndex { index: usize, len: usize },
    #[error("group '{0}' selects no rows")]
    EmptyGroup(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub value: String,
}

/// Conjunction of `attribute = value` conditions; the empty conjunction is
/// the overall population. Conditions are kept sorted by attribute name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupDefinition {
    conditions: Vec<Condition>,
    display_name: String,
}

pub const OVERALL_GROUP: &str = "overall";

impl GroupDefinition {
    pub fn overall() -> Self {
        GroupDefinition {
            conditions: Vec::new(),
            display_name: OVERALL_GROUP.to_string(),
        }
    }

    pub fn new<A, V>(conditions: impl IntoIterator<Item = (A, V)>) -> Result<Self, GroupError>
    where
        A: Into<String>,
        V: Into<String>,
    {
        let mut conditions: Vec<Condition> = conditions
            .into_iter()
            .map(|(a, v)| Condition {
                attribute: a.into(),
                value: v.into(),
            })
            .collect();
        conditions.sort();
        for pair in conditions.windows(2) {
            if pair[0].attribute == pair[1].attribute {
                return Err(GroupError::DuplicateAttribute(pair[0].attribute.clone()));
            }
        }
        let display_name = if conditions.is_empty() {
            OVERALL_GROUP.to_string()
        } else {
            conditions
                .iter()
                .map(|c| format!("{}={}", c.attribute, c.value))
                .collect::<Vec<_>>()
                .join(" & ")
        };
        Ok(GroupDefinition {
            conditions,
            display_name,
        })
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }

    pub fn is_overall(&self) -> bool {
        self.conditions.is_empty()
    }

    /// Report ordering: overall first, then by number of conditions, then
    /// lexicographically by (attribute, value) pairs.
    pub fn report_order(&self, other: &Self) -> Ordering {
        self.conditions
            .len()
            .cmp(&other.conditions.len())
            .then_with(|| self.conditions.cmp(&other.conditions))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndex {
    pub definition: GroupDefinition,
    /// Ascending record positions selected by the definition.
    pub row_indices: Vec<usize>,
    pub size: usize,
    pub positive_count: usize,
}

impl GroupIndex {
    /// Selects the rows of `dataset` satisfying every condition.
    pub fn select(dataset: &Dataset, definition: GroupDefinition) -> Result<Self, GroupError> {
        let schema = dataset.schema();
        let mut wanted = Vec::with_capacity(definition.conditions.len());
        for c in &definition.conditions {
            let pos = schema
                .position(&c.attribute)
                .ok_or_else(|| GroupError::UnknownAttribute(c.attribute.clone()))?;
            let value = schema.attributes[pos]
                .value_index(&c.value)
                .ok_or_else(|| GroupError::UnknownValue {
                    attribute: c.attribute.clone(),
                    value: c.value.clone(),
                })?;
            wanted.push((pos, value));
        }
        let rows = dataset
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| wanted.iter().all(|&(p, v)| r.values[p] == v))
            .map(|(i, _)| i)
            .collect();
        Ok(Self::from_rows(dataset, definition, rows))
    }

    fn from_rows(dataset: &Dataset, definition: GroupDefinition, row_indices: Vec<usize>) -> Self {
        let records = dataset.records();
        let positive_count = row_indices.iter().filter(|&&i| records[i].outcome).count();
        GroupIndex {
            definition,
            size: row_indices.len(),
            row_indices,
            positive_count,
        }
    }

    pub fn name(&self) -> &str {
        self.definition.display_name()
    }
}

/// Enumerates the overall group plus every group obtained by fixing one value
/// for each of 1..=`max_combination` distinct sensitive attributes, keeping
/// those with at least `min_group_size` rows. Only value combinations that
/// occur in the data are considered.
pub fn enumerate_groups(
    dataset: &Dataset,
    sensitive_attributes: &[String],
    max_combination: usize,
    min_group_size: usize,
) -> Result<Vec<GroupIndex>, GroupError> {
    if max_combination < 1 {
        return Err(GroupError::InvalidParameter(
            "max_combination must be at least 1".into(),
        ));
    }
    if min_group_size < 1 {
        return Err(GroupError::InvalidParameter("min_group_size must be at least 1".into()));
    }
    let schema = dataset.schema();
    let mut names = BTreeSet::new();
    for a in sensitive_attributes {
        if schema.position(a).is_none() {
            return Err(GroupError::UnknownAttribute(a.clone()));
        }
        if !names.insert(a.as_str()) {
            return Err(GroupError::DuplicateAttribute(a.clone()));
        }
    }
    let attrs: Vec<(&str, usize)> = names
        .into_iter()
        .map(|n| (n, schema.position(n).expect("checked above")))
        .collect();

    let overall = GroupIndex::from_rows(dataset, GroupDefinition::overall(), (0..dataset.len()).collect());
    let mut groups = vec![overall];
    let records = dataset.records();
    for k in 1..=max_combination.min(attrs.len()) {
        for combo in combinations(attrs.len(), k) {
            let mut cells: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
            for (i, r) in records.iter().enumerate() {
                let key = combo.iter().map(|&c| r.values[attrs[c].1]).collect();
                cells.entry(key).or_default().push(i);
            }
            for (key, rows) in cells {
                if rows.len() < min_group_size {
                    continue;
                }
                let conds = combo.iter().zip(&key).map(|(&c, &v)| {
                    let (name, pos) = attrs[c];
                    (name, schema.attributes[pos].values[v as usize].as_str())
                });
                let def = GroupDefinition::new(conds)?;
                groups.push(GroupIndex::from_rows(dataset, def, rows));
            }
        }
    }
    groups.sort_by(|a, b| a.definition.report_order(&b.definition));
    Ok(groups)
}

/// All k-subsets of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Scores and outcomes of the group's rows, in dataset order.
pub fn group_slice(dataset: &Dataset, group: &GroupIndex) -> Result<(Vec<f64>, Vec<bool>), GroupError> {
    if group.row_indices.is_empty() {
        return Err(GroupError::EmptyGroup(group.name().to_string()));
    }
    let records = dataset.records();
    let mut scores = Vec::with_capacity(group.size);
    let mut outcomes = Vec::with_capacity(group.size);
    for &i in &group.row_indices {
        let r = records.get(i).ok_or(GroupError::StaleIndex {
            index: i,
            len: records.len(),
        })?;
        scores.push(r.score);
        outcomes.push(r.outcome);
    }
    Ok((scores, outcomes))
}
