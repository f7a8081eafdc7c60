use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::diagram::Diagram;
use crate::error::{Error, Result};

/// Observed outcomes, keyed by node name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence(BTreeMap<String, String>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, node: impl Into<String>, outcome: impl Into<String>) -> Self {
        self.0.insert(node.into(), outcome.into());
        self
    }

    pub fn insert(&mut self, node: impl Into<String>, outcome: impl Into<String>) {
        self.0.insert(node.into(), outcome.into());
    }

    pub fn get(&self, node: &str) -> Option<&str> {
        self.0.get(node).map(String::as_str)
    }

    pub fn contains(&self, node: &str) -> bool {
        self.0.contains_key(node)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Checks every entry against `diagram` and returns `(node, outcome index)`
    /// pairs in name order.
    pub fn resolve(&self, diagram: &Diagram) -> Result<Vec<(String, usize)>> {
        self.iter()
            .map(|(node, outcome)| {
                let spec = diagram.require(node)?;
                let index = spec.outcome_index(outcome).ok_or_else(|| Error::UnknownOutcome {
                    node: node.to_string(),
                    outcome: outcome.to_string(),
                })?;
                Ok((node.to_string(), index))
            })
            .collect()
    }
}

impl FromIterator<(String, String)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Evidence(iter.into_iter().collect())
    }
}

/// Parses `NAME=OUTCOME[,NAME=OUTCOME...]`; the empty string is no evidence.
impl FromStr for Evidence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut evidence = Evidence::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (node, outcome) = item.split_once('=').ok_or_else(|| {
                Error::InvalidParameters(format!("evidence item `{item}` is not NAME=OUTCOME"))
            })?;
            if evidence.contains(node.trim()) {
                return Err(Error::InvalidParameters(format!(
                    "node `{}` observed twice",
                    node.trim()
                )));
            }
            evidence.insert(node.trim(), outcome.trim());
        }
        Ok(evidence)
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|(n, o)| format!("{n}={o}")).collect();
        f.write_str(&items.join(","))
    }
}
