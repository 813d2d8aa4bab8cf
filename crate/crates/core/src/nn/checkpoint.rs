use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::scalar::Scalar;

use super::Parameterized;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Named flat parameter arrays plus a topology descriptor. Arrays are stored
/// row-major in the order the network visits them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub agent_kind: String,
    pub topology: BTreeMap<String, u64>,
    pub params: Vec<(String, Vec<f64>)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    schema_version: u32,
    agent_kind: String,
    topology: BTreeMap<String, u64>,
    params: BTreeMap<String, Vec<f64>>,
}

impl Checkpoint {
    pub fn new(agent_kind: &str, topology: BTreeMap<String, u64>) -> Self {
        Self { agent_kind: agent_kind.to_string(), topology, params: Vec::new() }
    }

    pub fn capture<T: Scalar, P: Parameterized<T>>(agent_kind: &str, topology: BTreeMap<String, u64>, net: &P) -> Self {
        let mut ck = Self::new(agent_kind, topology);
        ck.add("", net);
        ck
    }

    /// Appends every block of `net` under `prefix`.
    pub fn add<T: Scalar, P: Parameterized<T>>(&mut self, prefix: &str, net: &P) {
        net.visit(prefix, &mut |name, b| self.params.push((name.to_string(), b.iter().map(|v| v.as_f64()).collect())));
    }

    /// Copies every block of `net` (named under `prefix`) from the
    /// checkpoint, matching by name and length. Fails without modifying
    /// `net` on any mismatch, including extra checkpoint blocks under
    /// `prefix`.
    pub fn restore<T: Scalar, P: Parameterized<T>>(&self, prefix: &str, net: &mut P) -> Result<()> {
        let scope = if prefix.is_empty() { String::new() } else { format!("{prefix}.") };
        let by_name: BTreeMap<&str, &Vec<f64>> = self
            .params
            .iter()
            .filter(|(n, _)| n.starts_with(&scope))
            .map(|(n, v)| (n.as_str(), v))
            .collect();
        let mut problem = None;
        let mut seen = 0;
        net.visit(prefix, &mut |name, b| match by_name.get(name) {
            Some(v) if v.len() == b.len() => seen += 1,
            Some(v) => {
                problem.get_or_insert(format!("block {name}: expected {} values, found {}", b.len(), v.len()));
            }
            None => {
                problem.get_or_insert(format!("block {name} missing from checkpoint"));
            }
        });
        if problem.is_none() && seen != by_name.len() {
            problem = Some(format!("checkpoint has {} blocks under '{prefix}', network expects {seen}", by_name.len()));
        }
        if let Some(p) = problem {
            return Err(Error::TopologyMismatch(p));
        }
        net.visit_mut(prefix, &mut |name, b| {
            for (dst, &src) in b.iter_mut().zip(by_name[name]) {
                *dst = T::lit(src);
            }
        });
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "schema_version = {CHECKPOINT_SCHEMA_VERSION}");
        let _ = writeln!(s, "agent_kind = \"{}\"", self.agent_kind);
        s.push_str("\n[topology]\n");
        for (k, v) in &self.topology {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push_str("\n[params]\n");
        for (name, values) in &self.params {
            if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "checkpoint parameter", value: bad });
            }
            let _ = writeln!(s, "\"{name}\" = [");
            for row in values.chunks(4) {
                let line: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
                let _ = writeln!(s, "  {},", line.join(", "));
            }
            s.push_str("]\n");
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let raw: Raw = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Parse { what: "checkpoint".into(), message: e.to_string() })?;
        if raw.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Parse {
                what: "checkpoint".into(),
                message: format!("unsupported schema_version {} (expected {CHECKPOINT_SCHEMA_VERSION})", raw.schema_version),
            });
        }
        Ok(Self { agent_kind: raw.agent_kind, topology: raw.topology, params: raw.params.into_iter().collect() })
    }
}
