use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
    Gt,
}

/// `value relation bound`. A NaN value never holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub holds: bool,
}

impl Comparison {
    pub fn new(quantity: impl Into<String>, value: f64, relation: Relation, bound: f64) -> Self {
        let holds = match relation {
            Relation::Le => value <= bound,
            Relation::Lt => value < bound,
            Relation::Gt => value > bound,
        };
        Comparison {
            quantity: quantity.into(),
            value,
            relation,
            bound,
            holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub index: usize,
    pub kind: String,
    pub tolerance: f64,
    pub tolerance_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub values: BTreeMap<String, f64>,
    pub comparisons: Vec<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// CSV files written next to the report.
    pub tables: Vec<String>,
    pub pass: bool,
}

/// Tabular output, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: Vec<&'static str>) -> Self {
        Table {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub version: String,
    pub environment: BTreeMap<String, String>,
    /// SHA-256 of the scenario text and of every file it pulled in.
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    /// SHA-256 of this report serialized without `timestamp` and `hash`.
    pub hash: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: Option<u64>,
}

impl RunReport {
    pub fn exit_code(&self) -> u8 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub(crate) fn seal(&mut self) {
        use sha2::{Digest, Sha256};
        let timestamp = self.timestamp.take();
        self.hash.clear();
        let bytes = serde_json::to_vec(self).expect("report serializes");
        self.hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.timestamp = timestamp;
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            s.push_str(&format!("[{verdict}] {} #{}", c.kind, c.index));
            for cmp in &c.comparisons {
                s.push_str(&format!(" {}={:.3e}", cmp.quantity, cmp.value));
            }
            if let Some(e) = &c.error {
                s.push_str(&format!(" error: {e}"));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_holds() {
        assert!(!Comparison::new("x", f64::NAN, Relation::Le, 1.0).holds);
        assert!(Comparison::new("x", -1.0, Relation::Lt, -0.5).holds);
    }

    #[test]
    fn hash_ignores_timestamp() {
        let mut r = RunReport {
            scenario: "s".into(),
            version: "0".into(),
            environment: BTreeMap::new(),
            inputs: BTreeMap::new(),
            seed: None,
            checks: vec![],
            pass: true,
            hash: String::new(),
            timestamp: Some(1),
        };
        r.seal();
        let h = r.hash.clone();
        r.timestamp = Some(2);
        r.seal();
        assert_eq!(r.hash, h);
    }
}
