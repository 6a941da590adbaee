use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Outcome of one verification study. Maps are ordered so the JSON is
/// byte-stable for a given seed and configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub parameters: BTreeMap<String, Value>,
    /// One record per sweep value.
    pub sweep: Vec<BTreeMap<String, Value>>,
    pub measured: BTreeMap<String, Value>,
    /// Empirical constants; reported, never asserted.
    pub fitted: BTreeMap<String, f64>,
    pub criteria: BTreeMap<String, bool>,
}

impl StudyReport {
    pub fn new(study: &str) -> Self {
        StudyReport { study: study.to_string(), ..Default::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.to_string(), to_value(value));
        self
    }

    pub fn measure(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.measured.insert(key.to_string(), to_value(value));
        self
    }

    pub fn fit(&mut self, key: &str, value: f64) -> &mut Self {
        self.fitted.insert(key.to_string(), value);
        self
    }

    pub fn check(&mut self, key: &str, ok: bool) -> &mut Self {
        self.criteria.insert(key.to_string(), ok);
        self
    }

    pub fn row(&mut self, entries: &[(&str, Value)]) -> &mut Self {
        self.sweep.push(entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect());
        self
    }

    pub fn passed(&self) -> bool {
        self.criteria.values().all(|ok| *ok)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.criteria.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.as_str()).collect()
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.measured.get(key).and_then(Value::as_f64)
    }

    /// Sweep records as CSV over the union of numeric keys.
    /// Sweep rows as CSV. Columns are the sorted union of keys; numbers use
    /// 17 significant digits, missing cells are empty.
    pub fn sweep_csv(&self) -> Result<String> {
        let mut keys: Vec<&String> = self.sweep.iter().flat_map(|r| r.keys()).collect();
        keys.sort();
        keys.dedup();
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&keys).map_err(io)?;
        for row in &self.sweep {
            let cells = keys.iter().map(|k| match row.get(*k) {
                Some(Value::Number(x)) => crate::output::num(x.as_f64().unwrap_or(f64::NAN)),
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
                None => String::new(),
            });
            w.write_record(cells).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// JSON value; non-finite numbers become strings so nothing is lost.
pub fn to_value(value: impl Serialize) -> Value {
    match serde_json::to_value(value) {
        Ok(Value::Null) | Err(_) => Value::Null,
        Ok(v) => v,
    }
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(x.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_and_csv() {
        let mut r = StudyReport::new("demo");
        r.row(&[("h", num(2.0)), ("q", num(0.5))]).row(&[("h", num(4.0)), ("q", num(1.2))]);
        r.check("a", true);
        assert!(r.passed());
        r.check("b", false);
        assert_eq!(r.failures(), vec!["b"]);
        assert_eq!(r.sweep_csv().unwrap().lines().next(), Some("h,q"));
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
    }
}
