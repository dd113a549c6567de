//! Table records emitted by the CLI: CSV with comment headers or JSON
//! validating against the shipped schema.

use crate::{Error, Result};
use serde::Serialize;

/// Bumped on any breaking change of the JSON layout.
pub const SCHEMA_VERSION: &str = "1";

/// The machine-readable schema the JSON output conforms to.
pub const OUTPUT_SCHEMA: &str = include_str!("../schemas/output_record.schema.json");

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub mu: f64,
    pub sigma: f64,
    pub x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Which recursion case produced the numbers.
    pub regime: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_sup_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_mgf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llr_location: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llr_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_change_mean: Option<f64>,
}

/// One emitted table: named columns plus numeric rows.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub schema_version: String,
    pub kind: String,
    pub metadata: Metadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom: Option<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

/// 17 significant digits: round-trip safe and diff-stable.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.16e}")
}

impl OutputRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema_version={}\n", self.schema_version));
        out.push_str(&format!("# kind={}\n", self.kind));
        let m = &self.metadata;
        out.push_str(&format!(
            "# mu={} sigma={} x={}",
            fmt_g17(m.mu),
            fmt_g17(m.sigma),
            fmt_g17(m.x)
        ));
        if let Some(h) = m.h {
            out.push_str(&format!(" h={}", fmt_g17(h)));
        }
        if let Some(n) = m.n {
            out.push_str(&format!(" n={n}"));
        }
        if let Some(theta) = m.theta {
            out.push_str(&format!(" theta={}", fmt_g17(theta)));
        }
        out.push('\n');
        out.push_str(&format!("# regime={}\n", m.regime));
        if let Some(atom) = self.atom {
            out.push_str(&format!("# atom={}\n", fmt_g17(atom)));
        }
        let d = &self.diagnostics;
        if let Some(v) = d.mass_defect {
            out.push_str(&format!("# mass_defect={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.mean {
            out.push_str(&format!("# mean={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.mean_tail_bound {
            out.push_str(&format!("# mean_tail_bound={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.log_mgf {
            out.push_str(&format!("# log_mgf={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.llr_location {
            out.push_str(&format!("# llr_location={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.llr_scale {
            out.push_str(&format!("# llr_scale={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.post_change_mean {
            out.push_str(&format!("# post_change_mean={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.oracle_sup_discrepancy {
            out.push_str(&format!("# oracle_sup_discrepancy={}\n", fmt_g17(v)));
        }
        if let Some(v) = d.tolerance {
            out.push_str(&format!("# tolerance={}\n", fmt_g17(v)));
        }
        if let Some(v) = &d.verdict {
            out.push_str(&format!("# verdict={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

// ---------------------------------------------------------------------------
// minimal schema validation (object/array/number/string/integer subset)
// ---------------------------------------------------------------------------

/// Validate a JSON value against the shipped output schema. Covers the
/// subset the schema uses: types, required properties, array items.
pub fn validate_against_schema(value: &serde_json::Value) -> Result<()> {
    let schema: serde_json::Value =
        serde_json::from_str(OUTPUT_SCHEMA).expect("shipped schema parses");
    check_node(value, &schema, "$")
}

fn check_node(value: &serde_json::Value, schema: &serde_json::Value, path: &str) -> Result<()> {
    use serde_json::Value;
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_i64() || value.is_u64(),
            _ => true,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "schema violation at {path}: expected {ty}"
            )));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for name in required.iter().filter_map(Value::as_str) {
            if value.get(name).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "schema violation at {path}: missing required '{name}'"
                )));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        for (name, sub) in props {
            if let Some(v) = value.get(name) {
                check_node(v, sub, &format!("{path}.{name}"))?;
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                check_node(v, items, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}
