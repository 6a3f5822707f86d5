//! Run reports: a JSON document and an optional flat CSV table.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Inputs {
    pub scene_path: String,
    /// SHA-256 of the scene file bytes.
    pub scene_sha256: String,
    pub provenance: String,
    pub lambda: f64,
    pub quad_h: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

/// Everything a verb produces. `refinement` rows share the keys listed in
/// `columns`, which is also the CSV header.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Inputs,
    pub results: Map<String, Value>,
    pub columns: Vec<String>,
    pub refinement: Vec<Map<String, Value>>,
    pub warnings: Vec<String>,
    pub timing: Timing,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The report without timing, for reproducibility checks.
    pub fn body(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| CliError::Output(e.to_string());
        out.write_record(&self.columns).map_err(err)?;
        for row in &self.refinement {
            let rec: Vec<String> = self.columns.iter().map(|c| cell(row.get(c))).collect();
            out.write_record(&rec).map_err(err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}
