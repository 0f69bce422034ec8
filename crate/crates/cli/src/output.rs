//! Report emission: JSON documents stamped with run metadata, and CSV tables
//! with a versioned `#` header line.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Meta;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

/// `{"meta": …}` followed by the fields of `body`, which must serialize to an object.
pub fn json_report<T: Serialize>(meta: &Meta, body: &T) -> Result<String, CliError> {
    let mut map = Map::new();
    map.insert("meta".into(), to_value(meta)?);
    match to_value(body)? {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(map))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Numerical(e.to_string()))
}

/// A CSV table. `kind` names the table layout in the header so that readers can
/// check which columns to expect.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(meta: &Meta, kind: &str, columns: &[&str]) -> Self {
        let text = format!(
            "# wso {} table={kind} config_sha256={} seed={}\n{}\n",
            meta.version,
            meta.config_sha256,
            meta.seed,
            columns.join(",")
        );
        Csv { text }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let line: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
