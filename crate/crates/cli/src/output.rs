use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{Number, Value};

/// Significant digits kept for floats that are not already rendered as strings.
const DIGITS: usize = 12;

/// Rounds every float to [`DIGITS`] significant digits so reruns are byte-identical.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r: f64 = format!("{:.*e}", DIGITS - 1, x).parse().expect("round trip");
            let r = if r == 0.0 { 0.0 } else { r };
            Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// A file produced by a command.
pub struct Artifact {
    pub name: String,
    pub body: String,
}

impl Artifact {
    pub fn json(name: &str, v: Value) -> Self {
        Artifact { name: name.to_string(), body: render(&canonical(v)) }
    }

    pub fn text(name: &str, body: String) -> Self {
        Artifact { name: name.to_string(), body }
    }
}

pub fn write_all(dir: &Path, files: &[Artifact]) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut out = Vec::new();
    for f in files {
        let p = dir.join(&f.name);
        std::fs::write(&p, &f.body).with_context(|| format!("cannot write {}", p.display()))?;
        out.push(p);
    }
    Ok(out)
}

pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{:.*e}", DIGITS - 1, x)
    }
}

/// Comma-separated table with a header row.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &[String]) -> Self {
        let mut body = header.join(",");
        body.push('\n');
        Csv { body }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        self.body
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_rounds_and_reparses() {
        let v = canonical(json!({"a": 0.1 + 0.2, "b": [1, 2.5e-300], "c": "x"}));
        assert_eq!(v["a"], json!(0.3));
        let text = render(&v);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }
}
