//! JSON and table rendering of command results.

use serde_json::Value;

use stable_theta::config::OutputFormat;
use stable_theta::expansion::AnyExpansion;

pub enum Rendered {
    Expansion(AnyExpansion),
    Report(Value),
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("value serializes")
}

impl Rendered {
    pub fn render(&self, format: OutputFormat) -> String {
        match (self, format) {
            (Rendered::Expansion(e), OutputFormat::Json) => e.to_json(),
            (Rendered::Report(v), OutputFormat::Json) => {
                let mut s = compact(v);
                s.push('\n');
                s
            }
            (Rendered::Expansion(e), OutputFormat::Table) => {
                let doc: Value = serde_json::from_str(&e.to_json()).expect("document parses");
                expansion_table(&doc)
            }
            (Rendered::Report(v), OutputFormat::Table) => report_table(v),
        }
    }
}

fn expansion_table(doc: &Value) -> String {
    let mut out = String::new();
    for key in ["kind", "genus", "width", "index_gram_doubled", "weight", "bound"] {
        if let Some(v) = doc.get(key) {
            out.push_str(&format!("# {key} {}\n", compact(v)));
        }
    }
    let terms = doc["terms"].as_array().map(Vec::as_slice).unwrap_or(&[]);
    let jacobi = terms.first().is_some_and(|t| t.get("R").is_some());
    out.push_str(if jacobi { "T2\tR\tc\n" } else { "T2\tc\n" });
    for t in terms {
        out.push_str(&compact(&t["T2"]));
        if let Some(r) = t.get("R") {
            out.push('\t');
            out.push_str(&compact(r));
        }
        out.push('\t');
        out.push_str(t["c"].as_str().unwrap_or_default());
        out.push('\n');
    }
    out
}

fn report_table(v: &Value) -> String {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}\t{s}\n"),
                other => format!("{k}\t{}\n", compact(other)),
            })
            .collect(),
        other => format!("{}\n", compact(other)),
    }
}
