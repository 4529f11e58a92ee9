//! JSON documents for expansions.
//!
//! Keys appear in a fixed order, terms are sorted by canonical key, and
//! coefficients are decimal strings, so equal expansions serialize to
//! identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Coeff, Expansion, HalfIntegralMatrix, JacobiExpansion, JacobiIndex, JacobiKey, SiegelExpansion};
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    kind: String,
    genus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index_gram_doubled: Option<Vec<Vec<i64>>>,
    weight: i64,
    bound: i64,
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    #[serde(rename = "T2")]
    t2: Vec<Vec<i64>>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    r: Option<Vec<Vec<i64>>>,
    c: String,
}

/// Either kind of expansion, as read from a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyExpansion {
    Siegel(SiegelExpansion),
    Jacobi(JacobiExpansion),
}

impl AnyExpansion {
    pub fn to_json(&self) -> String {
        match self {
            AnyExpansion::Siegel(e) => serialize(e),
            AnyExpansion::Jacobi(e) => serialize(e),
        }
    }

    pub fn genus(&self) -> usize {
        match self {
            AnyExpansion::Siegel(e) => e.genus(),
            AnyExpansion::Jacobi(e) => e.genus(),
        }
    }

    pub fn weight(&self) -> i64 {
        match self {
            AnyExpansion::Siegel(e) => e.weight(),
            AnyExpansion::Jacobi(e) => e.weight(),
        }
    }

    pub fn bound(&self) -> i64 {
        match self {
            AnyExpansion::Siegel(e) => e.bound(),
            AnyExpansion::Jacobi(e) => e.bound(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            AnyExpansion::Siegel(e) => e.is_zero(),
            AnyExpansion::Jacobi(e) => e.is_zero(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyExpansion::Siegel(_) => "siegel",
            AnyExpansion::Jacobi(_) => "jacobi",
        }
    }
}

impl From<SiegelExpansion> for AnyExpansion {
    fn from(e: SiegelExpansion) -> Self {
        AnyExpansion::Siegel(e)
    }
}

impl From<JacobiExpansion> for AnyExpansion {
    fn from(e: JacobiExpansion) -> Self {
        AnyExpansion::Jacobi(e)
    }
}

/// Serialization shared by both kinds.
pub trait ToDocument: Expansion {
    #[doc(hidden)]
    fn header(&self) -> (&'static str, Option<usize>, Option<Vec<Vec<i64>>>);
    #[doc(hidden)]
    fn term_doc(key: &Self::Key, c: Coeff) -> (Vec<Vec<i64>>, Option<Vec<Vec<i64>>>, String);
}

impl ToDocument for SiegelExpansion {
    fn header(&self) -> (&'static str, Option<usize>, Option<Vec<Vec<i64>>>) {
        ("siegel", None, None)
    }
    fn term_doc(key: &HalfIntegralMatrix, c: Coeff) -> (Vec<Vec<i64>>, Option<Vec<Vec<i64>>>, String) {
        (key.rows(), None, c.to_string())
    }
}

impl ToDocument for JacobiExpansion {
    fn header(&self) -> (&'static str, Option<usize>, Option<Vec<Vec<i64>>>) {
        ("jacobi", Some(self.width()), Some(self.index().doubled().to_rows()))
    }
    fn term_doc(key: &JacobiKey, c: Coeff) -> (Vec<Vec<i64>>, Option<Vec<Vec<i64>>>, String) {
        (key.t().rows(), Some(key.r().to_rows()), c.to_string())
    }
}

/// The JSON document of an expansion, newline-terminated.
pub fn serialize<E: ToDocument>(e: &E) -> String {
    let (kind, width, index) = e.header();
    let terms = e
        .sorted_terms()
        .into_iter()
        .map(|(_, k, c)| {
            let (t2, r, c) = E::term_doc(k, c);
            TermDoc { t2, r, c }
        })
        .collect();
    let doc = Document {
        kind: kind.to_string(),
        genus: e.genus(),
        width,
        index_gram_doubled: index,
        weight: e.weight(),
        bound: e.bound(),
        terms,
    };
    let mut out = serde_json::to_string(&doc).expect("document serializes");
    out.push('\n');
    out
}

fn matrix_at(rows: &[Vec<i64>], expect_rows: usize, expect_cols: usize, loc: &str) -> Result<IntMatrix> {
    if rows.len() != expect_rows {
        return Err(Error::format(
            loc,
            format!("expected {expect_rows} rows, found {}", rows.len()),
        ));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != expect_cols) {
        return Err(Error::format(
            format!("{loc}[{i}]"),
            format!("expected {expect_cols} entries, found {}", r.len()),
        ));
    }
    if expect_rows == 0 {
        return Ok(IntMatrix::zeros(0, expect_cols));
    }
    IntMatrix::from_rows(rows).map_err(|e| Error::format(loc, e.to_string()))
}

fn half_integral_at(rows: &[Vec<i64>], genus: usize, bound: i64, loc: &str) -> Result<HalfIntegralMatrix> {
    let d = matrix_at(rows, genus, genus, loc)?;
    if !d.is_symmetric() {
        return Err(Error::format(loc, "T2 is not symmetric"));
    }
    if let Some(i) = (0..genus).find(|&i| d.get(i, i) % 2 != 0) {
        return Err(Error::format(format!("{loc}[{i}][{i}]"), "odd diagonal entry"));
    }
    let t = HalfIntegralMatrix::from_doubled(&d).map_err(|e| Error::format(loc, e.to_string()))?;
    if !t.is_psd() {
        return Err(Error::format(loc, "T is not positive semidefinite"));
    }
    if t.trace() > bound {
        return Err(Error::format(loc, format!("trace {} exceeds bound {bound}", t.trace())));
    }
    Ok(t)
}

fn coeff_at(s: &str, loc: &str) -> Result<Coeff> {
    let ok = !s.is_empty()
        && s.trim_start_matches(['-', '+']).len() + 1 >= s.len()
        && s.trim_start_matches(['-', '+']).bytes().all(|b| b.is_ascii_digit())
        && !s.trim_start_matches(['-', '+']).is_empty();
    if !ok {
        return Err(Error::format(
            loc,
            format!("coefficient {s:?} is not a decimal integer"),
        ));
    }
    s.parse::<Coeff>()
        .map_err(|e| Error::format(loc, format!("coefficient {s:?}: {e}")))
}

/// Parses and validates an expansion document.
pub fn deserialize(text: &str) -> Result<AnyExpansion> {
    let doc: Document = serde_json::from_str(text)
        .map_err(|e| Error::format(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if doc.bound < 0 {
        return Err(Error::format("bound", "negative bound"));
    }
    let g = doc.genus;
    match doc.kind.as_str() {
        "siegel" => {
            if doc.width.is_some() || doc.index_gram_doubled.is_some() {
                return Err(Error::format("kind", "siegel documents carry no width or index"));
            }
            let mut terms = BTreeMap::new();
            for (i, term) in doc.terms.iter().enumerate() {
                let loc = format!("terms[{i}]");
                if term.r.is_some() {
                    return Err(Error::format(format!("{loc}.R"), "siegel terms carry no R"));
                }
                let t = half_integral_at(&term.t2, g, doc.bound, &format!("{loc}.T2"))?;
                let c = coeff_at(&term.c, &format!("{loc}.c"))?;
                if terms.insert(t, c).is_some() {
                    return Err(Error::format(loc, "duplicate index"));
                }
            }
            Ok(AnyExpansion::Siegel(SiegelExpansion::from_map(
                g, doc.weight, doc.bound, terms,
            )))
        }
        "jacobi" => {
            let rows = doc
                .index_gram_doubled
                .as_ref()
                .ok_or_else(|| Error::format("index_gram_doubled", "missing"))?;
            let h = doc.width.ok_or_else(|| Error::format("width", "missing"))?;
            let gram = matrix_at(rows, h, h, "index_gram_doubled")?;
            let index = JacobiIndex::new(gram, None).map_err(|e| Error::format("index_gram_doubled", e.to_string()))?;
            let mut terms = BTreeMap::new();
            for (i, term) in doc.terms.iter().enumerate() {
                let loc = format!("terms[{i}]");
                let t = half_integral_at(&term.t2, g, doc.bound, &format!("{loc}.T2"))?;
                let r_rows = term
                    .r
                    .as_ref()
                    .ok_or_else(|| Error::format(format!("{loc}.R"), "missing"))?;
                let r = matrix_at(r_rows, g, if g == 0 { 0 } else { h }, &format!("{loc}.R"))?;
                let r = if g == 0 { IntMatrix::zeros(0, h) } else { r };
                if !index
                    .block_psd_raw(g, t.doubled_slice(), r.data())
                    .map_err(|e| Error::format(&loc, e.to_string()))?
                {
                    return Err(Error::format(loc, "(T, R) violates the block psd condition"));
                }
                let c = coeff_at(&term.c, &format!("{loc}.c"))?;
                let key = JacobiKey::new(&t, &r).map_err(|e| Error::format(&loc, e.to_string()))?;
                if terms.insert(key, c).is_some() {
                    return Err(Error::format(loc, "duplicate index"));
                }
            }
            Ok(AnyExpansion::Jacobi(JacobiExpansion::from_map(
                g, index, doc.weight, doc.bound, terms,
            )))
        }
        other => Err(Error::format("kind", format!("unknown kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn siegel_round_trip_and_pruning() {
        let text = r#"{"kind":"siegel","genus":1,"weight":4,"bound":2,"terms":[{"T2":[[2]],"c":"240"},{"T2":[[0]],"c":"1"},{"T2":[[4]],"c":"0"}]}"#;
        let e = deserialize(text).unwrap();
        let AnyExpansion::Siegel(s) = &e else { panic!() };
        assert_eq!(s.len(), 2);
        let out = e.to_json();
        assert_eq!(
            out,
            "{\"kind\":\"siegel\",\"genus\":1,\"weight\":4,\"bound\":2,\"terms\":[{\"T2\":[[0]],\"c\":\"1\"},{\"T2\":[[2]],\"c\":\"240\"}]}\n"
        );
        assert_eq!(deserialize(&out).unwrap(), e);
    }

    #[test]
    fn rejections_carry_locations() {
        let odd = r#"{"kind":"siegel","genus":1,"weight":4,"bound":2,"terms":[{"T2":[[3]],"c":"1"}]}"#;
        match deserialize(odd) {
            Err(Error::Format { location, .. }) => assert_eq!(location, "terms[0].T2[0][0]"),
            other => panic!("{other:?}"),
        }
        let over = r#"{"kind":"siegel","genus":1,"weight":4,"bound":0,"terms":[{"T2":[[2]],"c":"1"}]}"#;
        assert!(matches!(deserialize(over), Err(Error::Format { .. })));
        let bad_c = r#"{"kind":"siegel","genus":1,"weight":4,"bound":1,"terms":[{"T2":[[2]],"c":"1.5"}]}"#;
        assert!(matches!(deserialize(bad_c), Err(Error::Format { .. })));
        let extra = r#"{"kind":"siegel","genus":1,"weight":4,"bound":1,"terms":[],"x":1}"#;
        assert!(matches!(deserialize(extra), Err(Error::Format { .. })));
        let jac = r#"{"kind":"jacobi","genus":1,"width":1,"index_gram_doubled":[[2]],"weight":0,"bound":1,"terms":[{"T2":[[0]],"R":[[1]],"c":"1"}]}"#;
        assert!(matches!(deserialize(jac), Err(Error::Format { .. })));
    }

    #[test]
    fn jacobi_round_trip() {
        let text = r#"{"kind":"jacobi","genus":1,"width":1,"index_gram_doubled":[[2]],"weight":0,"bound":1,"terms":[{"T2":[[2]],"R":[[-2]],"c":"1"},{"T2":[[0]],"R":[[0]],"c":"1"},{"T2":[[2]],"R":[[2]],"c":"1"}]}"#;
        let e = deserialize(text).unwrap();
        let out = e.to_json();
        assert_eq!(deserialize(&out).unwrap(), e);
        assert_eq!(deserialize(&out).unwrap().to_json(), out);
    }
}
