//! JSON interchange:
//!
//! ```json
//! {"schema":{"R":2},"query":"q(x) :- R(x,y).",
//!  "examples":[{"label":"+","facts":[["R","a","b"]],"tuple":["a"]}]}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::parse::instance_from_rows;
use super::{parse_cq, Cq, DataExample, LabeledExampleSet, Schema};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(default)]
    pub schema: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default)]
    pub examples: Vec<JsonExample>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonExample {
    pub label: String,
    pub facts: Vec<Vec<String>>,
    pub tuple: Vec<String>,
}

fn example_to_json(e: &DataExample, label: &str) -> JsonExample {
    let mut facts: Vec<Vec<String>> = e
        .facts()
        .iter()
        .map(|f| {
            std::iter::once(f.relation.to_string())
                .chain(f.args.iter().map(|&a| e.value_name(a).to_string()))
                .collect()
        })
        .collect();
    facts.sort();
    JsonExample {
        label: label.to_string(),
        facts,
        tuple: e.tuple_names().into_iter().map(String::from).collect(),
    }
}

/// Builds the interchange document.
pub fn to_document(q: Option<&Cq>, e: &LabeledExampleSet) -> Result<Document> {
    let mut schema = e.schema()?;
    if let Some(q) = q {
        schema = schema.merge(&q.schema())?;
    }
    let mut examples: Vec<JsonExample> =
        e.positives().iter().map(|p| example_to_json(p, "+")).collect();
    examples.extend(e.negatives().iter().map(|n| example_to_json(n, "-")));
    Ok(Document {
        schema: schema.iter().map(|(r, a)| (r.to_string(), a)).collect(),
        query: q.map(|q| q.to_string()),
        examples,
    })
}

pub fn to_json(q: Option<&Cq>, e: &LabeledExampleSet) -> Result<String> {
    let doc = to_document(q, e)?;
    serde_json::to_string_pretty(&doc).map_err(|err| Error::Io(err.to_string()))
}

/// Parses a document into its query (if any) and examples, checking both
/// against the declared schema.
pub fn from_json(text: &str) -> Result<(Option<Cq>, LabeledExampleSet)> {
    let doc: Document = serde_json::from_str(text).map_err(|err| Error::Syntax {
        line: err.line(),
        message: err.to_string(),
    })?;
    let mut schema = Schema::new();
    for (r, &a) in &doc.schema {
        schema.insert(r, a)?;
    }
    let query = doc.query.as_deref().map(parse_cq).transpose()?;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for ex in &doc.examples {
        let inst = instance_from_rows(&ex.facts)?;
        let refs: Vec<&str> = ex.tuple.iter().map(String::as_str).collect();
        let e = DataExample::with_tuple(inst, &refs)?;
        match ex.label.as_str() {
            "+" => positives.push(e),
            "-" => negatives.push(e),
            other => return Err(Error::syntax(0, format!("unknown label `{other}`"))),
        }
    }
    let set = LabeledExampleSet::new(positives, negatives)?;
    if !schema.is_empty() {
        let used = match &query {
            Some(q) => set.schema()?.merge(&q.schema())?,
            None => set.schema()?,
        };
        for (r, a) in used.iter() {
            match schema.arity(r) {
                None => return Err(Error::UnknownRelation(r.to_string())),
                Some(b) if a != b => {
                    return Err(Error::ArityMismatch(format!(
                        "`{r}` declared with arity {b}, used with {a}"
                    )))
                }
                _ => {}
            }
        }
    }
    Ok((query, set))
}
