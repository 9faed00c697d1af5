//! JSON documents: endomorphism and family inputs, and reports with decimal strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::moves::MoveLog;
use crate::parabolic::ParabolicFamily;
use crate::words::{Alphabet, Endomorphism};

pub const SCHEMA_VERSION: u32 = 1;

/// Digits after the decimal point in emitted reals.
pub const DECIMALS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndomorphismDoc {
    pub schema_version: u32,
    pub rank: usize,
    pub generators: Vec<String>,
    pub images: BTreeMap<String, String>,
}

impl EndomorphismDoc {
    pub fn from_endomorphism(phi: &Endomorphism) -> Self {
        let a = phi.alphabet();
        EndomorphismDoc {
            schema_version: SCHEMA_VERSION,
            rank: a.rank(),
            generators: a.names().to_vec(),
            images: a.names().iter().cloned().zip(phi.images().iter().map(|w| a.format(w))).collect(),
        }
    }

    /// Every failure is a `Schema` error.
    pub fn to_endomorphism(&self) -> Result<Endomorphism> {
        let schema = |m: String| Error::Schema(m);
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.rank != self.generators.len() {
            return Err(schema(format!("rank {} but {} generators", self.rank, self.generators.len())));
        }
        let alphabet = Alphabet::new(self.generators.clone()).map_err(|e| schema(e.to_string()))?;
        if let Some(k) = self.images.keys().find(|k| !self.generators.contains(k)) {
            return Err(schema(format!("image given for unknown generator `{k}`")));
        }
        let images = self
            .generators
            .iter()
            .map(|g| {
                let s = self.images.get(g).ok_or_else(|| schema(format!("missing image of `{g}`")))?;
                alphabet.parse(s).map_err(|e| schema(format!("image of `{g}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Endomorphism::new(alphabet, images).map_err(|e| schema(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub subgroups: Vec<Vec<String>>,
}

impl FamilyDoc {
    pub fn to_family(&self, alphabet: &Alphabet) -> Result<ParabolicFamily> {
        let gens = self
            .subgroups
            .iter()
            .map(|s| s.iter().map(|w| alphabet.parse(w)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Schema(e.to_string()))?;
        ParabolicFamily::new(alphabet.clone(), gens).map_err(|e| Error::Schema(e.to_string()))
    }
}

pub fn parse_endomorphism(text: &str) -> Result<Endomorphism> {
    let doc: EndomorphismDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    doc.to_endomorphism()
}

pub fn parse_family(text: &str, alphabet: &Alphabet) -> Result<ParabolicFamily> {
    let doc: FamilyDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    doc.to_family(alphabet)
}

pub fn decimal(x: f64) -> String {
    format!("{x:.DECIMALS$}")
}

/// Replaces every non-integer JSON number with its decimal string.
pub fn stringify_reals(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Value::String(decimal(n.as_f64().expect("f64 number"))),
        Value::Array(xs) => Value::Array(xs.into_iter().map(stringify_reals).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, x)| (k, stringify_reals(x))).collect()),
        other => other,
    }
}

/// Serializes `body` with reals as decimal strings.
pub fn to_value<T: Serialize>(body: &T) -> Value {
    stringify_reals(serde_json::to_value(body).expect("report types serialize"))
}

/// Top-level report: `schema_version`, `kind` and the given sections in order.
pub fn document(kind: &str, sections: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    m.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    m.insert("kind".into(), Value::from(kind));
    for (k, v) in sections {
        m.insert(k.into(), v);
    }
    Value::Object(m)
}

/// Checks the envelope of an emitted report and re-parses its endomorphism section.
pub fn revalidate(text: &str) -> Result<Endomorphism> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if v.get("schema_version").and_then(Value::as_u64) != Some(u64::from(SCHEMA_VERSION)) {
        return Err(Error::Schema("missing or unsupported schema_version".into()));
    }
    let endo = v.get("endomorphism").ok_or_else(|| Error::Schema("missing endomorphism section".into()))?;
    let doc: EndomorphismDoc = serde_json::from_value(endo.clone()).map_err(|e| Error::Schema(e.to_string()))?;
    doc.to_endomorphism()
}

/// Input documents are accepted bare or inside an earlier report.
pub fn parse_input(text: &str) -> Result<Endomorphism> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    match v.get("endomorphism") {
        Some(_) => revalidate(text),
        None => parse_endomorphism(text),
    }
}

/// One JSON object per move, stretch factors as decimal strings.
pub fn move_log_lines(log: &MoveLog) -> String {
    log.moves.iter().map(|m| to_value(m).to_string() + "\n").collect()
}
