//! JSON map specifications (`"schema": "blowdyn/1"`) and lifted-map documents.
//!
//! Coefficients travel as strings (`"p/q"`, `"a+bi"`, decimals) so that
//! rationals survive a round trip exactly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::blowup::ChartTable;
use crate::germ::{GermError, InputGerm};
use crate::lifting::LiftedMap;
use crate::partition::{JordanStructure, PartitionError};
use crate::scalar::GaussRational;
use crate::series::{Monomial, PolyMap, TruncatedSeries, MAX_VARS};

pub const SCHEMA: &str = "blowdyn/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapSpecError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Structure(#[from] PartitionError),
    #[error("linear coefficient of z{col} in f{row} is {found}, the declared blocks require {expected}")]
    JordanMismatch { row: usize, col: usize, expected: String, found: String },
}

fn schema_err(field: impl Into<String>, message: impl Into<String>) -> MapSpecError {
    MapSpecError::Schema { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub mu: usize,
    pub lambda: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// Component, 1-based.
    pub j: usize,
    pub exp: Vec<u32>,
    pub coeff: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    /// Real rational coefficients only.
    Rational,
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_cap: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<usize>,
    #[serde(default)]
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub dim: usize,
    pub blocks: Vec<BlockSpec>,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub options: MapOptions,
}

fn parse_coeff(field: &str, s: &str, kind: Field) -> Result<GaussRational, MapSpecError> {
    let c: GaussRational = s.parse().map_err(|_| schema_err(field, format!("cannot parse coefficient {s:?}")))?;
    if kind == Field::Rational && !c.is_real() {
        return Err(schema_err(field, "complex coefficient with field = rational"));
    }
    Ok(c)
}

impl MapSpec {
    pub fn from_json(text: &str) -> Result<Self, MapSpecError> {
        serde_json::from_str(text).map_err(|e| MapSpecError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn structure(&self) -> Result<JordanStructure, MapSpecError> {
        let kind = self.options.field;
        let mut mu = Vec::new();
        let mut lambda = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            mu.push(b.mu);
            lambda.push(parse_coeff(&format!("blocks[{i}].lambda"), &b.lambda, kind)?);
        }
        let s = JordanStructure::new(mu, lambda)?;
        if s.n() != self.dim {
            return Err(schema_err("dim", format!("blocks add up to {}, dim is {}", s.n(), self.dim)));
        }
        Ok(s)
    }

    /// Validates and builds the germ. Linear terms may be omitted (the Jordan
    /// matrix is implied); those given must agree with it.
    pub fn to_germ(&self) -> Result<InputGerm, MapSpecError> {
        if let Some(tag) = &self.schema {
            if tag != SCHEMA {
                return Err(schema_err("schema", format!("expected {SCHEMA:?}, found {tag:?}")));
            }
        }
        let s = self.structure()?;
        let n = s.n();
        let kind = self.options.field;
        let mut seen = BTreeSet::new();
        let mut linear = Vec::new();
        let mut higher = Vec::new();
        for (i, t) in self.terms.iter().enumerate() {
            let field = format!("terms[{i}]");
            if t.j == 0 || t.j > n {
                return Err(schema_err(format!("{field}.j"), format!("component {} outside 1..={n}", t.j)));
            }
            if t.exp.len() != n {
                return Err(schema_err(format!("{field}.exp"), format!("expected {n} exponents, got {}", t.exp.len())));
            }
            let deg: u32 = t.exp.iter().sum();
            if deg == 0 {
                return Err(schema_err(format!("{field}.exp"), "constant terms are not allowed"));
            }
            if t.exp.iter().any(|&e| e > u8::MAX as u32) {
                return Err(schema_err(format!("{field}.exp"), "exponent too large"));
            }
            if let Some(cap) = self.options.degree_cap {
                if deg > cap {
                    return Err(schema_err(format!("{field}.exp"), format!("degree {deg} exceeds degree_cap {cap}")));
                }
            }
            if !seen.insert((t.j, t.exp.clone())) {
                return Err(schema_err(field, "duplicate term"));
            }
            let c = parse_coeff(&format!("{field}.coeff"), &t.coeff, kind)?;
            if deg == 1 {
                let col = t.exp.iter().position(|&e| e == 1).expect("degree one");
                linear.push((t.j - 1, col, c));
            } else {
                higher.push((t.j, t.exp.iter().map(|&e| e as u8).collect::<Vec<u8>>(), c));
            }
        }
        let jm = s.jordan_matrix();
        for (r, c, found) in linear {
            if found != jm[(r, c)] {
                return Err(MapSpecError::JordanMismatch {
                    row: r + 1,
                    col: c + 1,
                    expected: jm[(r, c)].to_string(),
                    found: found.to_string(),
                });
            }
        }
        InputGerm::with_terms(s, &higher).map_err(|e| match e {
            GermError::Structure(p) => MapSpecError::Structure(p),
            other => schema_err("terms", other.to_string()),
        })
    }

    /// Spec of a germ listing its nonlinear terms only.
    pub fn from_germ(germ: &InputGerm) -> Self {
        let s = germ.structure();
        let blocks = s.mu().iter().zip(s.lambda()).map(|(&mu, l)| BlockSpec { mu, lambda: l.to_string() }).collect();
        let terms = germ
            .nonlinear_terms()
            .into_iter()
            .map(|(j, e, c)| TermSpec { j, exp: e.iter().map(|&x| x as u32).collect(), coeff: c.to_string() })
            .collect();
        MapSpec { schema: Some(SCHEMA.into()), dim: s.n(), blocks, terms, options: MapOptions::default() }
    }

    pub fn precision_bits(&self) -> usize {
        self.options.precision_bits.unwrap_or(128)
    }
}

pub fn parse_map_spec(text: &str) -> Result<InputGerm, MapSpecError> {
    MapSpec::from_json(text)?.to_germ()
}

/// Serialized [`LiftedMap`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftedMapDoc {
    pub schema: String,
    pub blocks: Vec<BlockSpec>,
    pub stage: usize,
    pub cap: u32,
    pub table: ChartTable,
    /// All terms of the chart map `w ↦ G̃(w)`, linear ones included.
    pub terms: Vec<TermSpec>,
}

impl LiftedMapDoc {
    pub fn from_lifted(l: &LiftedMap) -> Self {
        let s = &l.structure;
        let n = s.n();
        let blocks = s.mu().iter().zip(s.lambda()).map(|(&mu, lam)| BlockSpec { mu, lambda: lam.to_string() }).collect();
        let mut terms: Vec<TermSpec> = l
            .map
            .components
            .iter()
            .enumerate()
            .flat_map(|(j, c)| {
                c.terms()
                    .map(move |(m, v)| TermSpec {
                        j: j + 1,
                        exp: m.exps(n).iter().map(|&x| x as u32).collect(),
                        coeff: v.to_string(),
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        terms.sort_by(|a, b| (a.j, a.exp.iter().sum::<u32>(), &a.exp).cmp(&(b.j, b.exp.iter().sum::<u32>(), &b.exp)));
        LiftedMapDoc { schema: SCHEMA.into(), blocks, stage: l.stage, cap: l.cap(), table: l.table.clone(), terms }
    }

    pub fn to_lifted(&self) -> Result<LiftedMap, MapSpecError> {
        if self.schema != SCHEMA {
            return Err(schema_err("schema", format!("expected {SCHEMA:?}, found {:?}", self.schema)));
        }
        let mut mu = Vec::new();
        let mut lambda = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            mu.push(b.mu);
            lambda.push(parse_coeff(&format!("blocks[{i}].lambda"), &b.lambda, Field::Gaussian)?);
        }
        let structure = JordanStructure::new(mu, lambda)?;
        let n = structure.n();
        if n > MAX_VARS {
            return Err(schema_err("blocks", "too many variables"));
        }
        let table = ChartTable::new(&structure, self.stage).map_err(|e| schema_err("stage", e.to_string()))?;
        if table != self.table {
            return Err(schema_err("table", "chart table does not match the structure and stage"));
        }
        let mut comps: Vec<TruncatedSeries<GaussRational>> = (0..n).map(|_| TruncatedSeries::zero(n, self.cap)).collect();
        for (i, t) in self.terms.iter().enumerate() {
            let field = format!("terms[{i}]");
            if t.j == 0 || t.j > n || t.exp.len() != n {
                return Err(schema_err(field, "bad component or exponent length"));
            }
            let e: Vec<u8> = t.exp.iter().map(|&x| x as u8).collect();
            comps[t.j - 1].add_term(Monomial::new(&e), parse_coeff(&format!("{field}.coeff"), &t.coeff, Field::Gaussian)?);
        }
        Ok(LiftedMap { structure, stage: self.stage, table, map: PolyMap::new(comps) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MapSpecError> {
        serde_json::from_str(text).map_err(|e| MapSpecError::Json(e.to_string()))
    }
}
