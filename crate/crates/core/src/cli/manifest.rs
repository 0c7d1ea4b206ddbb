//! Manifest format: a JSON tree describing one verification run.
//!
//! Component keys name coordinates: metric entries are `"x,y"`, connection
//! entries `"k;i,j"` for `Gamma^k_ij`, structure entries `"i;j"` for `P^i_j`.
//! An absent connection means Levi-Civita; an empty one means zero.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::expfam::{builtin_model, exp_para_structures, fisher_metric, ExpFamilyModel};
use crate::expr::{parse_expression, ScalarField};
use crate::geometry::{ChartSpec, ConnectionField, MetricField};
use crate::manifold::ManifoldSpec;
use crate::product::ProductStructureField;
use crate::submersion::SubmersionSpec;

use super::suite::{check_kind, CheckKind};

pub const DEFAULT_POINTS: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartBlock {
    pub coords: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

/// Chart plus fields; used for the total space and for a submersion base.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceBlock {
    pub chart: Option<ChartBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub name: String,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, f64>,
    #[serde(default = "default_alphas")]
    pub alpha: Vec<f64>,
    /// Rows `a_i^j`; enables the structure checks at `alpha = +-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub involution: Option<Vec<Vec<f64>>>,
}

fn default_alphas() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckEntry {
    Name(String),
    Detailed {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
}

impl CheckEntry {
    pub fn name(&self) -> &str {
        match self {
            CheckEntry::Name(n) => n,
            CheckEntry::Detailed { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submersion: Option<SpaceBlock>,
    pub checks: Vec<CheckEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Command-line settings that take precedence over the manifest.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelTarget {
    pub model: ExpFamilyModel,
    pub metric: MetricField,
    pub alphas: Vec<f64>,
    pub structures: Option<(ProductStructureField, ProductStructureField)>,
}

#[derive(Debug, Clone)]
pub enum Target {
    Explicit {
        manifold: ManifoldSpec,
        submersion: Option<SubmersionSpec>,
    },
    Model(ModelTarget),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub name: String,
    pub points: usize,
    /// Explicit tolerance; `None` means the check's default.
    pub tolerance: Option<f64>,
}

/// A validated manifest, ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub id: String,
    pub seed: u64,
    pub points: usize,
    pub tolerance: Option<f64>,
    pub target: Target,
    pub checks: Vec<CheckSpec>,
}

fn err(loc: &str, e: impl std::fmt::Display) -> GeomError {
    GeomError::Manifest(format!("{loc}: {e}"))
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    parse_manifest(&text)
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    serde_json::from_str(text).map_err(|e| {
        GeomError::Manifest(format!("line {}, column {}: {e}", e.line(), e.column()))
    })
}

fn coord_index(coords: &[String], name: &str, loc: &str) -> Result<usize> {
    coords
        .iter()
        .position(|c| c == name.trim())
        .ok_or_else(|| err(loc, format!("unknown coordinate `{}`", name.trim())))
}

fn split_key<'a>(key: &'a str, sep: char, loc: &str) -> Result<(&'a str, &'a str)> {
    key.split_once(sep)
        .ok_or_else(|| err(loc, format!("key `{key}` lacks `{sep}`")))
}

struct Ctx<'a> {
    coords: &'a [String],
    params: &'a BTreeMap<String, f64>,
}

impl Ctx<'_> {
    fn expr(&self, text: &str, loc: &str) -> Result<ScalarField> {
        parse_expression(text, self.coords, self.params).map_err(|e| err(loc, e))
    }
}

fn build_chart(block: &ChartBlock, seed: u64, loc: &str) -> Result<ChartSpec> {
    ChartSpec::new(
        block.coords.clone(),
        block.bounds.iter().map(|b| (b[0], b[1])).collect(),
        seed,
    )
    .map_err(|e| err(loc, e))
}

fn build_space(block: &SpaceBlock, params: &BTreeMap<String, f64>, seed: u64, loc: &str) -> Result<ManifoldSpec> {
    let chart_block = block.chart.as_ref().ok_or_else(|| err(loc, "missing chart"))?;
    let chart = build_chart(chart_block, seed, &format!("{loc}chart"))?;
    let n = chart.dim();
    let ctx = Ctx {
        coords: &chart.coords,
        params,
    };
    let metric_block = block.metric.as_ref().ok_or_else(|| err(loc, "missing metric"))?;
    let mut entries: BTreeMap<(usize, usize), ScalarField> = BTreeMap::new();
    for (key, text) in metric_block {
        let l = format!("{loc}metric[{key}]");
        let (a, b) = split_key(key, ',', &l)?;
        let (i, j) = (coord_index(&chart.coords, a, &l)?, coord_index(&chart.coords, b, &l)?);
        let f = ctx.expr(text, &l)?;
        let slot = (i.min(j), i.max(j));
        if let Some(prev) = entries.get(&slot) {
            if prev.to_text(&chart.coords) != f.to_text(&chart.coords) {
                return Err(err(&l, "conflicts with its transposed entry"));
            }
        }
        entries.insert(slot, f);
    }
    let metric = MetricField::from_entries(n, &entries).map_err(|e| err(&format!("{loc}metric"), e))?;
    let connection = match &block.connection {
        None => None,
        Some(m) => {
            let mut entries = BTreeMap::new();
            for (key, text) in m {
                let l = format!("{loc}connection[{key}]");
                let (k, ij) = split_key(key, ';', &l)?;
                let (i, j) = split_key(ij, ',', &l)?;
                let idx = (
                    coord_index(&chart.coords, k, &l)?,
                    coord_index(&chart.coords, i, &l)?,
                    coord_index(&chart.coords, j, &l)?,
                );
                entries.insert(idx, ctx.expr(text, &l)?);
            }
            Some(ConnectionField::from_entries(n, &entries).map_err(|e| err(&format!("{loc}connection"), e))?)
        }
    };
    let structure = match &block.structure {
        None => None,
        Some(m) => {
            let mut entries = BTreeMap::new();
            for (key, text) in m {
                let l = format!("{loc}structure[{key}]");
                let (i, j) = split_key(key, ';', &l)?;
                let idx = (coord_index(&chart.coords, i, &l)?, coord_index(&chart.coords, j, &l)?);
                entries.insert(idx, ctx.expr(text, &l)?);
            }
            Some(ProductStructureField::from_entries(n, &entries).map_err(|e| err(&format!("{loc}structure"), e))?)
        }
    };
    ManifoldSpec::new(chart, metric, connection, structure).map_err(|e| err(loc, e))
}

fn build_model(block: &ModelBlock) -> Result<ModelTarget> {
    let model = builtin_model(&block.name, &block.hyperparams).map_err(|e| err("model", e))?;
    let metric = fisher_metric(&model).map_err(|e| err("model", e))?;
    if block.alpha.is_empty() {
        return Err(err("model.alpha", "at least one alpha is required"));
    }
    if let Some(a) = block.alpha.iter().find(|a| !a.is_finite()) {
        return Err(err("model.alpha", format!("non-finite alpha {a}")));
    }
    let structures = match &block.involution {
        None => None,
        Some(rows) => {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(err("model.involution", "must be a square matrix"));
            }
            let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            Some(exp_para_structures(&model, &a).map_err(|e| err("model.involution", e))?)
        }
    };
    Ok(ModelTarget {
        model,
        metric,
        alphas: block.alpha.clone(),
        structures,
    })
}

impl Manifest {
    fn space(&self) -> SpaceBlock {
        SpaceBlock {
            chart: self.chart.clone(),
            metric: self.metric.clone(),
            connection: self.connection.clone(),
            structure: self.structure.clone(),
        }
    }

    /// Validates everything and builds the fields.
    pub fn plan(&self, ov: Overrides) -> Result<Plan> {
        let seed = ov.seed.unwrap_or(self.seed);
        let points = ov.points.or(self.points).unwrap_or(DEFAULT_POINTS);
        if points == 0 {
            return Err(err("points", "must be positive"));
        }
        let tolerance = ov.tolerance.or(self.tolerance);
        if let Some(t) = tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(err("tolerance", format!("must be positive, got {t}")));
            }
        }
        let explicit = self.metric.is_some();
        let target = match (&self.model, explicit) {
            (Some(_), true) => return Err(err("manifest", "metric and model blocks are mutually exclusive")),
            (None, false) => return Err(err("manifest", "either a metric or a model block is required")),
            (Some(m), false) => {
                if self.chart.is_some() || self.connection.is_some() || self.structure.is_some() {
                    return Err(err("manifest", "a model block supplies its own chart and fields"));
                }
                if self.submersion.is_some() {
                    return Err(err("manifest", "submersions of models are not supported"));
                }
                Target::Model(build_model(m)?)
            }
            (None, true) => {
                let manifold = build_space(&self.space(), &self.params, seed, "")?;
                let submersion = match &self.submersion {
                    None => None,
                    Some(b) => {
                        let base = build_space(b, &self.params, seed, "submersion.")?;
                        let nb = base.dim();
                        if nb >= manifold.dim() || base.chart.coords[..] != manifold.chart.coords[..nb] {
                            return Err(err(
                                "submersion",
                                "base coordinates must be a proper leading part of the total coordinates",
                            ));
                        }
                        Some(SubmersionSpec::new(manifold.clone(), base).map_err(|e| err("submersion", e))?)
                    }
                };
                Target::Explicit { manifold, submersion }
            }
        };
        if self.checks.is_empty() {
            return Err(err("checks", "no checks requested"));
        }
        let mut checks = Vec::with_capacity(self.checks.len());
        for entry in &self.checks {
            let name = entry.name();
            let loc = format!("checks[{name}]");
            let kind = check_kind(name).ok_or_else(|| err(&loc, "unknown check"))?;
            match (&target, kind) {
                (Target::Explicit { submersion: None, .. }, CheckKind::Submersion) => {
                    return Err(err(&loc, "requires a submersion block"))
                }
                (Target::Explicit { manifold, .. }, CheckKind::Structure) if manifold.structure.is_none() => {
                    return Err(err(&loc, "requires a structure"))
                }
                (Target::Model(m), CheckKind::Structure) if m.structures.is_none() => {
                    return Err(err(&loc, "requires model.involution"))
                }
                (Target::Model(_), CheckKind::Submersion) => return Err(err(&loc, "requires a submersion block")),
                _ => {}
            }
            let (p, t) = match entry {
                CheckEntry::Name(_) => (None, None),
                CheckEntry::Detailed { points, tolerance, .. } => (*points, *tolerance),
            };
            if p == Some(0) {
                return Err(err(&loc, "points must be positive"));
            }
            if let Some(t) = t {
                if !(t.is_finite() && t > 0.0) {
                    return Err(err(&loc, format!("tolerance must be positive, got {t}")));
                }
            }
            checks.push(CheckSpec {
                name: name.to_string(),
                points: p.unwrap_or(points),
                tolerance: t.or(tolerance),
            });
        }
        Ok(Plan {
            id: self.id.clone(),
            seed,
            points,
            tolerance,
            target,
            checks,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> String {
        r#"{
  "id": "t",
  "params": {"k": 2},
  "chart": {"coords": ["x", "y"], "box": [[-1, 1], [-1, 1]]},
  "metric": {"x,x": "k", "y,y": "-1"},
  "connection": {},
  "structure": {"x;y": "1", "y;x": "1"},
  "checks": ["statistical_structure", "para_kahler_like", "almost_product", "pairing_identities"]
}"#
        .to_string()
    }

    #[test]
    fn loads_and_plans() {
        let m = parse_manifest(&base()).unwrap();
        assert_eq!(m.checks.len(), 4);
        let plan = m.plan(Overrides::default()).unwrap();
        assert_eq!(plan.points, DEFAULT_POINTS);
        match plan.target {
            Target::Explicit { manifold, submersion } => {
                assert!(submersion.is_none());
                let g = manifold.metric.value_at(&[0.0, 0.0]).unwrap();
                assert_eq!(g[(0, 0)], 2.0);
                let p = manifold.structure.unwrap().value_at(&[0.0, 0.0]).unwrap();
                assert_eq!(p[(0, 1)], 1.0);
            }
            _ => panic!("expected explicit target"),
        }
    }

    #[test]
    fn round_trips_through_json() {
        let m = parse_manifest(&base()).unwrap();
        assert_eq!(parse_manifest(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn undeclared_coordinate_is_named() {
        let text = base().replace(r#""y,y": "-1""#, r#""y,y": "-1 + z""#);
        let e = parse_manifest(&text).unwrap().plan(Overrides::default()).unwrap_err();
        assert!(e.to_string().contains('z'), "{e}");
        let text = base().replace(r#""y,y""#, r#""z,y""#);
        let e = parse_manifest(&text).unwrap().plan(Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("`z`"), "{e}");
    }

    #[test]
    fn metric_and_model_are_exclusive() {
        let text = base().replace(r#""connection": {},"#, r#""connection": {}, "model": {"name": "normal"},"#);
        let e = parse_manifest(&text).unwrap().plan(Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("mutually exclusive"), "{e}");
    }

    #[test]
    fn rejects_unknown_checks_and_fields() {
        let text = base().replace("\"almost_product\"", "\"almost_everything\"");
        assert!(parse_manifest(&text).unwrap().plan(Overrides::default()).is_err());
        let text = base().replace(r#""id": "t","#, r#""id": "t", "colour": "red","#);
        assert!(parse_manifest(&text).is_err());
        let text = base().replace(r#""structure": {"x;y": "1", "y;x": "1"},"#, "");
        let e = parse_manifest(&text).unwrap().plan(Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("requires a structure"), "{e}");
    }

    #[test]
    fn overrides_take_precedence() {
        let text = base().replace(r#""id": "t","#, r#""id": "t", "seed": 3, "points": 7,"#);
        let plan = parse_manifest(&text)
            .unwrap()
            .plan(Overrides {
                seed: Some(9),
                points: None,
                tolerance: Some(1e-6),
            })
            .unwrap();
        assert_eq!(plan.seed, 9);
        assert_eq!(plan.points, 7);
        assert!(plan.checks.iter().all(|c| c.points == 7 && c.tolerance == Some(1e-6)));
    }
}
