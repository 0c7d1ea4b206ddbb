//! Canonical report serialization.
//!
//! Keys are sorted, floats are written as `%.12e`, non-finite floats as
//! `null`, indentation is two spaces and lines end in LF. Timing is not part
//! of the report, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use crate::check::{CheckResult, Status};
use crate::error::Result;

use super::suite::tally;

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub fixture: String,
    pub seed: u64,
    pub points: usize,
    pub results: Vec<CheckResult>,
}

impl VerificationReport {
    /// 2 if any check errored, else 1 if any failed, else 0.
    pub fn exit_code(&self) -> i32 {
        let t = tally(&self.results);
        if t.contains_key(&Status::Error) {
            2
        } else if t.contains_key(&Status::Fail) {
            1
        } else {
            0
        }
    }

    pub fn to_canonical_json(&self) -> String {
        let t = tally(&self.results);
        let count = |s: Status| Canon::Int(*t.get(&s).unwrap_or(&0) as u64);
        let summary = Canon::obj([
            ("error", count(Status::Error)),
            ("fail", count(Status::Fail)),
            ("not_applicable", count(Status::NotApplicable)),
            ("pass", count(Status::Pass)),
        ]);
        let root = Canon::obj([
            ("checks", Canon::Arr(self.results.iter().map(result_json).collect())),
            ("fixture", Canon::Str(self.fixture.clone())),
            ("points", Canon::Int(self.points as u64)),
            ("seed", Canon::Int(self.seed)),
            ("summary", summary),
        ]);
        let mut out = String::new();
        root.write(&mut out, 0);
        out.push('\n');
        out
    }

    pub fn emit(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_json())?;
        Ok(())
    }

    /// One line per check for terminals.
    pub fn summary_lines(&self) -> Vec<String> {
        self.results
            .iter()
            .map(|r| {
                let mut line = format!("{:<15} {}  residual={}", r.status.to_string(), r.name, format_float(r.max_residual));
                if let Some(reason) = &r.reason {
                    line.push_str(&format!("  ({reason})"));
                }
                line
            })
            .collect()
    }
}

fn result_json(r: &CheckResult) -> Canon {
    Canon::obj([
        (
            "details",
            Canon::Obj(r.details.iter().map(|(k, v)| (k.clone(), Canon::Float(*v))).collect()),
        ),
        ("max_residual", Canon::Float(r.max_residual)),
        ("name", Canon::Str(r.name.clone())),
        ("points_used", Canon::Int(r.points_used as u64)),
        ("reason", r.reason.clone().map_or(Canon::Null, Canon::Str)),
        ("status", Canon::Str(r.status.to_string())),
        ("tolerance", Canon::Float(r.tolerance)),
        (
            "worst_point",
            r.worst_point
                .as_ref()
                .map_or(Canon::Null, |p| Canon::Arr(p.iter().map(|x| Canon::Float(*x)).collect())),
        ),
    ])
}

/// `%.12e` as in C: mantissa with 12 decimals, signed exponent of at least
/// two digits.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

enum Canon {
    Null,
    Int(u64),
    Float(f64),
    Str(String),
    Arr(Vec<Canon>),
    Obj(BTreeMap<String, Canon>),
}

impl Canon {
    fn obj<const N: usize>(entries: [(&str, Canon); N]) -> Canon {
        Canon::Obj(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    fn write(&self, out: &mut String, indent: usize) {
        let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat(' ').take(n));
        match self {
            Canon::Null => out.push_str("null"),
            Canon::Int(i) => out.push_str(&i.to_string()),
            Canon::Float(x) => out.push_str(&format_float(*x)),
            Canon::Str(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
            Canon::Arr(items) if items.is_empty() => out.push_str("[]"),
            Canon::Obj(map) if map.is_empty() => out.push_str("{}"),
            Canon::Arr(items) => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    pad(out, indent + 2);
                    item.write(out, indent + 2);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push(']');
            }
            Canon::Obj(map) => {
                out.push_str("{\n");
                for (i, (k, v)) in map.iter().enumerate() {
                    pad(out, indent + 2);
                    out.push_str(&serde_json::to_string(k).expect("key serializes"));
                    out.push_str(": ");
                    v.write(out, indent + 2);
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_c_exponent_format() {
        assert_eq!(format_float(1.0), "1.000000000000e+00");
        assert_eq!(format_float(-2.5e-17), "-2.500000000000e-17");
        assert_eq!(format_float(1.234e120), "1.234000000000e+120");
        assert_eq!(format_float(0.0), "0.000000000000e+00");
        assert_eq!(format_float(f64::NAN), "null");
        assert_eq!(format_float(f64::INFINITY), "null");
    }

    #[test]
    fn report_is_valid_sorted_json() {
        let r = CheckResult::not_applicable("b", "why", 1e-8).with_detail("z", 1.0).with_detail("a", f64::NAN);
        let rep = VerificationReport {
            fixture: "f".into(),
            seed: 3,
            points: 5,
            results: vec![r, CheckResult::error("a", &crate::GeomError::NoNondegeneratePlane, 1e-8)],
        };
        let text = rep.to_canonical_json();
        assert!(text.ends_with("}\n") && !text.contains('\r'));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["checks"][0]["status"], "NOT-APPLICABLE");
        assert!(v["checks"][1]["max_residual"].is_null());
        assert!(v["checks"][0]["details"]["a"].is_null());
        assert_eq!(v["summary"]["error"], 1);
        assert_eq!(rep.exit_code(), 2);
        let keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        assert_eq!(keys, ["checks", "fixture", "points", "seed", "summary"]);
        let first = text.find("\"details\"").unwrap();
        assert!(text[first..].find("\"a\"").unwrap() < text[first..].find("\"z\"").unwrap());
    }
}
