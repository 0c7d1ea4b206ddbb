//! Check outcomes and point-wise residual reduction.
//!
//! Per-point work runs on the rayon pool; the reduction is a sequential scan
//! over the collected results, so the reported maximum and worst point do not
//! depend on thread count or scheduling. Ties resolve to the lowest point
//! index.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};

/// Absolute tolerance for identities built from exact derivatives.
pub const TOL_EXACT: f64 = 1e-8;
/// Tolerance whenever a finite-difference oracle takes part.
pub const TOL_ORACLE: f64 = 1e-5;
/// Scaled cutoff below which a plane or a determinant counts as degenerate.
pub const DEGENERACY_CUTOFF: f64 = 1e-10;
/// Scaled singular-value cutoff used for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-8;
/// Largest acceptable condition number for the horizontal-lift solve.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Step used by finite-difference oracles.
pub const FD_STEP: f64 = 1e-4;

/// `raw / (1 + magnitude)`: residuals are reported relative to the size of
/// the quantities that enter the identity.
#[inline]
pub fn scaled(raw: f64, magnitude: f64) -> f64 {
    raw / (1.0 + magnitude)
}

pub(crate) fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "NOT-APPLICABLE")]
    NotApplicable,
    #[serde(rename = "ERROR")]
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "NOT-APPLICABLE",
            Status::Error => "ERROR",
        })
    }
}

/// Maximum of a residual over a point list.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMax {
    pub value: f64,
    pub index: Option<usize>,
}

impl PointMax {
    pub fn zero() -> Self {
        PointMax {
            value: 0.0,
            index: None,
        }
    }

    pub(crate) fn absorb(&mut self, value: f64, index: usize) {
        // NaN must never hide behind a finite maximum.
        if value > self.value || (value.is_nan() && !self.value.is_nan()) || self.index.is_none() {
            self.value = value;
            self.index = Some(index);
        }
    }

    pub fn merge(&self, other: &PointMax) -> PointMax {
        match (self.index, other.index) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
                let (x, y) = (key(self.value), key(other.value));
                if y > x || (y == x && b < a) {
                    other.clone()
                } else {
                    self.clone()
                }
            }
        }
    }
}

/// Evaluate `f` at every point (in parallel) and reduce each component by max.
pub fn max_over_points<F>(pts: &[Vec<f64>], width: usize, f: F) -> Result<Vec<PointMax>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let rows: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|p| f(p))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![PointMax::zero(); width];
    for (idx, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.len(), width);
        for (slot, &v) in out.iter_mut().zip(row) {
            slot.absorb(v, idx);
        }
    }
    Ok(out)
}

/// Single-residual form of [`max_over_points`].
pub fn max_over_points1<F>(pts: &[Vec<f64>], f: F) -> Result<PointMax>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut v = max_over_points(pts, 1, |p| f(p).map(|r| vec![r]))?;
    Ok(v.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub max_residual: f64,
    pub worst_point: Option<Vec<f64>>,
    pub points_used: usize,
    pub tolerance: f64,
    pub reason: Option<String>,
    /// Named sub-residuals and reported quantities.
    pub details: BTreeMap<String, f64>,
}

impl CheckResult {
    /// PASS iff every named residual is within `tol`.
    pub fn from_residuals(
        name: impl Into<String>,
        pts: &[Vec<f64>],
        parts: &[(&str, PointMax)],
        tol: f64,
    ) -> CheckResult {
        let mut worst = PointMax::zero();
        let mut details = BTreeMap::new();
        for (label, pm) in parts {
            details.insert(label.to_string(), pm.value);
            worst = worst.merge(pm);
        }
        let value = worst.value;
        let status = if value <= tol { Status::Pass } else { Status::Fail };
        CheckResult {
            name: name.into(),
            status,
            max_residual: value,
            worst_point: worst.index.map(|i| pts[i].clone()),
            points_used: pts.len(),
            tolerance: tol,
            reason: None,
            details,
        }
    }

    pub fn from_residual(name: impl Into<String>, pts: &[Vec<f64>], pm: PointMax, tol: f64) -> Self {
        let mut r = Self::from_residuals(name, pts, &[("residual", pm)], tol);
        r.details.clear();
        r
    }

    pub fn not_applicable(name: impl Into<String>, reason: impl Into<String>, tol: f64) -> Self {
        CheckResult {
            name: name.into(),
            status: Status::NotApplicable,
            max_residual: 0.0,
            worst_point: None,
            points_used: 0,
            tolerance: tol,
            reason: Some(reason.into()),
            details: BTreeMap::new(),
        }
    }

    pub fn error(name: impl Into<String>, err: &GeomError, tol: f64) -> Self {
        CheckResult {
            name: name.into(),
            status: Status::Error,
            max_residual: f64::NAN,
            worst_point: None,
            points_used: 0,
            tolerance: tol,
            reason: Some(err.to_string()),
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Forces FAIL with an explanation (e.g. a missing witness) while keeping
    /// the residual bookkeeping.
    pub fn fail_with(mut self, reason: impl Into<String>) -> Self {
        self.status = Status::Fail;
        self.reason = Some(reason.into());
        self
    }
}
