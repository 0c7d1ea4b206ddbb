//! Check registry and suite execution.

use std::collections::BTreeMap;

use crate::check::{CheckResult, Status, FD_STEP, TOL_EXACT, TOL_ORACLE};
use crate::error::{GeomError, Result};
use crate::expfam::alpha_connection;
use crate::geometry::{
    check_conjugate_involution, check_derivative_oracle, check_dual_curvature_identity, check_koszul_formula,
    check_kurose_constant, check_levi_civita_average, check_statistical_curvature_symmetries,
    check_statistical_structure, ChartSpec, ConnectionField, MetricField,
};
use crate::product::{
    check_almost_product, check_curvature_commutes_with_structure, check_pairing_identities,
    check_para_kahler_like, check_space_form, conjugate_parallelism_check, fit_space_form_constant,
    verify_flatness_theorem, ProductStructureField,
};
use crate::submersion::{
    check_isometric_fibers, check_oneill_identities, check_para_holomorphic, check_semi_riemannian_submersion,
    check_statistical_submersion, induced_fiber_manifold, verify_submersion_theorems, SubmersionSpec,
};

use super::manifest::{CheckSpec, Plan, Target};
use super::report::VerificationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Needs a metric and a connection.
    Manifold,
    /// Also needs an almost product structure.
    Structure,
    /// Needs a submersion block.
    Submersion,
}

pub const CHECKS: [(&str, CheckKind); 22] = [
    ("statistical_structure", CheckKind::Manifold),
    ("conjugate_involution", CheckKind::Manifold),
    ("levi_civita_average", CheckKind::Manifold),
    ("koszul_formula", CheckKind::Manifold),
    ("dual_curvature_identity", CheckKind::Manifold),
    ("statistical_curvature_symmetries", CheckKind::Manifold),
    ("kurose_constant", CheckKind::Manifold),
    ("derivative_oracle", CheckKind::Manifold),
    ("almost_product", CheckKind::Structure),
    ("pairing_identities", CheckKind::Structure),
    ("para_kahler_like", CheckKind::Structure),
    ("conjugate_parallelism", CheckKind::Structure),
    ("space_form", CheckKind::Structure),
    ("flatness_theorem", CheckKind::Structure),
    ("curvature_commutes_with_structure", CheckKind::Structure),
    ("semi_riemannian_submersion", CheckKind::Submersion),
    ("statistical_submersion", CheckKind::Submersion),
    ("para_holomorphic", CheckKind::Submersion),
    ("isometric_fibers", CheckKind::Submersion),
    ("oneill_identities", CheckKind::Submersion),
    ("fiber_para_kahler_like", CheckKind::Submersion),
    ("submersion_theorems", CheckKind::Submersion),
];

pub fn check_kind(name: &str) -> Option<CheckKind> {
    CHECKS.iter().find(|(n, _)| *n == name).map(|(_, k)| *k)
}

/// Finite-difference comparisons get the looser tolerance.
pub fn default_tolerance(name: &str) -> f64 {
    if name == "derivative_oracle" {
        TOL_ORACLE
    } else {
        TOL_EXACT
    }
}

fn renamed(mut r: CheckResult, name: &str) -> CheckResult {
    r.name = name.to_string();
    r
}

fn run_manifold_check(
    name: &str,
    g: &MetricField,
    conn: &ConnectionField,
    p: Option<&ProductStructureField>,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let need_p = || p.ok_or_else(|| GeomError::InvalidStructure("no almost product structure attached".into()));
    Ok(match name {
        "statistical_structure" => check_statistical_structure(g, conn, pts, tol)?,
        "conjugate_involution" => check_conjugate_involution(g, conn, pts, tol)?,
        "levi_civita_average" => check_levi_civita_average(g, conn, pts, tol)?,
        "koszul_formula" => check_koszul_formula(g, conn, pts, tol)?,
        "dual_curvature_identity" => check_dual_curvature_identity(g, conn, pts, tol)?,
        "statistical_curvature_symmetries" => check_statistical_curvature_symmetries(g, conn, pts, tol)?,
        "kurose_constant" => check_kurose_constant(g, conn, pts, tol)?,
        "derivative_oracle" => check_derivative_oracle(g, conn, pts, FD_STEP, tol)?,
        "almost_product" => check_almost_product(need_p()?, pts, tol)?,
        "pairing_identities" => check_pairing_identities(g, need_p()?, pts, tol)?,
        "para_kahler_like" => check_para_kahler_like(g, conn, need_p()?, pts, tol)?,
        "conjugate_parallelism" => conjugate_parallelism_check(g, conn, need_p()?, pts, tol)?,
        "space_form" => {
            let fit = fit_space_form_constant(g, conn, need_p()?, pts)?;
            check_space_form(g, conn, need_p()?, fit.c, pts, tol)?
        }
        "flatness_theorem" => verify_flatness_theorem(g, conn, need_p()?, pts, tol)?,
        "curvature_commutes_with_structure" => check_curvature_commutes_with_structure(conn, need_p()?, pts, tol)?,
        other => return Err(GeomError::Manifest(format!("`{other}` is not a single-manifold check"))),
    })
}

fn run_submersion_check(name: &str, spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64) -> Result<Vec<CheckResult>> {
    Ok(vec![match name {
        "semi_riemannian_submersion" => check_semi_riemannian_submersion(spec, pts, tol)?,
        "statistical_submersion" => check_statistical_submersion(spec, pts, tol)?,
        "para_holomorphic" => check_para_holomorphic(spec, pts, tol)?,
        "isometric_fibers" => check_isometric_fibers(spec, pts, tol)?,
        "oneill_identities" => check_oneill_identities(spec, pts, tol)?,
        "fiber_para_kahler_like" => {
            let fiber = induced_fiber_manifold(spec, None)?;
            let fpts = fiber.sample(pts.len())?;
            check_para_kahler_like(&fiber.metric, &fiber.connection, fiber.require_structure()?, &fpts, tol)?
        }
        "submersion_theorems" => return verify_submersion_theorems(spec, pts, tol),
        other => return Err(GeomError::Manifest(format!("`{other}` is not a submersion check"))),
    }])
}

/// Sample sets by point count, drawn once per run.
struct Samples<'a> {
    chart: &'a ChartSpec,
    metric: &'a MetricField,
    cache: BTreeMap<usize, Result<Vec<Vec<f64>>>>,
}

impl<'a> Samples<'a> {
    fn new(chart: &'a ChartSpec, metric: &'a MetricField) -> Self {
        Samples {
            chart,
            metric,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, count: usize) -> Result<Vec<Vec<f64>>> {
        let (chart, metric) = (self.chart, self.metric);
        self.cache
            .entry(count)
            .or_insert_with(|| {
                let pts = chart.sample_points(count)?;
                metric.validate_on(chart, &pts)?;
                Ok(pts)
            })
            .clone()
    }
}

fn run_one(
    check: &CheckSpec,
    label: &str,
    samples: &mut Samples,
    f: impl FnOnce(&[Vec<f64>], f64) -> Result<Vec<CheckResult>>,
) -> Vec<CheckResult> {
    let tol = check.tolerance.unwrap_or_else(|| default_tolerance(&check.name));
    let out = samples.get(check.points).and_then(|pts| f(&pts, tol));
    match out {
        Ok(rs) => rs,
        Err(e) => vec![CheckResult::error(label, &e, tol)],
    }
}

/// Runs every requested check in declaration order. Individual failures
/// become ERROR entries; the report is always complete.
pub fn run_suite(plan: &Plan) -> VerificationReport {
    let mut results = Vec::new();
    match &plan.target {
        Target::Explicit { manifold, submersion } => {
            let mut samples = Samples::new(&manifold.chart, &manifold.metric);
            for check in &plan.checks {
                let name = check.name.as_str();
                let rs = run_one(check, name, &mut samples, |pts, tol| {
                    if check_kind(name) == Some(CheckKind::Submersion) {
                        let spec = submersion
                            .as_ref()
                            .ok_or_else(|| GeomError::Manifest("no submersion block".into()))?;
                        let rs = run_submersion_check(name, spec, pts, tol)?;
                        Ok(if rs.len() == 1 {
                            rs.into_iter().map(|r| renamed(r, name)).collect()
                        } else {
                            rs
                        })
                    } else {
                        let r = run_manifold_check(
                            name,
                            &manifold.metric,
                            &manifold.connection,
                            manifold.structure.as_ref(),
                            pts,
                            tol,
                        )?;
                        Ok(vec![renamed(r, name)])
                    }
                });
                results.extend(rs);
            }
        }
        Target::Model(m) => match m.model.chart(plan.seed) {
            Err(e) => {
                for check in &plan.checks {
                    let tol = check.tolerance.unwrap_or_else(|| default_tolerance(&check.name));
                    results.push(CheckResult::error(&check.name, &e, tol));
                }
            }
            Ok(chart) => {
                let mut samples = Samples::new(&chart, &m.metric);
                for &alpha in &m.alphas {
                    let conn = alpha_connection(&m.model, alpha);
                    let p = m.structures.as_ref().and_then(|(p1, pm1)| {
                        if alpha == 1.0 {
                            Some(p1)
                        } else if alpha == -1.0 {
                            Some(pm1)
                        } else {
                            None
                        }
                    });
                    for check in &plan.checks {
                        let label = format!("{}[alpha={}]", check.name, alpha);
                        let tol = check.tolerance.unwrap_or_else(|| default_tolerance(&check.name));
                        if check_kind(&check.name) == Some(CheckKind::Structure) && p.is_none() {
                            results.push(CheckResult::not_applicable(
                                &label,
                                format!("no almost product structure is attached at alpha = {alpha}"),
                                tol,
                            ));
                            continue;
                        }
                        let rs = run_one(check, &label, &mut samples, |pts, tol| {
                            let conn = conn.clone()?;
                            let r = run_manifold_check(&check.name, &m.metric, &conn, p, pts, tol)?;
                            Ok(vec![renamed(r, &label)])
                        });
                        results.extend(rs);
                    }
                }
            }
        },
    }
    VerificationReport {
        fixture: plan.id.clone(),
        seed: plan.seed,
        points: plan.points,
        results,
    }
}

/// Status counts in report order.
pub fn tally(results: &[CheckResult]) -> BTreeMap<Status, usize> {
    let mut t = BTreeMap::new();
    for r in results {
        *t.entry(r.status).or_insert(0) += 1;
    }
    t
}
