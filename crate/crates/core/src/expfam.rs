//! Exponential families in natural parameters: the potential `psi`, its
//! Hessian as Fisher metric, alpha-connections and the induced pair of
//! almost product structures.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{GeomError, Result};
use crate::expr::{parse_expression, BinaryOp, ExprNode, ScalarField, UnaryOp};
use crate::geometry::{gidx, ChartSpec, ConnectionField, ConnectionSource, MetricField};
use crate::jet::{Jet, JetMatrix, MAX_DIM};
use crate::product::{ProductStructureField, StructureSource};

pub const MODEL_NAMES: [&str; 4] = ["poisson", "normal", "multinomial", "dirichlet"];

/// Points checked for positive definiteness when building a Fisher metric.
const PD_PROBE_POINTS: usize = 16;

#[derive(Debug, Clone)]
pub struct ExpFamilyModel {
    pub name: String,
    pub dim: usize,
    pub psi: ScalarField,
    pub coords: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub hyperparams: BTreeMap<String, f64>,
}

impl ExpFamilyModel {
    pub fn chart(&self, seed: u64) -> Result<ChartSpec> {
        ChartSpec::new(self.coords.clone(), self.bounds.clone(), seed)
    }
}

fn natural_coords(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("xi{i}")).collect()
}

fn count_param(h: &BTreeMap<String, f64>, key: &str, default: usize, min: usize) -> Result<usize> {
    let v = h.get(key).copied().unwrap_or(default as f64);
    if !(v.is_finite() && v.fract() == 0.0 && v >= min as f64) {
        return Err(GeomError::InvalidModel(format!("{key} must be an integer >= {min}, got {v}")));
    }
    Ok(v as usize)
}

fn reject_unknown(h: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    match h.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(GeomError::InvalidModel(format!("unknown hyperparameter `{k}`"))),
        None => Ok(()),
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(GeomError::InvalidModel(format!(
            "model dimension {n} is outside 1..={MAX_DIM}"
        )));
    }
    Ok(())
}

/// One of the built-in models.
///
/// Hyperparameters: `multinomial` takes `categories` (m >= 2, default 3) and
/// `trials` (N >= 1, default 1); `dirichlet` takes `dimension` (>= 2,
/// default 2). `poisson` and `normal` take none.
pub fn builtin_model(name: &str, hyperparams: &BTreeMap<String, f64>) -> Result<ExpFamilyModel> {
    let none = BTreeMap::new();
    let (dim, psi, bounds) = match name {
        "poisson" => {
            reject_unknown(hyperparams, &[])?;
            let c = natural_coords(1);
            (1, parse_expression("exp(xi1)", &c, &none)?, vec![(-1.0, 1.0)])
        }
        "normal" => {
            reject_unknown(hyperparams, &[])?;
            let c = natural_coords(2);
            let params = [("pi".to_string(), std::f64::consts::PI)].into();
            let psi = parse_expression("-(xi1^2)/(4*xi2) + 0.5*log(-pi/xi2)", &c, &params)?;
            (2, psi, vec![(-1.0, 1.0), (-2.0, -0.2)])
        }
        "multinomial" => {
            reject_unknown(hyperparams, &["categories", "trials"])?;
            let m = count_param(hyperparams, "categories", 3, 2)?;
            let trials = count_param(hyperparams, "trials", 1, 1)?;
            let n = m - 1;
            check_dim(n)?;
            let c = natural_coords(n);
            let sum: Vec<String> = c.iter().map(|x| format!("exp({x})")).collect();
            let text = format!("{trials}*log(1 + {})", sum.join(" + "));
            (n, parse_expression(&text, &c, &none)?, vec![(-1.0, 1.0); n])
        }
        "dirichlet" => {
            reject_unknown(hyperparams, &["dimension"])?;
            let n = count_param(hyperparams, "dimension", 2, 2)?;
            check_dim(n)?;
            let lg = |e: ExprNode| ExprNode::unary(UnaryOp::LnGamma, e);
            let total = (1..n).fold(ExprNode::Var(0), |acc, i| ExprNode::binary(BinaryOp::Add, acc, ExprNode::Var(i)));
            let parts = (1..n).fold(lg(ExprNode::Var(0)), |acc, i| {
                ExprNode::binary(BinaryOp::Add, acc, lg(ExprNode::Var(i)))
            });
            let psi = ScalarField::from_expr(ExprNode::binary(BinaryOp::Sub, parts, lg(total)), n)?;
            (n, psi, vec![(0.5, 3.0); n])
        }
        other => {
            return Err(GeomError::InvalidModel(format!(
                "unknown model `{other}` (expected one of {})",
                MODEL_NAMES.join(", ")
            )))
        }
    };
    Ok(ExpFamilyModel {
        name: name.to_string(),
        dim,
        psi,
        coords: natural_coords(dim),
        bounds,
        hyperparams: hyperparams.clone(),
    })
}

/// `g_ij = d_i d_j psi`; fails if the Hessian is not positive definite at
/// the box centre or at a fixed probe sample.
pub fn fisher_metric(model: &ExpFamilyModel) -> Result<MetricField> {
    let n = model.dim;
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        let di = model.psi.derivative(i)?;
        for j in i..n {
            upper.push(di.derivative(j)?);
        }
    }
    let g = MetricField::from_upper(n, upper)?;
    let chart = model.chart(0)?;
    let mut probes = chart.sample_points(PD_PROBE_POINTS)?;
    probes.push(chart.center());
    for p in &probes {
        let (m, _) = g.metric_matrices_at(p)?;
        let eig = SymmetricEigen::new(m);
        if eig.eigenvalues.iter().any(|&x| x <= 0.0) {
            return Err(GeomError::Signature {
                expected: (n, 0),
                found: (eig.eigenvalues.iter().filter(|&&x| x > 0.0).count(), n),
            });
        }
    }
    Ok(g)
}

#[derive(Debug)]
struct AlphaConnection {
    metric: MetricField,
    alpha: f64,
}

impl ConnectionSource for AlphaConnection {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet>> {
        let n = self.dim();
        let factor = 0.5 * (1.0 - self.alpha);
        let mut out = vec![Jet::ZERO; n * n * n];
        if factor == 0.0 {
            return Ok(out);
        }
        let (_, ginv) = self.metric.inverse_jet_at(p)?;
        let dg = self.metric.partial_jets_at(p)?;
        for i in 0..n {
            for j in i..n {
                for t in 0..n {
                    let v: Jet = (0..n).map(|s| dg[s].get(i, j) * ginv.get(s, t)).sum::<Jet>() * factor;
                    out[gidx(n, t, i, j)] = v;
                    out[gidx(n, t, j, i)] = v;
                }
            }
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("alpha-connection with alpha = {}", self.alpha)
    }
}

/// `Gamma^t_ij = (1 - alpha)/2 * d_s g_ij * g^st`.
pub fn alpha_connection(model: &ExpFamilyModel, alpha: f64) -> Result<ConnectionField> {
    if !alpha.is_finite() {
        return Err(GeomError::InvalidArgument(format!("alpha must be finite, got {alpha}")));
    }
    Ok(ConnectionField::from_source(Arc::new(AlphaConnection {
        metric: fisher_metric(model)?,
        alpha,
    })))
}

/// `(P^(-1))_i^j = -a_s^k g_ki g^sj`, stored as the matrix `-G^-1 a G`.
#[derive(Debug)]
struct MetricTwisted {
    metric: MetricField,
    a: DMatrix<f64>,
}

impl StructureSource for MetricTwisted {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn jet_at(&self, p: &[f64]) -> Result<JetMatrix> {
        let n = self.dim();
        let (g, ginv) = self.metric.inverse_jet_at(p)?;
        // column i holds the image of d_i: entry (j, i) = -sum a[s][k] g[k][i] ginv[s][j]
        Ok(JetMatrix::from_fn(n, |j, i| {
            let mut acc = Jet::ZERO;
            for s in 0..n {
                for k in 0..n {
                    acc += g.get(k, i) * ginv.get(s, j) * self.a[(s, k)];
                }
            }
            -acc
        }))
    }

    fn describe(&self) -> String {
        "metric-twisted involution".into()
    }
}

/// `(P^(1), P^(-1))` from a constant involution `a` with `a[(i, j)] = a_i^j`,
/// meaning `P^(1)(d_i) = a_i^j d_j`.
pub fn exp_para_structures(
    model: &ExpFamilyModel,
    a: &DMatrix<f64>,
) -> Result<(ProductStructureField, ProductStructureField)> {
    let n = model.dim;
    if n == 1 {
        return Err(GeomError::InvalidStructure(
            "one-dimensional models admit no involution other than +-Id".into(),
        ));
    }
    if a.nrows() != n || a.ncols() != n {
        return Err(GeomError::InvalidStructure(format!("involution must be {n}x{n}")));
    }
    let id = DMatrix::<f64>::identity(n, n);
    let sq_gap = (a * a - &id).abs().max();
    if !(sq_gap <= 1e-10) {
        return Err(GeomError::InvalidStructure(format!(
            "involution does not square to the identity (gap {sq_gap:e})"
        )));
    }
    if (a - &id).abs().max() <= 1e-12 || (a + &id).abs().max() <= 1e-12 {
        return Err(GeomError::InvalidStructure("involution must differ from +-Id".into()));
    }
    let p1 = ProductStructureField::constant(&a.transpose())?;
    let pm1 = ProductStructureField::from_source(Arc::new(MetricTwisted {
        metric: fisher_metric(model)?,
        a: a.clone(),
    }));
    Ok((p1, pm1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::TOL_EXACT;
    use crate::expr::fd_check;
    use crate::geometry::{
        check_statistical_structure, conjugate_connection, curvature_at, levi_civita,
    };
    use crate::product::{adjoint_structure, check_almost_product, check_para_kahler_like};
    use crate::special::trigamma;

    fn model(name: &str, h: &[(&str, f64)]) -> ExpFamilyModel {
        let h = h.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        builtin_model(name, &h).unwrap()
    }

    fn sample(m: &ExpFamilyModel) -> Vec<Vec<f64>> {
        m.chart(11).unwrap().sample_points(6).unwrap()
    }

    #[test]
    fn poisson_values() {
        let m = model("poisson", &[]);
        assert_eq!(m.psi.eval(&[0.0]).unwrap(), 1.0);
        let g = fisher_metric(&m).unwrap();
        assert_eq!(g.value_at(&[0.0]).unwrap()[(0, 0)], 1.0);
        assert!((g.value_at(&[0.7]).unwrap()[(0, 0)] - 0.7f64.exp()).abs() < 1e-14);
        let gamma = alpha_connection(&m, -1.0).unwrap().values_at(&[0.3]).unwrap();
        assert!((gamma[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn binomial_logistic_metric() {
        let m = model("multinomial", &[("categories", 2.0), ("trials", 1.0)]);
        assert!((m.psi.eval(&[0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        let g = fisher_metric(&m).unwrap();
        assert!((g.value_at(&[0.0]).unwrap()[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_metric_closed_form() {
        let m = model("dirichlet", &[]);
        let g = fisher_metric(&m).unwrap();
        assert!((g.value_at(&[1.0, 1.0]).unwrap()[(0, 0)] - 1.0).abs() < 1e-10);
        let m3 = model("dirichlet", &[("dimension", 3.0)]);
        let g3 = fisher_metric(&m3).unwrap();
        let x = [0.8, 1.7, 2.4];
        let gm = g3.value_at(&x).unwrap();
        let ts = trigamma(x.iter().sum());
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { trigamma(x[i]) } else { 0.0 } - ts;
                assert!((gm[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_metric_matches_finite_differences() {
        let m = model("normal", &[]);
        let r = fd_check(&m.psi, &[0.0, -0.5], 1e-4).unwrap();
        assert!(r.max_deviation() <= 1e-6, "{r:?}");
        let g = fisher_metric(&m).unwrap();
        let d = m.psi.eval2(&[0.0, -0.5]).unwrap();
        let gm = g.value_at(&[0.0, -0.5]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((gm[(i, j)] - d.h(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn invalid_models() {
        let h = BTreeMap::new();
        assert!(builtin_model("gamma", &h).is_err());
        let bad: BTreeMap<String, f64> = [("categories".to_string(), 1.0)].into();
        assert!(builtin_model("multinomial", &bad).is_err());
        let bad: BTreeMap<String, f64> = [("dimension".to_string(), 1.0)].into();
        assert!(builtin_model("dirichlet", &bad).is_err());
        let bad: BTreeMap<String, f64> = [("trials".to_string(), 2.5)].into();
        assert!(builtin_model("multinomial", &bad).is_err());
    }

    #[test]
    fn alpha_family_basics() {
        for name in MODEL_NAMES {
            let m = model(name, &[]);
            let pts = sample(&m);
            let g = fisher_metric(&m).unwrap();
            let one = alpha_connection(&m, 1.0).unwrap();
            assert!(one.values_at(&pts[0]).unwrap().iter().all(|&x| x == 0.0));
            assert_eq!(curvature_at(&one, &pts[0]).unwrap().max_abs(), 0.0);
            let zero = alpha_connection(&m, 0.0).unwrap().values_at(&pts[0]).unwrap();
            let lc = levi_civita(&g).values_at(&pts[0]).unwrap();
            for (a, b) in zero.iter().zip(&lc) {
                assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{name}");
            }
            for alpha in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let c = alpha_connection(&m, alpha).unwrap();
                assert!(check_statistical_structure(&g, &c, &pts, TOL_EXACT).unwrap().passed());
                let dual = conjugate_connection(&g, &c).unwrap();
                let minus = alpha_connection(&m, -alpha).unwrap();
                for p in &pts {
                    let a = dual.values_at(p).unwrap();
                    let b = minus.values_at(p).unwrap();
                    for (x, y) in a.iter().zip(&b) {
                        assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{name} {alpha}");
                    }
                }
            }
        }
    }

    #[test]
    fn para_structures_certify() {
        let cases = [
            ("normal", DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
            ("multinomial", DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])),
            ("dirichlet", DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
        ];
        for (name, a) in cases {
            let m = model(name, &[]);
            let pts = sample(&m);
            let g = fisher_metric(&m).unwrap();
            let (p1, pm1) = exp_para_structures(&m, &a).unwrap();
            assert!(check_almost_product(&p1, &pts, TOL_EXACT).unwrap().passed());
            assert!(check_almost_product(&pm1, &pts, TOL_EXACT).unwrap().passed());
            let e = alpha_connection(&m, 1.0).unwrap();
            let me = alpha_connection(&m, -1.0).unwrap();
            let r = check_para_kahler_like(&g, &e, &p1, &pts, TOL_EXACT).unwrap();
            assert!(r.passed(), "{name}: {r:?}");
            let r = check_para_kahler_like(&g, &me, &pm1, &pts, TOL_EXACT).unwrap();
            assert!(r.passed(), "{name}: {r:?}");
        }
    }

    #[test]
    fn twisted_structure_is_the_negative_adjoint() {
        // Pinned relation: the metric-twisted structure coincides with the
        // negative adjoint of the constant one, with the same sign.
        let m = model("normal", &[]);
        let g = fisher_metric(&m).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (p1, pm1) = exp_para_structures(&m, &a).unwrap();
        let adj = adjoint_structure(&g, &p1).unwrap();
        for p in sample(&m) {
            let d = (adj.value_at(&p).unwrap() - pm1.value_at(&p).unwrap()).abs().max();
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn structure_preconditions() {
        let m = model("normal", &[]);
        assert!(exp_para_structures(&m, &DMatrix::identity(2, 2)).is_err());
        assert!(exp_para_structures(&m, &(-DMatrix::<f64>::identity(2, 2))).is_err());
        assert!(exp_para_structures(&m, &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).is_err());
        let p = model("poisson", &[]);
        assert!(exp_para_structures(&p, &DMatrix::from_element(1, 1, -1.0)).is_err());
    }
}
