//! Built-in fixtures, each a manifest built in code.

use std::collections::BTreeMap;

use super::manifest::{ChartBlock, CheckEntry, Manifest, ModelBlock, SpaceBlock};

const MANIFOLD_CHECKS: [&str; 9] = [
    "statistical_structure",
    "conjugate_involution",
    "levi_civita_average",
    "koszul_formula",
    "dual_curvature_identity",
    "statistical_curvature_symmetries",
    "kurose_constant",
    "derivative_oracle",
    "curvature_commutes_with_structure",
];

const STRUCTURE_CHECKS: [&str; 5] = [
    "almost_product",
    "pairing_identities",
    "para_kahler_like",
    "conjugate_parallelism",
    "flatness_theorem",
];

const SUBMERSION_CHECKS: [&str; 7] = [
    "semi_riemannian_submersion",
    "statistical_submersion",
    "para_holomorphic",
    "isometric_fibers",
    "oneill_identities",
    "fiber_para_kahler_like",
    "submersion_theorems",
];

fn names(lists: &[&[&str]]) -> Vec<CheckEntry> {
    lists
        .iter()
        .flat_map(|l| l.iter())
        .map(|s| CheckEntry::Name(s.to_string()))
        .collect()
}

fn pair_coords(n: usize) -> Vec<String> {
    (1..=n).flat_map(|i| [format!("x{i}"), format!("y{i}")]).collect()
}

fn swap_structure(n: usize) -> BTreeMap<String, String> {
    (1..=n)
        .flat_map(|i| [(format!("y{i};x{i}"), "1".to_string()), (format!("x{i};y{i}"), "1".to_string())])
        .collect()
}

fn sign(e: f64) -> &'static str {
    if e < 0.0 {
        "-"
    } else {
        ""
    }
}

/// `R^2n` with `g = sum eps_i (k dx_i^2 - dy_i^2)`, zero connection and the
/// swap structure.
pub fn flat_split(id: &str, n: usize, k: f64, eps: &[f64]) -> Manifest {
    let coords = pair_coords(n);
    let mut metric = BTreeMap::new();
    for i in 1..=n {
        let e = eps[i - 1];
        metric.insert(format!("x{i},x{i}"), format!("{}k", sign(e)));
        metric.insert(format!("y{i},y{i}"), if e < 0.0 { "1".into() } else { "-1".into() });
    }
    Manifest {
        id: id.into(),
        description: format!("flat split metric on R^{}, zero connection, swap structure", 2 * n),
        seed: 0,
        params: [("k".to_string(), k)].into(),
        chart: Some(ChartBlock {
            coords,
            bounds: vec![[-1.0, 1.0]; 2 * n],
        }),
        metric: Some(metric),
        connection: Some(BTreeMap::new()),
        structure: Some(swap_structure(n)),
        model: None,
        submersion: None,
        checks: names(&[&MANIFOLD_CHECKS, &STRUCTURE_CHECKS]),
        points: None,
        tolerance: None,
    }
}

fn hyperbolic_space(n: usize, eps: &[f64]) -> SpaceBlock {
    let coords = pair_coords(n);
    let mut metric = BTreeMap::new();
    let mut connection = BTreeMap::new();
    for i in 1..=n {
        let s = sign(eps[i - 1]);
        let (x, y) = (format!("x{i}"), format!("y{i}"));
        metric.insert(format!("{x},{x}"), format!("{s}k/{y}^2"));
        metric.insert(format!("{y},{y}"), format!("{}l/{y}^2", if s.is_empty() { "-" } else { "" }));
        let c = format!("-2*k/((k+l)*{y})");
        connection.insert(format!("{y};{x},{x}"), c.clone());
        connection.insert(format!("{y};{y},{y}"), c.clone());
        connection.insert(format!("{x};{x},{y}"), c.clone());
        connection.insert(format!("{x};{y},{x}"), c);
    }
    let bounds = (0..2 * n)
        .map(|t| if t % 2 == 0 { [-1.0, 1.0] } else { [0.5, 2.0] })
        .collect();
    SpaceBlock {
        chart: Some(ChartBlock { coords, bounds }),
        metric: Some(metric),
        connection: Some(connection),
        structure: Some(swap_structure(n)),
    }
}

/// Product of half-planes `eps_i (k dx_i^2 - l dy_i^2) / y_i^2` with the
/// non-metric connection making the swap structure parallel.
/// The Kurose check is only requested for `k = l`, where it holds.
pub fn hyperbolic_split(id: &str, n: usize, k: f64, l: f64, eps: &[f64]) -> Manifest {
    let space = hyperbolic_space(n, eps);
    let mut checks = names(&[&MANIFOLD_CHECKS, &STRUCTURE_CHECKS]);
    if k != l {
        checks.retain(|c| c.name() != "kurose_constant");
    }
    Manifest {
        id: id.into(),
        description: format!("split half-plane metric on a {}-dimensional product, parallel swap structure", 2 * n),
        seed: 0,
        params: [("k".to_string(), k), ("l".to_string(), l)].into(),
        chart: space.chart,
        metric: space.metric,
        connection: space.connection,
        structure: space.structure,
        model: None,
        submersion: None,
        checks,
        points: None,
        tolerance: None,
    }
}

/// Projection of the `n`-fold half-plane product onto the first `m` factors.
pub fn hyperbolic_submersion(id: &str, n: usize, m: usize, k: f64, l: f64) -> Manifest {
    let total = hyperbolic_space(n, &vec![1.0; n]);
    let base = hyperbolic_space(m, &vec![1.0; m]);
    Manifest {
        id: id.into(),
        description: format!("projection of a product of {n} half-planes onto the first {m}"),
        seed: 0,
        params: [("k".to_string(), k), ("l".to_string(), l)].into(),
        chart: total.chart,
        metric: total.metric,
        connection: total.connection,
        structure: total.structure,
        model: None,
        submersion: Some(base),
        checks: names(&[&["para_kahler_like"], &SUBMERSION_CHECKS]),
        points: None,
        tolerance: None,
    }
}

/// Built-in exponential family with a coordinate-swapping involution when
/// the dimension allows one.
pub fn expfam(id: &str, name: &str, hyperparams: BTreeMap<String, f64>, dim: usize, alphas: &[f64]) -> Manifest {
    let involution = (dim >= 2).then(|| {
        let mut a = vec![vec![0.0; dim]; dim];
        a[0][1] = 1.0;
        a[1][0] = 1.0;
        for (i, row) in a.iter_mut().enumerate().skip(2) {
            row[i] = 1.0;
        }
        a
    });
    let mut checks = names(&[&[
        "statistical_structure",
        "conjugate_involution",
        "levi_civita_average",
        "koszul_formula",
        "dual_curvature_identity",
        "statistical_curvature_symmetries",
        "derivative_oracle",
    ]]);
    if involution.is_some() {
        checks.extend(names(&[&["almost_product", "pairing_identities", "para_kahler_like", "conjugate_parallelism"]]));
    }
    Manifest {
        id: id.into(),
        description: format!("{name} family in natural parameters, alpha in {alphas:?}"),
        seed: 0,
        params: BTreeMap::new(),
        chart: None,
        metric: None,
        connection: None,
        structure: None,
        model: Some(ModelBlock {
            name: name.into(),
            hyperparams,
            alpha: alphas.to_vec(),
            involution,
        }),
        submersion: None,
        checks,
        points: None,
        tolerance: None,
    }
}

pub const FIXTURE_IDS: [&str; 10] = [
    "flat_split_n1",
    "flat_split_n2",
    "hyperbolic_split_kl_equal",
    "hyperbolic_split_kl_distinct",
    "expfam_poisson",
    "expfam_normal",
    "expfam_multinomial",
    "expfam_dirichlet",
    "hyperbolic_submersion_kl_equal",
    "hyperbolic_submersion_kl_distinct",
];

pub fn fixture(id: &str) -> Option<Manifest> {
    let alphas = [-1.0, 0.0, 1.0];
    Some(match id {
        "flat_split_n1" => flat_split(id, 1, 2.0, &[1.0]),
        "flat_split_n2" => flat_split(id, 2, -3.0, &[1.0, -1.0]),
        "hyperbolic_split_kl_equal" => hyperbolic_split(id, 1, 1.0, 1.0, &[1.0]),
        "hyperbolic_split_kl_distinct" => hyperbolic_split(id, 1, 1.0, 2.0, &[1.0]),
        "expfam_poisson" => expfam(id, "poisson", BTreeMap::new(), 1, &alphas),
        "expfam_normal" => expfam(id, "normal", BTreeMap::new(), 2, &alphas),
        "expfam_multinomial" => expfam(id, "multinomial", [("categories".to_string(), 3.0)].into(), 2, &alphas),
        "expfam_dirichlet" => expfam(id, "dirichlet", [("dimension".to_string(), 2.0)].into(), 2, &alphas),
        "hyperbolic_submersion_kl_equal" => hyperbolic_submersion(id, 2, 1, 1.0, 1.0),
        "hyperbolic_submersion_kl_distinct" => hyperbolic_submersion(id, 2, 1, 1.0, 2.0),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_plans() {
        for id in FIXTURE_IDS {
            let m = fixture(id).unwrap();
            assert_eq!(m.id, id);
            m.plan(Default::default()).unwrap_or_else(|e| panic!("{id}: {e}"));
        }
        assert!(fixture("nope").is_none());
    }
}
