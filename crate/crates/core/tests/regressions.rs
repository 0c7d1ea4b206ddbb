//! Pinned values for behaviour that is easy to get subtly wrong.

use statgeom::check::Status;
use statgeom::cli::fixtures::{hyperbolic_split, hyperbolic_submersion};
use statgeom::cli::manifest::{Overrides, Target};
use statgeom::geometry::{check_kurose_constant, gidx, levi_civita};
use statgeom::manifold::ManifoldSpec;
use statgeom::product::covariant_derivative_p_at;
use statgeom::submersion::{structure_rank_sum_at, verify_submersion_theorems, SubmersionSpec};

fn half_plane(k: f64, l: f64) -> ManifoldSpec {
    match hyperbolic_split("half_plane", 1, k, l, &[1.0]).plan(Overrides::default()).unwrap().target {
        Target::Explicit { manifold, .. } => manifold,
        Target::Model(_) => unreachable!(),
    }
}

fn projection(k: f64, l: f64) -> SubmersionSpec {
    match hyperbolic_submersion("sub", 2, 1, k, l).plan(Overrides::default()).unwrap().target {
        Target::Explicit { submersion, .. } => submersion.unwrap(),
        Target::Model(_) => unreachable!(),
    }
}

#[test]
fn half_plane_kurose_constant_only_for_equal_weights() {
    let m = half_plane(1.0, 1.0);
    let pts = m.sample(25).unwrap();
    let r = check_kurose_constant(&m.metric, &m.connection, &pts, 1e-8).unwrap();
    assert_eq!(r.status, Status::Pass);
    let fit = statgeom::geometry::fit_kurose_constant(&m.metric, &m.connection, &pts).unwrap();
    assert!((fit.k_hat - 1.0).abs() <= 1e-9, "k_hat = {}", fit.k_hat);

    let m = half_plane(1.0, 2.0);
    let pts = m.sample(25).unwrap();
    let r = check_kurose_constant(&m.metric, &m.connection, &pts, 1e-8).unwrap();
    assert_eq!(r.status, Status::Fail);
    assert!(r.max_residual > 1e-2);
}

/// Levi-Civita does not keep the swap parallel unless the weights agree:
/// the only nonzero entries are `(nabla_x P)^x_x = -(nabla_x P)^y_y = (k - l) / (l y)`.
#[test]
fn levi_civita_derivative_of_swap_on_half_plane() {
    for (k, l) in [(1.0, 1.0), (1.0, 2.0), (3.0, 0.5), (2.0, -1.0)] {
        let m = half_plane(k, l);
        let lc = levi_civita(&m.metric);
        let p = m.structure.as_ref().unwrap();
        for x in m.sample(10).unwrap() {
            let y = x[1];
            let d = covariant_derivative_p_at(&lc, p, &x).unwrap();
            let mut expected = vec![0.0; 8];
            expected[gidx(2, 0, 0, 0)] = (k - l) / (l * y);
            expected[gidx(2, 1, 0, 1)] = -(k - l) / (l * y);
            for (a, b) in d.iter().zip(&expected) {
                assert!((a - b).abs() <= 1e-12, "k={k} l={l} at {x:?}: {d:?}");
            }
        }
    }
}

#[test]
fn fiber_structures_sum_rank() {
    for (l, rank) in [(1.0, 2), (2.0, 2)] {
        let spec = projection(1.0, l);
        for p in spec.total.sample(5).unwrap() {
            assert_eq!(structure_rank_sum_at(&spec, &p).unwrap(), rank);
        }
    }
}

#[test]
fn distinct_weights_leave_horizontal_integrability_open() {
    let spec = projection(1.0, 2.0);
    let pts = spec.total.sample(25).unwrap();
    let items = verify_submersion_theorems(&spec, &pts, 1e-8).unwrap();
    let status = |s: &str| items.iter().find(|r| r.name.ends_with(s)).unwrap().status;
    assert_eq!(status("horizontal_integrability"), Status::NotApplicable);
    assert_eq!(status("space_form_flatness"), Status::NotApplicable);
    assert_eq!(status("horizontal_a_vanishing"), Status::Pass);
    assert_eq!(status("vertical_t_invariance"), Status::Pass);

    let spec = projection(1.0, 1.0);
    let items = verify_submersion_theorems(&spec, &pts, 1e-8).unwrap();
    assert_eq!(items.iter().find(|r| r.name.ends_with("horizontal_integrability")).unwrap().status, Status::Pass);
}
