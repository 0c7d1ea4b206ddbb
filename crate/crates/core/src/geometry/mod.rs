//! Charts, metrics, affine connections and their curvature.
//!
//! Everything is chart-local. Fields are immutable and cheap to clone;
//! evaluation at distinct points is independent.

pub mod chart;
pub mod checks;
pub mod connection;
pub mod curvature;
pub mod metric;

pub use chart::ChartSpec;
pub use checks::{
    check_conjugate_involution, check_derivative_oracle, check_koszul_formula, check_kurose_constant,
    check_levi_civita_average, check_statistical_curvature_symmetries, check_statistical_structure,
    curvature_fd_deviation, sectional_deviation,
};
pub use connection::{
    conjugate_connection, difference_tensor_at, gidx, levi_civita, ConnectionField, ConnectionSource,
    DifferenceTensor,
};
pub use curvature::{
    check_dual_curvature_identity, curvature_at, curvature_from_jets, dual_curvatures_at, fit_kurose_constant,
    kurose_residual, ridx, sectional_curvature, statistical_curvature_at, CurvatureAtPoint, KuroseFit,
};
pub use metric::MetricField;
