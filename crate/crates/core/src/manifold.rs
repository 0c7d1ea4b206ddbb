use crate::error::{GeomError, Result};
use crate::geometry::{conjugate_connection, levi_civita, ChartSpec, ConnectionField, MetricField};
use crate::product::{adjoint_structure, ProductStructureField};

/// A chart together with the fields attached to it: the unit of verification.
#[derive(Debug, Clone)]
pub struct ManifoldSpec {
    pub chart: ChartSpec,
    pub metric: MetricField,
    pub connection: ConnectionField,
    pub structure: Option<ProductStructureField>,
}

impl ManifoldSpec {
    /// `connection` defaults to the Levi-Civita connection of `metric`.
    pub fn new(
        chart: ChartSpec,
        metric: MetricField,
        connection: Option<ConnectionField>,
        structure: Option<ProductStructureField>,
    ) -> Result<Self> {
        chart.validate()?;
        let n = chart.dim();
        let connection = connection.unwrap_or_else(|| levi_civita(&metric));
        for (what, d) in [
            ("metric", metric.dim()),
            ("connection", connection.dim()),
            ("structure", structure.as_ref().map_or(n, |p| p.dim())),
        ] {
            if d != n {
                return Err(GeomError::InvalidArgument(format!(
                    "{what} has dimension {d}, chart has {n}"
                )));
            }
        }
        Ok(ManifoldSpec {
            chart,
            metric,
            connection,
            structure,
        })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn dual_connection(&self) -> Result<ConnectionField> {
        conjugate_connection(&self.metric, &self.connection)
    }

    pub fn dual_structure(&self) -> Result<Option<ProductStructureField>> {
        self.structure
            .as_ref()
            .map(|p| adjoint_structure(&self.metric, p))
            .transpose()
    }

    pub fn require_structure(&self) -> Result<&ProductStructureField> {
        self.structure
            .as_ref()
            .ok_or_else(|| GeomError::InvalidStructure("no almost product structure attached".into()))
    }

    /// `count` sample points; the metric must be nondegenerate with constant
    /// signature on all of them.
    pub fn sample(&self, count: usize) -> Result<Vec<Vec<f64>>> {
        let pts = self.chart.sample_points(count)?;
        self.metric.validate_on(&self.chart, &pts)?;
        Ok(pts)
    }
}
