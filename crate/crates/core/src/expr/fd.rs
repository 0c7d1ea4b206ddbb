//! Central finite differences as an independent check on forward-mode
//! derivatives. Never used on the main evaluation path.

use super::ScalarField;
use crate::error::{GeomError, Result};

/// Deviations between exact and central-difference derivatives.
///
/// Each entry is `|exact - fd| / max(|exact|, 1)`: relative for large
/// derivatives, absolute for small ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub grad_deviation: f64,
    pub hess_deviation: f64,
}

impl FdReport {
    pub fn max_deviation(&self) -> f64 {
        self.grad_deviation.max(self.hess_deviation)
    }
}

pub(crate) fn deviation(exact: f64, approx: f64) -> f64 {
    (exact - approx).abs() / exact.abs().max(1.0)
}

/// Compare [`ScalarField::eval2`] at `p` with O(h^2) central differences.
pub fn fd_check(f: &ScalarField, p: &[f64], h: f64) -> Result<FdReport> {
    let exact = f.eval2(p)?;
    let n = p.len();
    let at = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut q = p.to_vec();
        for &(i, s) in shifts {
            q[i] += s;
        }
        f.eval(&q).map_err(|e| {
            GeomError::MarginViolation(format!("stencil point {q:?} with h = {h:e}: {e}"))
        })
    };
    let f0 = exact.value;
    let mut grad_dev: f64 = 0.0;
    let mut hess_dev: f64 = 0.0;
    for i in 0..n {
        let fp = at(&[(i, h)])?;
        let fm = at(&[(i, -h)])?;
        grad_dev = grad_dev.max(deviation(exact.grad[i], (fp - fm) / (2.0 * h)));
        hess_dev = hess_dev.max(deviation(exact.h(i, i), (fp - 2.0 * f0 + fm) / (h * h)));
        for j in (i + 1)..n {
            let fpp = at(&[(i, h), (j, h)])?;
            let fpm = at(&[(i, h), (j, -h)])?;
            let fmp = at(&[(i, -h), (j, h)])?;
            let fmm = at(&[(i, -h), (j, -h)])?;
            let mixed = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess_dev = hess_dev.max(deviation(exact.h(i, j), mixed));
        }
    }
    Ok(FdReport {
        grad_deviation: grad_dev,
        hess_deviation: hess_dev,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::expr::parse_expression;

    fn field(text: &str, coords: &[&str]) -> ScalarField {
        let c: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        parse_expression(text, &c, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn constant_field_has_zero_residual() {
        let r = fd_check(&field("4.25", &["x", "y"]), &[0.3, -7.0], 1e-4).unwrap();
        assert_eq!(r.max_deviation(), 0.0);
    }

    #[test]
    fn cubic_and_log() {
        let r = fd_check(&field("x^3", &["x"]), &[1.0], 1e-4).unwrap();
        assert!(r.max_deviation() <= 1e-6, "{r:?}");
        let r = fd_check(&field("log(y)", &["y"]), &[0.5], 1e-4).unwrap();
        assert!(r.max_deviation() <= 1e-6, "{r:?}");
    }

    #[test]
    fn inverse_square_oracle() {
        let r = fd_check(&field("1/(y*y)", &["y"]), &[2.0], 1e-4).unwrap();
        assert!(r.max_deviation() <= 1e-6, "{r:?}");
    }

    #[test]
    fn stencil_outside_domain_is_reported() {
        let f = field("log(y)", &["y"]);
        assert!(matches!(
            fd_check(&f, &[5e-5], 1e-4),
            Err(GeomError::MarginViolation(_))
        ));
    }
}
