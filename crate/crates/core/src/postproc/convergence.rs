use std::fmt::Write;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    /// `1/h` or `1/Δt`.
    pub resolution: f64,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub formulation: String,
    pub degree: usize,
    pub tau: String,
}

/// Pairwise observed orders `log(e_{k-1}/e_k) / log(r_k/r_{k-1})`.
/// Resolutions must be strictly increasing.
pub fn convergence_order(errors: &[f64], resolutions: &[f64]) -> Result<ConvergenceReport> {
    if errors.len() != resolutions.len() {
        return Err(Error::InvalidArgument(format!(
            "{} errors for {} resolutions",
            errors.len(),
            resolutions.len()
        )));
    }
    if errors.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two rows are needed".into(),
        ));
    }
    if let Some(k) = (1..resolutions.len()).find(|&k| !(resolutions[k] > resolutions[k - 1])) {
        return Err(Error::InvalidArgument(format!(
            "resolutions must increase strictly, got {} after {}",
            resolutions[k],
            resolutions[k - 1]
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "error values must be positive, got {e}"
        )));
    }
    let rows = (0..errors.len())
        .map(|k| ConvergenceRow {
            resolution: resolutions[k],
            error: errors[k],
            order: (k > 0).then(|| {
                (errors[k - 1] / errors[k]).ln() / (resolutions[k] / resolutions[k - 1]).ln()
            }),
        })
        .collect();
    Ok(ConvergenceReport {
        rows,
        formulation: String::new(),
        degree: 0,
        tau: String::new(),
    })
}

impl ConvergenceReport {
    pub fn with_context(
        mut self,
        formulation: impl Into<String>,
        degree: usize,
        tau: impl Into<String>,
    ) -> Self {
        self.formulation = formulation.into();
        self.degree = degree;
        self.tau = tau.into();
        self
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    /// `resolution,error,order` with 17 significant digits; the first
    /// order is empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# formulation={} degree={} tau={}",
            self.formulation, self.degree, self.tau
        );
        s.push_str("resolution,error,order\n");
        for r in &self.rows {
            let order = r.order.map(|o| format!("{o:.16e}")).unwrap_or_default();
            let _ = writeln!(s, "{:.16e},{:.16e},{}", r.resolution, r.error, order);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_values() {
        let r = convergence_order(&[2.63e-2, 6.42e-3], &[5.0, 10.0]).unwrap();
        assert!((r.rows[1].order.unwrap() - 2.0344).abs() < 1e-3);
        assert!(r.rows[0].order.is_none());
        let r = convergence_order(&[3.61e-2, 1.89e-2], &[25.0, 50.0]).unwrap();
        assert!((r.rows[1].order.unwrap() - 0.93).abs() < 5e-3);
        let r = convergence_order(&[0.4, 0.2, 0.1], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(r.orders(), vec![1.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(convergence_order(&[1.0], &[1.0]).is_err());
        assert!(convergence_order(&[1.0, 0.5, 0.2], &[1.0, 3.0, 2.0]).is_err());
        assert!(convergence_order(&[1.0, 0.5], &[2.0, 2.0]).is_err());
        assert!(convergence_order(&[1.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(convergence_order(&[1.0, 0.5], &[1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = convergence_order(&[0.4, 0.1], &[1.0, 2.0])
            .unwrap()
            .with_context("mixed", 2, "1")
            .to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "resolution,error,order");
        assert_eq!(lines[2], "1.0000000000000000e0,4.0000000000000002e-1,");
        assert_eq!(
            lines[3],
            "2.0000000000000000e0,1.0000000000000001e-1,2.0000000000000000e0"
        );
    }

    proptest! {
        #[test]
        fn recovers_synthetic_exponent(c in 1e-3f64..1e3, q in 0.5f64..6.0, r0 in 1.0f64..10.0,
                                       steps in proptest::collection::vec(1.1f64..3.0, 1..5)) {
            let mut res = vec![r0];
            for s in &steps {
                res.push(res.last().unwrap() * s);
            }
            let errs: Vec<f64> = res.iter().map(|r| c * r.powf(-q)).collect();
            let rep = convergence_order(&errs, &res).unwrap();
            for o in rep.orders() {
                prop_assert!((o - q).abs() < 1e-10);
            }
        }
    }
}
