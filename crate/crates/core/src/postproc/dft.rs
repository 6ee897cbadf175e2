use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Running pointwise transform `(1/n) Σ_k x(t_k) exp(-2πi f t_k)` over
/// uniformly spaced samples.
#[derive(Clone, Debug)]
pub struct Dft {
    frequency: f64,
    sum: Vec<Complex64>,
    n: usize,
    first: f64,
    last: f64,
    spacing: Option<f64>,
}

impl Dft {
    pub fn new(frequency: f64, len: usize) -> Self {
        Dft {
            frequency,
            sum: vec![Complex64::new(0.0, 0.0); len],
            n: 0,
            first: 0.0,
            last: 0.0,
            spacing: None,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.sum.len() {
            return Err(Error::InvalidArgument(format!(
                "sample of length {} for a transform of length {}",
                values.len(),
                self.sum.len()
            )));
        }
        match (self.n, self.spacing) {
            (0, _) => self.first = t,
            (1, _) => {
                let dt = t - self.last;
                if !(dt > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sample times must increase, got {t} after {}",
                        self.last
                    )));
                }
                self.spacing = Some(dt);
            }
            (n, Some(dt)) => {
                let expected = self.first + n as f64 * dt;
                if (t - expected).abs() > 1e-6 * dt {
                    return Err(Error::InvalidArgument(format!(
                        "nonuniform sample spacing: t = {t}, expected {expected}"
                    )));
                }
            }
            _ => unreachable!(),
        }
        let w = Complex64::from_polar(1.0, -2.0 * PI * self.frequency * t);
        for (s, v) in self.sum.iter_mut().zip(values) {
            *s += w * v;
        }
        self.n += 1;
        self.last = t;
        Ok(())
    }

    /// Normalized coefficients.
    pub fn finish(&self) -> Vec<Complex64> {
        let scale = if self.n == 0 {
            0.0
        } else {
            1.0 / self.n as f64
        };
        self.sum.iter().map(|s| s * scale).collect()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.finish().iter().map(|c| c.re).collect()
    }
}

/// Transform of a whole series of snapshots at frequency `f`.
pub fn pointwise_dft(
    times: &[f64],
    snapshots: &[Vec<f64>],
    frequency: f64,
) -> Result<Vec<Complex64>> {
    if times.len() != snapshots.len() || times.is_empty() {
        return Err(Error::InvalidArgument(
            "need matching, non-empty times and snapshots".into(),
        ));
    }
    let mut dft = Dft::new(frequency, snapshots[0].len());
    for (t, s) in times.iter().zip(snapshots) {
        dft.add(*t, s)?;
    }
    Ok(dft.finish())
}
