//! Materials, analytical reference fields, incident waves and sources.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};

use crate::{Error, Result};

/// Vacuum permittivity (F/m) as used by the wave experiments.
pub const EPS0: f64 = 8.854e-12;
/// Vacuum permeability (H/m) as used by the wave experiments.
pub const MU0: f64 = 1.257e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialProperties {
    pub eps: f64,
    pub mu: f64,
    pub sigma: Matrix3<f64>,
}

impl MaterialProperties {
    /// Scalar conductivity is promoted to `σ I`.
    pub fn isotropic(eps: f64, mu: f64, sigma: f64) -> Result<Self> {
        Self::new(eps, mu, Matrix3::identity() * sigma)
    }

    pub fn new(eps: f64, mu: f64, sigma: Matrix3<f64>) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "permittivity {eps} must be positive"
            )));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "permeability {mu} must be positive"
            )));
        }
        let scale = sigma.amax();
        if !sigma.iter().all(|v| v.is_finite())
            || (sigma - sigma.transpose()).amax() > 1e-12 * scale
        {
            return Err(Error::InvalidArgument(format!(
                "conductivity tensor must be finite and symmetric, got {sigma}"
            )));
        }
        let min = SymmetricEigen::new(sigma).eigenvalues.min();
        if min < -1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "conductivity tensor has negative eigenvalue {min:e}"
            )));
        }
        Ok(MaterialProperties { eps, mu, sigma })
    }

    pub fn vacuum() -> Self {
        MaterialProperties {
            eps: EPS0,
            mu: MU0,
            sigma: Matrix3::zeros(),
        }
    }

    /// Wave impedance inverse `sqrt(ε/μ)`.
    pub fn admittance(&self) -> f64 {
        (self.eps / self.mu).sqrt()
    }

    pub fn sigma_is_definite(&self) -> bool {
        SymmetricEigen::new(self.sigma).eigenvalues.min()
            > 1e-14 * self.sigma.amax().max(f64::MIN_POSITIVE)
    }
}

/// Piecewise-constant materials by region id.
#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    pub regions: BTreeMap<u32, MaterialProperties>,
    /// Used for regions without an entry.
    pub default: Option<MaterialProperties>,
}

impl Material {
    pub fn uniform(m: MaterialProperties) -> Self {
        Material {
            regions: BTreeMap::new(),
            default: Some(m),
        }
    }

    pub fn with_region(mut self, region: u32, m: MaterialProperties) -> Self {
        self.regions.insert(region, m);
        self
    }

    pub fn get(&self, region: u32) -> Result<&MaterialProperties> {
        self.regions
            .get(&region)
            .or(self.default.as_ref())
            .ok_or_else(|| Error::InvalidArgument(format!("no material for region {region}")))
    }
}

/// `f = 1 / (2 sqrt(με)) · sqrt((m/a)² + (n/b)² + (p/d)²)`.
#[allow(clippy::too_many_arguments)]
pub fn resonant_frequency(
    m: u32,
    n: u32,
    p: u32,
    a: f64,
    b: f64,
    d: f64,
    eps: f64,
    mu: f64,
) -> Result<f64> {
    if m == 0 && n == 0 && p == 0 {
        return Err(Error::InvalidArgument(
            "mode (0, 0, 0) has no frequency".into(),
        ));
    }
    if !(a > 0.0 && b > 0.0 && d > 0.0) {
        return Err(Error::InvalidArgument(
            "cavity dimensions must be positive".into(),
        ));
    }
    let s = (m as f64 / a).powi(2) + (n as f64 / b).powi(2) + (p as f64 / d).powi(2);
    Ok(s.sqrt() / (2.0 * (mu * eps).sqrt()))
}

/// Standing (1,1,1) mode of the unit cube with `ε = μ = √3`, period 2 s.
///
/// The field has vanishing normal `E` and tangential `H` on the walls; its
/// tangential `E` on the walls is nonzero, so it is imposed as Dirichlet
/// trace data.
pub fn cavity_mode_111(x: &Point3<f64>, t: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (sx, cx) = (PI * x.x).sin_cos();
    let (sy, cy) = (PI * x.y).sin_cos();
    let (sz, cz) = (PI * x.z).sin_cos();
    let (st, ct) = (PI * t).sin_cos();
    let r3 = 3f64.sqrt();
    let e = Vector3::new(-sx * cy * cz, 2.0 * cx * sy * cz, -cx * cy * sz) * ct;
    let h = Vector3::new(-r3 * cx * sy * sz, 0.0, r3 * sx * sy * cz) * st;
    (e, h)
}

/// Standing (1,1,1) mode of the unit cube with `ε = μ = √3` satisfying
/// `n × E = 0` on the walls, so it evolves freely under homogeneous PEC.
pub fn cavity_mode_111_pec(x: &Point3<f64>, t: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (sx, cx) = (PI * x.x).sin_cos();
    let (sy, cy) = (PI * x.y).sin_cos();
    let (sz, cz) = (PI * x.z).sin_cos();
    let (st, ct) = (PI * t).sin_cos();
    let r3 = 3f64.sqrt();
    let e = Vector3::new(cx * sy * sz, -2.0 * sx * cy * sz, sx * sy * cz) * ct;
    let h = Vector3::new(-r3 * sx * cy * cz, 0.0, r3 * cx * cy * sz) * st;
    (e, h)
}

/// Plane wave travelling in `+y`, polarized along `z`:
/// `E_z = cos(sqrt(εμ) ω y - ω t)`, `H_x = sqrt(ε/μ) E_z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWave {
    pub frequency: f64,
    pub eps: f64,
    pub mu: f64,
}

impl PlaneWave {
    pub fn new(frequency: f64, eps: f64, mu: f64) -> Result<Self> {
        if !(frequency > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "frequency {frequency} must be positive"
            )));
        }
        Ok(PlaneWave { frequency, eps, mu })
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    pub fn wavelength(&self) -> f64 {
        1.0 / ((self.eps * self.mu).sqrt() * self.frequency)
    }

    fn phase(&self, x: &Point3<f64>, t: f64) -> f64 {
        let w = self.omega();
        (self.eps * self.mu).sqrt() * w * x.y - w * t
    }

    pub fn fields(&self, x: &Point3<f64>, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let c = self.phase(x, t).cos();
        (
            Vector3::new(0.0, 0.0, c),
            Vector3::new((self.eps / self.mu).sqrt() * c, 0.0, 0.0),
        )
    }

    /// `g_inc = H_inc × n + sqrt(ε/μ) (E_inc × n) × n` on a face with unit normal `n`.
    pub fn abc_data(&self, x: &Point3<f64>, t: f64, n: &Vector3<f64>) -> Vector3<f64> {
        let (e, h) = self.fields(x, t);
        abc_incident_data(&e, &h, n, (self.eps / self.mu).sqrt())
    }
}

pub fn plane_wave(
    x: &Point3<f64>,
    t: f64,
    frequency: f64,
    eps: f64,
    mu: f64,
) -> (Vector3<f64>, Vector3<f64>) {
    PlaneWave { frequency, eps, mu }.fields(x, t)
}

/// Silver–Müller incident data from incident fields.
pub fn abc_incident_data(
    e: &Vector3<f64>,
    h: &Vector3<f64>,
    n: &Vector3<f64>,
    admittance: f64,
) -> Vector3<f64> {
    h.cross(n) + admittance * e.cross(n).cross(n)
}

/// Closed-form reference solutions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticalField {
    /// [`cavity_mode_111`].
    Cavity111,
    /// [`cavity_mode_111_pec`].
    CavityPec111,
    PlaneWave(PlaneWave),
    /// Decaying PEC mode of the unit cube for the diffusion equation
    /// `σ ∂E/∂t + ∇×(μ⁻¹∇×E) = 0` with scalar `σ`:
    /// `E = (cos πx sin πy sin πz, -2 sin πx cos πy sin πz, sin πx sin πy cos πz) e^{-λt}`,
    /// `λ = 3π² / (μσ)`, and `H = -∫ μ⁻¹∇×E dt = μ⁻¹∇×E / λ`.
    DiffusionMode {
        mu: f64,
        sigma: f64,
    },
}

impl AnalyticalField {
    pub fn fields(&self, x: &Point3<f64>, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        match self {
            AnalyticalField::Cavity111 => cavity_mode_111(x, t),
            AnalyticalField::CavityPec111 => cavity_mode_111_pec(x, t),
            AnalyticalField::PlaneWave(w) => w.fields(x, t),
            AnalyticalField::DiffusionMode { mu, .. } => {
                let (e, curl) = self.diffusion_mode(x, t);
                (e, curl / (mu * self.decay_rate()))
            }
        }
    }

    pub fn e(&self, x: &Point3<f64>, t: f64) -> Vector3<f64> {
        self.fields(x, t).0
    }

    pub fn h(&self, x: &Point3<f64>, t: f64) -> Vector3<f64> {
        self.fields(x, t).1
    }

    /// `∂E/∂t`.
    pub fn de_dt(&self, x: &Point3<f64>, t: f64) -> Vector3<f64> {
        match self {
            AnalyticalField::Cavity111 => {
                let (e, _) = cavity_mode_111(x, 0.0);
                -e * PI * (PI * t).sin()
            }
            AnalyticalField::CavityPec111 => {
                let (e, _) = cavity_mode_111_pec(x, 0.0);
                -e * PI * (PI * t).sin()
            }
            AnalyticalField::PlaneWave(w) => {
                let s = w.phase(x, t).sin();
                Vector3::new(0.0, 0.0, w.omega() * s)
            }
            AnalyticalField::DiffusionMode { .. } => {
                -self.decay_rate() * self.diffusion_mode(x, t).0
            }
        }
    }

    /// `∇×E`.
    pub fn curl_e(&self, x: &Point3<f64>, t: f64) -> Vector3<f64> {
        match self {
            AnalyticalField::Cavity111 => {
                let (sx, cx) = (PI * x.x).sin_cos();
                let sy = (PI * x.y).sin();
                let (sz, cz) = (PI * x.z).sin_cos();
                Vector3::new(3.0 * PI * cx * sy * sz, 0.0, -3.0 * PI * sx * sy * cz)
                    * (PI * t).cos()
            }
            AnalyticalField::CavityPec111 => {
                let (sx, cx) = (PI * x.x).sin_cos();
                let cy = (PI * x.y).cos();
                let (sz, cz) = (PI * x.z).sin_cos();
                Vector3::new(3.0 * PI * sx * cy * cz, 0.0, -3.0 * PI * cx * cy * sz)
                    * (PI * t).cos()
            }
            AnalyticalField::PlaneWave(w) => {
                let k = (w.eps * w.mu).sqrt() * w.omega();
                Vector3::new(-k * w.phase(x, t).sin(), 0.0, 0.0)
            }
            AnalyticalField::DiffusionMode { .. } => self.diffusion_mode(x, t).1,
        }
    }

    fn decay_rate(&self) -> f64 {
        match self {
            AnalyticalField::DiffusionMode { mu, sigma } => 3.0 * PI * PI / (mu * sigma),
            _ => 0.0,
        }
    }

    fn diffusion_mode(&self, x: &Point3<f64>, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let (sz, cz) = (PI * x.z).sin_cos();
        let d = (-self.decay_rate() * t).exp();
        let e = Vector3::new(cx * sy * sz, -2.0 * sx * cy * sz, sx * sy * cz) * d;
        // ∇×E, component by component
        let curl = Vector3::new(3.0 * PI * sx * cy * cz, 0.0, -3.0 * PI * cx * cy * sz) * d;
        (e, curl)
    }
}

/// Impressed current density `i_s`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SourceTerm {
    #[default]
    None,
    /// `i_s = -σ E^a`, which makes a solution of the lossless equations
    /// solve the lossy ones.
    Manufactured {
        sigma: Matrix3<f64>,
        field: AnalyticalField,
    },
    /// `i_s = A d exp(-|x - c|² / w²) exp(-((t - t0)/s)²)`.
    GaussianPulse {
        amplitude: f64,
        direction: Vector3<f64>,
        center: Point3<f64>,
        width: f64,
        t0: f64,
        spread: f64,
    },
}

impl SourceTerm {
    pub fn manufactured(sigma: Matrix3<f64>) -> Self {
        SourceTerm::Manufactured {
            sigma,
            field: AnalyticalField::Cavity111,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, SourceTerm::None)
    }

    pub fn current(&self, x: &Point3<f64>, t: f64) -> Vector3<f64> {
        match self {
            SourceTerm::None => Vector3::zeros(),
            SourceTerm::Manufactured { sigma, field } => -(sigma * field.e(x, t)),
            SourceTerm::GaussianPulse { .. } => {
                let (s, _) = self.pulse(x, t);
                s
            }
        }
    }

    /// `∂i_s/∂t`.
    pub fn current_rate(&self, x: &Point3<f64>, t: f64) -> Vector3<f64> {
        match self {
            SourceTerm::None => Vector3::zeros(),
            SourceTerm::Manufactured { sigma, field } => -(sigma * field.de_dt(x, t)),
            SourceTerm::GaussianPulse { .. } => self.pulse(x, t).1,
        }
    }

    fn pulse(&self, x: &Point3<f64>, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let SourceTerm::GaussianPulse {
            amplitude,
            direction,
            center,
            width,
            t0,
            spread,
        } = self
        else {
            unreachable!()
        };
        let space = (-(x - center).norm_squared() / (width * width)).exp();
        let tau = (t - t0) / spread;
        let time = (-tau * tau).exp();
        let v = direction * (amplitude * space);
        (v * time, v * (-2.0 * tau / spread * time))
    }
}
