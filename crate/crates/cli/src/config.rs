//! Run configuration: TOML with dotted sections.

use std::path::{Path, PathBuf};

use maxwell_hdg::basis::MAX_DEGREE;
use maxwell_hdg::mesh::{
    generate_ball_tet, generate_box_hex, generate_unit_cube_hex, generate_unit_cube_tet,
    import_gmsh, BallMesh, BoundaryTag,
};
use maxwell_hdg::physics::{Material, MaterialProperties};
use maxwell_hdg::postproc::ErrorNorm;
use maxwell_hdg::{AnalyticalField, Formulation, Mesh, PlaneWave, SourceTerm, TauSpec};
use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Configuration problems, reported with the offending key.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulationKind {
    #[default]
    Mixed,
    Efield,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshConfig {
    /// Structured hexahedra on the unit cube.
    CubeHex {
        n: usize,
    },
    /// Five tetrahedra per cube of an `n³` grid, optionally jittered.
    CubeTet {
        n: usize,
        #[serde(default)]
        jitter: f64,
        #[serde(default)]
        seed: u64,
    },
    BoxHex {
        n: [usize; 3],
        extent: [f64; 3],
    },
    /// Ball of radius `radius` with an absorbing surface.
    Ball {
        n: usize,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner_radius: Option<f64>,
    },
    Msh {
        path: PathBuf,
    },
}

impl MeshConfig {
    /// Builds the mesh; relative MSH paths are resolved against `base`.
    pub fn build(&self, base: &Path) -> maxwell_hdg::Result<Mesh> {
        match self {
            MeshConfig::CubeHex { n } => generate_unit_cube_hex(*n),
            MeshConfig::CubeTet { n, jitter, seed } => generate_unit_cube_tet(*n, *jitter, *seed),
            MeshConfig::BoxHex { n, extent } => generate_box_hex(*n, *extent),
            MeshConfig::Ball {
                n,
                radius,
                inner_radius,
            } => generate_ball_tet(BallMesh {
                n: *n,
                radius: *radius,
                inner_radius: *inner_radius,
            }),
            MeshConfig::Msh { path } => import_gmsh(base.join(path)),
        }
    }

    pub fn with_resolution(&self, n: usize) -> Option<MeshConfig> {
        match self {
            MeshConfig::CubeHex { .. } => Some(MeshConfig::CubeHex { n }),
            MeshConfig::CubeTet { jitter, seed, .. } => Some(MeshConfig::CubeTet {
                n,
                jitter: *jitter,
                seed: *seed,
            }),
            MeshConfig::Ball {
                radius,
                inner_radius,
                ..
            } => Some(MeshConfig::Ball {
                n,
                radius: *radius,
                inner_radius: *inner_radius,
            }),
            _ => None,
        }
    }
}

/// Conductivity: a scalar, a diagonal or a full 3×3 matrix (rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Conductivity {
    Scalar(f64),
    Diagonal([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl Default for Conductivity {
    fn default() -> Self {
        Conductivity::Scalar(0.0)
    }
}

impl Conductivity {
    pub fn matrix(&self) -> Matrix3<f64> {
        match self {
            Conductivity::Scalar(s) => Matrix3::identity() * *s,
            Conductivity::Diagonal(d) => Matrix3::from_diagonal(&Vector3::from(*d)),
            Conductivity::Full(m) => Matrix3::from_fn(|i, j| m[i][j]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub region: u32,
    pub eps: f64,
    pub mu: f64,
    #[serde(default)]
    pub sigma: Conductivity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TauConfig {
    Impedance { scale: f64 },
    Constant { value: f64 },
}

impl TauConfig {
    pub fn spec(&self) -> TauSpec {
        match *self {
            TauConfig::Impedance { scale } => TauSpec::Impedance { scale },
            TauConfig::Constant { value } => TauSpec::Constant(value),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TauConfig::Impedance { scale } => format!("{scale}*sqrt(eps/mu)"),
            TauConfig::Constant { value } => format!("{value}"),
        }
    }
}

/// Closed-form fields used for initial data, boundary data and errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    /// (1,1,1) mode with `n × E = 0` on the walls.
    Cavity,
    /// (1,1,1) mode with `n × H = 0` on the walls; needs Dirichlet data.
    CavityPmc,
    PlaneWave {
        frequency: f64,
        eps: f64,
        mu: f64,
    },
    Diffusion {
        mu: f64,
        sigma: f64,
    },
}

impl FieldConfig {
    pub fn field(&self) -> Result<AnalyticalField, ConfigError> {
        Ok(match *self {
            FieldConfig::Cavity => AnalyticalField::CavityPec111,
            FieldConfig::CavityPmc => AnalyticalField::Cavity111,
            FieldConfig::PlaneWave { frequency, eps, mu } => AnalyticalField::PlaneWave(
                PlaneWave::new(frequency, eps, mu)
                    .map_err(|e| invalid("field.frequency", e.to_string()))?,
            ),
            FieldConfig::Diffusion { mu, sigma } => AnalyticalField::DiffusionMode { mu, sigma },
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    #[default]
    None,
    /// `i_s = -σ E^a` for the reference field.
    Manufactured,
    GaussianPulse {
        amplitude: f64,
        direction: [f64; 3],
        center: [f64; 3],
        width: f64,
        t0: f64,
        spread: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    #[default]
    Zero,
    /// Projection of the reference field at t = 0.
    Reference,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirichletKind {
    /// `n × E = 0`.
    #[default]
    Zero,
    /// Tangential reference field.
    Reference,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    #[default]
    GlobalRatio,
    ElementRatio,
}

impl NormKind {
    pub fn norm(self) -> ErrorNorm {
        match self {
            NormKind::GlobalRatio => ErrorNorm::GlobalRatio,
            NormKind::ElementRatio => ErrorNorm::ElementRatio,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a VTK snapshot every this many steps (0: final state only).
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub vtk: bool,
    /// Per-step energy and residual.
    #[serde(default)]
    pub csv: bool,
    /// Frequencies of pointwise temporal transforms of E.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dft_frequencies: Vec<f64>,
    #[serde(default)]
    pub error_norm: NormKind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Mesh resolutions for spatial studies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resolutions: Vec<usize>,
    /// Values of `1/Δt` for temporal studies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inverse_dt: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub formulation: FormulationKind,
    pub degree: usize,
    pub mesh: MeshConfig,
    /// Retags every boundary face; by default cubes are PEC, balls are
    /// absorbing and MSH files keep their own tags.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryKind>,
    pub materials: Vec<RegionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauConfig>,
    /// Reference solution for initial data, boundary data and errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<FieldConfig>,
    #[serde(default)]
    pub initial: InitialKind,
    #[serde(default)]
    pub dirichlet: DirichletKind,
    /// Incident plane wave entering through absorbing faces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident: Option<FieldConfig>,
    #[serde(default)]
    pub source: SourceConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub study: StudyConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Pec,
    Absorbing,
}

impl BoundaryKind {
    pub fn tag(self) -> BoundaryTag {
        match self {
            BoundaryKind::Pec => BoundaryTag::Pec,
            BoundaryKind::Absorbing => BoundaryTag::Absorbing,
        }
    }
}

/// Element unknowns above which `--override-budget` is required.
pub const DOF_BUDGET: usize = 1_000_000;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn formulation(&self) -> Formulation {
        match self.formulation {
            FormulationKind::Mixed => Formulation::Mixed,
            FormulationKind::Efield => Formulation::ElectricField,
        }
    }

    pub fn tau_spec(&self) -> TauSpec {
        self.tau
            .map(|t| t.spec())
            .unwrap_or_else(|| TauSpec::default_for(self.formulation()))
    }

    pub fn tau_description(&self) -> String {
        match self.tau {
            Some(t) => t.describe(),
            None => match self.formulation() {
                Formulation::Mixed => "1*sqrt(eps/mu)".into(),
                Formulation::ElectricField => "1".into(),
            },
        }
    }

    pub fn reference_field(&self) -> Result<Option<AnalyticalField>, ConfigError> {
        self.reference.map(|r| r.field()).transpose()
    }

    pub fn incident_wave(&self) -> Result<Option<PlaneWave>, ConfigError> {
        match self.incident {
            None => Ok(None),
            Some(FieldConfig::PlaneWave { frequency, eps, mu }) => {
                Ok(Some(PlaneWave::new(frequency, eps, mu).map_err(|e| {
                    invalid("incident.frequency", e.to_string())
                })?))
            }
            Some(_) => Err(invalid("incident.kind", "only plane waves can be incident")),
        }
    }

    pub fn material(&self) -> Result<Material, ConfigError> {
        let mut iter = self.materials.iter().enumerate();
        let props = |i: usize, r: &RegionConfig| {
            MaterialProperties::new(r.eps, r.mu, r.sigma.matrix())
                .map_err(|e| invalid(&format!("materials[{i}]"), e.to_string()))
        };
        let (i, first) = iter
            .next()
            .ok_or_else(|| invalid("materials", "at least one region is required"))?;
        let mut m = Material::uniform(props(i, first)?).with_region(first.region, props(i, first)?);
        for (i, r) in iter {
            m = m.with_region(r.region, props(i, r)?);
        }
        Ok(m)
    }

    pub fn source(&self) -> Result<SourceTerm, ConfigError> {
        Ok(match self.source {
            SourceConfig::None => SourceTerm::None,
            SourceConfig::Manufactured => {
                let field = self.reference_field()?.ok_or_else(|| {
                    invalid("source", "a manufactured source needs a reference field")
                })?;
                let sigma = self.materials[0].sigma.matrix();
                SourceTerm::Manufactured { sigma, field }
            }
            SourceConfig::GaussianPulse {
                amplitude,
                direction,
                center,
                width,
                t0,
                spread,
            } => SourceTerm::GaussianPulse {
                amplitude,
                direction: Vector3::from(direction),
                center: Point3::from(center),
                width,
                t0,
                spread,
            },
        })
    }

    pub fn n_steps(&self) -> Result<usize, ConfigError> {
        maxwell_hdg::solver::steps_for(self.time.t_max, self.time.dt)
            .map_err(|e| invalid("time.t_max", e.to_string()))
    }

    /// Checks everything that can be checked before meshing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=MAX_DEGREE).contains(&self.degree) {
            return Err(invalid(
                "degree",
                format!("must lie in 1..={MAX_DEGREE}, got {}", self.degree),
            ));
        }
        if !(self.time.dt > 0.0 && self.time.dt.is_finite()) {
            return Err(invalid("time.dt", "must be positive"));
        }
        self.n_steps()?;
        self.material()?;
        let mut regions: Vec<u32> = self.materials.iter().map(|r| r.region).collect();
        regions.sort_unstable();
        if regions.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("materials", "duplicate region"));
        }
        if let Some(t) = &self.tau {
            let v = match *t {
                TauConfig::Impedance { scale } => scale,
                TauConfig::Constant { value } => value,
            };
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid("tau", format!("must be positive, got {v}")));
            }
        }
        let absorbing = match self.boundary {
            Some(b) => b == BoundaryKind::Absorbing,
            None => matches!(self.mesh, MeshConfig::Ball { .. }),
        };
        if self.formulation == FormulationKind::Efield {
            if absorbing {
                return Err(invalid(
                    "formulation",
                    "the electric-field formulation does not support absorbing boundaries",
                ));
            }
            for (i, r) in self.materials.iter().enumerate() {
                let s = r.sigma.matrix();
                if s.cholesky().is_none() {
                    return Err(invalid(
                        &format!("materials[{i}].sigma"),
                        "the electric-field formulation needs a positive definite conductivity",
                    ));
                }
            }
        }
        self.reference_field()?;
        self.incident_wave()?;
        let from_file = matches!(self.mesh, MeshConfig::Msh { .. }) && self.boundary.is_none();
        if self.incident.is_some() && !absorbing && !from_file {
            return Err(invalid(
                "incident",
                "an incident wave needs absorbing boundaries",
            ));
        }
        if self.initial == InitialKind::Reference && self.reference.is_none() {
            return Err(invalid("initial", "needs a reference field"));
        }
        if self.dirichlet == DirichletKind::Reference && self.reference.is_none() {
            return Err(invalid("dirichlet", "needs a reference field"));
        }
        self.source()?;
        if let Some(f) = self
            .output
            .dft_frequencies
            .iter()
            .find(|f| !(**f >= 0.0 && f.is_finite()))
        {
            return Err(invalid(
                "output.dft_frequencies",
                format!("invalid frequency {f}"),
            ));
        }
        if let Some(r) = self.study.inverse_dt.iter().find(|r| !(**r > 0.0)) {
            return Err(invalid("study.inverse_dt", format!("invalid value {r}")));
        }
        Ok(())
    }
}
