//! Subcommand implementations.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use maxwell_hdg::mesh::{validate, BoundaryTag};
use maxwell_hdg::postproc::{
    convergence_order, export_vtk, relative_l2_error, trace_consistency, vertex_field,
    ConvergenceReport, Dft, TraceConsistency,
};
use maxwell_hdg::solver::{run as run_steps, StepDiagnostics};
use maxwell_hdg::{
    AnalyticalField, CellKind, CondensedSystem, Discretization, Error, FieldState, Formulation,
    Mesh, Parallelism, Problem,
};
use nalgebra::Vector3;

use crate::config::{
    ConfigError, DirichletKind, FormulationKind, InitialKind, MeshConfig, RunConfig, DOF_BUDGET,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{dofs} element unknowns exceed the budget of {budget}; pass --override-budget to run anyway")]
    Budget { dofs: usize, budget: usize },
    #[error("invalid mesh:\n{0}")]
    InvalidMesh(String),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Budget { .. } => 2,
            CliError::Solver(Error::Io { .. }) | CliError::Io { .. } => 4,
            CliError::Solver(
                Error::InvalidArgument(_) | Error::Unsupported(_) | Error::Parse { .. },
            ) => 2,
            CliError::InvalidMesh(_) | CliError::Solver(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Settings shared by all subcommands.
#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Where artifacts go; nothing is written when `None`.
    pub output_dir: Option<PathBuf>,
    pub override_budget: bool,
    /// Directory against which relative mesh paths are resolved.
    pub base_dir: PathBuf,
    pub mode: Parallelism,
}

/// Everything a finished run produced.
pub struct RunOutcome {
    pub disc: Discretization,
    pub state: FieldState,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Relative L² error of `E` against the reference at the final time.
    pub error: Option<f64>,
    /// Real parts of the transformed interior unknowns, per frequency.
    pub dft: Vec<(f64, Vec<f64>)>,
    /// Relative error of `Re DFT(E)` against `½ E_inc(x, 0)`, per frequency,
    /// when the reference is a plane wave.
    pub dft_error: Vec<(f64, f64)>,
    pub trace: TraceConsistency,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    /// The transform at `dft[index]` as a state sharing the run's layout.
    pub fn dft_state(&self, index: usize) -> FieldState {
        coefficient_state(self.state.time, self.dft[index].1.clone())
    }
}

fn coefficient_state(time: f64, interior: Vec<f64>) -> FieldState {
    FieldState {
        time,
        interior,
        trace: Vec::new(),
        magnetic: Vec::new(),
    }
}

fn stem(cfg: &RunConfig) -> &str {
    if cfg.name.is_empty() {
        "run"
    } else {
        &cfg.name
    }
}

fn output_path(dir: &Path, file: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir.join(file))
}

fn write_file(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

/// Builds the mesh described by `cfg` with its boundary tags applied.
pub fn build_mesh(cfg: &RunConfig, base_dir: &Path) -> Result<Mesh, CliError> {
    let mut mesh = cfg.mesh.build(base_dir)?;
    if let Some(b) = cfg.boundary {
        mesh.tag_boundary(|_| b.tag());
    }
    if cfg.formulation == FormulationKind::Efield
        && mesh.boundary_census().contains_key(&BoundaryTag::Absorbing)
    {
        return Err(ConfigError::Invalid {
            key: "formulation".into(),
            reason: "the electric-field formulation does not support absorbing boundaries".into(),
        }
        .into());
    }
    Ok(mesh)
}

fn element_unknowns(mesh: &Mesh, degree: usize) -> usize {
    mesh.cells
        .iter()
        .map(|c| 6 * c.kind.basis_size(degree))
        .sum()
}

fn state_fields<'a>(
    disc: &'a Discretization,
    state: &'a FieldState,
) -> Vec<(&'static str, Vec<Vector3<f64>>)> {
    let mut fields = vec![("E", vertex_field(disc, |e| state.electric(disc, e)))];
    match disc.formulation {
        Formulation::Mixed => fields.push(("H", vertex_field(disc, |e| state.first(disc, e)))),
        Formulation::ElectricField => {
            fields.push(("U", vertex_field(disc, |e| state.first(disc, e))));
            fields.push(("H", vertex_field(disc, |e| state.magnetic_field(disc, e))));
        }
    }
    fields
}

fn write_vtk(
    disc: &Discretization,
    fields: &[(&str, Vec<Vector3<f64>>)],
    path: PathBuf,
) -> Result<PathBuf, CliError> {
    let refs: Vec<(&str, &[Vector3<f64>])> =
        fields.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    export_vtk(&disc.mesh, &refs, &path)?;
    Ok(path)
}

/// Per-step energy and trace-solve residual.
pub fn energy_csv(diagnostics: &[StepDiagnostics]) -> String {
    let mut s = String::from("step,time,energy,residual\n");
    for d in diagnostics {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e}",
            d.step, d.time, d.energy, d.residual
        );
    }
    s
}

/// Runs one simulation and writes the configured artifacts.
pub fn simulate(cfg: &RunConfig, opts: &Options) -> Result<RunOutcome, CliError> {
    let mesh = build_mesh(cfg, &opts.base_dir)?;
    let dofs = element_unknowns(&mesh, cfg.degree);
    if dofs > DOF_BUDGET && !opts.override_budget {
        return Err(CliError::Budget {
            dofs,
            budget: DOF_BUDGET,
        });
    }
    let disc = Discretization::new(
        mesh,
        cfg.formulation(),
        cfg.degree,
        cfg.material()?,
        cfg.tau_spec(),
    )?;
    let system = CondensedSystem::build(&disc, cfg.time.dt, opts.mode)?;
    let reference = cfg.reference_field()?;
    let initial = match (cfg.initial, reference) {
        (InitialKind::Reference, Some(field)) => {
            FieldState::from_analytical(&disc, &field, 0.0, opts.mode)?
        }
        _ => FieldState::zeros(&disc),
    };
    let problem = Problem {
        source: cfg.source()?,
        dirichlet: match cfg.dirichlet {
            DirichletKind::Reference => reference,
            DirichletKind::Zero => None,
        },
        incident: cfg.incident_wave()?,
    };

    let name = stem(cfg);
    let mut artifacts = Vec::new();
    let mut dfts: Vec<Dft> = cfg
        .output
        .dft_frequencies
        .iter()
        .map(|&f| Dft::new(f, initial.interior.len()))
        .collect();
    let every = cfg.output.snapshot_every;
    let snapshots = cfg.output.vtk && every > 0;
    if let Some(dir) = &opts.output_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let summary = run_steps(
        &disc,
        &system,
        &problem,
        initial,
        cfg.n_steps()?,
        |step, state| {
            // the transform window is (0, T]: N samples spanning exactly T
            if step > 0 {
                for d in &mut dfts {
                    d.add(state.time, &state.interior)?;
                }
            }
            if let (true, Some(dir)) = (snapshots && step % every == 0, &opts.output_dir) {
                let path = dir.join(format!("{name}_{step:06}.vtk"));
                let refs = state_fields(&disc, state);
                let refs: Vec<(&str, &[Vector3<f64>])> =
                    refs.iter().map(|(n, v)| (*n, v.as_slice())).collect();
                export_vtk(&disc.mesh, &refs, &path)?;
                artifacts.push(path);
            }
            Ok(())
        },
    )?;
    drop(system);
    let state = summary.state;
    let t = state.time;
    let norm = cfg.output.error_norm.norm();

    let error = match reference {
        Some(field) => Some(relative_l2_error(
            &disc,
            |e| state.electric(&disc, e),
            |x| field.e(x, t),
            norm,
            opts.mode,
        )?),
        None => None,
    };
    let trace = trace_consistency(&disc, &state);
    let dft: Vec<(f64, Vec<f64>)> = dfts
        .iter()
        .map(|d| (d.frequency(), d.real_part()))
        .collect();

    let mut dft_error = Vec::new();
    if let Some(AnalyticalField::PlaneWave(w)) = reference {
        for (f, re) in &dft {
            let s = coefficient_state(t, re.clone());
            let err = relative_l2_error(
                &disc,
                |e| s.electric(&disc, e),
                |x| w.fields(x, 0.0).0 * 0.5,
                norm,
                opts.mode,
            )?;
            dft_error.push((*f, err));
        }
    }

    if let Some(dir) = &opts.output_dir {
        if cfg.output.csv {
            let path = output_path(dir, &format!("{name}_energy.csv"))?;
            artifacts.push(write_file(path, &energy_csv(&summary.diagnostics))?);
        }
        if cfg.output.vtk && !(snapshots && cfg.n_steps()? % every == 0) {
            let path = output_path(dir, &format!("{name}_final.vtk"))?;
            artifacts.push(write_vtk(&disc, &state_fields(&disc, &state), path)?);
        }
        for (f, re) in &dft {
            let s = coefficient_state(t, re.clone());
            let field = vertex_field(&disc, |e| s.electric(&disc, e));
            let path = output_path(dir, &format!("{name}_dft_{f:e}.vtk"))?;
            artifacts.push(write_vtk(&disc, &[("Re_DFT_E", field)], path)?);
        }
    }

    Ok(RunOutcome {
        disc,
        state,
        diagnostics: summary.diagnostics,
        error,
        dft,
        dft_error,
        trace,
        artifacts,
    })
}

/// Human-readable summary of a finished run.
pub fn describe_run(cfg: &RunConfig, out: &RunOutcome) -> String {
    let mut s = String::new();
    let last = out.diagnostics.last();
    let _ = writeln!(
        s,
        "{}: {} elements, degree {}, {} steps, t = {:e}",
        stem(cfg),
        out.disc.mesh.n_cells(),
        cfg.degree,
        out.diagnostics.len() - 1,
        out.state.time
    );
    if let Some(d) = last {
        let _ = writeln!(
            s,
            "energy {:.6e}, trace residual {:.3e}",
            d.energy, d.residual
        );
    }
    let _ = writeln!(
        s,
        "flux mismatch {:.3e}, trace mismatch {:.3e}",
        out.trace.flux_mismatch, out.trace.trace_mismatch
    );
    if let Some(e) = out.error {
        let _ = writeln!(s, "relative L2 error of E: {e:.6e}");
    }
    for (f, e) in &out.dft_error {
        let _ = writeln!(
            s,
            "DFT at {f:e} Hz: relative L2 error against E_inc(x, 0)/2: {e:.6e}"
        );
    }
    for p in &out.artifacts {
        let _ = writeln!(s, "wrote {}", p.display());
    }
    s
}

fn sweep_context(cfg: &RunConfig) -> (&'static str, usize, String) {
    let f = match cfg.formulation {
        FormulationKind::Mixed => "mixed",
        FormulationKind::Efield => "efield",
    };
    (f, cfg.degree, cfg.tau_description())
}

fn require_reference(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.reference.is_none() {
        return Err(ConfigError::Invalid {
            key: "reference".into(),
            reason: "convergence studies need a reference field".into(),
        }
        .into());
    }
    Ok(())
}

fn write_report(
    report: &ConvergenceReport,
    cfg: &RunConfig,
    opts: &Options,
    suffix: &str,
) -> Result<(), CliError> {
    if let Some(dir) = &opts.output_dir {
        let path = output_path(dir, &format!("{}_{suffix}.csv", stem(cfg)))?;
        write_file(path, &report.to_csv())?;
    }
    Ok(())
}

/// Spatial study: one run per mesh resolution.
pub fn converge_space(
    cfg: &RunConfig,
    resolutions: &[usize],
    opts: &Options,
    mut each: impl FnMut(usize, &RunOutcome),
) -> Result<ConvergenceReport, CliError> {
    require_reference(cfg)?;
    let mut errors = Vec::new();
    let run_opts = Options {
        output_dir: None,
        ..opts.clone()
    };
    for &n in resolutions {
        let mesh = cfg
            .mesh
            .with_resolution(n)
            .ok_or_else(|| ConfigError::Invalid {
                key: "mesh.kind".into(),
                reason: "this mesh cannot be refined by resolution".into(),
            })?;
        let c = RunConfig {
            mesh,
            ..cfg.clone()
        };
        let out = simulate(&c, &run_opts)?;
        errors.push(out.error.expect("reference is set"));
        each(n, &out);
    }
    let res: Vec<f64> = resolutions.iter().map(|&n| n as f64).collect();
    let (f, p, tau) = sweep_context(cfg);
    let report = convergence_order(&errors, &res)?.with_context(f, p, tau);
    write_report(&report, cfg, opts, "space")?;
    Ok(report)
}

/// Temporal study: fixed mesh and final time, one run per `1/Δt`.
pub fn converge_time(
    cfg: &RunConfig,
    inverse_dt: &[f64],
    opts: &Options,
    mut each: impl FnMut(f64, &RunOutcome),
) -> Result<ConvergenceReport, CliError> {
    require_reference(cfg)?;
    let mut errors = Vec::new();
    let run_opts = Options {
        output_dir: None,
        ..opts.clone()
    };
    for &r in inverse_dt {
        let mut c = cfg.clone();
        c.time.dt = 1.0 / r;
        c.validate()?;
        let out = simulate(&c, &run_opts)?;
        errors.push(out.error.expect("reference is set"));
        each(r, &out);
    }
    let (f, p, tau) = sweep_context(cfg);
    let report = convergence_order(&errors, inverse_dt)?.with_context(f, p, tau);
    write_report(&report, cfg, opts, "time")?;
    Ok(report)
}

/// Element, face, size, region and boundary summary plus validation.
pub fn mesh_info(mesh: &Mesh) -> Result<String, CliError> {
    let mut s = String::new();
    let n = mesh.n_cells();
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    let _ = writeln!(s, "elements {n}");
    let _ = writeln!(
        s,
        "faces {} (interior {}, boundary {})",
        mesh.faces.len(),
        mesh.n_interior_faces(),
        mesh.n_boundary_faces()
    );
    if n > 0 {
        let h: Vec<f64> = (0..n).map(|e| mesh.cell_diameter(e)).collect();
        let min = h.iter().copied().fold(f64::INFINITY, f64::min);
        let max = h.iter().copied().fold(0.0, f64::max);
        let mean = h.iter().sum::<f64>() / n as f64;
        // edge of the regular cell (cube or tetrahedron) of the mean volume
        let edge: f64 = (0..n)
            .map(|e| match mesh.cells[e].kind {
                CellKind::Tetrahedron => (6.0 * SQRT_2 * mesh.cell_volume(e)).cbrt(),
                _ => mesh.cell_volume(e).cbrt(),
            })
            .sum::<f64>()
            / n as f64;
        let _ = writeln!(s, "diameter: min {min:.4e} mean {mean:.4e} max {max:.4e}");
        let _ = writeln!(s, "characteristic h {edge:.4e} (1/h = {:.2})", 1.0 / edge);
    }
    let regions: Vec<String> = mesh.regions().iter().map(|r| r.to_string()).collect();
    let _ = writeln!(s, "regions {}", regions.join(" "));
    for (tag, count) in mesh.boundary_census() {
        let _ = writeln!(s, "boundary {tag:?} {count}");
    }
    let report = validate(mesh);
    if !report.is_valid() {
        return Err(CliError::InvalidMesh(format!("{s}{report}")));
    }
    let _ = write!(s, "{report}");
    Ok(s)
}

/// Mesh for `mesh-info` from a config, a file or a generated cube.
pub fn mesh_for_info(
    cfg: Option<&RunConfig>,
    source: Option<MeshConfig>,
    base_dir: &Path,
) -> Result<Mesh, CliError> {
    match (cfg, source) {
        (_, Some(m)) => Ok(m.build(base_dir)?),
        (Some(c), None) => build_mesh(c, base_dir),
        (None, None) => Err(ConfigError::Invalid {
            key: "mesh".into(),
            reason: "give --config, --msh, --cube-hex or --cube-tet".into(),
        }
        .into()),
    }
}
