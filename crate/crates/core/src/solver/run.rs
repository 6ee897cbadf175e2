use super::{CondensedSystem, FieldState, Problem, StepDiagnostics};
use crate::assembly::Discretization;
use crate::{Error, Result};

/// Number of steps `N` with `t_max = N dt`; rejects non-integral ratios.
pub fn steps_for(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t_max >= 0, got {dt}, {t_max}"
        )));
    }
    let n = (t_max / dt).round();
    if (n * dt - t_max).abs() > 1e-9 * t_max.max(dt) {
        return Err(Error::InvalidArgument(format!(
            "t_max = {t_max:e} is not an integer multiple of dt = {dt:e}"
        )));
    }
    Ok(n as usize)
}

/// Final state and per-step diagnostics of a run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub state: FieldState,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Runs `n_steps` backward-Euler steps from `initial`. `observe` sees the
/// initial state (step 0) and every new state.
pub fn run(
    disc: &Discretization,
    system: &CondensedSystem,
    problem: &Problem,
    initial: FieldState,
    n_steps: usize,
    mut observe: impl FnMut(usize, &FieldState) -> Result<()>,
) -> Result<RunSummary> {
    observe(0, &initial)?;
    let mut diagnostics = Vec::with_capacity(n_steps + 1);
    diagnostics.push(StepDiagnostics {
        step: 0,
        time: initial.time,
        energy: system.energy(disc, &initial),
        residual: 0.0,
    });
    let mut state = initial;
    for step in 1..=n_steps {
        let (next, residual) = system
            .step_with_diagnostics(disc, &state, problem)
            .map_err(|e| match e {
                Error::Step { .. } => e,
                other => Error::Step {
                    step,
                    time: state.time + system.dt,
                    reason: other.to_string(),
                },
            })?;
        state = next;
        diagnostics.push(StepDiagnostics {
            step,
            time: state.time,
            energy: system.energy(disc, &state),
            residual,
        });
        observe(step, &state)?;
    }
    Ok(RunSummary { state, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_step_counts() {
        assert_eq!(steps_for(5e-4, 1e-4).unwrap(), 5);
        assert_eq!(steps_for(3.33e-8, 1e-11).unwrap(), 3330);
        assert_eq!(steps_for(0.0, 1e-3).unwrap(), 0);
        assert!(steps_for(1.0, 0.3).is_err());
    }
}
