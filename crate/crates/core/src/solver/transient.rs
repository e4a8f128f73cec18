use super::stepping::{Integrator, StepReport};
use super::{BoundaryData, FlowState, ModelParams, TimeSteppingConfig};
use crate::error::SolverError;
use crate::fem::MixedSpace;
use crate::stats::{dissipation_rate, kinetic_energy, DissipationSeries};

/// A statistic sample handed to [`Hooks::on_sample`].
#[derive(Debug)]
pub struct SampleEvent<'a> {
    pub step: usize,
    pub state: &'a FlowState,
    pub eps: f64,
    pub ke: f64,
}

/// Callbacks invoked during a transient run. Returning an error aborts the
/// run; the series collected so far is kept.
pub trait Hooks {
    fn on_sample(&mut self, _event: &SampleEvent<'_>) -> Result<(), SolverError> {
        Ok(())
    }

    fn on_step(&mut self, _step: usize, _state: &FlowState, _report: &StepReport) -> Result<(), SolverError> {
        Ok(())
    }
}

impl Hooks for () {}

#[derive(Debug)]
pub struct TransientOutcome {
    pub series: DissipationSeries,
    pub final_state: FlowState,
    pub steps_completed: usize,
    /// Steps whose Picard iteration hit `picard_max`.
    pub picard_failures: usize,
    pub max_picard_iterations: usize,
    pub max_divergence_residual: f64,
    pub warnings: Vec<String>,
    /// Set when the run stopped early; `series` then holds the partial record.
    pub error: Option<SolverError>,
}

impl TransientOutcome {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }
}

impl Integrator {
    fn sample(
        &self,
        series: &mut DissipationSeries,
        step: usize,
        state: &FlowState,
        hooks: &mut dyn Hooks,
    ) -> Result<(), SolverError> {
        let map = |e: crate::error::StatsError| SolverError::InvalidConfig(e.to_string());
        let eps = dissipation_rate(self.space(), self.forms(), state, self.params()).map_err(map)?;
        let ke = kinetic_energy(self.space(), self.forms(), state).map_err(map)?;
        series.push(state.t, eps, ke).map_err(map)?;
        hooks.on_sample(&SampleEvent { step, state, eps, ke })
    }

    /// Integrates from `initial` to `initial.t + t_final`, sampling every
    /// `output_every` steps and at the final step.
    pub fn run(&mut self, initial: FlowState, cfg: &TimeSteppingConfig, hooks: &mut dyn Hooks) -> TransientOutcome {
        let t0 = initial.t;
        let mut out = TransientOutcome {
            series: DissipationSeries::new(t0 + cfg.burn_in(), self.params().dissipation_scale()),
            final_state: initial,
            steps_completed: 0,
            picard_failures: 0,
            max_picard_iterations: 0,
            max_divergence_residual: 0.0,
            warnings: Vec::new(),
            error: None,
        };
        if let Err(e) = cfg.validate() {
            out.error = Some(e);
            return out;
        }
        let start = out.final_state.clone();
        if let Err(e) = self.sample(&mut out.series, 0, &start, hooks) {
            out.error = Some(e);
            return out;
        }
        let n_steps = cfg.n_steps();
        for step in 1..=n_steps {
            let result = self.step(&out.final_state, cfg);
            let (mut next, report) = match result {
                Ok(r) => r,
                Err(e) => {
                    out.error = Some(e);
                    return out;
                }
            };
            // Pin the clock to the grid to avoid drift from repeated addition.
            next.t = t0 + step as f64 * cfg.dt;
            out.steps_completed = step;
            out.max_picard_iterations = out.max_picard_iterations.max(report.picard_iterations);
            out.max_divergence_residual = out.max_divergence_residual.max(report.divergence_residual);
            if !report.converged {
                out.picard_failures += 1;
                if out.warnings.len() < 20 {
                    out.warnings.push(format!(
                        "Picard iteration did not converge at t = {:.6} (increment {:.3e} after {} iterations)",
                        next.t, report.increment, report.picard_iterations
                    ));
                }
            }
            let hooked = hooks.on_step(step, &next, &report);
            out.final_state = next;
            if let Err(e) = hooked {
                out.error = Some(e);
                return out;
            }
            if step % cfg.output_every == 0 || step == n_steps {
                let state = out.final_state.clone();
                if let Err(e) = self.sample(&mut out.series, step, &state, hooks) {
                    out.error = Some(e);
                    return out;
                }
            }
        }
        out
    }
}

/// Builds an integrator, starts from the steady Stokes state at `t = 0`,
/// and integrates to `cfg.t_final`.
pub fn run_transient(
    space: MixedSpace,
    params: ModelParams,
    cfg: &TimeSteppingConfig,
    bc: BoundaryData,
    hooks: &mut dyn Hooks,
) -> Result<TransientOutcome, SolverError> {
    cfg.validate()?;
    let mut integrator = Integrator::new(space, params, bc)?;
    let initial = integrator.solve_stokes(0.0)?;
    Ok(integrator.run(initial, cfg, hooks))
}
