//! Single transient run with artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, ModelKind};
use crate::bounds::{bound_thm1, bound_thm2, BoundInputs, BoundReport, Thm1Bound};
use crate::error::{io_err, ExperimentError, SolverError};
use crate::fem::MixedSpace;
use crate::solver::{
    save_checkpoint, write_snapshot, FlowState, Hooks, Integrator, ModelParams, StepReport, TransientOutcome,
};
use crate::stats::DissipationSeries;

/// Process-wide execution options.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Element loops and factorizations on one thread, for bitwise
    /// reproducible output.
    pub sequential: bool,
}

impl RunOptions {
    /// Applies the sequential setting to the sparse factorization backend.
    pub fn apply_global(&self) {
        if self.sequential {
            faer::set_global_parallelism(faer::Par::Seq);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub vertices: usize,
    pub triangles: usize,
    pub h_max: f64,
    pub h_min: f64,
    pub area: f64,
    pub hash: String,
}

impl MeshInfo {
    pub fn of(mesh: &crate::mesh::Mesh) -> Self {
        MeshInfo {
            vertices: mesh.n_vertices(),
            triangles: mesh.n_triangles(),
            h_max: mesh.h_max(),
            h_min: mesh.h_min(),
            area: mesh.area(),
            hash: mesh.hash_hex(),
        }
    }
}

/// Which bound the measured coefficient is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// Under-resolved bound; used whenever `C_s δ > 0`.
    UnderResolved,
    /// Resolved bound; the under-resolved one is undefined without a model.
    Resolved,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub kind: BoundKind,
    #[serde(rename = "C")]
    pub c: f64,
    /// Normalized bound.
    pub bound: f64,
    /// Measured time-averaged coefficient; absent when the window is empty.
    pub c_eps: Option<f64>,
    pub satisfied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved: Option<Thm1Bound>,
}

/// Bound at the run's `(Re, h, C_s δ)`, compared with `c_eps`.
pub fn bound_check(params: &ModelParams, h: f64, c: f64, c_eps: Option<f64>) -> Result<BoundCheck, ExperimentError> {
    let inputs =
        BoundInputs { re: params.re(), h, cs: params.cs, delta: params.delta, length: params.length, u_ref: params.u_ref, c };
    let (kind, bound, report, resolved) = if inputs.cs_delta() > 0.0 {
        let r = bound_thm2(&inputs)?;
        (BoundKind::UnderResolved, r.normalized.thm2, Some(r), None)
    } else {
        let r = bound_thm1(&inputs)?;
        (BoundKind::Resolved, r.normalized, None, Some(r))
    };
    Ok(BoundCheck { kind, c, bound, c_eps, satisfied: c_eps.map(|v| v <= bound), report, resolved })
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardStats {
    pub failures: usize,
    pub max_iterations: usize,
    pub total_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub model: ModelKind,
    pub params: ModelParams,
    pub re: f64,
    pub mesh: MeshInfo,
    pub dt: f64,
    pub t_final: f64,
    pub burn_in: f64,
    pub steps_completed: usize,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub final_eps: Option<f64>,
    pub final_c_eps: Option<f64>,
    pub avg_eps: Option<f64>,
    pub c_eps: Option<f64>,
    pub ke_std: Option<f64>,
    pub picard: PicardStats,
    pub max_divergence_residual: f64,
    pub factorizations: usize,
    pub bound: BoundCheck,
    pub warnings: Vec<String>,
}

/// Result of [`execute`]: the summary plus the in-memory series.
#[derive(Debug)]
pub struct RunResult {
    pub summary: RunSummary,
    pub series: DissipationSeries,
    pub final_state: FlowState,
    pub out_dir: PathBuf,
}

struct ArtifactHooks<'a> {
    space: &'a MixedSpace,
    dir: &'a Path,
    vtk_every: usize,
    checkpoint_every: usize,
    picard_total: usize,
}

impl Hooks for ArtifactHooks<'_> {
    fn on_step(&mut self, step: usize, state: &FlowState, report: &StepReport) -> Result<(), SolverError> {
        self.picard_total += report.picard_iterations;
        if self.vtk_every > 0 && step % self.vtk_every == 0 {
            write_snapshot(self.dir.join(format!("snapshot_{step:06}.vtk")), self.space, state)?;
        }
        if self.checkpoint_every > 0 && step % self.checkpoint_every == 0 {
            save_checkpoint(self.dir.join(format!("checkpoint_{step:06}.chk")), self.space, state)?;
        }
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text).map_err(io_err::<ExperimentError>(path))
}

/// Runs one configured simulation, writing `series.csv`, `summary.json`,
/// snapshots, checkpoints, and `warnings.txt` when anything was flagged.
/// Artifacts of an aborted run are still written before the error returns.
pub fn execute(cfg: &ExperimentConfig, base: Option<&Path>, opts: RunOptions) -> Result<RunResult, ExperimentError> {
    cfg.validate()?;
    opts.apply_global();
    let dir = match base {
        Some(b) if cfg.outputs.dir.is_relative() => b.join(&cfg.outputs.dir),
        _ => cfg.outputs.dir.clone(),
    };
    std::fs::create_dir_all(&dir).map_err(io_err::<ExperimentError>(&dir))?;
    write_text(&dir.join("config.toml"), &cfg.to_toml())?;

    let mesh = cfg.domain.build(base)?;
    let info = MeshInfo::of(&mesh);
    let params = cfg.model.params(info.h_max)?;
    let mut space = MixedSpace::new(mesh)?;
    space.set_parallel(!opts.sequential);
    let mut integ = Integrator::new(space, params, cfg.boundary())?;
    let initial = integ.solve_stokes(0.0)?;

    let space = integ.space().clone();
    let mut hooks = ArtifactHooks {
        space: &space,
        dir: &dir,
        vtk_every: cfg.outputs.vtk_every,
        checkpoint_every: cfg.outputs.checkpoint_every,
        picard_total: 0,
    };
    let outcome: TransientOutcome = integ.run(initial, &cfg.stepping, &mut hooks);
    let picard_total = hooks.picard_total;

    write_snapshot(dir.join("final.vtk"), &space, &outcome.final_state)?;
    save_checkpoint(dir.join("final.chk"), &space, &outcome.final_state)?;
    let series = outcome.series.clone();
    series.write_csv(dir.join("series.csv"))?;

    let averaged = series.average().ok();
    let burn_in = series.burn_in;
    let check = bound_check(&params, info.h_max, cfg.bounds.c, averaged.map(|a| a.1))?;
    let mut warnings = outcome.warnings.clone();
    if check.satisfied == Some(false) {
        warnings.push(format!(
            "measured c_eps = {} exceeds the {:?} bound {} (C = {})",
            check.c_eps.unwrap_or(f64::NAN),
            check.kind,
            check.bound,
            check.c
        ));
    }
    if outcome.picard_failures > 0 {
        warnings.push(format!("{} steps ended without Picard convergence", outcome.picard_failures));
    }
    let summary = RunSummary {
        model: cfg.model.kind,
        params,
        re: params.re(),
        mesh: info,
        dt: cfg.stepping.dt,
        t_final: cfg.stepping.t_final,
        burn_in,
        steps_completed: outcome.steps_completed,
        complete: outcome.is_complete(),
        error: outcome.error.as_ref().map(|e| e.to_string()),
        final_eps: series.eps.last().copied(),
        final_c_eps: series.eps.last().map(|e| e / series.scale),
        avg_eps: averaged.map(|a| a.0),
        c_eps: averaged.map(|a| a.1),
        ke_std: series.ke_std(burn_in).ok(),
        picard: PicardStats {
            failures: outcome.picard_failures,
            max_iterations: outcome.max_picard_iterations,
            total_iterations: picard_total,
        },
        max_divergence_residual: outcome.max_divergence_residual,
        factorizations: integ.saddle().factorizations(),
        bound: check,
        warnings,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_text(&dir.join("summary.json"), &(json + "\n"))?;
    if !summary.warnings.is_empty() {
        let mut text = String::new();
        for w in &summary.warnings {
            let _ = writeln!(text, "{w}");
        }
        write_text(&dir.join("warnings.txt"), &text)?;
    }
    if let Some(e) = outcome.error {
        return Err(ExperimentError::Solver(e));
    }
    Ok(RunResult { summary, series, final_state: outcome.final_state, out_dir: dir })
}
