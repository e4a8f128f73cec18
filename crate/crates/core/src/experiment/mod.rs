//! Experiment orchestration behind the command-line front end: configured
//! runs, the self-check suite, bound tables, model comparison and mesh
//! generation.

mod compare;
mod config;
mod run;
mod verify;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use compare::{cmd_compare, compare_series, side_by_side_csv, CompareOutcome, CompareReport, SideStats, DEFAULT_THRESHOLD};
pub use config::{BoundsConfig, DomainConfig, Drive, ExperimentConfig, ModelConfig, ModelKind, OutputConfig};
pub use run::{bound_check, execute, BoundCheck, BoundKind, MeshInfo, PicardStats, RunOptions, RunResult, RunSummary};
pub use verify::{cmd_verify, random_interior_field, CheckResult, VerifyReport};

use crate::bounds::{
    bound_thm1, bound_thm2, logspace, minimize_cor1, minimizer_table, reference_band, render_gnuplot_level_sets,
    render_gnuplot_surface, render_minimizer_csv, render_surface_csv, summary_surface, zeta_curves, BoundInputs,
    BoundReport, DeltaRule, Minimizer, Thm1Bound, QUOTED_F_MIN,
};
use crate::error::{io_err, ExperimentError};
use crate::mesh::vtk::{self, VtkFields};

/// Runs one configuration; relative paths resolve against the directory of
/// the configuration file.
pub fn cmd_run(config: &Path, out: Option<&Path>, seed: Option<u64>, opts: RunOptions) -> Result<RunResult, ExperimentError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(dir) = out {
        cfg.outputs.dir = dir.to_path_buf();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = config.parent().map(Path::to_path_buf);
    execute(&cfg, base.as_deref(), opts)
}

/// Bound evaluation at a single parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct PointBounds {
    pub resolved: Thm1Bound,
    /// Absent when `C_s δ = 0`.
    pub under_resolved: Option<BoundReport>,
    pub band: (f64, f64),
}

pub fn point_bounds(inputs: &BoundInputs) -> Result<PointBounds, ExperimentError> {
    let resolved = bound_thm1(inputs)?;
    let under_resolved = if inputs.cs_delta() > 0.0 { Some(bound_thm2(inputs)?) } else { None };
    Ok(PointBounds { resolved, under_resolved, band: reference_band(inputs.re) })
}

/// Grid of a bounds sweep; `h` values are in units of `L`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub re: Vec<f64>,
    pub h_over_l: Vec<f64>,
    pub cs: f64,
    pub delta_rule: DeltaRule,
    #[serde(rename = "C")]
    pub c: f64,
}

impl SweepSpec {
    pub fn log_grid(re: (f64, f64, usize), h: (f64, f64, usize), cs: f64, delta_rule: DeltaRule, c: f64) -> Self {
        SweepSpec { re: logspace(re.0, re.1, re.2), h_over_l: logspace(h.0, h.1, h.2), cs, delta_rule, c }
    }
}

/// Minimizer at `h/L = 0.01`, `Re → ∞` next to two quoted values.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizerReference {
    pub certified: Minimizer,
    /// `2 A^{1/3}`.
    pub formula_value: f64,
    pub quoted_value: f64,
}

pub fn minimizer_reference() -> Result<MinimizerReference, ExperimentError> {
    let m = minimize_cor1(f64::INFINITY, 0.01)?;
    Ok(MinimizerReference { formula_value: m.formula_min, certified: m, quoted_value: QUOTED_F_MIN })
}

/// Files written by [`cmd_bounds_sweep`].
#[derive(Debug, Clone, Serialize)]
pub struct SweepArtifacts {
    pub files: Vec<PathBuf>,
    pub seams: usize,
    pub reference: MinimizerReference,
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(io_err::<ExperimentError>(&p))?;
    files.push(p);
    Ok(())
}

/// Surface, level-set and minimizer tables for a sweep.
pub fn cmd_bounds_sweep(spec: &SweepSpec, out: &Path) -> Result<SweepArtifacts, ExperimentError> {
    std::fs::create_dir_all(out).map_err(io_err::<ExperimentError>(out))?;
    let mut files = Vec::new();
    let rows = summary_surface(&spec.re, &spec.h_over_l, spec.delta_rule, spec.cs, 1.0, spec.c)?;
    write(out, "surface.csv", &render_surface_csv(&rows), &mut files)?;
    write(out, "surface.gnuplot", &render_gnuplot_surface(&rows), &mut files)?;

    let mut level = String::from("re,h_over_l,zeta1,zeta2,zeta3\n");
    for &re in &spec.re {
        for z in zeta_curves(re, 1.0, &spec.h_over_l)? {
            level.push_str(&format!("{re},{},{},{},{}\n", z.h_over_l, z.zeta1, z.zeta2, z.zeta3));
        }
    }
    write(out, "level_sets.csv", &level, &mut files)?;
    write(out, "level_sets.gnuplot", &render_gnuplot_level_sets(&spec.re, 1.0, &spec.h_over_l)?, &mut files)?;

    let interior: Vec<f64> = spec.h_over_l.iter().copied().filter(|r| *r < 1.0).collect();
    let table = minimizer_table(&spec.re, &interior)?;
    write(out, "minimizers.csv", &render_minimizer_csv(&table), &mut files)?;
    let reference = minimizer_reference()?;
    let json = serde_json::to_string_pretty(&reference).expect("reference serializes") + "\n";
    write(out, "minimizer_reference.json", &json, &mut files)?;
    Ok(SweepArtifacts { files, seams: rows.iter().filter(|r| r.seam).count(), reference })
}

#[derive(Debug, Deserialize)]
struct DomainOnly {
    domain: DomainConfig,
}

#[derive(Debug, Deserialize)]
struct SeedOnly {
    seed: Option<u64>,
}

fn read_config(path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

/// Reads only the top-level `seed` of a configuration file.
pub fn load_seed(path: &Path) -> Result<Option<u64>, ExperimentError> {
    let s: SeedOnly = toml::from_str(&read_config(path)?).map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(s.seed)
}

/// Builds the mesh of a configuration's `[domain]` section (other sections
/// are ignored) and writes it as `mesh.vtk` when `out` is given.
pub fn cmd_mesh(domain: &DomainConfig, base: Option<&Path>, out: Option<&Path>) -> Result<MeshInfo, ExperimentError> {
    let mesh = domain.build(base)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(io_err::<ExperimentError>(dir))?;
        vtk::write(dir.join("mesh.vtk"), &mesh, "mesh", &VtkFields::default())?;
    }
    Ok(MeshInfo::of(&mesh))
}

/// Reads the `[domain]` section of a configuration file.
pub fn load_domain(path: &Path) -> Result<DomainConfig, ExperimentError> {
    let d: DomainOnly = toml::from_str(&read_config(path)?).map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(d.domain)
}
