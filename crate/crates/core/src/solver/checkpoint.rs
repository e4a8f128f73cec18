//! Text checkpoints and VTK field snapshots.
//!
//! Checkpoint layout:
//!
//! ```text
//! shearlab-checkpoint 1
//! mesh <sha256 of the mesh>
//! t <time>
//! u <count>
//! <one value per line>
//! p <count>
//! <one value per line>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::FlowState;
use crate::error::{io_err, SolverError};
use crate::fem::{cell_gradient_norm, MixedSpace};
use crate::mesh::vtk::{self, VtkFields};

const MAGIC: &str = "shearlab-checkpoint 1";

pub fn render_checkpoint(space: &MixedSpace, state: &FlowState) -> String {
    let mut s = String::with_capacity(24 * (state.u.len() + state.p.len()) + 128);
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "mesh {}", space.mesh().hash_hex());
    let _ = writeln!(s, "t {}", state.t);
    let _ = writeln!(s, "u {}", state.u.len());
    for v in &state.u {
        let _ = writeln!(s, "{v}");
    }
    let _ = writeln!(s, "p {}", state.p.len());
    for v in &state.p {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn parse_checkpoint(space: &MixedSpace, text: &str) -> Result<FlowState, SolverError> {
    let bad = |m: String| SolverError::Checkpoint(m);
    let mut lines = text.lines();
    let mut next = || lines.next().ok_or_else(|| bad("truncated checkpoint".into()));
    if next()? != MAGIC {
        return Err(bad("not a shearlab checkpoint".into()));
    }
    let header = |line: &str, key: &str| -> Result<String, SolverError> {
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected `{key}` line, found {line:?}")))
    };
    let hash = header(next()?, "mesh")?;
    if hash != space.mesh().hash_hex() {
        return Err(bad("checkpoint was written for a different mesh".into()));
    }
    let t: f64 = header(next()?, "t")?.parse().map_err(|_| bad("malformed time".into()))?;
    let mut read_block = |key: &str, expected: usize| -> Result<Vec<f64>, SolverError> {
        let count: usize = header(next()?, key)?.parse().map_err(|_| bad(format!("malformed {key} count")))?;
        if count != expected {
            return Err(bad(format!("{key} has {count} values, the space needs {expected}")));
        }
        (0..count)
            .map(|_| next()?.trim().parse::<f64>().map_err(|_| bad(format!("malformed {key} value"))))
            .collect()
    };
    let u = read_block("u", space.n_vel())?;
    let p = read_block("p", space.n_pres())?;
    Ok(FlowState { u, p, t })
}

pub fn save_checkpoint(path: impl AsRef<Path>, space: &MixedSpace, state: &FlowState) -> Result<(), SolverError> {
    let path = path.as_ref();
    std::fs::write(path, render_checkpoint(space, state)).map_err(io_err::<SolverError>(path))
}

pub fn load_checkpoint(path: impl AsRef<Path>, space: &MixedSpace) -> Result<FlowState, SolverError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err::<SolverError>(path))?;
    parse_checkpoint(space, &text)
}

/// VTK snapshot with vertex velocity and pressure and per-cell `|∇u|`.
pub fn write_snapshot(path: impl AsRef<Path>, space: &MixedSpace, state: &FlowState) -> Result<(), SolverError> {
    let vel = space.vertex_velocities(&state.u);
    let grad = cell_gradient_norm(space, &state.u)?;
    let fields = VtkFields {
        point_vectors: vec![("velocity", &vel)],
        point_scalars: vec![("pressure", &state.p)],
        cell_scalars: vec![("grad_u_norm", &grad)],
    };
    let path = path.as_ref();
    vtk::write(path, space.mesh(), &format!("shearlab t={}", state.t), &fields).map_err(|e| match e {
        crate::mesh::MeshError::Io { path, source } => SolverError::Io { path, source },
        other => SolverError::Checkpoint(other.to_string()),
    })
}
