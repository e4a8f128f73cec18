//! TOML experiment description.
//!
//! ```toml
//! seed = 7
//!
//! [domain]
//! kind = "annulus"        # channel | annulus | msh
//! m = 60
//! n = 30
//!
//! [model]
//! kind = "smagorinsky"    # nse | smagorinsky
//! re = 1000.0
//! cs = 0.17
//! delta_rule = "equal-h"  # equal-h | h-pow:<p> | fixed:<delta>
//!
//! [stepping]
//! dt = 0.01
//! t_final = 10.0
//!
//! [outputs]
//! dir = "out/sm"
//! vtk_every = 100
//!
//! [bounds]
//! C = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::DeltaRule;
use crate::error::ExperimentError;
use crate::mesh::{build_annulus_mesh, build_channel_mesh, import_msh, AnnulusSpec, ChannelSpec, MarkerTable, Mesh};
use crate::solver::{BoundaryData, ModelParams, TimeSteppingConfig};

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Channel {
        #[serde(default = "one")]
        length: f64,
        nx: usize,
        nz: usize,
        /// Mesh line at `z = length − strip`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strip: Option<f64>,
    },
    Annulus {
        m: usize,
        n: usize,
        /// Uniform refinement level, 1 for none.
        #[serde(default = "one_usize", skip_serializing_if = "is_one")]
        refinement: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outer_radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner_radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner_center: Option<[f64; 2]>,
    },
    Msh {
        path: PathBuf,
        #[serde(default)]
        markers: MarkerTable,
    },
}

impl DomainConfig {
    /// Builds the mesh; relative `.msh` paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Mesh, ExperimentError> {
        Ok(match self {
            DomainConfig::Channel { length, nx, nz, strip } => {
                let mut spec = ChannelSpec::new(*length, *nx, *nz);
                spec.align_strip = *strip;
                build_channel_mesh(&spec)?
            }
            DomainConfig::Annulus { m, n, refinement, outer_radius, inner_radius, inner_center } => {
                let mut spec = AnnulusSpec::new(*m, *n);
                if let Some(r) = outer_radius {
                    spec.outer_radius = *r;
                }
                if let Some(r) = inner_radius {
                    spec.inner_radius = *r;
                }
                if let Some(c) = inner_center {
                    spec.inner_center = *c;
                }
                build_annulus_mesh(&spec, *refinement)?
            }
            DomainConfig::Msh { path, markers } => {
                let p = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                import_msh(p, markers)?
            }
        })
    }

    fn default_drive(&self) -> Drive {
        match self {
            DomainConfig::Channel { .. } => Drive::Couette,
            DomainConfig::Annulus { .. } => Drive::RotatingOuter,
            DomainConfig::Msh { .. } => Drive::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Nse,
    Smagorinsky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drive {
    Zero,
    /// Top wall moving at `U`.
    Couette,
    /// Outer circle rotating at rim speed `U`.
    RotatingOuter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Exactly one of `re` and `nu` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default)]
    pub cs: f64,
    #[serde(default = "default_rule")]
    pub delta_rule: DeltaRule,
    #[serde(rename = "U", default = "one")]
    pub u_ref: f64,
    #[serde(rename = "L", default = "one")]
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Drive>,
}

fn default_rule() -> DeltaRule {
    DeltaRule::EqualH
}

impl ModelConfig {
    /// Parameters for a mesh of size `h`; the NSE model forces `cs = 0`.
    pub fn params(&self, h: f64) -> Result<ModelParams, ExperimentError> {
        let cfg = |e: crate::error::SolverError| ExperimentError::Config(e.to_string());
        let nu = match (self.re, self.nu) {
            (Some(re), None) => {
                if !(re > 0.0 && re.is_finite()) {
                    return Err(ExperimentError::Config(format!("re must be positive, got {re}")));
                }
                self.u_ref * self.length / re
            }
            (None, Some(nu)) => nu,
            _ => return Err(ExperimentError::Config("[model] needs exactly one of `re` and `nu`".into())),
        };
        let cs = match self.kind {
            ModelKind::Nse => 0.0,
            ModelKind::Smagorinsky => self.cs,
        };
        let delta = self.delta_rule.delta(h, self.length);
        ModelParams::new(nu, cs, delta, self.u_ref, self.length).map_err(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Steps between VTK snapshots; 0 writes only the final state.
    #[serde(default)]
    pub vtk_every: usize,
    /// Steps between checkpoints; 0 writes only the final state.
    #[serde(default)]
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Prefactor of the bounds.
    #[serde(rename = "C", default = "one")]
    pub c: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig { c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainConfig,
    pub model: ModelConfig,
    pub stepping: TimeSteppingConfig,
    pub outputs: OutputConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.stepping.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if !(self.bounds.c > 0.0 && self.bounds.c.is_finite()) {
            return Err(ExperimentError::Config(format!("bounds.C must be positive, got {}", self.bounds.c)));
        }
        if !(self.model.cs >= 0.0 && self.model.cs.is_finite()) {
            return Err(ExperimentError::Config(format!("model.cs must be nonnegative, got {}", self.model.cs)));
        }
        // Check the re/nu choice and parameter signs with a nominal h.
        self.model.params(1.0)?;
        Ok(())
    }

    pub fn drive(&self) -> Drive {
        self.model.drive.unwrap_or_else(|| self.domain.default_drive())
    }

    pub fn boundary(&self) -> BoundaryData {
        match self.drive() {
            Drive::Zero => BoundaryData::Zero,
            Drive::Couette => BoundaryData::Couette { speed: self.model.u_ref },
            Drive::RotatingOuter => BoundaryData::RotatingOuter { speed: self.model.u_ref },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 3

[domain]
kind = "annulus"
m = 24
n = 12

[model]
kind = "smagorinsky"
re = 1000.0
cs = 0.17
delta_rule = "h-pow:0.5"

[stepping]
dt = 0.01
t_final = 0.1

[outputs]
dir = "out"
"#;

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.model.delta_rule, DeltaRule::HPow(0.5));
        let once = cfg.to_toml();
        let again = ExperimentConfig::parse(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), once);
    }

    #[test]
    fn nse_forces_zero_cs() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.model.kind = ModelKind::Nse;
        let p = cfg.model.params(0.1).unwrap();
        assert_eq!(p.cs, 0.0);
        assert!((p.re() - 1000.0).abs() < 1e-9);
        assert_eq!(cfg.drive(), Drive::RotatingOuter);
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::parse("seed = 1").is_err());
        let both = SAMPLE.replace("re = 1000.0", "re = 1000.0\nnu = 0.001");
        assert!(matches!(ExperimentConfig::parse(&both), Err(ExperimentError::Config(_))));
        let bad_dt = SAMPLE.replace("dt = 0.01", "dt = 0.0");
        assert!(ExperimentConfig::parse(&bad_dt).is_err());
        let unknown = SAMPLE.replace("[outputs]", "[outputs]\ncolour = 1");
        assert!(ExperimentConfig::parse(&unknown).is_err());
    }
}
