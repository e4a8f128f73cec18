//! Flow statistics: dissipation rate, kinetic energy, time averages, and
//! quadrature checks of the background-flow identities.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, SolverError, StatsError};
use crate::fem::{
    block_quad, gradient_norm_integral, interpolate, local_mass_stiffness, AssembledForms, MixedSpace,
};
use crate::solver::{FlowState, ModelParams};

/// Viscous and model parts of the dissipation rate, each divided by the area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dissipation {
    pub viscous: f64,
    pub model: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.viscous + self.model
    }
}

pub fn dissipation_parts(
    space: &MixedSpace,
    forms: &AssembledForms,
    u: &[f64],
    params: &ModelParams,
) -> Result<Dissipation, StatsError> {
    space.check_velocity(u)?;
    let area = space.mesh().area();
    let viscous = params.nu * block_quad(&forms.stiffness, u).max(0.0) / area;
    let csd2 = params.cs_delta_sq();
    let model = if csd2 > 0.0 { csd2 * gradient_norm_integral(space, u, 3.0)? / area } else { 0.0 };
    Ok(Dissipation { viscous, model })
}

/// `ε(u) = |Ω|⁻¹ [ν ∫|∇u|² + (C_s δ)² ∫|∇u|³]`.
pub fn dissipation_rate(
    space: &MixedSpace,
    forms: &AssembledForms,
    state: &FlowState,
    params: &ModelParams,
) -> Result<f64, StatsError> {
    Ok(dissipation_parts(space, forms, &state.u, params)?.total())
}

/// `½ uᵀ M u / |Ω|`.
pub fn kinetic_energy(space: &MixedSpace, forms: &AssembledForms, state: &FlowState) -> Result<f64, StatsError> {
    space.check_velocity(&state.u)?;
    Ok(0.5 * block_quad(&forms.mass, &state.u) / space.mesh().area())
}

/// Sampled dissipation and kinetic energy of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationSeries {
    pub times: Vec<f64>,
    pub eps: Vec<f64>,
    pub ke: Vec<f64>,
    /// Start of the averaging window.
    pub burn_in: f64,
    /// Dissipation scale `U³/L` used for `c_eps`.
    pub scale: f64,
}

impl DissipationSeries {
    pub fn new(burn_in: f64, scale: f64) -> Self {
        DissipationSeries { times: Vec::new(), eps: Vec::new(), ke: Vec::new(), burn_in, scale }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, eps: f64, ke: f64) -> Result<(), StatsError> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(StatsError::Precondition(format!("sample time {t} does not follow {last}")));
            }
        }
        if !(eps >= 0.0) {
            return Err(StatsError::Precondition(format!("dissipation sample {eps} is negative or NaN")));
        }
        self.times.push(t);
        self.eps.push(eps);
        self.ke.push(ke);
        Ok(())
    }

    /// Trapezoidal average of `eps` over `[t0, T]` and its normalization.
    pub fn time_average(&self, t0: f64) -> Result<(f64, f64), StatsError> {
        let avg = trapezoid_average(&self.times, &self.eps, t0)?;
        Ok((avg, avg / self.scale))
    }

    /// `(avg_eps, c_eps)` over the configured burn-in window.
    pub fn average(&self) -> Result<(f64, f64), StatsError> {
        self.time_average(self.burn_in)
    }

    /// Running average over `[burn_in, t_i]` for every sample; `None`
    /// until the window is nonempty.
    pub fn running_average(&self) -> Vec<Option<f64>> {
        let mut out = Vec::with_capacity(self.len());
        let mut integral = 0.0;
        let mut started: Option<f64> = None;
        for i in 0..self.len() {
            let t = self.times[i];
            if t <= self.burn_in {
                out.push(None);
                continue;
            }
            if started.is_none() {
                // Window opens inside [t_{i-1}, t_i] or at the first sample.
                let (t_start, e_start) = if i == 0 {
                    (t, self.eps[0])
                } else {
                    let (ta, tb) = (self.times[i - 1], t);
                    let s = self.burn_in.max(ta);
                    let w = (s - ta) / (tb - ta);
                    (s, self.eps[i - 1] + w * (self.eps[i] - self.eps[i - 1]))
                };
                integral = 0.5 * (e_start + self.eps[i]) * (t - t_start);
                started = Some(t_start);
            } else {
                integral += 0.5 * (self.eps[i - 1] + self.eps[i]) * (t - self.times[i - 1]);
            }
            let t_start = started.unwrap_or(t);
            out.push(if t > t_start { Some(integral / (t - t_start)) } else { None });
        }
        out
    }

    /// CSV with header `t,eps,ke,avg_eps,c_eps`; the average columns are
    /// empty before the averaging window opens.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,eps,ke,avg_eps,c_eps\n");
        for (i, avg) in self.running_average().iter().enumerate() {
            let _ = write!(s, "{},{},{}", self.times[i], self.eps[i], self.ke[i]);
            match avg {
                Some(a) => {
                    let _ = writeln!(s, ",{},{}", a, a / self.scale);
                }
                None => s.push_str(",,\n"),
            }
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), SolverError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(io_err::<SolverError>(path))
    }

    /// Population standard deviation of the kinetic energy over `[t0, T]`.
    pub fn ke_std(&self, t0: f64) -> Result<f64, StatsError> {
        let vals: Vec<f64> = self.times.iter().zip(&self.ke).filter(|(t, _)| **t >= t0).map(|(_, k)| *k).collect();
        if vals.is_empty() {
            return Err(StatsError::EmptyWindow { t0, t_end: self.times.last().copied().unwrap_or(f64::NAN) });
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        Ok((vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt())
    }
}

/// Trapezoidal average of samples `(t_i, y_i)` over `[t0, t_last]`, with
/// linear interpolation at `t0`. Windows starting before the first sample
/// start at the first sample.
pub fn trapezoid_average(times: &[f64], values: &[f64], t0: f64) -> Result<f64, StatsError> {
    let t_end = times.last().copied().unwrap_or(f64::NEG_INFINITY);
    if times.len() != values.len() {
        return Err(StatsError::Precondition("times and values differ in length".into()));
    }
    if !(t0 < t_end) || times.len() < 2 {
        return Err(StatsError::EmptyWindow { t0, t_end });
    }
    let start = t0.max(times[0]);
    let mut integral = 0.0;
    for i in 1..times.len() {
        let (ta, tb) = (times[i - 1], times[i]);
        if tb <= start {
            continue;
        }
        let (mut a, ya) = (ta, values[i - 1]);
        let mut y0 = ya;
        if ta < start {
            let w = (start - ta) / (tb - ta);
            y0 = ya + w * (values[i] - ya);
            a = start;
        }
        integral += 0.5 * (y0 + values[i]) * (tb - a);
    }
    Ok(integral / (t_end - start))
}

/// Background flow `(φ(z), 0)` with `φ = 0` below `L − h` and rising
/// linearly to `U` at the top wall.
pub fn background_flow(z: f64, h_strip: f64, u_ref: f64, length: f64) -> f64 {
    let z0 = length - h_strip;
    if z <= z0 {
        0.0
    } else {
        u_ref * (z - z0) / h_strip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Report {
    /// `[‖Φ‖², ‖∇Φ‖², ‖∇Φ‖₃³, ‖∇Φ‖³_{3/2}]` by quadrature.
    pub computed: [f64; 4],
    /// Closed-form values `[U²Lh/3, U²L/h, U³L/h², U³L²/h]`.
    pub exact: [f64; 4],
    pub rel_err: [f64; 4],
    pub max_rel_err: f64,
}

fn check_channel(space: &MixedSpace, length: f64) -> Result<(), StatsError> {
    let (lo, hi) = space.mesh().bounding_box();
    let tol = 1e-12 * length;
    if (lo[1]).abs() > tol || (hi[1] - length).abs() > tol || space.mesh().period().is_none() {
        return Err(StatsError::Precondition(format!(
            "expected a periodic channel of height {length}, found z in [{}, {}]",
            lo[1], hi[1]
        )));
    }
    Ok(())
}

/// Triangles lying in the strip `z ≥ L − h`; fails if any triangle straddles
/// the line `z = L − h`.
fn strip_triangles(space: &MixedSpace, h_strip: f64, length: f64) -> Result<Vec<usize>, StatsError> {
    if !(h_strip > 0.0 && h_strip < length) {
        return Err(StatsError::Precondition(format!("strip height {h_strip} outside (0, {length})")));
    }
    let z0 = length - h_strip;
    let tol = 1e-12 * length;
    let v = space.mesh().vertices();
    let mut strip = Vec::new();
    for (t, tri) in space.mesh().triangles().iter().enumerate() {
        let above = tri.iter().all(|&i| v[i][1] >= z0 - tol);
        let below = tri.iter().all(|&i| v[i][1] <= z0 + tol);
        if !above && !below {
            return Err(StatsError::Precondition(format!(
                "triangle {t} crosses z = {z0}; the mesh is not aligned with the strip"
            )));
        }
        if above {
            strip.push(t);
        }
    }
    if strip.is_empty() {
        return Err(StatsError::Precondition("no triangles in the strip".into()));
    }
    Ok(strip)
}

/// Quadrature values of the background-flow norms against closed forms.
pub fn lemma1_quadrature_check(
    space: &MixedSpace,
    forms: &AssembledForms,
    h_strip: f64,
    u_ref: f64,
    length: f64,
) -> Result<Lemma1Report, StatsError> {
    check_channel(space, length)?;
    strip_triangles(space, h_strip, length)?;
    let phi = interpolate(space, |p| [background_flow(p[1], h_strip, u_ref, length), 0.0]);
    let computed = [
        block_quad(&forms.mass, &phi),
        block_quad(&forms.stiffness, &phi),
        gradient_norm_integral(space, &phi, 3.0)?,
        gradient_norm_integral(space, &phi, 1.5)?.powi(2),
    ];
    let (u, l, h) = (u_ref, length, h_strip);
    let exact = [u * u * l * h / 3.0, u * u * l / h, u.powi(3) * l / (h * h), u.powi(3) * l * l / h];
    let rel_err: [f64; 4] = std::array::from_fn(|k| (computed[k] - exact[k]).abs() / exact[k]);
    let max_rel_err = rel_err.iter().copied().fold(0.0, f64::max);
    Ok(Lemma1Report { computed, exact, rel_err, max_rel_err })
}

/// `‖v‖_{L²(strip)} / (h ‖∇v‖_{L²(strip)})` for one velocity field; zero for
/// fields with vanishing gradient on the strip.
pub fn poincare_strip_ratio(space: &MixedSpace, h_strip: f64, length: f64, v: &[f64]) -> Result<f64, StatsError> {
    space.check_velocity(v)?;
    let strip = strip_triangles(space, h_strip, length)?;
    let n = space.n_nodes();
    let (mut l2, mut h1) = (0.0, 0.0);
    for t in strip {
        let (m, a) = local_mass_stiffness(&space.element_geometry(t));
        let nodes = space.triangle_nodes(t);
        for c in 0..2 {
            let loc: [f64; 6] = std::array::from_fn(|k| v[c * n + nodes[k]]);
            for i in 0..6 {
                for j in 0..6 {
                    l2 += loc[i] * m[6 * i + j] * loc[j];
                    h1 += loc[i] * a[6 * i + j] * loc[j];
                }
            }
        }
    }
    if h1 <= 0.0 {
        return Ok(0.0);
    }
    Ok(l2.max(0.0).sqrt() / (h_strip * h1.sqrt()))
}

/// Largest strip Poincaré ratio over `count` random quadratic fields
/// vanishing on the top wall.
pub fn poincare_strip_check(
    space: &MixedSpace,
    h_strip: f64,
    length: f64,
    count: usize,
    seed: u64,
) -> Result<f64, StatsError> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let n = space.n_nodes();
    let tol = 1e-12 * length;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let mut v: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (i, p) in space.node_coords().iter().enumerate() {
            if (p[1] - length).abs() <= tol {
                v[i] = 0.0;
                v[n + i] = 0.0;
            }
        }
        space.apply_periodic(&mut v);
        worst = worst.max(poincare_strip_ratio(space, h_strip, length, &v)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_examples() {
        let t = [0.0, 0.5, 1.0, 1.5, 2.0];
        assert!((trapezoid_average(&t, &t, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let c = [3.0; 5];
        for t0 in [0.0, 0.3, 1.7] {
            assert!((trapezoid_average(&t, &c, t0).unwrap() - 3.0).abs() < 1e-14);
        }
        assert!(trapezoid_average(&t, &c, 2.0).is_err());
        assert!((trapezoid_average(&t, &t, 0.25).unwrap() - 1.125).abs() < 1e-14);
    }

    #[test]
    fn running_average_matches_window_average() {
        let mut s = DissipationSeries::new(0.35, 2.0);
        for k in 0..11 {
            let t = 0.1 * k as f64;
            s.push(t, t * t, 0.0).unwrap();
        }
        let run = s.running_average();
        assert!(run[3].is_none());
        let last = run.last().unwrap().unwrap();
        let (avg, c) = s.average().unwrap();
        assert!((last - avg).abs() < 1e-12);
        assert!((c - avg / 2.0).abs() < 1e-15);
        assert!(s.push(0.5, 1.0, 0.0).is_err());
        let csv = s.to_csv();
        assert!(csv.starts_with("t,eps,ke,avg_eps,c_eps\n0,0,0,,\n"));
    }
}
