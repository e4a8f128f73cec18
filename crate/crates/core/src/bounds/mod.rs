//! Closed-form upper bounds on the time-averaged dissipation of the
//! discretized Smagorinsky model, their term decomposition, the level sets
//! separating the dominant terms, and the optimal model length.
//!
//! All bounds carry the generic prefactor `C` explicitly; nothing here picks
//! a value for it beyond the caller's choice.

mod minimize;
mod surface;

use serde::{Deserialize, Serialize};

pub use minimize::{
    closed_form_argmin, golden_section, grid_argmin, minimize_cor1, minimize_cor2, Minimizer, QuarticObjective,
    QUOTED_F_MIN,
};
pub use surface::{
    minimizer_table, render_gnuplot_level_sets, render_gnuplot_surface, render_minimizer_csv, render_surface_csv,
    summary_surface, Branch, DeltaRule, MinimizerRow, SurfaceRow,
};

use crate::error::BoundsError;

/// Lower and upper end of the measured dissipation coefficient range,
/// `1/Re ≤ C_ε ≤ 0.1`.
pub fn reference_band(re: f64) -> (f64, f64) {
    (1.0 / re, 0.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Reynolds number; `f64::INFINITY` drops the viscous term.
    pub re: f64,
    /// Mesh size.
    pub h: f64,
    pub cs: f64,
    pub delta: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "U")]
    pub u_ref: f64,
    /// Generic prefactor of both bounds.
    #[serde(rename = "C")]
    pub c: f64,
}

impl BoundInputs {
    /// Inputs with `U = L = C = 1`.
    pub fn unit(re: f64, h: f64, cs: f64, delta: f64) -> Self {
        BoundInputs { re, h, cs, delta, length: 1.0, u_ref: 1.0, c: 1.0 }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        let positive = [("re", self.re), ("h", self.h), ("L", self.length), ("U", self.u_ref), ("C", self.c)];
        for (name, v) in positive {
            if !(v > 0.0) || v.is_nan() {
                return Err(BoundsError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("h", self.h), ("L", self.length), ("U", self.u_ref), ("C", self.c)] {
            if !v.is_finite() {
                return Err(BoundsError::InvalidInput(format!("{name} must be finite")));
            }
        }
        for (name, v) in [("cs", self.cs), ("delta", self.delta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(BoundsError::InvalidInput(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn cs_delta(&self) -> f64 {
        self.cs * self.delta
    }

    /// `U³/L`.
    pub fn scale(&self) -> f64 {
        self.u_ref.powi(3) / self.length
    }

    /// Both bounds assume `0 < h < L`.
    pub fn h_below_length(&self) -> bool {
        self.h < self.length
    }

    /// The fully resolved bound needs `h < L / (5 Re)`.
    pub fn resolved(&self) -> bool {
        self.h < 0.2 * self.length / self.re
    }
}

/// Fully resolved bound `C [1 + (C_s δ / L)² Re²] U³/L` and whether its
/// mesh hypothesis holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm1Bound {
    pub value: f64,
    pub normalized: f64,
    pub hypothesis_holds: bool,
}

pub fn bound_thm1(inputs: &BoundInputs) -> Result<Thm1Bound, BoundsError> {
    inputs.validate()?;
    let r = inputs.cs_delta() / inputs.length * inputs.re;
    // re = ∞ with cs·δ = 0 is the plain U³/L limit, not ∞·0.
    let model = if inputs.cs_delta() == 0.0 { 0.0 } else { r * r };
    let normalized = inputs.c * (1.0 + model);
    Ok(Thm1Bound { value: normalized * inputs.scale(), normalized, hypothesis_holds: inputs.resolved() })
}

/// The three terms of the under-resolved bound, normalized by `U³/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    /// Viscosity, `(1/Re)(L/h)`.
    pub lambda1: f64,
    /// Model viscosity, `(C_s δ / h)²`.
    pub lambda2: f64,
    /// Nonlinearity, `L⁵/((C_s δ)⁴ h) + L^{5/2} h^{3/2}/(C_s δ)⁴`.
    pub lambda3: f64,
}

impl Lambdas {
    pub fn new(re: f64, h: f64, cs_delta: f64, length: f64) -> Self {
        let x4 = cs_delta.powi(4);
        Lambdas {
            lambda1: length / (re * h),
            lambda2: (cs_delta / h).powi(2),
            lambda3: length.powi(5) / (x4 * h) + length.powf(2.5) * h.powf(1.5) / x4,
        }
    }

    pub fn sum(&self) -> f64 {
        self.lambda1 + self.lambda2 + self.lambda3
    }

    /// Index (1, 2 or 3) of the largest term; ties go to the later term.
    pub fn dominant(&self) -> u8 {
        if self.lambda1 > self.lambda2 && self.lambda1 > self.lambda3 {
            1
        } else if self.lambda2 > self.lambda3 {
            2
        } else {
            3
        }
    }
}

/// Regions of the `(h/L, C_s δ)` plane cut out by the three level sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `λ₃ ≥ λ₂`, `λ₁ > λ₂`: below both ζ₂ and ζ₁.
    I,
    /// `λ₃ ≥ λ₂ ≥ λ₁`: between ζ₁ and ζ₂.
    II,
    /// `λ₂ > λ₃ ≥ λ₁`: between ζ₂ and ζ₃.
    III,
    /// `λ₂ > λ₃`, `λ₁ > λ₃`: above ζ₃.
    IV,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
        }
    }

    pub fn from_lambdas(l: &Lambdas) -> Region {
        if l.lambda3 >= l.lambda2 {
            if l.lambda1 > l.lambda2 {
                Region::I
            } else {
                Region::II
            }
        } else if l.lambda3 >= l.lambda1 {
            Region::III
        } else {
            Region::IV
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalized {
    pub thm1: f64,
    pub thm2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub thm1: f64,
    pub thm1_hypothesis_holds: bool,
    pub thm2: f64,
    /// Terms in units of `U³/L`.
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub region: Region,
    pub dominant: u8,
    pub normalized: Normalized,
    pub h_below_length: bool,
}

/// Under-resolved bound `C (λ₁ + λ₂ + λ₃) U³/L` with its decomposition.
pub fn bound_thm2(inputs: &BoundInputs) -> Result<BoundReport, BoundsError> {
    inputs.validate()?;
    let x = inputs.cs_delta();
    if x == 0.0 {
        return Err(BoundsError::ZeroModelLength);
    }
    let t1 = bound_thm1(inputs)?;
    let l = Lambdas::new(inputs.re, inputs.h, x, inputs.length);
    let n2 = inputs.c * l.sum();
    Ok(BoundReport {
        inputs: *inputs,
        thm1: t1.value,
        thm1_hypothesis_holds: t1.hypothesis_holds,
        thm2: n2 * inputs.scale(),
        lambda1: l.lambda1,
        lambda2: l.lambda2,
        lambda3: l.lambda3,
        region: Region::from_lambdas(&l),
        dominant: l.dominant(),
        normalized: Normalized {
            thm1: t1.normalized,
            thm2: n2,
            lambda1: l.lambda1,
            lambda2: l.lambda2,
            lambda3: l.lambda3,
        },
        h_below_length: inputs.h_below_length(),
    })
}

pub fn classify_region(h: f64, cs_delta: f64, re: f64, length: f64) -> Result<(Region, u8), BoundsError> {
    for (name, v) in [("h", h), ("cs_delta", cs_delta), ("re", re), ("L", length)] {
        if !(v > 0.0) {
            return Err(BoundsError::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    let l = Lambdas::new(re, h, cs_delta, length);
    Ok((Region::from_lambdas(&l), l.dominant()))
}

/// `C_s δ` on the three level sets at one value of `h/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaPoint {
    pub h_over_l: f64,
    /// `λ₁ = λ₂`.
    pub zeta1: f64,
    /// `λ₂ = λ₃`.
    pub zeta2: f64,
    /// `λ₁ = λ₃`.
    pub zeta3: f64,
}

pub fn zeta_at(re: f64, length: f64, r: f64) -> ZetaPoint {
    ZetaPoint {
        h_over_l: r,
        zeta1: length * (r / re).sqrt(),
        zeta2: length * (r.powf(3.5) + r).powf(1.0 / 6.0),
        zeta3: length * re.powf(0.25) * (1.0 + r.powf(2.5)).powf(0.25),
    }
}

pub fn zeta_curves(re: f64, length: f64, h_over_l: &[f64]) -> Result<Vec<ZetaPoint>, BoundsError> {
    if !(re > 0.0 && length > 0.0) {
        return Err(BoundsError::InvalidInput(format!("re and L must be positive, got {re}, {length}")));
    }
    h_over_l
        .iter()
        .map(|&r| {
            if r > 0.0 && r <= 1.0 {
                Ok(zeta_at(re, length, r))
            } else {
                Err(BoundsError::InvalidInput(format!("h/L must lie in (0, 1], got {r}")))
            }
        })
        .collect()
}

/// `n` logarithmically spaced values from `a` to `b` inclusive.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn resolved_bound_examples() {
        let b = bound_thm1(&BoundInputs::unit(100.0, 1e-3, 0.0, 0.0)).unwrap();
        assert_eq!(b.value, 1.0);
        let b = bound_thm1(&BoundInputs::unit(100.0, 1e-3, 0.01, 1.0)).unwrap();
        assert!(rel(b.value, 2.0) < 1e-15);
        assert!(b.hypothesis_holds);
        assert!(!bound_thm1(&BoundInputs::unit(100.0, 0.01, 0.01, 1.0)).unwrap().hypothesis_holds);
        let b2 = bound_thm1(&BoundInputs::unit(200.0, 1e-3, 0.01, 1.0)).unwrap();
        assert!(rel(b2.value - 1.0, 4.0 * (b.value - 1.0)) < 1e-15);
        assert!(bound_thm1(&BoundInputs::unit(f64::INFINITY, 0.1, 0.0, 0.3)).unwrap().value == 1.0);
    }

    #[test]
    fn under_resolved_bound_examples() {
        let r = bound_thm2(&BoundInputs::unit(f64::INFINITY, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!((r.lambda1, r.lambda2, r.lambda3, r.thm2), (0.0, 1.0, 2.0, 3.0));
        let r = bound_thm2(&BoundInputs::unit(10.0, 0.1, 0.5, 0.2)).unwrap();
        assert!(rel(r.lambda1, 1.0) < 1e-15);
        assert!(matches!(bound_thm2(&BoundInputs::unit(10.0, 0.1, 0.0, 0.2)), Err(BoundsError::ZeroModelLength)));
        let mut i = BoundInputs::unit(10.0, 0.1, 0.5, 0.2);
        i.c = 2.5;
        i.u_ref = 2.0;
        let r = bound_thm2(&i).unwrap();
        assert_eq!(r.normalized.thm2, 2.5 * (r.lambda1 + r.lambda2 + r.lambda3));
        assert!(rel(r.thm2, r.normalized.thm2 * 8.0) < 1e-15);
    }

    #[test]
    fn zeta_example_and_validation() {
        let z = zeta_curves(4.0, 1.0, &[1.0]).unwrap();
        assert_eq!(z[0].zeta1, 0.5);
        assert!(zeta_curves(4.0, 1.0, &[0.0]).is_err());
        assert!(zeta_curves(4.0, 1.0, &[1.5]).is_err());
    }

    #[test]
    fn regions_follow_the_level_sets() {
        let (re, h) = (1e4, 0.05);
        let z = zeta_at(re, 1.0, h);
        assert!(z.zeta1 < z.zeta2 && z.zeta2 < z.zeta3);
        let cases = [
            (0.5 * z.zeta1, Region::I, 3),
            ((z.zeta1 * z.zeta2).sqrt(), Region::II, 3),
            ((z.zeta2 * z.zeta3).sqrt(), Region::III, 2),
            (2.0 * z.zeta3, Region::IV, 2),
        ];
        for (x, region, dom) in cases {
            assert_eq!(classify_region(h, x, re, 1.0).unwrap(), (region, dom), "cs_delta = {x}");
        }
    }
}
