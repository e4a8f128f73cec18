//! Parameter sweeps of the bounds and their text exports.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{bound_thm1, minimize_cor1, minimize_cor2, reference_band, BoundInputs, Lambdas, Region};
use crate::error::BoundsError;

/// How the filter length follows the mesh size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DeltaRule {
    /// `δ = h`.
    EqualH,
    /// `δ = L (h/L)^p`.
    HPow(f64),
    /// Constant `δ`.
    Fixed(f64),
}

impl DeltaRule {
    pub fn delta(&self, h: f64, length: f64) -> f64 {
        match *self {
            DeltaRule::EqualH => h,
            DeltaRule::HPow(p) => length * (h / length).powf(p),
            DeltaRule::Fixed(d) => d,
        }
    }
}

impl fmt::Display for DeltaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaRule::EqualH => write!(f, "equal-h"),
            DeltaRule::HPow(p) => write!(f, "h-pow:{p}"),
            DeltaRule::Fixed(d) => write!(f, "fixed:{d}"),
        }
    }
}

impl FromStr for DeltaRule {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BoundsError::InvalidInput(format!("unknown delta rule '{s}' (equal-h, h-pow:<p>, fixed:<delta>)"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<f64, BoundsError> {
            let v: f64 = a.ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(BoundsError::InvalidInput(format!("delta rule argument must be nonnegative, got {v}")))
            }
        };
        match kind {
            "equal-h" if arg.is_none() => Ok(DeltaRule::EqualH),
            "h-pow" => Ok(DeltaRule::HPow(num(arg)?)),
            "fixed" => Ok(DeltaRule::Fixed(num(arg)?)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for DeltaRule {
    type Error = BoundsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DeltaRule> for String {
    fn from(r: DeltaRule) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `h < L/(5 Re)`, or no model length.
    Resolved,
    UnderResolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub re: f64,
    pub h: f64,
    pub cs_delta: f64,
    /// Terms of the under-resolved bound; `NaN` when `C_s δ = 0`.
    pub lambdas: Lambdas,
    /// Normalized bound of the selected branch.
    pub bound: f64,
    pub region: Option<Region>,
    pub branch: Branch,
    /// First row of a new branch along increasing `h` at fixed `Re`. The two
    /// bounds do not match there and no smoothing is applied.
    pub seam: bool,
}

/// Normalized bound over a `(Re, h)` grid with `C_s` fixed and `δ` from
/// `rule`. Rows are ordered by `Re`, then by `h` as given.
pub fn summary_surface(
    re_grid: &[f64],
    h_grid: &[f64],
    rule: DeltaRule,
    cs: f64,
    length: f64,
    c: f64,
) -> Result<Vec<SurfaceRow>, BoundsError> {
    let mut rows = Vec::with_capacity(re_grid.len() * h_grid.len());
    for &re in re_grid {
        let mut prev: Option<Branch> = None;
        for &h in h_grid {
            let delta = rule.delta(h, length);
            let inputs = BoundInputs { re, h, cs, delta, length, u_ref: 1.0, c };
            inputs.validate()?;
            let x = inputs.cs_delta();
            let (lambdas, region) = if x > 0.0 {
                let l = Lambdas::new(re, h, x, length);
                (l, Some(Region::from_lambdas(&l)))
            } else {
                (Lambdas { lambda1: length / (re * h), lambda2: f64::NAN, lambda3: f64::NAN }, None)
            };
            let branch = if inputs.resolved() || x == 0.0 { Branch::Resolved } else { Branch::UnderResolved };
            let bound = match branch {
                Branch::Resolved => bound_thm1(&inputs)?.normalized,
                Branch::UnderResolved => c * lambdas.sum(),
            };
            let seam = prev.is_some_and(|b| b != branch);
            prev = Some(branch);
            rows.push(SurfaceRow { re, h, cs_delta: x, lambdas, bound, region, branch, seam });
        }
    }
    Ok(rows)
}

pub fn render_surface_csv(rows: &[SurfaceRow]) -> String {
    let mut s = String::from("re,h,cs_delta,lambda1,lambda2,lambda3,bound,region\n");
    for r in rows {
        let region = r.region.map_or("-", |g| g.label());
        let l = &r.lambdas;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.re, r.h, r.cs_delta, l.lambda1, l.lambda2, l.lambda3, r.bound, region
        );
    }
    s
}

/// Gnuplot grid blocks (`splot ... with lines`): one scan line per `Re`,
/// columns `re h bound`. A `# seam` comment precedes each branch change.
pub fn render_gnuplot_surface(rows: &[SurfaceRow]) -> String {
    let mut s = String::from("# re h bound\n");
    let mut last_re = None;
    for r in rows {
        if last_re.is_some_and(|re| re != r.re) {
            s.push('\n');
        }
        last_re = Some(r.re);
        if r.seam {
            let _ = writeln!(s, "# seam: branch changes to {:?}", r.branch);
        }
        let _ = writeln!(s, "{} {} {}", r.re, r.h, r.bound);
    }
    s
}

/// One gnuplot index block per `Re` with columns `h/L ζ₁ ζ₂ ζ₃`.
pub fn render_gnuplot_level_sets(re_grid: &[f64], length: f64, h_over_l: &[f64]) -> Result<String, BoundsError> {
    let mut s = String::new();
    for (k, &re) in re_grid.iter().enumerate() {
        if k > 0 {
            s.push_str("\n\n");
        }
        let _ = writeln!(s, "# re = {re}\n# h_over_l zeta1 zeta2 zeta3");
        for z in super::zeta_curves(re, length, h_over_l)? {
            let _ = writeln!(s, "{} {} {} {}", z.h_over_l, z.zeta1, z.zeta2, z.zeta3);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizerRow {
    pub re: f64,
    pub h_over_l: f64,
    pub cs_min: f64,
    pub f_min: f64,
    /// `λ₁ + 2 A^{1/3}`.
    pub f_formula: f64,
    pub cs_delta_min: f64,
    pub g_min: f64,
    pub band_low: f64,
    pub band_high: f64,
}

impl MinimizerRow {
    /// Whether even the optimal bound lies above the measured range.
    pub fn exceeds_band(&self) -> bool {
        self.g_min > self.band_high
    }
}

/// Both minimizers with `L = 1` over a grid, with the reference band.
pub fn minimizer_table(re_grid: &[f64], h_over_l: &[f64]) -> Result<Vec<MinimizerRow>, BoundsError> {
    let mut rows = Vec::new();
    for &re in re_grid {
        for &r in h_over_l {
            let f = minimize_cor1(re, r)?;
            let g = minimize_cor2(re, r, 1.0)?;
            let (band_low, band_high) = reference_band(re);
            rows.push(MinimizerRow {
                re,
                h_over_l: r,
                cs_min: f.argmin,
                f_min: f.min,
                f_formula: f.formula_min,
                cs_delta_min: g.argmin,
                g_min: g.min,
                band_low,
                band_high,
            });
        }
    }
    Ok(rows)
}

pub fn render_minimizer_csv(rows: &[MinimizerRow]) -> String {
    let mut s = String::from("re,h_over_l,cs_min,f_min,f_formula,cs_delta_min,g_min,band_low,band_high,exceeds_band\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.re,
            r.h_over_l,
            r.cs_min,
            r.f_min,
            r.f_formula,
            r.cs_delta_min,
            r.g_min,
            r.band_low,
            r.band_high,
            r.exceeds_band()
        );
    }
    s
}
