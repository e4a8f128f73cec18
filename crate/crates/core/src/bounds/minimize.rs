//! Minimization of the under-resolved bound over the model length.
//!
//! Both objectives have the shape `c + p x² + q / x⁴`. Near the minimum the
//! values of such a function agree to about half the working precision, so
//! comparing raw values stalls a bracketing search at relative width
//! `√ε`. The search below compares through the factored difference
//! `f(a) − f(b) = (a² − b²) [p − q (a² + b²) / (a⁴ b⁴)]`, which keeps its
//! sign exactly down to adjacent floats.

use std::cmp::Ordering;

use serde::Serialize;

use super::Lambdas;
use crate::error::BoundsError;

/// Minimum value quoted for `h/L = 0.01` as `Re → ∞`.
pub const QUOTED_F_MIN: f64 = 2000.0;

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const BRACKET: (f64, f64) = (1e-6, 1e6);
const REL_TOL: f64 = 1e-10;

/// `c + p x² + q / x⁴` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarticObjective {
    pub c: f64,
    pub p: f64,
    pub q: f64,
}

impl QuarticObjective {
    pub fn value(&self, x: f64) -> f64 {
        self.c + self.p * x * x + self.q / x.powi(4)
    }

    /// Sign of `f(a) − f(b)` without cancellation.
    pub fn compare(&self, a: f64, b: f64) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let (a2, b2) = (a * a, b * b);
        let bracket = self.p - self.q * ((a2 + b2) / (a2 * b2)) / (a2 * b2);
        let d = (a2 - b2).signum() * bracket;
        d.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }

    /// Stationary point `x⁶ = 2q/p`.
    pub fn stationary_point(&self) -> f64 {
        (2.0 * self.q / self.p).powf(1.0 / 6.0)
    }
}

/// Golden-section search for the minimizer of `obj` on `[lo, hi]`, in the
/// logarithm of `x`, until the bracket is narrower than `rel_tol` relative.
pub fn golden_section(obj: &QuarticObjective, lo: f64, hi: f64, rel_tol: f64) -> Result<f64, BoundsError> {
    if !(lo > 0.0 && hi > lo && rel_tol > 0.0) {
        return Err(BoundsError::Bracket(format!("invalid interval [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let tol = rel_tol.ln_1p();
    while b - a > tol {
        if obj.compare(c.exp(), d.exp()) == Ordering::Less {
            b = d;
            d = c;
            c = b - GOLDEN * (b - a);
        } else {
            a = c;
            c = d;
            d = a + GOLDEN * (b - a);
        }
    }
    let x = (0.5 * (a + b)).exp();
    // A minimizer pinned to either end means the true one lies outside.
    if (x.ln() - lo.ln()) <= 2.0 * tol || (hi.ln() - x.ln()) <= 2.0 * tol {
        return Err(BoundsError::Bracket(format!("minimum not interior to [{lo}, {hi}] (search ended at {x})")));
    }
    Ok(x)
}

/// Brute-force oracle: index of the smallest value over `n` log-spaced
/// points, and the neighbouring points bracketing it.
pub fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64, f64) {
    let (la, lb) = (lo.ln(), hi.ln());
    let at = |i: usize| (la + (lb - la) * i as f64 / (n - 1) as f64).exp();
    let mut best = (0, f64::INFINITY);
    for i in 0..n {
        let v = f(at(i));
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    (at(i.saturating_sub(1)), at(i), at((i + 1).min(n - 1)))
}

/// Closed-form stationary point `⁶√2 A^{1/6}` with `A = (L/h)⁵ + (L/h)^{5/2}`,
/// in units of `h`.
pub fn closed_form_argmin(h_over_l: f64) -> f64 {
    let a = a_coeff(h_over_l);
    (2.0 * a).powf(1.0 / 6.0)
}

fn a_coeff(h_over_l: f64) -> f64 {
    let r = 1.0 / h_over_l;
    r.powi(5) + r.powf(2.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimizer {
    pub re: f64,
    pub h_over_l: f64,
    /// Numerical minimizer and minimum.
    pub argmin: f64,
    pub min: f64,
    /// Stationary point from `x⁶ = 2q/p` and the value there.
    pub closed_form_argmin: f64,
    pub closed_form_min: f64,
    /// `λ₁ + 2 A^{1/3}` (in units of `U³/L`), a stated closed form for the
    /// minimum that is not the value at the stationary point.
    pub formula_min: f64,
    pub argmin_rel_err: f64,
    /// `λ₁ + 3·2^{-2/3} A^{1/3}`, the exact minimum.
    pub exact_min: f64,
}

fn certify(obj: QuarticObjective, lo: f64, hi: f64, re: f64, h_over_l: f64) -> Result<Minimizer, BoundsError> {
    let argmin = golden_section(&obj, lo, hi, REL_TOL)?;
    let cf = obj.stationary_point();
    let a = a_coeff(h_over_l);
    let lambda1 = obj.c;
    Ok(Minimizer {
        re,
        h_over_l,
        argmin,
        min: obj.value(argmin),
        closed_form_argmin: cf,
        closed_form_min: obj.value(cf),
        formula_min: lambda1 + 2.0 * a.cbrt(),
        argmin_rel_err: (argmin - cf).abs() / cf,
        exact_min: lambda1 + 3.0 * 2f64.powf(-2.0 / 3.0) * a.cbrt(),
    })
}

fn check_ratio(re: f64, h_over_l: f64) -> Result<(), BoundsError> {
    if !(re > 0.0) {
        return Err(BoundsError::InvalidInput(format!("re must be positive, got {re}")));
    }
    if !(h_over_l > 0.0 && h_over_l < 1.0) {
        return Err(BoundsError::InvalidInput(format!("h/L must lie in (0, 1), got {h_over_l}")));
    }
    Ok(())
}

/// Minimizes `F(C_s) = (1/Re)(L/h) + C_s² + A / C_s⁴` (the normalized bound
/// with `δ = h`) over `C_s`.
pub fn minimize_cor1(re: f64, h_over_l: f64) -> Result<Minimizer, BoundsError> {
    check_ratio(re, h_over_l)?;
    let obj = QuarticObjective { c: 1.0 / (re * h_over_l), p: 1.0, q: a_coeff(h_over_l) };
    certify(obj, BRACKET.0, BRACKET.1, re, h_over_l)
}

/// Minimizes the normalized bound `G(C_s δ) = λ₁ + λ₂ + λ₃` over `C_s δ` at
/// fixed `h` and `L`. The search interval `[10⁻⁶, 10⁶]` is in units of `L`.
pub fn minimize_cor2(re: f64, h: f64, length: f64) -> Result<Minimizer, BoundsError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(BoundsError::InvalidInput(format!("L must be positive, got {length}")));
    }
    check_ratio(re, h / length)?;
    let l = Lambdas::new(re, h, 1.0, length);
    let obj = QuarticObjective { c: l.lambda1, p: 1.0 / (h * h), q: l.lambda3 };
    certify(obj, BRACKET.0 * length, BRACKET.1 * length, re, h / length)
}
