//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines come out in order
//! and uncaptured. Positional arguments select criteria by number, e.g.
//! `cargo test --release --test acceptance -- 3 5`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use shearlab::bounds::{minimize_cor1, minimize_cor2, zeta_at, Lambdas, Region};
use shearlab::experiment::{cmd_compare, execute, random_interior_field, ExperimentConfig, RunOptions, RunSummary};
use shearlab::fem::{
    apply_trilinear, assemble_constant_forms, block_quad, gradient_norm_integral, interpolate, l2_error, MixedSpace,
};
use shearlab::mesh::{build_channel_mesh, ChannelSpec, Marker, Point};
use shearlab::solver::{BoundaryData, FlowState, Integrator, ModelParams, TimeSteppingConfig};
use shearlab::stats::{dissipation_rate, lemma1_quadrature_check, poincare_strip_check};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn channel(n: usize, strip: Option<f64>) -> MixedSpace {
    let mut spec = ChannelSpec::new(1.0, n, n);
    spec.align_strip = strip;
    MixedSpace::new(build_channel_mesh(&spec).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let (u, l) = (1.0, 1.0);
    let mut worst: f64 = 0.0;
    for h in [0.05, 0.1, 0.25] {
        let space = channel(8, Some(h));
        let forms = assemble_constant_forms(&space);
        let r = lemma1_quadrature_check(&space, &forms, h, u, l)?;
        // Φ = U (1 − d/h) in a strip of width h along the moving wall.
        let grad = u / h;
        let oracle = [u * u * l * h / 3.0, grad * grad * l * h, grad.powi(3) * l * h, (grad.powf(1.5) * l * h).powi(2)];
        for k in 0..4 {
            worst = worst.max(rel(r.computed[k], oracle[k]));
        }
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.2e} (tol 1e-10)")))
}

fn criterion_2() -> Outcome {
    let space = channel(10, None);
    let forms = assemble_constant_forms(&space);
    let mut rng = StdRng::seed_from_u64(2);
    let a_norm = |v: &[f64]| block_quad(&forms.stiffness, v).sqrt();
    let (mut diag, mut anti): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let u = random_interior_field(&space, &mut rng);
        let v = random_interior_field(&space, &mut rng);
        let w = random_interior_field(&space, &mut rng);
        diag = diag.max(apply_trilinear(&space, &u, &v, &v)?.abs() / (a_norm(&u) * a_norm(&v).powi(2)));
        let s = apply_trilinear(&space, &u, &v, &w)? + apply_trilinear(&space, &u, &w, &v)?;
        anti = anti.max(s.abs() / (a_norm(&u) * a_norm(&v) * a_norm(&w)));
    }
    let ok = diag <= 1e-12 && anti <= 1e-12;
    Ok((ok, format!("|b(u,v,v)| ratio {diag:.2e}, |b(u,v,w)+b(u,w,v)| ratio {anti:.2e} (tol 1e-12)")))
}

fn criterion_3() -> Outcome {
    let space = channel(8, None);
    let h = space.mesh().h_max();
    let (nu, cs) = (0.01, 0.17);
    let params = ModelParams::new(nu, cs, h, 1.0, 1.0)?;
    let mut integ = Integrator::new(space, params, BoundaryData::Couette { speed: 1.0 })?;
    let exact = interpolate(integ.space(), |p| [p[1], 0.0]);
    let mut state = FlowState { u: exact.clone(), p: vec![0.0; integ.space().n_pres()], t: 0.0 };
    let cfg = TimeSteppingConfig::new(0.01, 1.0);
    for _ in 0..100 {
        state = integ.step(&state, &cfg)?.0;
    }
    let change = l2_error(integ.space(), &state.u, |p| [p[1], 0.0])?;
    let c_eps = dissipation_rate(integ.space(), integ.forms(), &state, &params)?;
    // Unit shear: ν + (C_s δ)² with Re = 1/ν.
    let oracle = nu + (cs * h).powi(2);
    let err = rel(c_eps, oracle);
    Ok((change <= 1e-7 && err <= 1e-8, format!("L2 change {change:.2e} (tol 1e-7), c_eps relative error {err:.2e} (tol 1e-8)")))
}

fn criterion_4() -> Outcome {
    let space = channel(6, None);
    let forms = assemble_constant_forms(&space);
    let (nu, cs_delta) = (0.01, 0.17 * 0.1);
    let params = ModelParams::new(nu, 0.17, 0.1, 1.0, 1.0)?;
    let mut integ = Integrator::new(space.clone(), params, BoundaryData::Zero)?;
    let mut rng = StdRng::seed_from_u64(4);
    let u0 = random_interior_field(&space, &mut rng);
    let mut state = FlowState { u: u0, p: vec![0.0; space.n_pres()], t: 0.0 };
    let mut cfg = TimeSteppingConfig::new(0.01, 2.0);
    cfg.picard_tol = 1e-13;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let next = integ.step(&state, &cfg)?.0;
        // ½|u₁|² − ½|u₀|² + ½|u₁ − u₀|² + dt ν|∇u₁|² + dt (C_s δ)² ∫|∇u₁|³ = 0
        let du: Vec<f64> = next.u.iter().zip(&state.u).map(|(a, b)| a - b).collect();
        let old = 0.5 * block_quad(&forms.mass, &state.u);
        let residual = 0.5 * block_quad(&forms.mass, &next.u) - old
            + 0.5 * block_quad(&forms.mass, &du)
            + cfg.dt * nu * block_quad(&forms.stiffness, &next.u)
            + cfg.dt * cs_delta * cs_delta * gradient_norm_integral(&space, &next.u, 3.0)?;
        worst = worst.max(residual.abs() / old);
        state = next;
    }
    Ok((worst <= 1e-10, format!("max relative residual over 200 steps {worst:.2e} (tol 1e-10)")))
}

/// Manufactured flow from `ψ = g(t) sin(2πx) sin(πz)` with `g = 1 + t` and
/// pressure `g cos(2πx) cos(πz)`. Linear in time, so backward Euler adds no
/// time error and the measured error is spatial.
struct Manufactured {
    nu: f64,
}

impl Manufactured {
    const A: f64 = 2.0 * PI;
    const B: f64 = PI;

    fn velocity(&self, p: Point, t: f64) -> [f64; 2] {
        let (a, b, g) = (Self::A, Self::B, 1.0 + t);
        let (x, z) = (p[0], p[1]);
        [g * b * (a * x).sin() * (b * z).cos(), -g * a * (a * x).cos() * (b * z).sin()]
    }

    fn forcing(&self, p: Point, t: f64) -> [f64; 2] {
        let (a, b, g) = (Self::A, Self::B, 1.0 + t);
        let (x, z) = (p[0], p[1]);
        let (sa, ca, sb, cb) = ((a * x).sin(), (a * x).cos(), (b * z).sin(), (b * z).cos());
        let [u, w] = self.velocity(p, t);
        let (ux, uz) = (g * a * b * ca * cb, -g * b * b * sa * sb);
        let (wx, wz) = (g * a * a * sa * sb, -g * a * b * ca * cb);
        let k2 = a * a + b * b;
        let fx = b * sa * cb + u * ux + w * uz + self.nu * k2 * u - g * a * sa * cb;
        let fz = -a * ca * sb + u * wx + w * wz + self.nu * k2 * w - g * b * ca * sb;
        [fx, fz]
    }
}

fn mms_error(n: usize, steps: usize, dt: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let mms = Arc::new(Manufactured { nu: 0.1 });
    let space = channel(n, None);
    let params = ModelParams::new(mms.nu, 0.0, 0.0, 1.0, 1.0)?;
    let m = mms.clone();
    let bc = BoundaryData::Custom(Arc::new(move |p: Point, _: Marker, t: f64| m.velocity(p, t)));
    let f = mms.clone();
    let mut integ = Integrator::new(space, params, bc)?.with_forcing(Arc::new(move |p: Point, t: f64| f.forcing(p, t)));
    let u0 = interpolate(integ.space(), |p| mms.velocity(p, 0.0));
    let mut state = FlowState { u: u0, p: vec![0.0; integ.space().n_pres()], t: 0.0 };
    let mut cfg = TimeSteppingConfig::new(dt, steps as f64 * dt);
    cfg.picard_tol = 1e-12;
    for _ in 0..steps {
        state = integ.step(&state, &cfg)?.0;
    }
    let t = state.t;
    Ok(l2_error(integ.space(), &state.u, |p| mms.velocity(p, t))?)
}

fn criterion_5() -> Outcome {
    let errs: Vec<f64> = [4, 8, 16].iter().map(|&n| mms_error(n, 100, 1e-3)).collect::<Result<_, _>>()?;
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let errs: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    Ok((min >= 2.5, format!("L2 errors [{}], orders {orders:.2?} (min >= 2.5)", errs.join(", "))))
}

/// Grid oracle: index of the smallest value of `f` on `n` log-spaced points.
fn grid_bracket(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64, f64) {
    let x = |i: usize| lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
    let (mut best, mut fbest) = (0, f64::INFINITY);
    for i in 0..n {
        let v = f(x(i));
        if v < fbest {
            best = i;
            fbest = v;
        }
    }
    (x(best.saturating_sub(1)), fbest, x((best + 1).min(n - 1)))
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let (mut worst, mut misses, mut value_gap): (f64, usize, f64) = (0.0, 0, 0.0);
    for _ in 0..50 {
        let re = 10f64.powf(rng.random_range(2.0..6.0));
        let r = 10f64.powf(rng.random_range(-3.0..0.5f64.log10()));
        let a = r.powi(-5) + r.powf(-2.5);
        // δ = h: F(C_s) = 1/(Re r) + C_s² + A/C_s⁴, stationary at C_s⁶ = 2A.
        let cs_star = (2.0 * a).powf(1.0 / 6.0);
        let f = |cs: f64| 1.0 / (re * r) + cs * cs + a / cs.powi(4);
        let m1 = minimize_cor1(re, r)?;
        // Free C_s δ at h = r (L = 1): stationary at (C_s δ)⁶ = 2 h⁶ A.
        let g_star = r * cs_star;
        let g = |cd: f64| 1.0 / (re * r) + (cd / r).powi(2) + (1.0 / r + r.powf(1.5)) / cd.powi(4);
        let m2 = minimize_cor2(re, r, 1.0)?;
        worst = worst.max(rel(m1.argmin, cs_star)).max(rel(m2.argmin, g_star));
        for (func, lib_min, star) in [(&f as &dyn Fn(f64) -> f64, m1.min, cs_star), (&g, m2.min, g_star)] {
            let (lo, fmin, hi) = grid_bracket(func, star / 10.0, star * 10.0, 1_000_000);
            if !(lo <= star && star <= hi) {
                misses += 1;
            }
            value_gap = value_gap.max(rel(lib_min, fmin).min((fmin - lib_min).max(0.0) / fmin));
        }
    }
    let reference = minimize_cor1(f64::INFINITY, 0.01)?;
    let ok = worst <= 1e-8 && misses == 0 && value_gap <= 1e-10;
    Ok((
        ok,
        format!(
            "argmin relative error {worst:.2e} (tol 1e-8), grid misses {misses}, min gap {value_gap:.1e}; \
             h/L = 0.01: F_min = {:.1} vs quoted 2000 (stated formula gives {:.1})",
            reference.min, reference.formula_min
        ),
    ))
}

fn lambdas(re: f64, h: f64, cd: f64) -> [f64; 3] {
    [1.0 / (re * h), (cd / h).powi(2), 1.0 / (cd.powi(4) * h) + h.powf(1.5) / cd.powi(4)]
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut level: f64 = 0.0;
    for _ in 0..1000 {
        let re = 10f64.powf(rng.random_range(0.0..8.0));
        let r = 10f64.powf(rng.random_range(-6.0..0.0));
        let z = zeta_at(re, 1.0, r);
        let l1 = lambdas(re, r, z.zeta1);
        let l2 = lambdas(re, r, z.zeta2);
        let l3 = lambdas(re, r, z.zeta3);
        level = level.max(rel(l1[0], l1[1]).max(rel(l2[1], l2[2])).max(rel(l3[0], l3[2])));
    }
    let (mut strict, mut mismatched) = (0usize, 0usize);
    for _ in 0..10_000 {
        let re = 10f64.powf(rng.random_range(0.0..8.0));
        let r = 10f64.powf(rng.random_range(-6.0..0.0));
        let cd = 10f64.powf(rng.random_range(-6.0..1.0));
        let l = lambdas(re, r, cd);
        if l[0] > l[1] && l[0] > l[2] {
            strict += 1;
        }
        let lib = Lambdas::new(re, r, cd, 1.0);
        let above = cd > zeta_at(re, 1.0, r).zeta2;
        let region = Region::from_lambdas(&lib);
        if above != matches!(region, Region::III | Region::IV) || rel(lib.lambda3, l[2]) > 1e-13 {
            mismatched += 1;
        }
    }
    let ok = level <= 1e-12 && strict == 0 && mismatched == 0;
    Ok((ok, format!("level-set residual {level:.2e} (tol 1e-12), lambda1 strict max {strict}/10000, region mismatches {mismatched}")))
}

const ANNULUS: &str = r#"
seed = 8
[domain]
kind = "annulus"
m = {m}
n = {n}
[model]
kind = "{kind}"
re = 1000.0
cs = {cs}
[stepping]
dt = 0.01
t_final = 10.0
[outputs]
dir = "unused"
"#;

fn annulus(kind: &str, m: usize, n: usize, cs: f64) -> ExperimentConfig {
    let text = ANNULUS.replace("{m}", &m.to_string()).replace("{n}", &n.to_string()).replace("{kind}", kind);
    ExperimentConfig::parse(&text.replace("{cs}", &cs.to_string())).unwrap()
}

fn criterion_8(summaries: &mut Vec<(RunSummary, std::path::PathBuf)>, out: &Path) -> Outcome {
    let nse = annulus("nse", 150, 100, 0.0);
    let sm = annulus("smagorinsky", 60, 30, 0.17);
    let r = cmd_compare(&nse, &sm, out, 0.1, RunOptions::default())?;
    let rep = r.report;
    summaries.push((r.nse.summary, r.nse.out_dir));
    summaries.push((r.smagorinsky.summary, r.smagorinsky.out_dir));
    Ok((
        rep.laminarized,
        format!(
            "std(ke) over [5, 10]: NSE {:.3e}, Smagorinsky {:.3e}, ratio {:.3e} (max 0.1); \
             ke slope NSE {:.2e}, Smagorinsky {:.2e}; std about the slope NSE {:.2e}, Smagorinsky {:.2e}",
            rep.nse.ke_std,
            rep.smagorinsky.ke_std,
            rep.std_ratio,
            rep.nse.ke_trend,
            rep.smagorinsky.ke_trend,
            rep.nse.ke_detrended_std,
            rep.smagorinsky.ke_detrended_std
        ),
    ))
}

const COUETTE: &str = r#"
seed = 9
[domain]
kind = "channel"
nx = 6
nz = 6
[model]
kind = "smagorinsky"
nu = 0.01
cs = 0.17
[stepping]
dt = 0.01
t_final = 0.2
[outputs]
dir = "unused"
[bounds]
C = {C}
"#;

fn criterion_9(summaries: &mut Vec<(RunSummary, std::path::PathBuf)>, out: &Path) -> Outcome {
    for (c, name) in [(1.0, "couette"), (1e-9, "couette_small_c")] {
        let mut cfg = ExperimentConfig::parse(&COUETTE.replace("{C}", &c.to_string()))?;
        cfg.outputs.dir = out.join(name);
        let r = execute(&cfg, None, RunOptions::default())?;
        summaries.push((r.summary, r.out_dir));
    }
    let mut lines = Vec::new();
    let mut ok = true;
    for (s, dir) in summaries.iter() {
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json"))?)?;
        let recorded = json["c_eps"].is_f64() && json["bound"]["bound"].is_f64();
        let warned = dir.join("warnings.txt").exists();
        let satisfied = s.bound.satisfied == Some(true);
        // The C = 1e-9 run exists to force a violation; it must be flagged.
        let expected_violation = s.bound.c < 1.0;
        ok &= recorded && if expected_violation { !satisfied && warned } else { satisfied };
        lines.push(format!(
            "{}: c_eps {:.3e} vs {:?} bound {:.3e} (C = {}){}",
            dir.file_name().unwrap().to_string_lossy(),
            s.c_eps.unwrap_or(f64::NAN),
            s.bound.kind,
            s.bound.bound,
            s.bound.c,
            if warned { ", warning written" } else { "" }
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn criterion_10() -> Outcome {
    let mut worst: f64 = 0.0;
    for (i, h) in [0.05, 0.1, 0.25].into_iter().enumerate() {
        let space = channel(10, Some(h));
        worst = worst.max(poincare_strip_check(&space, h, 1.0, 100, 10 + i as u64)?);
    }
    Ok((worst <= 1.0, format!("max ratio {worst:.4} over 3 x 100 fields (max 1.0)")))
}

fn report(n: usize, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok((ok, d)) => (ok, d),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed <= budget;
    let pass = ok && in_time;
    let timing = format!("{:.2}s of {}s{}", elapsed.as_secs_f64(), budget.as_secs(), if in_time { "" } else { " OVER BUDGET" });
    println!("criterion {n:>2}: {} | {detail} | {timing}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for n in 1..=10 {
            println!("criterion_{n}: test");
        }
        return;
    }
    let selected: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| selected.is_empty() || selected.contains(&n);
    let secs = Duration::from_secs;
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut summaries = Vec::new();
    let mut all = true;
    let mut run = |n: usize, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        if want(n) {
            all &= report(n, budget, f);
        }
    };
    run(1, secs(1), &mut criterion_1);
    run(2, secs(5), &mut criterion_2);
    run(3, secs(30), &mut criterion_3);
    run(4, secs(60), &mut criterion_4);
    run(5, secs(300), &mut criterion_5);
    run(6, secs(10), &mut criterion_6);
    run(7, secs(5), &mut criterion_7);
    run(8, secs(1800), &mut || criterion_8(&mut summaries, &tmp.path().join("compare")));
    run(9, secs(60), &mut || criterion_9(&mut summaries, &tmp.path().join("runs")));
    run(10, secs(5), &mut criterion_10);
    if !all {
        std::process::exit(1);
    }
}
