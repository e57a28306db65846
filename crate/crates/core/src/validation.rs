//! The acceptance suite: every check the library is held to, with its
//! tolerance and time budget. Used by the `acceptance` test target and the
//! `validate` CLI command.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::figures::{compute, FigureId};
use crate::mc::{estimate_moment, InitialVelocity, McConfig};
use crate::moment_confined::{
    moment_general_confined_with, moment_high_t_confined, moment_low_t_confined,
};
use crate::moment_free::{moment_general_free_with, moment_high_t_free, moment_low_t_free};
use crate::response::{check_causality, green, poles_confined};
use crate::series::linspace;
use crate::thermal::{QuadOptions, ThermalKernel};
use crate::units::Params;
use crate::{csv, Result};

/// Relative tolerance requested from quadrature in the comparisons.
pub const QUAD_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<28} {:>8.2}s / {:>4}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

/// Times `check`, which returns `(numerical pass, detail)`. The outcome
/// passes only if the check passes inside the budget.
fn timed<F>(id: u8, name: &'static str, budget_s: u64, check: F) -> Outcome
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    let (ok, mut detail) = match result {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > budget {
        detail.push_str("; over time budget");
    }
    Outcome {
        id,
        name,
        passed: ok && elapsed <= budget,
        detail,
        elapsed,
        budget,
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_params(rng: &mut ChaCha8Rng, confined: bool) -> Params {
    let g = log_uniform(rng, 1e-2, 1e2);
    let wc = rng.random_range(-50.0..50.0);
    let w0 = if confined { log_uniform(rng, 1e-2, 50.0) } else { 0.0 };
    let temp = rng.random_range(0.1..10.0);
    Params::new(g, wc, w0, temp).expect("sampled parameters are valid")
}

fn closed_forms(p: &Params, t: f64) -> Result<[f64; 2]> {
    Ok(if p.omega_0 == 0.0 {
        [moment_high_t_free(p, t)?, moment_low_t_free(p, t)?]
    } else {
        [moment_high_t_confined(p, t)?, moment_low_t_confined(p, t)?]
    })
}

pub fn t_zero_null() -> Outcome {
    timed(1, "t=0 null", 1, || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let p = random_params(&mut rng, k % 2 == 1);
            for v in closed_forms(&p, 0.0)? {
                worst = worst.max(v.abs());
            }
        }
        Ok((worst < 1e-10, format!("max |Mz(0)| = {worst:.2e} over 200 sets")))
    })
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-9,
        ..QuadOptions::with_rel_tol(QUAD_REL_TOL)
    }
}

fn compare_quadrature<F, G>(points: &[(f64, f64, f64, f64)], general: F, closed: G) -> Result<(bool, String)>
where
    F: Fn(&Params, f64, ThermalKernel) -> Result<f64>,
    G: Fn(&Params, f64, ThermalKernel) -> Result<f64>,
{
    let mut worst_ratio: f64 = 0.0;
    let mut worst_at = String::new();
    for &(g, wc, w0, gt) in points {
        let p = Params::new(g, wc, w0, 1.0)?;
        let t = gt / g;
        for k in [ThermalKernel::ClassicalHighT, ThermalKernel::QuantumLowT] {
            let q = general(&p, t, k)?;
            let c = closed(&p, t, k)?;
            let tol = 1e-6f64.max(QUAD_REL_TOL * c.abs());
            let ratio = (q - c).abs() / tol;
            if ratio >= worst_ratio {
                worst_ratio = ratio;
                worst_at = format!("gamma={g} omega_c={wc} omega_0={w0} gamma*t={gt} {}", k.name());
            }
        }
    }
    Ok((
        worst_ratio <= 1.0,
        format!("worst |quad - closed| / tol = {worst_ratio:.3} at {worst_at}; {} points", 2 * points.len()),
    ))
}

/// `(γ, ω_c, ω₀, γt)`
pub const FREE_POINTS: [(f64, f64, f64, f64); 20] = [
    (0.5, 25.0, 0.0, 0.0),
    (0.5, 25.0, 0.0, 1.0),
    (0.5, 25.0, 0.0, 5.0),
    (1.0, 10.0, 0.0, 2.0),
    (2.0, 5.0, 0.0, 3.0),
    (3.0, 3.0, 0.0, 1.0),
    (5.0, 2.0, 0.0, 0.5),
    (10.0, 1.0, 0.0, 3.0),
    (10.0, 1.0, 0.0, 10.0),
    (10.0, 1.0, 0.0, 20.0),
    (20.0, 1.0, 0.0, 20.0),
    (40.0, 1.0, 0.0, 20.0),
    (40.0, 1.0, 0.0, 0.5),
    (4.0, 0.5, 0.0, 7.0),
    (0.8, 8.0, 0.0, 12.0),
    (2.0, 20.0, 0.0, 20.0),
    (6.0, 12.0, 0.0, 4.0),
    (15.0, 3.0, 0.0, 15.0),
    (1.0, 1.0, 0.0, 6.0),
    (25.0, 0.625, 0.0, 1.0),
];

pub const CONFINED_POINTS: [(f64, f64, f64, f64); 20] = [
    (10.0, 1.0, 5.0, 0.0),
    (10.0, 1.0, 5.0, 3.0),
    (10.0, 1.0, 5.0, 10.0),
    (10.0, 1.0, 5.0, 20.0),
    (0.5, 25.0, 5.0, 0.5),
    (0.5, 25.0, 5.0, 2.0),
    (0.5, 25.0, 5.0, 5.0),
    (20.0, 1.0, 5.0, 20.0),
    (40.0, 1.0, 5.0, 20.0),
    (40.0, 1.0, 5.0, 1.0),
    (1.0, 10.0, 2.0, 3.0),
    (2.0, 5.0, 1.0, 6.0),
    (3.0, 3.0, 3.0, 2.0),
    (5.0, 2.0, 8.0, 4.0),
    (4.0, 0.0, 2.0, 3.0),
    (0.8, 8.0, 0.5, 10.0),
    (2.0, 20.0, 10.0, 15.0),
    (6.0, 12.0, 1.0, 8.0),
    (15.0, 3.0, 20.0, 12.0),
    (25.0, 0.625, 5.0, 1.0),
];

pub fn quadrature_free() -> Outcome {
    timed(2, "closed vs quadrature, free", 60, || {
        let opts = quad_opts();
        compare_quadrature(
            &FREE_POINTS,
            |p, t, k| moment_general_free_with(p, t, k, &opts),
            |p, t, k| match k {
                ThermalKernel::ClassicalHighT => moment_high_t_free(p, t),
                _ => moment_low_t_free(p, t),
            },
        )
    })
}

pub fn quadrature_confined() -> Outcome {
    timed(3, "closed vs quadrature, trap", 120, || {
        let opts = quad_opts();
        compare_quadrature(
            &CONFINED_POINTS,
            |p, t, k| moment_general_confined_with(p, t, k, &opts),
            |p, t, k| match k {
                ThermalKernel::ClassicalHighT => moment_high_t_confined(p, t),
                _ => moment_low_t_confined(p, t),
            },
        )
    })
}

pub fn monte_carlo() -> Outcome {
    timed(4, "Monte Carlo vs closed forms", 120, || {
        let cases: [(Params, [f64; 5]); 3] = [
            (Params::free(10.0, 1.0, 1.0)?, [0.05, 0.1, 0.2, 0.3, 0.5]),
            (Params::free(0.5, 25.0, 1.0)?, [0.1, 0.25, 0.5, 1.0, 2.0]),
            (Params::new(10.0, 1.0, 5.0, 1.0)?, [0.05, 0.1, 0.2, 0.3, 0.5]),
        ];
        let mut worst: f64 = 0.0;
        let mut worst_at = String::new();
        for (i, (p, times)) in cases.iter().enumerate() {
            let cfg = McConfig {
                n_trajectories: 100_000,
                dt: McConfig::dt_limit(p),
                t_max: times[4],
                seed: 20 + i as u64,
                initial_velocity: InitialVelocity::ThermalEquipartition,
            };
            let s = estimate_moment(p, &cfg, times)?;
            let se = s.stderr.as_ref().expect("monte carlo reports errors");
            for (k, &t) in times.iter().enumerate() {
                let exact = if p.omega_0 == 0.0 {
                    moment_high_t_free(p, t)?
                } else {
                    moment_high_t_confined(p, t)?
                };
                let z = (s.values[k] - exact).abs() / se[k];
                if z >= worst {
                    worst = z;
                    worst_at = format!("gamma={} omega_c={} omega_0={} t={t}", p.gamma, p.omega_c, p.omega_0);
                }
            }
        }
        Ok((worst <= 3.0, format!("worst deviation {worst:.2} sigma at {worst_at}; 15 points, n=1e5")))
    })
}

/// First time after which `|M_z + 1/2| < 1e-3` for the rest of `[0, 100/γ]`.
fn settling_time(p: &Params) -> Result<f64> {
    let end = 100.0 / p.gamma;
    let times = linspace(0.0, end, 4001);
    let mut settle = 0.0;
    for &t in &times {
        let v = if p.omega_0 == 0.0 {
            moment_low_t_free(p, t)?
        } else {
            moment_low_t_confined(p, t)?
        };
        if (v + 0.5).abs() >= 1e-3 {
            settle = t;
        }
    }
    Ok(settle)
}

pub fn low_t_saturation() -> Outcome {
    timed(5, "low-T saturation", 5, || {
        let mut ok = true;
        let mut notes = Vec::new();
        for w0 in [0.0, 5.0] {
            let mut settle = Vec::new();
            let mut worst: f64 = 0.0;
            for g in [10.0, 20.0, 30.0, 40.0] {
                let p = Params::new(g, 1.0, w0, 0.0)?;
                let v = closed_forms(&p, 20.0 / g)?[1];
                worst = worst.max((v + 0.5).abs());
                settle.push(settling_time(&p)?);
            }
            let faster = settle.windows(2).all(|w| w[1] < w[0]);
            ok &= worst < 1e-3 && faster;
            let shown: Vec<String> = settle.iter().map(|s| format!("{s:.3}")).collect();
            notes.push(format!(
                "omega_0={w0}: max |Mz+1/2| at gamma*t=20 is {worst:.1e}, settling t [{}]",
                shown.join(", ")
            ));
        }
        Ok((ok, notes.join("; ")))
    })
}

pub fn bohr_van_leeuwen() -> Outcome {
    timed(6, "Bohr-van Leeuwen approach", 5, || {
        // the figures' time unit is 1/γ, so "t = 1" is γt = 1
        let gammas = linspace(5.0, 40.0, 3501);
        let mut free = Vec::new();
        let mut trap = Vec::new();
        for &g in &gammas {
            let p = Params::free(g, 1.0, 1.0)?;
            free.push(moment_high_t_free(&p, 1.0 / g)?.abs());
            trap.push(moment_high_t_confined(&p.with_omega_0(5.0), 1.0 / g)?.abs());
        }
        let mono = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        let below = trap.iter().zip(&free).all(|(c, f)| c < f);
        let (f40, c40) = (*free.last().unwrap(), *trap.last().unwrap());
        let ok = mono(&free) && mono(&trap) && f40 < 1e-3 && c40 < 2e-4 && below;
        Ok((
            ok,
            format!(
                "monotone free={} trap={}; at gamma=40 free={f40:.3e} trap={c40:.3e}; trap < free: {below}",
                mono(&free),
                mono(&trap)
            ),
        ))
    })
}

pub fn poles_and_causality() -> Outcome {
    timed(7, "poles and causality", 60, || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst_id: f64 = 0.0;
        for _ in 0..1000 {
            let p = random_params(&mut rng, true);
            let r = poles_confined(&p)?;
            let gb = p.gamma_bar();
            let sum = (r.gamma_plus + r.gamma_minus + gb).norm() / gb.norm();
            let prod = (r.gamma_plus * r.gamma_minus - p.omega_0 * p.omega_0).norm() / (p.omega_0 * p.omega_0);
            worst_id = worst_id.max(sum).max(prod);
        }
        let sets = [
            Params::new(10.0, 1.0, 5.0, 1.0)?,
            Params::new(0.5, 25.0, 5.0, 1.0)?,
            Params::new(3.0, 2.0, 1.0, 1.0)?,
            Params::free(10.0, 1.0, 1.0)?,
            Params::free(0.5, 25.0, 1.0)?,
        ];
        let mut worst_res: f64 = 0.0;
        let mut worst_acausal: f64 = 0.0;
        for p in &sets {
            let r = check_causality(p, 500.0, 1 << 16);
            worst_res = worst_res.max(r.max_residual);
            worst_acausal = worst_acausal.max(r.max_acausal);
        }
        let ok = worst_id < 1e-12 && worst_res < 1e-4 && worst_acausal < 1e-4;
        Ok((
            ok,
            format!(
                "root identities {worst_id:.1e} over 1000 sets; inverse FT residual {worst_res:.1e}, t<0 leak {worst_acausal:.1e}"
            ),
        ))
    })
}

pub fn limit_continuity() -> Outcome {
    timed(8, "weak-trap continuity", 5, || {
        let free = Params::free(10.0, 1.0, 1.0)?;
        let weak = free.with_omega_0(1e-4);
        let mut worst: f64 = 0.0;
        for t in linspace(0.0, 2.0, 401) {
            let f = closed_forms(&free, t)?;
            let c = closed_forms(&weak, t)?;
            worst = worst.max((f[0] - c[0]).abs()).max((f[1] - c[1]).abs());
            worst = worst.max((green(&free, t) - green(&weak, t)).norm());
        }
        Ok((worst < 1e-4, format!("max deviation {worst:.1e} over t in [0, 2]")))
    })
}

pub fn field_symmetry() -> Outcome {
    timed(9, "odd in omega_c", 1, || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut odd = [0.0f64; 2];
        for k in 0..100 {
            let p = random_params(&mut rng, k % 2 == 1);
            let t = rng.random_range(0.0..3.0) / p.gamma.min(1.0);
            let a = closed_forms(&p, t)?;
            let b = closed_forms(&p.with_omega_c(-p.omega_c), t)?;
            for j in 0..2 {
                odd[j] = odd[j].max((a[j] + b[j]).abs());
            }
        }
        Ok((
            odd[0] < 1e-10 && odd[1] < 1e-10,
            format!(
                "max |M(omega_c) + M(-omega_c)|: high-T {:.1e}, low-T {:.1e} (the low-T forms are even in omega_c)",
                odd[0], odd[1]
            ),
        ))
    })
}

fn scratch_dir(tag: &str) -> PathBuf {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    std::env::temp_dir().join(format!("moment-lab-{}-{nanos}-{tag}", std::process::id()))
}

fn dir_bytes(dir: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir)? {
        let e = e?;
        out.push((e.file_name().to_string_lossy().into_owned(), fs::read(e.path())?));
    }
    out.sort();
    Ok(out)
}

pub fn determinism() -> Outcome {
    timed(10, "byte-identical reruns", 30, || {
        let io = |e: std::io::Error| crate::Error::Unsupported(Box::leak(e.to_string().into_boxed_str()));
        let (a, b) = (scratch_dir("a"), scratch_dir("b"));
        compute(FigureId::Fig1)?.write(&a).map_err(io)?;
        compute(FigureId::Fig1)?.write(&b).map_err(io)?;
        let figures_equal = dir_bytes(&a).map_err(io)? == dir_bytes(&b).map_err(io)?;
        let _ = fs::remove_dir_all(&a);
        let _ = fs::remove_dir_all(&b);

        let p = Params::free(10.0, 1.0, 1.0)?;
        let cfg = McConfig {
            n_trajectories: 20_000,
            dt: 0.01,
            t_max: 1.0,
            seed: 99,
            initial_velocity: InitialVelocity::ThermalEquipartition,
        };
        let grid = linspace(0.0, 1.0, 11);
        let render = || -> Result<Vec<u8>> {
            let s = estimate_moment(&p, &cfg, &grid)?;
            let mut buf = Vec::new();
            csv::write_series(&mut buf, &s, p.gamma, "mc").map_err(io)?;
            Ok(buf)
        };
        let mc_equal = render()? == render()?;
        Ok((figures_equal && mc_equal, format!("fig1 identical: {figures_equal}; seeded monte carlo identical: {mc_equal}")))
    })
}

/// Runs every check in order.
pub fn run_all() -> Vec<Outcome> {
    vec![
        t_zero_null(),
        quadrature_free(),
        quadrature_confined(),
        monte_carlo(),
        low_t_saturation(),
        bohr_van_leeuwen(),
        poles_and_causality(),
        limit_continuity(),
        field_symmetry(),
        determinism(),
    ]
}

/// Plain-text table of outcomes.
pub fn report(outcomes: &[Outcome]) -> String {
    let mut s = String::from("status id check                        elapsed / budget  detail\n");
    for o in outcomes {
        s.push_str(&o.line());
        s.push('\n');
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    s.push_str(&format!("{passed}/{} passed\n", outcomes.len()));
    s
}
