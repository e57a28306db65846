//! Classical Monte-Carlo estimate of `M_z(t)`.
//!
//! The Langevin system for `X = (ξ, v)` is linear,
//! `dv = (−γ̄v − ω₀²ξ)dt + dF` with `⟨dF dF*⟩ = 4Tγ dt`, so each step is
//! sampled exactly: `X ← Φ(h)X + η` with `Φ` built from the Green's
//! function and `η` a circular Gaussian of covariance
//! `Q(h) = 4Tγ ∫₀ʰ g(u)g(u)ᴴ du`, `g = (G, Ġ)`. There is no time
//! discretisation bias; `dt` only sets how often the state is visited.
//!
//! Each trajectory draws from its own ChaCha stream keyed by
//! `(seed, index)`, and chunk sums are reduced in index order, so results
//! are bit-identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::cmath::exp_decay;
use crate::error::{Error, Result};
use crate::response::{green, green_derivative};
use crate::series::{Method, MomentSeries};
use crate::thermal::{WGK, XGK};
use crate::units::Params;
use crate::C64;

const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialVelocity {
    Zero,
    /// `Re v, Im v ~ N(0, T)` independently.
    ThermalEquipartition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_trajectories: usize,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub initial_velocity: InitialVelocity,
}

impl McConfig {
    /// Largest step allowed for `p`.
    pub fn dt_limit(p: &Params) -> f64 {
        0.1 / p.rate_scale()
    }

    pub fn validate(&self, p: &Params) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::domain("n_trajectories", 0.0, "must be > 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt", self.dt, "must be positive and finite"));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::domain("t_max", self.t_max, "must be finite and >= 0"));
        }
        let limit = Self::dt_limit(p);
        if self.dt > limit {
            return Err(Error::Stability { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// Exact velocity update of the free particle,
/// `v ← v e^{−γ̄dt} + η` with `Var Re η = Var Im η = T(1 − e^{−2γdt})`.
///
/// `noise` holds two independent standard normals as its real and
/// imaginary parts.
pub fn step_free(v: C64, p: &Params, dt: f64, noise: C64) -> C64 {
    let sigma = (p.temperature * -(-2.0 * p.gamma * dt).exp_m1()).sqrt();
    v * exp_decay(-p.gamma_bar() * dt) + sigma * noise
}

/// Propagator and noise factor for one step of length `h`.
#[derive(Debug, Clone, Copy)]
struct Step {
    h: f64,
    phi: [[C64; 2]; 2],
    /// Lower Cholesky factor of the noise covariance.
    chol: [[C64; 2]; 2],
}

impl Step {
    fn new(p: &Params, h: f64) -> Self {
        let g = green(p, h);
        let gd = green_derivative(p, h);
        let w0sq = p.omega_0 * p.omega_0;
        let phi = [[gd + p.gamma_bar() * g, g], [-w0sq * g, gd]];

        let q = noise_covariance(p, h);
        let zero = C64::new(0.0, 0.0);
        let l11 = q[0][0].re.max(0.0).sqrt();
        let l21 = if l11 > 0.0 { q[1][0] / l11 } else { zero };
        let l22 = (q[1][1].re - l21.norm_sqr()).max(0.0).sqrt();
        Step {
            h,
            phi,
            chol: [[C64::new(l11, 0.0), zero], [l21, C64::new(l22, 0.0)]],
        }
    }

    fn apply(&self, x: [C64; 2], z: [C64; 2]) -> [C64; 2] {
        let [[a, b], [c, d]] = self.phi;
        let [[l11, _], [l21, l22]] = self.chol;
        [
            a * x[0] + b * x[1] + l11 * z[0],
            c * x[0] + d * x[1] + l21 * z[0] + l22 * z[1],
        ]
    }
}

/// `4Tγ ∫₀ʰ g gᴴ du` by 21-point Gauss–Kronrod; `g` is smooth on `[0, h]`
/// and `h` is a small fraction of every decay time.
fn noise_covariance(p: &Params, h: f64) -> [[C64; 2]; 2] {
    let zero = C64::new(0.0, 0.0);
    let mut q = [[zero; 2]; 2];
    let half = 0.5 * h;
    let mut add = |u: f64, w: f64| {
        let g = [green(p, u), green_derivative(p, u)];
        for i in 0..2 {
            for j in 0..2 {
                q[i][j] += w * g[i] * g[j].conj();
            }
        }
    };
    for k in 0..11 {
        if k == 10 {
            add(half, WGK[k]);
        } else {
            add(half * (1.0 - XGK[k]), WGK[k]);
            add(half * (1.0 + XGK[k]), WGK[k]);
        }
    }
    let scale = 4.0 * p.temperature * p.gamma * half;
    for row in q.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    q
}

/// Circular standard complex normal, `E|z|² = 1`.
fn circular(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Step schedule: for each grid interval, the step and how many times to
/// apply it.
fn schedule(p: &Params, cfg: &McConfig, grid: &[f64]) -> Vec<(Step, usize)> {
    let mut cache: Vec<Step> = Vec::new();
    let mut out = Vec::with_capacity(grid.len());
    let mut prev = 0.0;
    for &t in grid {
        let span = t - prev;
        prev = t;
        if span <= 0.0 {
            out.push((Step::new(p, 0.0), 0));
            continue;
        }
        let n = (span / cfg.dt).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let step = match cache.iter().find(|s| s.h.to_bits() == h.to_bits()) {
            Some(s) => *s,
            None => {
                let s = Step::new(p, h);
                cache.push(s);
                s
            }
        };
        out.push((step, n));
    }
    out
}

fn trajectory(p: &Params, cfg: &McConfig, plan: &[(Step, usize)], index: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let v0 = match cfg.initial_velocity {
        InitialVelocity::Zero => C64::new(0.0, 0.0),
        InitialVelocity::ThermalEquipartition => {
            let s = p.temperature.sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(s * re, s * im)
        }
    };
    let mut x = [C64::new(0.0, 0.0), v0];
    for (slot, (step, n)) in out.iter_mut().zip(plan) {
        for _ in 0..*n {
            let z = [circular(&mut rng), circular(&mut rng)];
            x = step.apply(x, z);
        }
        *slot = 0.5 * (x[1] * x[0].conj()).im;
    }
}

/// Ensemble average of `Im(v ξ*)/2` on `t_grid`, with standard errors.
pub fn estimate_moment(p: &Params, cfg: &McConfig, t_grid: &[f64]) -> Result<MomentSeries> {
    cfg.validate(p)?;
    let mut prev = 0.0;
    for &t in t_grid {
        if !(t.is_finite() && t >= prev) {
            return Err(Error::domain("t", t, "grid must be finite, >= 0 and non-decreasing"));
        }
        if t > cfg.t_max {
            return Err(Error::domain("t", t, "grid exceeds t_max"));
        }
        prev = t;
    }
    let plan = schedule(p, cfg, t_grid);
    let m = t_grid.len();
    let n = cfg.n_trajectories;
    let n_chunks = n.div_ceil(CHUNK);

    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; m];
            let mut sum_sq = vec![0.0; m];
            let mut buf = vec![0.0; m];
            for j in c * CHUNK..((c + 1) * CHUNK).min(n) {
                trajectory(p, cfg, &plan, j as u64, &mut buf);
                for k in 0..m {
                    sum[k] += buf[k];
                    sum_sq[k] += buf[k] * buf[k];
                }
            }
            (sum, sum_sq)
        })
        .collect();

    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    for (s, q) in &chunks {
        for k in 0..m {
            sum[k] += s[k];
            sum_sq[k] += q[k];
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let stderr: Vec<f64> = (0..m)
        .map(|k| {
            if n < 2 {
                return 0.0;
            }
            let var = ((sum_sq[k] - nf * mean[k] * mean[k]) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
        .collect();
    Ok(MomentSeries::new(t_grid.to_vec(), mean, Method::MonteCarlo).with_stderr(stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment_confined::moment_high_t_confined;
    use crate::moment_free::moment_high_t_free;

    fn cfg(n: usize, dt: f64, seed: u64) -> McConfig {
        McConfig {
            n_trajectories: n,
            dt,
            t_max: 10.0,
            seed,
            initial_velocity: InitialVelocity::ThermalEquipartition,
        }
    }

    #[test]
    fn step_guard() {
        let p = Params::free(10.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            estimate_moment(&p, &cfg(10, 0.02, 1), &[0.0, 0.1]),
            Err(Error::Stability { .. })
        ));
        assert!(estimate_moment(&p, &cfg(10, 0.01, 1), &[0.0, 0.1]).is_ok());
    }

    #[test]
    fn noiseless_free_decay() {
        let p = Params::free(2.0, 3.0, 0.0).unwrap();
        let mut v = C64::new(1.0, 0.0);
        for _ in 0..100 {
            v = step_free(v, &p, 0.01, C64::new(0.7, -1.3));
        }
        assert!((v - (-p.gamma_bar()).exp()).norm() < 1e-14);
    }

    #[test]
    fn pure_rotation_conserves_speed() {
        let p = Params::free(1e-6, 5.0, 0.0).unwrap();
        let mut v = C64::new(0.3, 0.4);
        for _ in 0..1000 {
            v = step_free(v, &p, 0.01, C64::new(0.0, 0.0));
        }
        // decay over γt = 1e-5 only
        assert!((v.norm() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn stationary_velocity_equipartition() {
        let p = Params::free(4.0, 2.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let z = [circular(&mut rng), circular(&mut rng)];
            // one long step forgets the initial condition
            let v = step_free(C64::new(5.0, 0.0), &p, 10.0, z[0] * std::f64::consts::SQRT_2);
            acc += v.norm_sqr();
        }
        let mean = acc / n as f64;
        // ⟨|v|²⟩ = 2T; sd of |v|² is 2T
        assert!((mean - 3.0).abs() < 4.0 * 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn joint_update_matches_velocity_marginal() {
        let p = Params::free(3.0, 1.0, 2.0).unwrap();
        let s = Step::new(&p, 0.05);
        let q = noise_covariance(&p, 0.05);
        let expected = 2.0 * p.temperature * -(-2.0 * p.gamma * 0.05f64).exp_m1();
        assert!((q[1][1].re - expected).abs() < 1e-14);
        assert!((s.phi[0][0] - 1.0).norm() < 1e-14);
        assert!((s.phi[1][1] - (-p.gamma_bar() * 0.05).exp()).norm() < 1e-14);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let p = Params::free(10.0, 1.0, 1.0).unwrap();
        let grid = [0.0, 0.1, 0.3];
        let a = estimate_moment(&p, &cfg(3000, 0.01, 42), &grid).unwrap();
        let b = estimate_moment(&p, &cfg(3000, 0.01, 42), &grid).unwrap();
        assert_eq!(a, b);
        let c = estimate_moment(&p, &cfg(3000, 0.01, 43), &grid).unwrap();
        assert_ne!(a.values, c.values);
        assert_eq!(a.values[0], 0.0);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let p = Params::new(10.0, 1.0, 5.0, 1.0).unwrap();
        let grid = [0.2, 0.4];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_moment(&p, &cfg(2000, 0.01, 5), &grid).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn agrees_with_classical_closed_forms() {
        let free = Params::free(10.0, 1.0, 1.0).unwrap();
        let s = estimate_moment(&free, &cfg(20_000, 0.01, 7), &[0.3]).unwrap();
        let exact = moment_high_t_free(&free, 0.3).unwrap();
        let se = s.stderr.as_ref().unwrap()[0];
        assert!((s.values[0] - exact).abs() < 4.0 * se, "{} {exact} {se}", s.values[0]);

        let trap = Params::new(10.0, 1.0, 5.0, 1.0).unwrap();
        let s = estimate_moment(&trap, &cfg(20_000, 0.01, 7), &[0.3]).unwrap();
        let exact = moment_high_t_confined(&trap, 0.3).unwrap();
        let se = s.stderr.as_ref().unwrap()[0];
        assert!((s.values[0] - exact).abs() < 4.0 * se, "{} {exact} {se}", s.values[0]);
    }

    #[test]
    fn zero_field_gives_no_moment() {
        let p = Params::free(5.0, 0.0, 1.0).unwrap();
        let s = estimate_moment(&p, &cfg(5000, 0.01, 11), &[0.1, 0.5, 1.0]).unwrap();
        for (v, e) in s.values.iter().zip(s.stderr.as_ref().unwrap()) {
            assert!(v.abs() < 4.0 * e, "{v} {e}");
        }
    }

    #[test]
    fn stderr_scales_as_inverse_root_n() {
        let p = Params::free(10.0, 1.0, 1.0).unwrap();
        let a = estimate_moment(&p, &cfg(4000, 0.01, 1), &[0.3]).unwrap();
        let b = estimate_moment(&p, &cfg(16000, 0.01, 2), &[0.3]).unwrap();
        let ratio = a.stderr.unwrap()[0] / b.stderr.unwrap()[0];
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }
}
