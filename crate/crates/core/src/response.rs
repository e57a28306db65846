//! Response function, retarded Green's functions and their poles.
//!
//! The in-plane coordinate `ξ = x + iy` obeys
//! `ξ̈ + γ̄ ξ̇ + ω₀² ξ = F/m` with `γ̄ = γ + iω_c`, so
//! `α(ω) = 1/(−ω² − iωγ + ωω_c + ω₀²)` and `G(t)` is its causal inverse
//! Fourier transform.

use std::f64::consts::PI;

use crate::cmath::{exp_decay, phi1};
use crate::error::{Error, Result};
use crate::units::{Family, Params};
use crate::C64;

/// Roots closer than this (relative to `|γ̄|`) are flagged as degenerate.
pub const NEAR_DEGENERATE_REL: f64 = 1e-8;

/// Decay exponents `γ±` of the confined Green's function, the roots of
/// `λ² + γ̄λ + ω₀² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfinedRoots {
    pub gamma_plus: C64,
    pub gamma_minus: C64,
    pub near_degenerate: bool,
}

impl ConfinedRoots {
    pub fn delta(&self) -> C64 {
        self.gamma_plus - self.gamma_minus
    }

    pub fn swapped(&self) -> Self {
        ConfinedRoots {
            gamma_plus: self.gamma_minus,
            gamma_minus: self.gamma_plus,
            near_degenerate: self.near_degenerate,
        }
    }
}

pub fn response_function(p: &Params, omega: f64) -> Result<C64> {
    let den = C64::new(
        -omega * omega + omega * p.omega_c + p.omega_0 * p.omega_0,
        -omega * p.gamma,
    );
    if den.norm() < 1e-30 {
        return Err(Error::SingularInput { omega });
    }
    Ok(den.inv())
}

/// `G(t) = (1 − e^{−γ̄t})/γ̄` for `t > 0`, zero otherwise.
pub fn green_free(p: &Params, t: f64) -> Result<C64> {
    if p.family() != Family::Free {
        return Err(Error::WrongFamily { expected: "free" });
    }
    if t <= 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    // t·phi1(−γ̄t) == (1 − e^{−γ̄t})/γ̄ without cancellation at small t
    Ok(t * phi1(-p.gamma_bar() * t))
}

/// `Ġ(t)` for the free family.
pub fn green_free_derivative(p: &Params, t: f64) -> Result<C64> {
    if p.family() != Family::Free {
        return Err(Error::WrongFamily { expected: "free" });
    }
    if t < 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(exp_decay(-p.gamma_bar() * t))
}

/// `γ± = −γ̄/2 ± √(γ̄² − 4ω₀²)/2` on the principal branch.
pub fn poles_confined(p: &Params) -> Result<ConfinedRoots> {
    if p.family() != Family::Confined {
        return Err(Error::WrongFamily {
            expected: "confined",
        });
    }
    let gb = p.gamma_bar();
    let disc = (gb * gb - 4.0 * p.omega_0 * p.omega_0).sqrt();
    let gamma_plus = 0.5 * (-gb + disc);
    // the product form avoids cancellation in the smaller root
    let big = if gamma_plus.norm() >= (0.5 * (-gb - disc)).norm() {
        gamma_plus
    } else {
        0.5 * (-gb - disc)
    };
    let small = p.omega_0 * p.omega_0 / big;
    let (gamma_plus, gamma_minus) = if big == gamma_plus {
        (big, small)
    } else {
        (small, big)
    };
    Ok(ConfinedRoots {
        gamma_plus,
        gamma_minus,
        near_degenerate: disc.norm() < NEAR_DEGENERATE_REL * gb.norm(),
    })
}

/// `G(t) = (e^{γ₊t} − e^{γ₋t})/(γ₊ − γ₋)` for `t > 0`, zero otherwise.
pub fn green_confined(p: &Params, t: f64) -> Result<C64> {
    let r = poles_confined(p)?;
    if t <= 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if r.near_degenerate {
        return Ok(t * exp_decay(-0.5 * p.gamma_bar() * t));
    }
    // e^{γ₋t}·(e^{Δt} − 1)/Δ, stable for small Δ
    Ok(t * exp_decay(r.gamma_minus * t) * phi1(r.delta() * t))
}

/// `Ġ(t) = (γ₊e^{γ₊t} − γ₋e^{γ₋t})/(γ₊ − γ₋)`.
pub fn green_confined_derivative(p: &Params, t: f64) -> Result<C64> {
    let r = poles_confined(p)?;
    if t < 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if r.near_degenerate {
        let h = 0.5 * p.gamma_bar();
        return Ok((1.0 - h * t) * exp_decay(-h * t));
    }
    // γ₊e^{γ₊t} − γ₋e^{γ₋t} = e^{γ₋t}[γ₊(e^{Δt} − 1) + Δ]
    let d = r.delta();
    let em = exp_decay(r.gamma_minus * t);
    Ok(em * (r.gamma_plus * t * phi1(d * t) + 1.0))
}

/// Green's function for either family.
pub fn green(p: &Params, t: f64) -> C64 {
    match p.family() {
        Family::Free => green_free(p, t),
        Family::Confined => green_confined(p, t),
    }
    .expect("family dispatch")
}

/// `Ġ(t)` for either family.
pub fn green_derivative(p: &Params, t: f64) -> C64 {
    match p.family() {
        Family::Free => green_free_derivative(p, t),
        Family::Confined => green_confined_derivative(p, t),
    }
    .expect("family dispatch")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityReport {
    pub omega_max: f64,
    pub n: usize,
    /// `max |G_numeric − G_closed|` over the sampled `t > 0`.
    pub max_residual: f64,
    /// `max |G_numeric|` over the sampled `t < 0`.
    pub max_acausal: f64,
    pub t_max: f64,
}

/// Numerically inverse-Fourier-transforms `α(ω)` on a truncated grid and
/// compares with the closed-form Green's function.
///
/// The grid is the midpoint rule on `[−Ω, Ω]` with `n` nodes. Known pieces
/// are transformed analytically so the grid only sees a smooth remainder
/// decaying like `ω⁻³`: the critically damped reference `−1/(ω + iκ)²`
/// with transform `t e^{−κt} θ(t)`, and for the free family the
/// zero-frequency pole `Aκ²/((ω + i0)(ω² + κ²))`.
pub fn check_causality(p: &Params, omega_max: f64, n: usize) -> CausalityReport {
    let dw = 2.0 * omega_max / n as f64;
    let kappa = p.gamma_bar().norm().max(p.omega_0);
    let reference = |w: f64| -(C64::new(w, kappa) * C64::new(w, kappa)).inv();

    let pole_weight = match p.family() {
        // A = lim ω·α(ω) = i/γ̄
        Family::Free => C64::i() / p.gamma_bar(),
        Family::Confined => C64::new(0.0, 0.0),
    };
    let pole = |w: f64| pole_weight * kappa * kappa / (w * (w * w + kappa * kappa));

    let samples: Vec<(f64, C64)> = (0..n)
        .map(|k| {
            let w = -omega_max + (k as f64 + 0.5) * dw;
            let a = response_function(p, w).expect("midpoint grid avoids omega = 0");
            (w, a - reference(w) - pole(w))
        })
        .collect();

    let g_numeric = |t: f64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(w, v) in &samples {
            acc += v * C64::from_polar(1.0, -w * t);
        }
        let mut g = acc * dw / (2.0 * PI);
        // transform of 1/(ω + i0) minus that of ω/(ω² + κ²)
        let sgn = t.signum();
        g += pole_weight * C64::i() * 0.5 * sgn * (-kappa * t.abs()).exp();
        if t > 0.0 {
            g += t * (-kappa * t).exp() - C64::i() * pole_weight;
        }
        g
    };

    let slowest = match p.family() {
        Family::Free => p.gamma,
        Family::Confined => {
            let r = poles_confined(p).unwrap();
            (-r.gamma_plus.re).min(-r.gamma_minus.re)
        }
    };
    let t_max = (4.0 / slowest).min(0.25 * PI / dw);
    let n_t = 160;
    let mut max_residual: f64 = 0.0;
    let mut max_acausal: f64 = 0.0;
    for j in 1..=n_t {
        let t = t_max * j as f64 / n_t as f64;
        max_residual = max_residual.max((g_numeric(t) - green(p, t)).norm());
        max_acausal = max_acausal.max(g_numeric(-t).norm());
    }
    CausalityReport {
        omega_max,
        n,
        max_residual,
        max_acausal,
        t_max,
    }
}
