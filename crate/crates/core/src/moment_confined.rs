//! `M_z(t)` for the particle in an isotropic harmonic trap.
//!
//! All three routes are written in terms of the decay exponents `γ±`.
//! Near critical damping (`γ₊ ≈ γ₋`, only possible for `ω_c ≈ 0`) the
//! closed forms lose precision like `1/|γ₊ − γ₋|²`; there the moment is
//! reconstructed from nearby well-separated parameter sets, using that
//! it is an analytic function of `(γ₊ − γ₋)²`.

use std::f64::consts::PI;

use crate::cmath::exp_decay;
use crate::error::{Error, Result};
use crate::moment_free::{check_time, DECAY_CAP};
use crate::response::{poles_confined, ConfinedRoots};
use crate::thermal::{integrate_thermal_with, omega_weight, QuadOptions, ThermalKernel};
use crate::units::Params;
use crate::C64;

/// Below this `|γ₊ − γ₋|/|γ̄|` the degenerate reconstruction is used.
pub const SEPARATION_THRESHOLD: f64 = 1e-3;
const SHIFT: f64 = 1e-2;

/// Time-dependent quantities shared by every confined formula.
#[derive(Debug, Clone, Copy)]
struct Setup {
    p: C64,
    m: C64,
    ep: C64,
    em: C64,
    /// `(e^{γ₊*t} − e^{γ₋*t})(γ₊e^{γ₊t} − γ₋e^{γ₋t})`
    big_p: C64,
    d2: f64,
}

impl Setup {
    fn new(r: &ConfinedRoots, t: f64) -> Self {
        let (p, m) = (r.gamma_plus, r.gamma_minus);
        let ep = exp_decay(p * t);
        let em = exp_decay(m * t);
        Setup {
            p,
            m,
            ep,
            em,
            big_p: (ep.conj() - em.conj()) * (p * ep - m * em),
            d2: (p - m).norm_sqr(),
        }
    }
}

fn guarded(sum: C64, gamma_bar: f64, pair: &'static str) -> Result<C64> {
    if sum.norm() < 1e-12 * gamma_bar {
        Err(Error::NumericalDegeneracy { pair })
    } else {
        Ok(sum)
    }
}

/// The four `γ_a + γ_b*` denominators, in the order `++, −+, +−, −−`.
fn pair_sums(s: &Setup, gb: f64) -> Result<[C64; 4]> {
    Ok([
        guarded(s.p + s.p.conj(), gb, "gamma_plus + conj(gamma_plus)")?,
        guarded(s.m + s.p.conj(), gb, "gamma_minus + conj(gamma_plus)")?,
        guarded(s.p + s.m.conj(), gb, "gamma_plus + conj(gamma_minus)")?,
        guarded(s.m + s.m.conj(), gb, "gamma_minus + conj(gamma_minus)")?,
    ])
}

fn checked_roots(p: &Params, t: f64) -> Result<ConfinedRoots> {
    check_time(t)?;
    poles_confined(p)
}

fn separation(r: &ConfinedRoots, p: &Params) -> f64 {
    r.delta().norm() / p.gamma_bar().norm()
}

/// Evaluates `f` away from the double root and extrapolates back.
///
/// The moment depends on `ω₀` only through `u = (γ₊ − γ₋)² = γ̄² − 4ω₀²`
/// and is smooth in `u`. Averages over `u ± s` and `u ± 2s` cancel the
/// odd terms, and one Richardson step removes the `s²` term.
fn near_degenerate<F>(p: &Params, f: F) -> Result<f64>
where
    F: Fn(&Params) -> Result<f64>,
{
    let s = (SHIFT * p.gamma_bar().norm()).powi(2);
    let shifted = |ds: f64| -> Result<f64> {
        let w0sq = p.omega_0 * p.omega_0 - ds / 4.0;
        if w0sq <= 0.0 {
            return Err(Error::NumericalDegeneracy {
                pair: "gamma_plus - gamma_minus",
            });
        }
        f(&p.with_omega_0(w0sq.sqrt()))
    };
    let a1 = 0.5 * (shifted(s)? + shifted(-s)?);
    let a2 = 0.5 * (shifted(2.0 * s)? + shifted(-2.0 * s)?);
    Ok((4.0 * a1 - a2) / 3.0)
}

fn slowest_rate(r: &ConfinedRoots) -> f64 {
    (-r.gamma_plus.re).min(-r.gamma_minus.re)
}

/// Classical limit, summed term by term in a fixed order.
pub fn moment_high_t_confined(p: &Params, t: f64) -> Result<f64> {
    let r = checked_roots(p, t)?;
    if separation(&r, p) < SEPARATION_THRESHOLD {
        return near_degenerate(p, |q| moment_high_t_confined(q, t));
    }
    high_t_sum(&Setup::new(&r, effective_time(&r, t)), p)
}

/// Past the decay cap every exponential has flushed to zero.
fn effective_time(r: &ConfinedRoots, t: f64) -> f64 {
    if slowest_rate(r) * t > DECAY_CAP {
        1e300
    } else {
        t
    }
}

fn high_t_sum(s: &Setup, p: &Params) -> Result<f64> {
    let [pp, mp, pm, mm] = pair_sums(s, p.gamma_bar().norm())?;
    let (g_p, g_m, ep, em) = (s.p, s.m, s.ep, s.em);
    let (epc, emc) = (ep.conj(), em.conj());
    let terms = [
        g_p / pp,
        -g_p * ep * epc / pp,
        -g_m / mp,
        g_m * em * epc / mp,
        -g_p / pm,
        g_p * ep * emc / pm,
        g_m / mm,
        -g_m * em * emc / mm,
        g_p * g_p * s.big_p / ((g_p - g_m) * pp * pm),
        g_m * g_m * s.big_p / ((g_m - g_p) * mp * mm),
    ];
    let sum: C64 = terms.iter().sum();
    Ok(-2.0 * p.temperature * p.gamma / s.d2 * sum.im)
}

/// Zero-temperature limit, in units of `qħ/mc`.
///
/// The last two addends carry a `+` sign: with it the result agrees
/// with quadrature of the underlying integral and with the free-particle
/// limit as `ω₀ → 0`, both of which fail under the opposite sign.
pub fn moment_low_t_confined(p: &Params, t: f64) -> Result<f64> {
    let r = checked_roots(p, t)?;
    if separation(&r, p) < SEPARATION_THRESHOLD {
        return near_degenerate(p, |q| moment_low_t_confined(q, t));
    }
    low_t_sum(&Setup::new(&r, effective_time(&r, t)), p)
}

fn low_t_sum(s: &Setup, p: &Params) -> Result<f64> {
    let [pp, mp, pm, mm] = pair_sums(s, p.gamma_bar().norm())?;
    let (g_p, g_m, ep, em) = (s.p, s.m, s.ep, s.em);
    let (g_pc, g_mc) = (g_p.conj(), g_m.conj());
    let (epc, emc) = (ep.conj(), em.conj());
    let terms = [
        g_p * g_p / pp,
        g_p * g_pc * ep * epc / pp,
        -g_m * g_m / mp,
        -g_m * g_pc * em * epc / mp,
        -g_p * g_p / pm,
        -g_p * g_mc * ep * emc / pm,
        g_m * g_m / mm,
        g_m * g_mc * em * emc / mm,
        g_p.powi(3) * s.big_p / ((g_p - g_m) * pp * pm),
        g_m.powi(3) * s.big_p / ((g_m - g_p) * mp * mm),
    ];
    let sum: C64 = terms.iter().sum();
    Ok(-p.gamma / (2.0 * s.d2) * (2.0 * C64::i() * sum).im)
}

/// `ω·coth`-free part of the confined moment integrand.
///
/// The first piece is the velocity-variance term times its time factor,
/// the second the product of the two response brackets. Both brackets are
/// entire in `ω`, so the only structure left is the Lorentzian-like
/// denominator.
fn confined_bracket(s: &Setup, params: &Params, t: f64, w: f64) -> C64 {
    let (g, wc, w0) = (params.gamma, params.omega_c, params.omega_0);
    let i = C64::i();
    let re = w * w - w0 * w0 - w * wc;
    let den = re * re + (w * g) * (w * g);
    let fwd = C64::from_polar(1.0, -w * t);
    let back = fwd.conj();
    let (p, m) = (s.p, s.m);
    let (pc, mc) = (p.conj(), m.conj());
    let l = back / (w + i * pc) - back / (w + i * mc) - s.ep.conj() / (w + i * pc) + s.em.conj() / (w + i * mc);
    let r = p * fwd / (w - i * p) - m * fwd / (w - i * m) - p * s.ep / (w - i * p) + m * s.em / (w - i * m);
    let first = if den == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        w * w * g * s.big_p / (PI * s.d2 * den)
    };
    first + g / PI * l * r / s.d2
}

/// Moment from direct quadrature of the thermal frequency integral.
pub fn moment_general_confined(p: &Params, t: f64, kernel: ThermalKernel, rel_tol: f64) -> Result<f64> {
    moment_general_confined_with(p, t, kernel, &QuadOptions::with_rel_tol(rel_tol))
}

/// As [`moment_general_confined`] with explicit quadrature options.
///
/// Under the constant zero-temperature weight both pieces leave an odd
/// `c/ω` tail with combined `c = 2γP/(π|γ₊ − γ₋|²)`. It is taken as a
/// principal value plus the `−iπc` closure term, so no cutoff is needed.
/// `FullCoth` turns it into `c/|ω|` and requires `omega_cutoff`; the
/// result then depends on the cutoff logarithmically.
pub fn moment_general_confined_with(p: &Params, t: f64, kernel: ThermalKernel, opts: &QuadOptions) -> Result<f64> {
    let r = checked_roots(p, t)?;
    let kernel = kernel.resolve(p.temperature);
    if t == 0.0 {
        return Ok(0.0);
    }
    if kernel == ThermalKernel::FullCoth && opts.omega_cutoff.is_none() {
        return Err(Error::UvDivergent {
            what: "moment integral with the full coth weight",
        });
    }
    if separation(&r, p) < SEPARATION_THRESHOLD {
        return near_degenerate(p, |q| moment_general_confined_with(q, t, kernel, opts));
    }
    if slowest_rate(&r) * t > DECAY_CAP && opts.omega_cutoff.is_none() {
        return match kernel {
            ThermalKernel::ClassicalHighT => moment_high_t_confined(p, t),
            _ => moment_low_t_confined(p, t),
        };
    }
    let s = Setup::new(&r, t);
    let temp = p.temperature;
    let f = |w: f64| C64::new(omega_weight(kernel, temp, w) * confined_bracket(&s, p, t, w).im, 0.0);
    let scale = p
        .gamma_bar()
        .norm()
        .max(p.omega_0)
        .max(if kernel == ThermalKernel::FullCoth { temp } else { 0.0 });
    let report = integrate_thermal_with(f, scale, t, opts)?;
    let mut value = report.value.re;
    if kernel == ThermalKernel::QuantumLowT && opts.omega_cutoff.is_none() {
        let c = 2.0 * p.gamma * s.big_p / (PI * s.d2);
        value -= PI * c.re;
    }
    Ok(0.5 * value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment_free::{moment_high_t_free, moment_low_t_free};
    use proptest::prelude::*;

    fn trap(g: f64, wc: f64, w0: f64) -> Params {
        Params::new(g, wc, w0, 1.0).unwrap()
    }

    #[test]
    fn vanish_at_origin() {
        for q in [trap(10.0, 1.0, 5.0), trap(0.5, 25.0, 5.0), trap(2.0, 0.0, 1.0)] {
            assert!(moment_high_t_confined(&q, 0.0).unwrap().abs() < 1e-12);
            assert!(moment_low_t_confined(&q, 0.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn high_t_reference_value() {
        // frozen from quadrature of the classical integrand
        let v = moment_high_t_confined(&trap(10.0, 1.0, 5.0), 0.3).unwrap();
        assert!((v - -0.0044612).abs() < 5e-7, "{v}");
    }

    #[test]
    fn low_t_reference_value() {
        // frozen from an independent quadrature with the contour closure
        // term, extrapolated in the cutoff
        let v = moment_low_t_confined(&trap(10.0, 1.0, 5.0), 0.3).unwrap();
        assert!((v - -0.400649).abs() < 2e-6, "{v}");
    }

    #[test]
    fn long_time_limits() {
        let v = moment_high_t_confined(&trap(40.0, 1.0, 5.0), 1e3).unwrap();
        assert!(v.abs() < 1e-6, "{v}");
        for g in [10.0, 20.0, 30.0, 40.0] {
            let v = moment_low_t_confined(&trap(g, 1.0, 5.0), 20.0 / g * 5.0).unwrap();
            assert!((v + 0.5).abs() < 1e-3, "{g}: {v}");
        }
        assert!((moment_low_t_confined(&trap(10.0, 1.0, 5.0), 1e5).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn weak_trap_recovers_free_particle() {
        let free = Params::free(10.0, 1.0, 1.0).unwrap();
        let weak = free.with_omega_0(1e-4);
        for k in 0..=40 {
            let t = 2.0 * k as f64 / 40.0;
            let dh = moment_high_t_confined(&weak, t).unwrap() - moment_high_t_free(&free, t).unwrap();
            let dl = moment_low_t_confined(&weak, t).unwrap() - moment_low_t_free(&free, t).unwrap();
            assert!(dh.abs() < 1e-4 && dl.abs() < 1e-4, "t={t}: {dh} {dl}");
        }
    }

    #[test]
    fn trap_suppresses_classical_moment() {
        let free = Params::free(10.0, 1.0, 1.0).unwrap();
        let c = moment_high_t_confined(&free.with_omega_0(5.0), 1.0).unwrap();
        let f = moment_high_t_free(&free, 1.0).unwrap();
        assert!(c.abs() < f.abs(), "{c} vs {f}");
    }

    #[test]
    fn field_dominated_oscillation_is_damped() {
        let q = trap(0.5, 25.0, 5.0);
        for f in [moment_high_t_confined, moment_low_t_confined] {
            let vals: Vec<f64> = (0..=4000).map(|k| f(&q, k as f64 * 0.0025).unwrap()).collect();
            let extrema: Vec<f64> = (1..vals.len() - 1)
                .filter(|&k| (vals[k] - vals[k - 1]) * (vals[k + 1] - vals[k]) < 0.0)
                .map(|k| vals[k])
                .collect();
            assert!(extrema.len() > 10);
            // the swing between neighbouring extrema shrinks; the two roots
            // beat slightly, so compare swings a full period apart
            let swings: Vec<f64> = extrema.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            for k in 2..swings.len() {
                assert!(swings[k] < swings[k - 2], "{k}: {swings:?}");
            }
        }
    }

    #[test]
    fn critical_damping_is_continuous() {
        let t = 0.8;
        let crit = trap(2.0, 0.0, 1.0);
        for f in [moment_high_t_confined, moment_low_t_confined] {
            let at = f(&crit, t).unwrap();
            let lo = f(&crit.with_omega_0(1.0 - 1e-3), t).unwrap();
            let hi = f(&crit.with_omega_0(1.0 + 1e-3), t).unwrap();
            assert!(at.is_finite());
            assert!((at - 0.5 * (lo + hi)).abs() < 1e-5, "{at} {lo} {hi}");
        }
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let q = trap(10.0, 1.0, 5.0);
        let h = moment_general_confined(&q, 0.3, ThermalKernel::ClassicalHighT, 1e-8).unwrap();
        assert!((h - moment_high_t_confined(&q, 0.3).unwrap()).abs() < 1e-9, "{h}");
        let l = moment_general_confined(&q, 0.3, ThermalKernel::QuantumLowT, 1e-8).unwrap();
        assert!((l - moment_low_t_confined(&q, 0.3).unwrap()).abs() < 1e-7, "{l}");
        assert_eq!(moment_general_confined(&q, 0.0, ThermalKernel::QuantumLowT, 1e-8).unwrap(), 0.0);
        assert!(matches!(
            moment_general_confined(&q, 0.3, ThermalKernel::FullCoth, 1e-8),
            Err(Error::UvDivergent { .. })
        ));
    }

    proptest! {
        #[test]
        fn invariant_under_root_swap(g in 0.1f64..50.0, wc in -50f64..50.0, w0 in 0.1f64..20.0, t in 0f64..3.0) {
            let q = trap(g, wc, w0);
            let r = poles_confined(&q).unwrap();
            prop_assume!(separation(&r, &q) > 1e-2);
            let (a, b) = (Setup::new(&r, t), Setup::new(&r.swapped(), t));
            let (x, y) = (high_t_sum(&a, &q).unwrap(), high_t_sum(&b, &q).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3), "{} vs {}", x, y);
            let (x, y) = (low_t_sum(&a, &q).unwrap(), low_t_sum(&b, &q).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3), "{} vs {}", x, y);
        }

        #[test]
        fn high_t_is_odd_in_field(g in 0.1f64..50.0, wc in 0f64..50.0, w0 in 0.1f64..20.0, t in 0f64..3.0) {
            let a = moment_high_t_confined(&trap(g, wc, w0), t).unwrap();
            let b = moment_high_t_confined(&trap(g, -wc, w0), t).unwrap();
            prop_assert!((a + b).abs() <= 1e-10);
        }

        #[test]
        fn low_t_is_even_in_field(g in 0.1f64..50.0, wc in 0f64..50.0, w0 in 0.1f64..20.0, t in 0f64..3.0) {
            let a = moment_low_t_confined(&trap(g, wc, w0), t).unwrap();
            let b = moment_low_t_confined(&trap(g, -wc, w0), t).unwrap();
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
