//! `M_z(t)` for the untrapped particle.

use std::f64::consts::PI;

use crate::cmath::{exp_decay, expm1_i};
use crate::error::{Error, Result};
use crate::thermal::{integrate_thermal_with, omega_weight, QuadOptions, ThermalKernel};
use crate::units::{Family, Params};
use crate::C64;

/// Beyond this many damping times every transient has underflowed.
pub const DECAY_CAP: f64 = 700.0;

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain("t", t, "must be finite and >= 0"))
    }
}

fn check_free(p: &Params) -> Result<()> {
    match p.family() {
        Family::Free => Ok(()),
        Family::Confined => Err(Error::WrongFamily { expected: "free" }),
    }
}

/// Classical limit:
/// `T[(ω_c cos ω_c t + γ sin ω_c t)e^{−γt} − ω_c]/(γ² + ω_c²)`.
pub fn moment_high_t_free(p: &Params, t: f64) -> Result<f64> {
    check_free(p)?;
    check_time(t)?;
    let (g, wc) = (p.gamma, p.omega_c);
    if g * t > DECAY_CAP {
        return asymptote_free(p, ThermalKernel::ClassicalHighT);
    }
    let (s, c) = (wc * t).sin_cos();
    Ok(p.temperature * ((wc * c + g * s) * (-g * t).exp() - wc) / (g * g + wc * wc))
}

/// Zero-temperature limit, in units of `qħ/mc`.
pub fn moment_low_t_free(p: &Params, t: f64) -> Result<f64> {
    check_free(p)?;
    check_time(t)?;
    let (g, wc) = (p.gamma, p.omega_c);
    if g * t > DECAY_CAP {
        return asymptote_free(p, ThermalKernel::QuantumLowT);
    }
    let (s, c) = (wc * t).sin_cos();
    let e = (-g * t).exp();
    let n2 = g * g + wc * wc;
    Ok(-0.5 * (n2 + 2.0 * wc * g * e * s + (g * g - wc * wc) * e * c - 2.0 * g * g * e * e) / n2)
}

/// Long-time limit of the closed forms.
pub fn asymptote_free(p: &Params, kernel: ThermalKernel) -> Result<f64> {
    check_free(p)?;
    match kernel {
        ThermalKernel::ClassicalHighT => {
            let (g, wc) = (p.gamma, p.omega_c);
            Ok(-p.temperature * wc / (g * g + wc * wc))
        }
        ThermalKernel::QuantumLowT => Ok(-0.5),
        ThermalKernel::FullCoth => Err(Error::Unsupported(
            "no closed-form asymptote at general temperature",
        )),
    }
}

/// The bracket multiplying `ω·coth` in the free-particle moment integral.
///
/// Each of the three pieces is assembled as one expression so the
/// `O(1/ω)` pieces cancel before quadrature sees them.
pub fn free_bracket(p: &Params, t: f64, w: f64) -> C64 {
    let gb = p.gamma_bar();
    let gc = gb.conj();
    let e = exp_decay(-gb * t);
    let ec = e.conj();
    let i = C64::i();
    let fwd = C64::from_polar(1.0, -w * t);
    let back = fwd.conj();
    // 1 − e^{−iωt} − E(e^{iωt} − 1), regular over ω at the origin
    let b1 = if w == 0.0 {
        i * t * (1.0 - e) / (gc * i * gb)
    } else {
        (-expm1_i(-w * t) - e * expm1_i(w * t)) / (w * gc * (w + i * gb))
    };
    let d = (w + i * gb) * (w - i * gc);
    let b2 = (1.0 - ec * fwd - e * back + e * ec) / (gc * d);
    let b3 = e * (1.0 - ec) / (gc * d);
    b1 - b2 + b3
}

/// Residue of the `1/ω` tail of `ω·bracket` under the constant low-T weight.
fn low_t_tail(p: &Params, t: f64) -> C64 {
    let gb = p.gamma_bar();
    let e = exp_decay(-gb * t);
    2.0 * e * (1.0 - e.conj()) / gb.conj()
}

/// Moment from direct quadrature of the thermal frequency integral.
pub fn moment_general_free(p: &Params, t: f64, kernel: ThermalKernel, rel_tol: f64) -> Result<f64> {
    moment_general_free_with(p, t, kernel, &QuadOptions::with_rel_tol(rel_tol))
}

/// As [`moment_general_free`] with explicit quadrature options.
///
/// With the constant zero-temperature weight the integrand keeps an odd
/// `c/ω` tail. The symmetric window takes its principal value and the
/// contour closure adds `−iπc`. `FullCoth` at `T > 0` turns that tail
/// into `c/|ω|`, so it is only evaluated with `omega_cutoff`.
pub fn moment_general_free_with(p: &Params, t: f64, kernel: ThermalKernel, opts: &QuadOptions) -> Result<f64> {
    check_free(p)?;
    check_time(t)?;
    let kernel = kernel.resolve(p.temperature);
    if t == 0.0 {
        return Ok(0.0);
    }
    if kernel == ThermalKernel::FullCoth && opts.omega_cutoff.is_none() {
        return Err(Error::UvDivergent {
            what: "moment integral with the full coth weight",
        });
    }
    if p.gamma * t > DECAY_CAP && opts.omega_cutoff.is_none() {
        return asymptote_free(p, kernel);
    }
    let temp = p.temperature;
    // only the imaginary part is needed, and tolerances should refer to it
    let f = |w: f64| C64::new(omega_weight(kernel, temp, w) * free_bracket(p, t, w).im, 0.0);
    let scale = p.rate_scale().max(if kernel == ThermalKernel::FullCoth { temp } else { 0.0 });
    let report = integrate_thermal_with(f, scale, t, opts)?;
    let mut value = report.value.re;
    if kernel == ThermalKernel::QuantumLowT && opts.omega_cutoff.is_none() {
        // Im(−iπc)
        value -= PI * low_t_tail(p, t).re;
    }
    Ok(p.gamma / (2.0 * PI) * value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(g: f64, wc: f64) -> Params {
        Params::free(g, wc, 1.0).unwrap()
    }

    #[test]
    fn high_t_reference_values() {
        let q = p(10.0, 1.0);
        assert_eq!(moment_high_t_free(&q, 0.0).unwrap(), 0.0);
        // oracle: direct evaluation of the four-term expression
        let t: f64 = 0.3;
        let oracle = ((t.cos() + 10.0 * t.sin()) * (-10.0 * t).exp() - 1.0) / 101.0;
        let v = moment_high_t_free(&q, t).unwrap();
        assert!((v - oracle).abs() < 1e-16);
        assert!((v - -7.9733e-3).abs() < 1e-7, "{v}");
        assert!((moment_high_t_free(&q, 40.0).unwrap() + 1.0 / 101.0).abs() < 1e-15);
        assert!((asymptote_free(&q, ThermalKernel::ClassicalHighT).unwrap() + 9.901e-3).abs() < 1e-6);
    }

    #[test]
    fn no_field_no_classical_moment() {
        let q = p(3.0, 0.0);
        for k in 0..20 {
            assert_eq!(moment_high_t_free(&q, k as f64 * 0.1).unwrap(), 0.0);
        }
        assert_eq!(asymptote_free(&q, ThermalKernel::ClassicalHighT).unwrap(), 0.0);
    }

    #[test]
    fn low_t_reference_values() {
        let q = p(10.0, 1.0);
        assert!(moment_low_t_free(&q, 0.0).unwrap().abs() < 1e-15);
        // independent transcription at t = 0.2
        let (g, wc, t): (f64, f64, f64) = (10.0, 1.0, 0.2);
        let e = (-g * t).exp();
        let oracle = -0.5
            * ((g * g + wc * wc) + 2.0 * wc * g * e * (wc * t).sin() + (g * g - wc * wc) * e * (wc * t).cos()
                - 2.0 * g * g * (-2.0 * g * t).exp())
            / (g * g + wc * wc);
        assert!((moment_low_t_free(&q, t).unwrap() - oracle).abs() < 1e-15);
        assert!((moment_low_t_free(&q, 5.0).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(asymptote_free(&q, ThermalKernel::QuantumLowT).unwrap(), -0.5);
        assert!(matches!(asymptote_free(&q, ThermalKernel::FullCoth), Err(Error::Unsupported(_))));
    }

    #[test]
    fn low_t_saturates_after_twenty_damping_times() {
        for g in [10.0, 20.0, 30.0, 40.0] {
            let q = p(g, 1.0);
            for k in 0..50 {
                let t = (20.0 + k as f64) / g;
                assert!((moment_low_t_free(&q, t).unwrap() + 0.5).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn decay_cap_returns_asymptote() {
        let q = p(10.0, 1.0);
        assert_eq!(moment_high_t_free(&q, 1e4).unwrap(), -1.0 / 101.0 * 1.0);
        assert_eq!(moment_low_t_free(&q, 1e4).unwrap(), -0.5);
    }

    #[test]
    fn rejects_trap_and_negative_time() {
        let q = Params::new(10.0, 1.0, 5.0, 1.0).unwrap();
        assert!(matches!(moment_high_t_free(&q, 1.0), Err(Error::WrongFamily { .. })));
        assert!(matches!(
            moment_low_t_free(&p(1.0, 1.0), -1.0),
            Err(Error::Domain { field: "t", .. })
        ));
    }

    #[test]
    fn bracket_is_finite_at_zero_frequency_and_continuous() {
        let q = p(10.0, 1.0);
        let t = 0.3;
        let at0 = free_bracket(&q, t, 0.0);
        let near = free_bracket(&q, t, 1e-8);
        assert!(at0.norm().is_finite());
        assert!((at0 - near).norm() < 1e-6 * at0.norm().max(1e-3));
        // Richardson from either side
        let h = 1e-4;
        let rich = (4.0 * (free_bracket(&q, t, h / 2.0) + free_bracket(&q, t, -h / 2.0)) / 2.0
            - (free_bracket(&q, t, h) + free_bracket(&q, t, -h)) / 2.0)
            / 3.0;
        assert!((rich - at0).norm() < 1e-8);
    }

    #[test]
    fn classical_integrand_decays_as_inverse_square() {
        let q = p(10.0, 1.0);
        let mut w = 1e3;
        while w <= 1e5 {
            let v = 2.0 * free_bracket(&q, 0.3, w) * w * w;
            assert!(v.norm() < 50.0, "{w}: {v}");
            w *= 1.7;
        }
    }

    #[test]
    fn quadrature_matches_high_t_closed_form() {
        let q = p(10.0, 1.0);
        let v = moment_general_free(&q, 0.3, ThermalKernel::ClassicalHighT, 1e-8).unwrap();
        let c = moment_high_t_free(&q, 0.3).unwrap();
        assert!((v - c).abs() < 1e-8 * c.abs().max(1e-2), "{v} vs {c}");
        assert_eq!(moment_general_free(&q, 0.0, ThermalKernel::ClassicalHighT, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_matches_low_t_closed_form() {
        let q = p(10.0, 1.0);
        let v = moment_general_free(&q, 0.3, ThermalKernel::QuantumLowT, 1e-8).unwrap();
        let c = moment_low_t_free(&q, 0.3).unwrap();
        assert!((v - c).abs() < 1e-7, "{v} vs {c}");
    }

    #[test]
    fn full_coth_needs_cutoff_except_at_zero_temperature() {
        let q = p(10.0, 1.0);
        assert!(matches!(
            moment_general_free(&q, 0.3, ThermalKernel::FullCoth, 1e-6),
            Err(Error::UvDivergent { .. })
        ));
        let cold = Params::free(10.0, 1.0, 0.0).unwrap();
        let v = moment_general_free(&cold, 0.3, ThermalKernel::FullCoth, 1e-8).unwrap();
        assert!((v - moment_low_t_free(&cold, 0.3).unwrap()).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn closed_forms_vanish_at_origin(g in 1e-3f64..100.0, wc in -100f64..100.0, temp in 0f64..10.0) {
            let q = Params::free(g, wc, temp).unwrap();
            prop_assert!(moment_high_t_free(&q, 0.0).unwrap().abs() < 1e-10);
            prop_assert!(moment_low_t_free(&q, 0.0).unwrap().abs() < 1e-10);
        }

        #[test]
        fn high_t_is_odd_in_field(g in 1e-2f64..50.0, wc in 0f64..50.0, t in 0f64..5.0) {
            let a = moment_high_t_free(&p(g, wc), t).unwrap();
            let b = moment_high_t_free(&p(g, -wc), t).unwrap();
            prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1e-300) + 1e-300);
        }

        #[test]
        fn low_t_is_even_in_field(g in 1e-2f64..50.0, wc in 0f64..50.0, t in 0f64..5.0) {
            let a = moment_low_t_free(&p(g, wc), t).unwrap();
            let b = moment_low_t_free(&p(g, -wc), t).unwrap();
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn high_t_stays_inside_envelope(g in 1e-1f64..50.0, wc in -50f64..50.0, t in 0f64..5.0) {
            let q = p(g, wc);
            let bound = (-g * t).exp() * (wc.abs() + g) / (g * g + wc * wc) + 1e-15 / g;
            let dev = moment_high_t_free(&q, t).unwrap() - asymptote_free(&q, ThermalKernel::ClassicalHighT).unwrap();
            prop_assert!(dev.abs() <= bound * (1.0 + 1e-12));
        }
    }
}
