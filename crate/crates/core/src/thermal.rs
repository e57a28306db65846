//! Thermal weights and the symmetric-domain frequency quadrature used by
//! every `M_z` and velocity-variance integral.
//!
//! Integration uses an adaptive 21-point Gauss–Kronrod rule on panels of
//! `[−Ω, Ω]` whose width resolves `e^{±iωt}`. The window is closed by a
//! smooth taper over `Ω ≤ |ω| ≤ 2Ω`, which suppresses the truncation error
//! of oscillating tails. The remaining non-oscillatory `1/Ω` tail is removed
//! by Richardson extrapolation over `Ω, 2Ω, 4Ω, …`, and the change between
//! successive extrapolants is the reported tail error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::units::{Family, Params};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThermalKernel {
    /// `coth(ω/2T)`.
    FullCoth,
    /// `2T/ω`.
    ClassicalHighT,
    /// The zero-temperature weight, taken as the constant 1.
    QuantumLowT,
}

impl ThermalKernel {
    /// `FullCoth` at `T = 0` is the zero-temperature limit.
    pub fn resolve(self, temperature: f64) -> Self {
        match self {
            ThermalKernel::FullCoth if temperature == 0.0 => ThermalKernel::QuantumLowT,
            k => k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ThermalKernel::FullCoth => "full-coth",
            ThermalKernel::ClassicalHighT => "high-t",
            ThermalKernel::QuantumLowT => "low-t",
        }
    }
}

impl std::str::FromStr for ThermalKernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "full-coth" | "fullcoth" | "coth" => Ok(ThermalKernel::FullCoth),
            "high-t" | "hight" | "classical" | "classicalhight" => Ok(ThermalKernel::ClassicalHighT),
            "low-t" | "lowt" | "quantum" | "quantumlowt" => Ok(ThermalKernel::QuantumLowT),
            other => Err(format!("unknown kernel `{other}` (expected full-coth, high-t or low-t)")),
        }
    }
}

/// Thermal weight at frequency `omega`.
pub fn eval_coth(kernel: ThermalKernel, temperature: f64, omega: f64) -> Result<f64> {
    match kernel {
        ThermalKernel::FullCoth => {
            if temperature.is_nan() || temperature <= 0.0 {
                return Err(Error::domain("temperature", temperature, "full coth kernel needs T > 0"));
            }
            let x = omega / (2.0 * temperature);
            let ax = x.abs();
            Ok(if ax < 1e-2 {
                let t = temperature;
                2.0 * t / omega + omega / (6.0 * t) - omega.powi(3) / (360.0 * t.powi(3))
            } else if ax > 20.0 {
                x.signum()
            } else {
                1.0 / x.tanh()
            })
        }
        ThermalKernel::ClassicalHighT => Ok(2.0 * temperature / omega),
        ThermalKernel::QuantumLowT => Ok(1.0),
    }
}

/// `ω·coth(ω/2T)` and its limits, regular at `ω = 0`.
pub fn omega_weight(kernel: ThermalKernel, temperature: f64, omega: f64) -> f64 {
    match kernel.resolve(temperature) {
        ThermalKernel::FullCoth => {
            let x = omega / (2.0 * temperature);
            if x.abs() < 1e-2 {
                2.0 * temperature * (1.0 + x * x / 3.0 - x.powi(4) / 45.0)
            } else if x.abs() > 20.0 {
                omega.abs()
            } else {
                omega / x.tanh()
            }
        }
        ThermalKernel::ClassicalHighT => 2.0 * temperature,
        ThermalKernel::QuantumLowT => omega,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub value: C64,
    /// Quadrature error plus the truncation-tail estimate.
    pub abs_error_estimate: f64,
    /// Half-width of the outermost window actually integrated.
    pub omega_truncation: f64,
    pub n_evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integrate the plain window `[−Λ, Λ]` with no tail extrapolation.
    pub omega_cutoff: Option<f64>,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            omega_cutoff: None,
            max_evals: 200_000_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Default::default()
        }
    }
}

// Kronrod 21-point nodes and weights with the embedded 10-point Gauss rule.
#[allow(clippy::excessive_precision)]
pub(crate) const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
pub(crate) const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980640153,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: C64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk21<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = C64::new(0.0, 0.0);
    let mut abs_dev = WGK[10] * 0.0;
    let mut fs = [C64::new(0.0, 0.0); 21];
    fs[20] = fc;
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fs[2 * j] = f1;
        fs[2 * j + 1] = f2;
        kron += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    // QUADPACK-style rescaling of the Kronrod–Gauss difference
    let mean = kron * 0.5;
    abs_dev += WGK[10] * (fc - mean).norm();
    for j in 0..10 {
        abs_dev += WGK[j] * ((fs[2 * j] - mean).norm() + (fs[2 * j + 1] - mean).norm());
    }
    let abs_dev = abs_dev * h.abs();
    let mut err = ((kron - gauss) * h).norm();
    if abs_dev != 0.0 && err != 0.0 {
        err = abs_dev * (200.0 * err / abs_dev).powf(1.5).min(1.0);
    }
    let value = kron * h;
    let round = 50.0 * f64::EPSILON * value.norm();
    Panel {
        a,
        b,
        value,
        err: err.max(round),
    }
}

struct Window {
    value: C64,
    err: f64,
    evals: usize,
}

/// Panels of width at most `width` covering `[lo, hi]` and its mirror image.
fn mirrored_panels(lo: f64, hi: f64, width: f64) -> Vec<(f64, f64)> {
    let n = ((hi - lo) / width).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        let a = lo + k as f64 * h;
        let b = if k + 1 == n { hi } else { a + h };
        out.push((-b, -a));
        out.push((a, b));
    }
    out
}

fn adaptive<F>(f: &F, edges: &[(f64, f64)], target: f64, budget: usize) -> Result<Window>
where
    F: Fn(f64) -> C64 + Sync,
{
    let initial: Vec<Panel> = edges.par_iter().map(|&(a, b)| gk21(f, a, b)).collect();
    let mut evals = 21 * initial.len();
    if evals > budget {
        return Err(Error::ConvergenceFailure {
            estimate: initial.iter().map(|p| p.value).sum(),
            achieved: f64::INFINITY,
            requested: target,
        });
    }
    let mut err: f64 = initial.iter().map(|p| p.err).sum();
    let mut heap: BinaryHeap<Panel> = initial.into_iter().collect();
    while err > target {
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if evals + 42 > budget || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let mut all: Vec<Panel> = heap.into_vec();
            all.sort_by(|x, y| x.a.total_cmp(&y.a));
            return Err(Error::ConvergenceFailure {
                estimate: all.iter().map(|p| p.value).sum(),
                achieved: err,
                requested: target,
            });
        }
        let l = gk21(f, worst.a, mid);
        let r = gk21(f, mid, worst.b);
        evals += 42;
        err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        if heap.len().is_multiple_of(4096) {
            // refresh the running sum against drift
            err = heap.iter().map(|p| p.err).sum();
        }
    }
    let mut all: Vec<Panel> = heap.into_vec();
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(Window {
        value: all.iter().map(|p| p.value).sum(),
        err: all.iter().map(|p| p.err).sum(),
        evals,
    })
}

/// `∫ f(ω) dω` over the real line at the default options.
pub fn integrate_thermal<F>(f: F, omega_scale: f64, t: f64, rel_tol: f64) -> Result<QuadratureReport>
where
    F: Fn(f64) -> C64 + Sync,
{
    integrate_thermal_with(f, omega_scale, t, &QuadOptions::with_rel_tol(rel_tol))
}

/// `∫ f(ω) dω` over the real line, or over `[−Λ, Λ]` if a cutoff is given.
///
/// `omega_scale` is the largest rate in the integrand and `t` the largest
/// time appearing in its oscillating factors. Odd `1/ω` tails are treated
/// as principal values by construction, since every window is symmetric.
pub fn integrate_thermal_with<F>(
    f: F,
    omega_scale: f64,
    t: f64,
    opts: &QuadOptions,
) -> Result<QuadratureReport>
where
    F: Fn(f64) -> C64 + Sync,
{
    if opts.rel_tol.is_nan() || opts.rel_tol <= 0.0 {
        return Err(Error::domain("rel_tol", opts.rel_tol, "must be positive"));
    }
    let t = t.abs();
    let width = PI / (4.0 * t.max(1.0));

    if let Some(cut) = opts.omega_cutoff {
        if !(cut > 0.0 && cut.is_finite()) {
            return Err(Error::domain("omega_cutoff", cut, "must be positive and finite"));
        }
        return refine_to_tolerance(&f, &mirrored_panels(0.0, cut, width), opts, cut);
    }

    // at least 20 oscillation periods fit in the first taper
    let mut omega = (50.0 * omega_scale).max(100.0);
    if t > 0.0 {
        omega = omega.max(40.0 * PI / t);
    }

    let mut evals = 0usize;
    let budget = |used: usize| QuadOptions {
        max_evals: opts.max_evals.saturating_sub(used),
        ..*opts
    };
    let core = refine_to_tolerance(&f, &mirrored_panels(0.0, omega, width), &budget(evals), omega)?;
    evals += core.n_evals;
    let mut plain = core.value;
    let mut quad_err = core.abs_error_estimate;
    let mut levels: Vec<C64> = Vec::new();
    let max_levels = 8;
    loop {
        let taper = refine_to_tolerance_scaled(
            &|w: f64| f(w) * taper_weight(w.abs() / omega - 1.0),
            &mirrored_panels(omega, 2.0 * omega, width),
            &budget(evals),
            2.0 * omega,
            plain.norm(),
        )
        .map_err(|e| with_offset(e, plain))?;
        evals += taper.n_evals;
        quad_err += taper.abs_error_estimate;
        levels.push(plain + taper.value);

        let n = levels.len();
        if n >= 3 {
            let r_new = 2.0 * levels[n - 1] - levels[n - 2];
            let r_old = 2.0 * levels[n - 2] - levels[n - 3];
            let tail_err = (r_new - r_old).norm();
            let tol = opts.abs_tol.max(opts.rel_tol * r_new.norm());
            if tail_err + quad_err <= tol {
                return Ok(QuadratureReport {
                    value: r_new,
                    abs_error_estimate: tail_err + quad_err,
                    omega_truncation: 2.0 * omega,
                    n_evals: evals,
                });
            }
            if n >= max_levels {
                return Err(Error::ConvergenceFailure {
                    estimate: r_new,
                    achieved: tail_err + quad_err,
                    requested: tol,
                });
            }
        }

        let ring = refine_to_tolerance_scaled(
            &f,
            &mirrored_panels(omega, 2.0 * omega, width),
            &budget(evals),
            2.0 * omega,
            plain.norm(),
        )
        .map_err(|e| with_offset(e, plain))?;
        evals += ring.n_evals;
        plain += ring.value;
        quad_err += ring.abs_error_estimate;
        omega *= 2.0;
    }
}

/// Smooth step from 1 at `x ≤ 0` to 0 at `x ≥ 1`, flat to all orders at
/// both ends, so truncating an oscillating tail with it leaves an error
/// that decays faster than any power of the number of periods covered.
fn taper_weight(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / (1.0 - x)).exp();
    let b = (-1.0 / x).exp();
    a / (a + b)
}

fn with_offset(e: Error, offset: C64) -> Error {
    match e {
        Error::ConvergenceFailure {
            estimate,
            achieved,
            requested,
        } => Error::ConvergenceFailure {
            estimate: estimate + offset,
            achieved,
            requested,
        },
        other => other,
    }
}

fn refine_to_tolerance<F>(
    f: &F,
    edges: &[(f64, f64)],
    opts: &QuadOptions,
    omega: f64,
) -> Result<QuadratureReport>
where
    F: Fn(f64) -> C64 + Sync,
{
    refine_to_tolerance_scaled(f, edges, opts, omega, 0.0)
}

/// Adapts one window until its error is a quarter of the tolerance set by
/// the larger of its own magnitude and `reference`.
fn refine_to_tolerance_scaled<F>(
    f: &F,
    edges: &[(f64, f64)],
    opts: &QuadOptions,
    omega: f64,
    reference: f64,
) -> Result<QuadratureReport>
where
    F: Fn(f64) -> C64 + Sync,
{
    // a first pass fixes the magnitude the relative tolerance refers to
    let coarse = adaptive(f, edges, f64::INFINITY, opts.max_evals)?;
    let scale = coarse.value.norm().max(reference);
    let target = 0.25 * opts.abs_tol.max(opts.rel_tol * scale);
    let w = if coarse.err <= target {
        coarse
    } else {
        adaptive(f, edges, target, opts.max_evals)?
    };
    Ok(QuadratureReport {
        value: w.value,
        abs_error_estimate: w.err,
        omega_truncation: omega,
        n_evals: w.evals,
    })
}

fn velocity_omega_scale(p: &Params) -> f64 {
    p.rate_scale().max(p.temperature)
}

/// `⟨|v(0)|²⟩` of the free particle in the bath-equilibrated state.
///
/// The zero-temperature integrand falls off only as `1/|ω|`, so
/// `QuantumLowT` and `FullCoth` need an explicit cutoff; see
/// [`initial_velocity_ms_with_cutoff`].
pub fn initial_velocity_ms_free(p: &Params, kernel: ThermalKernel) -> Result<f64> {
    if p.family() != Family::Free {
        return Err(Error::WrongFamily { expected: "free" });
    }
    velocity_ms(p, kernel, None)
}

/// `⟨|v(0)|²⟩` of the trapped particle; same caveats as the free case.
pub fn initial_velocity_ms_confined(p: &Params, kernel: ThermalKernel) -> Result<f64> {
    if p.family() != Family::Confined {
        return Err(Error::WrongFamily {
            expected: "confined",
        });
    }
    velocity_ms(p, kernel, None)
}

/// Either family, integrated over `[−Λ, Λ]`. At zero temperature the
/// weight is `|ω|` and the result grows like `(2γ/π)·ln Λ`.
pub fn initial_velocity_ms_with_cutoff(p: &Params, kernel: ThermalKernel, omega_cutoff: f64) -> Result<f64> {
    velocity_ms(p, kernel, Some(omega_cutoff))
}

fn velocity_ms(p: &Params, kernel: ThermalKernel, cutoff: Option<f64>) -> Result<f64> {
    let kernel = kernel.resolve(p.temperature);
    if cutoff.is_none() && kernel != ThermalKernel::ClassicalHighT {
        return Err(Error::UvDivergent {
            what: "initial velocity variance (weight decays as 1/|omega|)",
        });
    }
    let (g, wc, w0, temp) = (p.gamma, p.omega_c, p.omega_0, p.temperature);
    // the physical zero-temperature variance carries |ω|, not the constant
    // weight the moment integrals use
    let weight = |w: f64| match kernel {
        ThermalKernel::QuantumLowT => w.abs(),
        k => omega_weight(k, temp, w),
    };
    // |α(ω)|⁻¹-type denominator, shared by both families
    let integrand = |w: f64| -> C64 {
        let re = w * w - w0 * w0 - w * wc;
        let den = re * re + (w * g) * (w * g);
        let value = match p.family() {
            Family::Free => g / (g * g + (w - wc) * (w - wc)),
            Family::Confined => {
                if den == 0.0 {
                    0.0
                } else {
                    w * w * g / den
                }
            }
        };
        C64::new(weight(w) * value / PI, 0.0)
    };
    // the sign-symmetric part is all that survives after ±ω folding
    let folded = |w: f64| 0.5 * (integrand(w) + integrand(-w));
    let opts = QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-14,
        omega_cutoff: cutoff,
        ..Default::default()
    };
    Ok(integrate_thermal_with(folded, velocity_omega_scale(p), 0.0, &opts)?.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coth_reference_values() {
        let k = ThermalKernel::FullCoth;
        let c1 = (1f64.exp().powi(2) + 1.0) / (1f64.exp().powi(2) - 1.0);
        assert!((eval_coth(k, 1.0, 2.0).unwrap() - c1).abs() < 1e-15);
        assert!((eval_coth(k, 1.0, 2.0).unwrap() - 1.3130352854993312).abs() < 1e-15);
        assert_eq!(eval_coth(k, 1.0, 50.0).unwrap(), 1.0);
        assert_eq!(eval_coth(k, 1.0, -50.0).unwrap(), -1.0);
        let w = 1e-6;
        assert!((eval_coth(k, 1.0, w).unwrap() * w - 2.0).abs() < 1e-12);
        assert!(matches!(eval_coth(k, 0.0, 1.0), Err(Error::Domain { field: "temperature", .. })));
    }

    #[test]
    fn coth_branches_join_smoothly() {
        let k = ThermalKernel::FullCoth;
        for &w in &[0.02, 40.0] {
            let lo = eval_coth(k, 1.0, w * (1.0 - 1e-12)).unwrap();
            let hi = eval_coth(k, 1.0, w * (1.0 + 1e-12)).unwrap();
            assert!((lo - hi).abs() < 1e-10 * lo.abs(), "{w}: {lo} {hi}");
        }
    }

    #[test]
    fn omega_weight_is_regular_and_matches_kernel() {
        for k in [ThermalKernel::FullCoth, ThermalKernel::ClassicalHighT, ThermalKernel::QuantumLowT] {
            for &w in &[-30.0, -1.0, 0.3, 7.0] {
                let direct = w * eval_coth(k, 1.5, w).unwrap();
                assert!((omega_weight(k, 1.5, w) - direct).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
        assert_eq!(omega_weight(ThermalKernel::FullCoth, 1.0, 0.0), 2.0);
        assert_eq!(ThermalKernel::FullCoth.resolve(0.0), ThermalKernel::QuantumLowT);
    }

    #[test]
    fn lorentzian_integrates_to_pi() {
        let r = integrate_thermal(|w| C64::new(1.0 / (1.0 + w * w), 0.0), 1.0, 0.0, 1e-8).unwrap();
        assert!((r.value.re - PI).abs() < 1e-8 * PI, "{r:?}");
        assert!(r.abs_error_estimate >= 0.0);
    }

    #[test]
    fn fourier_transform_of_lorentzian() {
        let t = 1.0;
        let f = |w: f64| C64::from_polar(1.0, -w * t) / (1.0 + w * w);
        let r = integrate_thermal(f, 1.0, t, 1e-8).unwrap();
        let exact = PI / 1f64.exp();
        assert!((r.value - exact).norm() < 1e-8 * exact, "{r:?}");
    }

    #[test]
    fn odd_integrand_vanishes_by_symmetry() {
        let f = |w: f64| C64::new(w / (1.0 + w.powi(4)), w.powi(3) * (-w * w).exp());
        let r = integrate_thermal(f, 1.0, 0.0, 1e-8).unwrap();
        assert!(r.value.norm() < 1e-12, "{r:?}");
    }

    #[test]
    fn principal_value_of_odd_tail() {
        // the only pole is at ω = i, so closing below gives 0 for t > 0
        let t = 2.0;
        let f = |w: f64| C64::from_polar(1.0, -w * t) / C64::new(w, -1.0);
        let opts = QuadOptions {
            abs_tol: 1e-9,
            ..QuadOptions::with_rel_tol(1e-7)
        };
        let r = integrate_thermal_with(f, 1.0, t, &opts).unwrap();
        assert!(r.value.norm() < 1e-6, "{r:?}");
    }

    #[test]
    fn reported_error_tracks_requested_tolerance() {
        let f = |w: f64| C64::from_polar(1.0, -w * 0.7) / (2.0 + w * w).powf(1.5);
        let a = integrate_thermal(f, 2.0, 0.7, 1e-6).unwrap();
        let b = integrate_thermal(f, 2.0, 0.7, 5e-7).unwrap();
        assert!(a.abs_error_estimate <= 1e-6 * a.value.norm());
        assert!(b.abs_error_estimate <= 5e-7 * b.value.norm());
        assert!((a.value - b.value).norm() <= 1e-6 * a.value.norm());
    }

    #[test]
    fn cutoff_window_is_plain_truncation() {
        let opts = QuadOptions {
            omega_cutoff: Some(10.0),
            ..QuadOptions::with_rel_tol(1e-10)
        };
        let r = integrate_thermal_with(|w| C64::new(1.0 / (1.0 + w * w), 0.0), 1.0, 0.0, &opts).unwrap();
        assert!((r.value.re - 2.0 * 10f64.atan()).abs() < 1e-9);
        assert_eq!(r.omega_truncation, 10.0);
    }

    #[test]
    fn evaluation_budget_is_enforced() {
        let opts = QuadOptions {
            max_evals: 1000,
            ..QuadOptions::with_rel_tol(1e-8)
        };
        let r = integrate_thermal_with(|w| C64::new(1.0 / (1.0 + w * w), 0.0), 1.0, 0.0, &opts);
        assert!(matches!(r, Err(Error::ConvergenceFailure { .. })));
    }

    #[test]
    fn classical_velocity_variance_is_equipartition() {
        let p = Params::free(10.0, 0.0, 1.0).unwrap();
        let v0 = initial_velocity_ms_free(&p, ThermalKernel::ClassicalHighT).unwrap();
        assert!((v0 - 2.0).abs() < 1e-8, "{v0}");
        let v1 = initial_velocity_ms_free(&p.with_omega_c(1.0), ThermalKernel::ClassicalHighT).unwrap();
        assert!((v1 - v0).abs() < 1e-8, "{v0} {v1}");
    }

    #[test]
    fn classical_velocity_variance_in_trap() {
        let p = Params::new(10.0, 0.0, 5.0, 1.0).unwrap();
        let v0 = initial_velocity_ms_confined(&p, ThermalKernel::ClassicalHighT).unwrap();
        assert!((v0 - 2.0).abs() < 1e-8, "{v0}");
        let v1 = initial_velocity_ms_confined(&p.with_omega_c(3.0), ThermalKernel::ClassicalHighT).unwrap();
        assert!((v1 - v0).abs() < 1e-8, "{v0} {v1}");
    }

    #[test]
    fn quantum_velocity_variance_needs_cutoff() {
        let p = Params::free(10.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            initial_velocity_ms_free(&p, ThermalKernel::QuantumLowT),
            Err(Error::UvDivergent { .. })
        ));
        let q = Params::new(10.0, 1.0, 5.0, 1.0).unwrap();
        assert!(matches!(
            initial_velocity_ms_confined(&q, ThermalKernel::FullCoth),
            Err(Error::UvDivergent { .. })
        ));
        // logarithmic growth with the cutoff: slope 2γ/π per e-fold
        let a = initial_velocity_ms_with_cutoff(&p, ThermalKernel::QuantumLowT, 1e4).unwrap();
        let b = initial_velocity_ms_with_cutoff(&p, ThermalKernel::QuantumLowT, 1e4 * 1f64.exp()).unwrap();
        assert!(((b - a) - 20.0 / PI).abs() < 1e-2, "{}", b - a);
    }
}
