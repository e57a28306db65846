//! Small complex-arithmetic helpers that avoid cancellation.

use crate::C64;

/// `(e^z - 1) / z`, accurate for small `|z|`.
pub fn phi1(z: C64) -> C64 {
    if z.norm() < 0.1 {
        // Horner on sum_k z^k / (k+1)!
        let mut acc = C64::new(1.0 / 479_001_600.0, 0.0); // 1/12!
        let mut fact = 479_001_600.0;
        for k in (1..=11).rev() {
            fact /= (k + 1) as f64;
            acc = acc * z + 1.0 / fact;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `e^{iθ} - 1` without cancellation near `θ = 0`.
pub fn expm1_i(theta: f64) -> C64 {
    let s = (0.5 * theta).sin();
    C64::new(-2.0 * s * s, theta.sin())
}

/// `e^z` with the real part clamped from below so that far-decayed
/// exponentials flush to exactly zero instead of producing denormals.
pub fn exp_decay(z: C64) -> C64 {
    if z.re < -700.0 {
        C64::new(0.0, 0.0)
    } else {
        z.exp()
    }
}
