//! Physical parameters in natural units and regime classification.
//!
//! | quantity            | natural unit  |
//! |---------------------|---------------|
//! | rates `γ, ω_c, ω₀`   | `k_B T_ref/ħ` |
//! | temperature `T`     | `k_B T_ref`   |
//! | magnetic moment     | `qħ/mc`       |
//!
//! With `ħ = k_B = m = c = q = 1` the prefactors of the moment formulas
//! collapse: `q/2c → 1/2`, `qγħ/2cmπ → γ/2π`, `qk_BT/cm → T`.

use crate::error::{Error, Result};
use crate::C64;

/// Relative tolerance below which `γ` and `ω_c` count as equal.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub gamma: f64,
    pub omega_c: f64,
    pub omega_0: f64,
    pub temperature: f64,
}

/// Which Green's-function family a parameter set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Free,
    Confined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    DampingDominated,
    FieldDominated,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub gamma_bar: C64,
}

impl Params {
    /// Validates and bundles the parameters.
    pub fn new(gamma: f64, omega_c: f64, omega_0: f64, temperature: f64) -> Result<Self> {
        for (field, v) in [
            ("gamma", gamma),
            ("omega_c", omega_c),
            ("omega_0", omega_0),
            ("temperature", temperature),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(field, v, "must be finite"));
            }
        }
        if gamma <= 0.0 {
            return Err(Error::domain("gamma", gamma, "must be > 0"));
        }
        if omega_0 < 0.0 {
            return Err(Error::domain("omega_0", omega_0, "must be >= 0"));
        }
        if temperature < 0.0 {
            return Err(Error::domain("temperature", temperature, "must be >= 0"));
        }
        Ok(Params {
            gamma,
            omega_c,
            omega_0,
            temperature,
        })
    }

    pub fn free(gamma: f64, omega_c: f64, temperature: f64) -> Result<Self> {
        Self::new(gamma, omega_c, 0.0, temperature)
    }

    /// Complex damping `γ̄ = γ + iω_c`.
    pub fn gamma_bar(&self) -> C64 {
        C64::new(self.gamma, self.omega_c)
    }

    pub fn family(&self) -> Family {
        if self.omega_0 == 0.0 {
            Family::Free
        } else {
            Family::Confined
        }
    }

    /// Largest rate in the problem; sets frequency and time resolution.
    pub fn rate_scale(&self) -> f64 {
        self.gamma.max(self.omega_c.abs()).max(self.omega_0)
    }

    pub fn with_omega_c(self, omega_c: f64) -> Self {
        Params { omega_c, ..self }
    }

    pub fn with_omega_0(self, omega_0: f64) -> Self {
        Params { omega_0, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Params { gamma, ..self }
    }
}

/// Classifies the competition between damping and cyclotron motion.
pub fn classify_regime(p: &Params) -> Regime {
    let wc = p.omega_c.abs();
    let scale = p.gamma.max(wc);
    let kind = if (p.gamma - wc).abs() <= CRITICAL_REL_TOL * scale {
        RegimeKind::Critical
    } else if p.gamma > wc {
        RegimeKind::DampingDominated
    } else {
        RegimeKind::FieldDominated
    };
    Regime {
        kind,
        gamma_bar: p.gamma_bar(),
    }
}
