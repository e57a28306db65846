//! Time series of moments as produced by every evaluation route.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::Result;
use crate::mc::{estimate_moment, McConfig};
use crate::thermal::{QuadOptions, ThermalKernel};
use crate::units::{Family, Params};
use crate::{moment_confined as confined, moment_free as free};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    GeneralQuadrature,
    HighTClosed,
    LowTClosed,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GeneralQuadrature => "quadrature",
            Method::HighTClosed => "high-t-closed",
            Method::LowTClosed => "low-t-closed",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "quadrature" | "general" | "generalquadrature" => Ok(Method::GeneralQuadrature),
            "high-t-closed" | "high-t" | "hightclosed" => Ok(Method::HighTClosed),
            "low-t-closed" | "low-t" | "lowtclosed" => Ok(Method::LowTClosed),
            "monte-carlo" | "mc" | "montecarlo" => Ok(Method::MonteCarlo),
            other => Err(format!(
                "unknown method `{other}` (expected quadrature, high-t-closed, low-t-closed or monte-carlo)"
            )),
        }
    }
}

/// `M_z` sampled on a time grid. Times are in natural units.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub method: Method,
    /// Standard errors, Monte-Carlo only.
    pub stderr: Option<Vec<f64>>,
}

impl MomentSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, method: Method) -> Self {
        assert_eq!(times.len(), values.len(), "times and values differ in length");
        MomentSeries {
            times,
            values,
            method,
            stderr: None,
        }
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>) -> Self {
        assert_eq!(stderr.len(), self.times.len(), "stderr length mismatch");
        self.stderr = Some(stderr);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `n` equally spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|k| if k + 1 == n { stop } else { start + k as f64 * h })
                .collect()
        }
    }
}

/// `M_z` at a single time by a non-stochastic method. The kernel only
/// matters for quadrature.
pub fn moment_at(p: &Params, t: f64, method: Method, kernel: ThermalKernel, opts: &QuadOptions) -> Result<f64> {
    match (p.family(), method) {
        (Family::Free, Method::HighTClosed) => free::moment_high_t_free(p, t),
        (Family::Free, Method::LowTClosed) => free::moment_low_t_free(p, t),
        (Family::Free, _) => free::moment_general_free_with(p, t, kernel, opts),
        (Family::Confined, Method::HighTClosed) => confined::moment_high_t_confined(p, t),
        (Family::Confined, Method::LowTClosed) => confined::moment_low_t_confined(p, t),
        (Family::Confined, _) => confined::moment_general_confined_with(p, t, kernel, opts),
    }
}

/// Evaluates a whole grid. Deterministic methods run in parallel over
/// time points; Monte Carlo needs `mc` and ignores `kernel` and `opts`.
pub fn compute_series(
    p: &Params,
    times: &[f64],
    method: Method,
    kernel: ThermalKernel,
    opts: &QuadOptions,
    mc: Option<&McConfig>,
) -> Result<MomentSeries> {
    if method == Method::MonteCarlo {
        let cfg = mc.ok_or(crate::Error::Unsupported("monte-carlo needs a trajectory configuration"))?;
        return estimate_moment(p, cfg, times);
    }
    let values = times
        .par_iter()
        .map(|&t| moment_at(p, t, method, kernel, opts))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MomentSeries::new(times.to_vec(), values, method))
}
