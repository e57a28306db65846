//! Datasets for the published figures, computed from the closed forms.
//!
//! Time-series figures use `x = γt`. The damping sweeps use `x = γ` at
//! fixed `γt = 1`, the figures' time unit being `1/γ`. High-temperature
//! curves use `T = 1`.

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::csv;
use crate::error::Result;
use crate::series::{compute_series, linspace, moment_at, Method};
use crate::svg::{Line, Plot};
use crate::thermal::{QuadOptions, ThermalKernel};
use crate::units::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig5New,
    Fig6,
    Fig7,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::Fig1,
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig5New,
        FigureId::Fig6,
        FigureId::Fig7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig5New => "fig5new",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.to_ascii_lowercase();
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown figure `{s}` (expected fig1..fig7 or fig5new)"))
    }
}

/// One curve: `x` is `γt` or `γ` depending on the figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    /// File-name stem, unique within the figure.
    pub key: String,
    pub label: String,
    pub params: Params,
    pub method: Method,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub id: FigureId,
    pub title: String,
    pub x_name: &'static str,
    pub x_label: &'static str,
    pub curves: Vec<Curve>,
}

/// What to compute for one curve.
#[derive(Debug, Clone, Copy)]
enum CurveKind {
    /// `M_z` against `γt` for `γt ∈ [0, span]`.
    Time { p: Params, method: Method, span: f64, n: usize },
    /// `M_z` against `γ` at fixed `γt`.
    Damping { p: Params, gamma_t: f64, gammas: (f64, f64, usize) },
}

const DAMPING_SET: [f64; 4] = [10.0, 20.0, 30.0, 40.0];
const FIELD_SET: [f64; 3] = [0.5, 1.0, 2.0];

fn p(gamma: f64, omega_c: f64, omega_0: f64) -> Params {
    Params::new(gamma, omega_c, omega_0, 1.0).expect("figure parameters are valid")
}

fn curve_kinds(id: FigureId) -> (String, Vec<(String, String, CurveKind)>) {
    let time = |g: f64, w0: f64, method: Method, span: f64| CurveKind::Time {
        p: p(g, 1.0, w0),
        method,
        span,
        n: 801,
    };
    let damping_curves = |method: Method, w0: f64, span: f64| -> Vec<(String, String, CurveKind)> {
        DAMPING_SET
            .iter()
            .map(|&g| (format!("gamma{g}"), format!("gamma = {g}"), time(g, w0, method, span)))
            .collect()
    };
    let sweep = |w0: f64| -> Vec<(String, String, CurveKind)> {
        FIELD_SET
            .iter()
            .map(|&wc| {
                (
                    format!("omega_c{wc}"),
                    format!("omega_c = {wc}"),
                    CurveKind::Damping {
                        p: p(1.0, wc, w0),
                        gamma_t: 1.0,
                        gammas: (0.5, 40.0, 400),
                    },
                )
            })
            .collect()
    };
    let oscillating = |w0: f64| -> Vec<(String, String, CurveKind)> {
        [(Method::HighTClosed, "high-t", "high temperature"), (Method::LowTClosed, "low-t", "low temperature")]
            .into_iter()
            .map(|(m, key, label)| {
                (
                    key.to_string(),
                    label.to_string(),
                    CurveKind::Time {
                        p: p(0.5, 25.0, w0),
                        method: m,
                        span: 5.0,
                        n: 4001,
                    },
                )
            })
            .collect()
    };
    match id {
        FigureId::Fig1 => ("Free particle, high T, omega_c = 1".into(), damping_curves(Method::HighTClosed, 0.0, 10.0)),
        FigureId::Fig2 => ("Free particle, gamma = 0.5, omega_c = 25".into(), oscillating(0.0)),
        FigureId::Fig3 => ("Free particle, low T, omega_c = 1".into(), damping_curves(Method::LowTClosed, 0.0, 25.0)),
        FigureId::Fig4 => ("Trapped particle, high T, omega_c = 1, omega_0 = 5".into(), damping_curves(Method::HighTClosed, 5.0, 10.0)),
        FigureId::Fig5 => ("Free particle, high T, gamma t = 1".into(), sweep(0.0)),
        FigureId::Fig5New => ("Trapped particle, high T, gamma t = 1, omega_0 = 5".into(), sweep(5.0)),
        FigureId::Fig6 => ("Trapped particle, low T, omega_c = 1, omega_0 = 5".into(), damping_curves(Method::LowTClosed, 5.0, 25.0)),
        FigureId::Fig7 => ("Trapped particle, gamma = 0.5, omega_c = 25, omega_0 = 5".into(), oscillating(5.0)),
    }
}

fn evaluate(key: String, label: String, kind: CurveKind) -> Result<Curve> {
    let opts = QuadOptions::default();
    match kind {
        CurveKind::Time { p, method, span, n } => {
            let times: Vec<f64> = linspace(0.0, span / p.gamma, n);
            let s = compute_series(&p, &times, method, ThermalKernel::ClassicalHighT, &opts, None)?;
            Ok(Curve {
                key,
                label,
                params: p,
                method,
                x: times.iter().map(|t| t * p.gamma).collect(),
                y: s.values,
            })
        }
        CurveKind::Damping { p, gamma_t, gammas: (lo, hi, n) } => {
            let gs = linspace(lo, hi, n);
            let y = gs
                .iter()
                .map(|&g| moment_at(&p.with_gamma(g), gamma_t / g, Method::HighTClosed, ThermalKernel::ClassicalHighT, &opts))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Curve {
                key,
                label,
                params: p,
                method: Method::HighTClosed,
                x: gs,
                y,
            })
        }
    }
}

/// Computes every curve of a figure, in parallel.
pub fn compute(id: FigureId) -> Result<Figure> {
    let (title, list) = curve_kinds(id);
    let curves = list
        .into_par_iter()
        .map(|(k, l, s)| evaluate(k, l, s))
        .collect::<Result<Vec<Curve>>>()?;
    let sweep = matches!(id, FigureId::Fig5 | FigureId::Fig5New);
    Ok(Figure {
        id,
        title,
        x_name: if sweep { "gamma" } else { "t" },
        x_label: if sweep { "gamma (natural units)" } else { "t (units of 1/gamma)" },
        curves,
    })
}

impl Figure {
    pub fn plot(&self) -> Plot {
        Plot {
            title: format!("{}: {}", self.id, self.title),
            x_label: self.x_label.into(),
            y_label: "Mz (q hbar / m c)".into(),
            lines: self
                .curves
                .iter()
                .map(|c| Line {
                    label: c.label.clone(),
                    x: c.x.clone(),
                    y: c.y.clone(),
                })
                .collect(),
            log_y: false,
        }
    }

    /// Writes one CSV per curve and a combined SVG into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for c in &self.curves {
            let path = dir.join(format!("{}_{}.csv", self.id, c.key));
            let mut out = BufWriter::new(fs::File::create(&path)?);
            let p = &c.params;
            let comment = match self.x_name {
                "gamma" => format!(
                    "{} {}; omega_c={} omega_0={} T={} gamma*t=1; method={}; Mz in units of q*hbar/(m*c)",
                    self.id, c.label, p.omega_c, p.omega_0, p.temperature, c.method
                ),
                _ => format!(
                    "{} {}; gamma={} omega_c={} omega_0={} T={}; method={}; t in units of 1/gamma, Mz in units of q*hbar/(m*c)",
                    self.id, c.label, p.gamma, p.omega_c, p.omega_0, p.temperature, c.method
                ),
            };
            csv::write_columns(&mut out, &comment, (self.x_name, "Mz"), &c.x, &c.y)?;
            out.flush()?;
            written.push(path);
        }
        let svg = dir.join(format!("{}.svg", self.id));
        fs::write(&svg, self.plot().render())?;
        written.push(svg);
        Ok(written)
    }
}
