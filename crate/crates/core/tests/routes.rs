use moment_lab::figures::{self, FigureId};
use moment_lab::mc::{InitialVelocity, McConfig};
use moment_lab::series::{compute_series, linspace};
use moment_lab::{csv, Method, Params, QuadOptions, ThermalKernel};

#[test]
fn three_routes_agree_in_a_trap() {
    let p = Params::new(10.0, 1.0, 5.0, 1.0).unwrap();
    let times = linspace(0.0, 0.4, 5);
    let opts = QuadOptions::with_rel_tol(1e-8);
    let closed = compute_series(&p, &times, Method::HighTClosed, ThermalKernel::ClassicalHighT, &opts, None).unwrap();
    let quad = compute_series(&p, &times, Method::GeneralQuadrature, ThermalKernel::ClassicalHighT, &opts, None).unwrap();
    let cfg = McConfig {
        n_trajectories: 20_000,
        dt: McConfig::dt_limit(&p),
        t_max: 0.4,
        seed: 5,
        initial_velocity: InitialVelocity::ThermalEquipartition,
    };
    let mc = compute_series(&p, &times, Method::MonteCarlo, ThermalKernel::ClassicalHighT, &opts, Some(&cfg)).unwrap();
    let se = mc.stderr.as_ref().unwrap();
    for k in 0..times.len() {
        assert!((closed.values[k] - quad.values[k]).abs() <= 1e-8 * closed.values[k].abs().max(1e-4));
        assert!((closed.values[k] - mc.values[k]).abs() <= 4.0 * se[k] + 1e-12, "k = {k}");
    }
}

#[test]
fn low_t_quadrature_matches_closed_form() {
    let p = Params::free(2.0, 3.0, 0.0).unwrap();
    let times = [0.1, 1.0, 4.0];
    let opts = QuadOptions::with_rel_tol(1e-8);
    let closed = compute_series(&p, &times, Method::LowTClosed, ThermalKernel::QuantumLowT, &opts, None).unwrap();
    let quad = compute_series(&p, &times, Method::GeneralQuadrature, ThermalKernel::QuantumLowT, &opts, None).unwrap();
    for (a, b) in closed.values.iter().zip(&quad.values) {
        assert!((a - b).abs() <= 1e-7 * a.abs().max(1e-3), "{a} vs {b}");
    }
}

#[test]
fn series_csv_reports_gamma_t() {
    let p = Params::free(4.0, 1.0, 1.0).unwrap();
    let s = compute_series(&p, &[0.0, 0.5], Method::HighTClosed, ThermalKernel::ClassicalHighT, &QuadOptions::default(), None)
        .unwrap();
    let mut buf = Vec::new();
    csv::write_series(&mut buf, &s, p.gamma, "test").unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], "t,Mz");
    assert!(lines[3].starts_with("2.0000000000000000e0,"));
}

#[test]
fn figure_files_land_in_the_directory() {
    let dir = std::env::temp_dir().join(format!("moment-lab-fig-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let fig = figures::compute(FigureId::Fig7).unwrap();
    let paths = fig.write(&dir).unwrap();
    assert_eq!(paths.len(), fig.curves.len() + 1);
    let svg = std::fs::read_to_string(dir.join("fig7.svg")).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(!svg.contains("href=\"http"));
    std::fs::remove_dir_all(&dir).unwrap();
}
