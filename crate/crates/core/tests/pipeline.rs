use std::fs::File;

use fano_eit::analysis::find_window;
use fano_eit::io::{format_params, parse_params, read_spectrum_csv, spectrum_rows, write_spectrum_csv};
use fano_eit::oracle::{convergence_table, QuadratureSettings};
use fano_eit::{Preset, SusceptibilitySpectrum};

#[test]
fn parameter_file_to_window_report() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, field) = Preset::Fig3.build();
    let path = dir.path().join("fig3.par");
    std::fs::write(&path, format_params(&sys, &field)).unwrap();
    let (sys2, field2) = parse_params(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let spec = SusceptibilitySpectrum::closed_form(&sys2, &field2).unwrap();
    let a = find_window(&spec, &sys2, &field2, 0.5).unwrap();
    let b = find_window(&SusceptibilitySpectrum::closed_form(&sys, &field).unwrap(), &sys, &field, 0.5).unwrap();
    assert!((a.width / b.width - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_csv_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, field) = Preset::Fig4.build();
    let spec = SusceptibilitySpectrum::closed_form(&sys, &field).unwrap();
    let rows = spectrum_rows(&spec, &sys);
    let path = dir.path().join("spectrum.csv");
    write_spectrum_csv(File::create(&path).unwrap(), &rows).unwrap();
    let back = read_spectrum_csv(File::open(&path).unwrap()).unwrap();
    assert_eq!(back, rows);
}

#[test]
fn quadrature_spectrum_tracks_closed_form() {
    let (sys, mut field) = Preset::Fig2.build();
    field.probe_grid = fano_eit::ProbeGrid::uniform(sys.resonance_frequency(), 3.0 * sys.gamma, 61).unwrap();
    let closed = SusceptibilitySpectrum::closed_form(&sys, &field).unwrap();
    let quad = SusceptibilitySpectrum::quadrature(&sys, &field, &QuadratureSettings::default()).unwrap();
    let peak = fano_eit::susceptibility::undressed_peak(&sys);
    for (a, b) in closed.chi.iter().zip(&quad.chi) {
        assert!((a - b).norm() <= 1e-6 * a.norm().max(1e-9 * peak));
    }
    assert_eq!(closed.params_fingerprint, quad.params_fingerprint);
}

#[test]
fn steady_state_deviation_shrinks_with_eta() {
    let (sys, field) = Preset::Fig3.build();
    let probe = fano_eit::Probe::from_detuning(&sys, 0.5 * sys.gamma);
    let etas = [0.08 * sys.gamma, 0.04 * sys.gamma, 0.02 * sys.gamma];
    let rows = convergence_table(&sys, &field, probe, &etas, 1e-12).unwrap();
    assert!(rows.windows(2).all(|w| w[1].deviation < w[0].deviation));
}
