use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fano_eit::oracle::{auto_binset, r_quadrature, stationary_solve, QuadratureSettings};
use fano_eit::{Level, Preset, Probe, SusceptibilitySpectrum};

fn closed_form(c: &mut Criterion) {
    let (sys, field) = Preset::Fig4.build();
    c.bench_function("closed_form_spectrum_fig4", |b| {
        b.iter(|| SusceptibilitySpectrum::closed_form(black_box(&sys), black_box(&field)).unwrap())
    });
}

fn quadrature(c: &mut Criterion) {
    let (sys, _) = Preset::Fig2.build();
    let probe = Probe::from_detuning(&sys, 0.3 * sys.gamma);
    let settings = QuadratureSettings::default();
    c.bench_function("r_quadrature_bb", |b| {
        b.iter(|| r_quadrature(black_box(probe), &sys, Level::B, Level::B, &settings).unwrap())
    });
}

fn steady_state(c: &mut Criterion) {
    let (sys, field) = Preset::Fig2.build();
    let range = (-2.0 * sys.gamma, 2.0 * sys.gamma);
    let bins = auto_binset(&sys, range, 0.04 * sys.gamma, 400).unwrap();
    let probe = Probe::from_detuning(&sys, 0.1 * sys.gamma);
    c.bench_function("stationary_solve_fig2", |b| {
        b.iter(|| stationary_solve(&sys, &field, probe, black_box(&bins), 1e-12).unwrap())
    });
}

criterion_group!(benches, closed_form, quadrature, steady_state);
criterion_main!(benches);
