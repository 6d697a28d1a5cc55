use ncdirac::fockevolve::{run_evolution, EvolutionSettings};
use ncdirac::invariant::{solve_constant_invariant, InvariantAnsatz, InvariantConstants};
use ncdirac::lrsolve::{lr_phase, EnergySeries, EnergySource};
use ncdirac::{NCParams, C64};

fn static_nc() -> NCParams {
    NCParams { theta: 0.1, eta: 0.05, ..NCParams::default() }
}

fn displaced() -> EvolutionSettings {
    EvolutionSettings {
        dt: 2e-3,
        energy_stride: 0,
        displacement: [C64::new(0.3, 0.2), C64::new(-0.1, 0.25)],
        ..EvolutionSettings::default()
    }
}

#[test]
fn nullspace_generator_is_conserved_from_displaced_state() {
    let p = static_nc();
    let grid: Vec<f64> = (0..8).map(|k| 0.25 * k as f64).collect();
    let report = solve_constant_invariant(&p, &grid).unwrap();
    assert_eq!(report.dimension(), 2);

    let f_theta = 1.0 + 0.25 * p.theta;
    let f_eta = 0.5 + 0.5 * p.eta;
    let g = report.generators[0];
    assert!((g[3] / g[0] + f_eta / f_theta).abs() < 1e-10);

    let k = InvariantConstants { a1: g[0], a3: g[1], b1: g[2], b3: g[3], c1: 0.0 };
    let run = run_evolution(&p, &InvariantAnsatz::from_constants(k), &displaced()).unwrap();
    assert!(run.rows[0].re_i.abs() > 1e-2, "{}", run.rows[0].re_i);
    assert!(run.relative_drift < 1e-6, "{}", run.relative_drift);
    assert!(run.min_margin >= -1e-9);
    assert!(run.max_norm_deviation < 1e-10);
}

#[test]
fn off_nullspace_drift_follows_ehrenfest() {
    let p = static_nc();
    let k = InvariantConstants { a1: 1.0, a3: 0.0, b1: 0.0, b3: 0.0, c1: 0.0 };
    let run = run_evolution(&p, &InvariantAnsatz::from_constants(k), &displaced()).unwrap();
    assert!(run.relative_drift > 1e-3);
    assert!(run.ehrenfest.consistent(0.2));
}

#[test]
fn tracked_energy_feeds_lr_phase() {
    let p = NCParams::default();
    let s = EvolutionSettings { t1: 0.5, dt: 1e-2, energy_stride: 5, ..EvolutionSettings::default() };
    let run = run_evolution(&p, &InvariantAnsatz::from_constants(InvariantConstants::new(1.0, 0.0, 0.0, -0.5, 0.0)), &s).unwrap();
    let times: Vec<f64> = run.rows.iter().map(|r| r.t).collect();
    let values: Vec<f64> = run.rows.iter().map(|r| r.energy.unwrap()).collect();
    let e0 = values[0];
    assert!(values.iter().all(|v| (v - e0).abs() < 1e-12));

    let series = EnergySeries::new(times, values, EnergySource::FockTracked).unwrap();
    let phase = lr_phase(C64::new(0.0, 0.0), &series, 0.5).unwrap();
    assert!((phase.energy_integral - 0.5 * e0).abs() < 1e-12);
    assert!((phase.alpha.re + 0.5 * e0).abs() < 1e-12);
    assert_eq!(phase.source, EnergySource::FockTracked);
}
