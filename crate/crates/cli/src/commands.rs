use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ncdirac::fockevolve::{run_evolution, EvolutionSettings};
use ncdirac::invariant::{
    constraint_residuals, invariance_residual, solve_constant_invariant, InvariantAnsatz, InvariantConstants,
    NullspaceReport, CONSTRAINT_LABELS,
};
use ncdirac::lrsolve::integrate_rk4;
use ncdirac::mat2::{verify_dirac_algebra, RelationCheck};
use ncdirac::ncmodel::{
    bopp_shift, build_h_nc, hamiltonian_dual_path_deviation, verify_nc_algebra_with, NcCoord, Regime,
};
use ncdirac::{Coord, PhasePoly, UnitMode};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::output::{column_max_abs, column_min, num, read_csv, write_csv, write_json};
use crate::CliError;

pub const ALGEBRA_TOL: f64 = 1e-12;
pub const INVARIANT_TOL: f64 = 1e-12;
pub const XI_TOL: f64 = 1e-5;
pub const DRIFT_TOL: f64 = 1e-6;
pub const MARGIN_TOL: f64 = -1e-9;
pub const NORM_TOL: f64 = 1e-10;

pub const ALGEBRA_REPORT: &str = "algebra_report.json";
pub const NULLSPACE_REPORT: &str = "nullspace_report.json";
pub const RESIDUALS_CSV: &str = "residuals.csv";
pub const XI_CSV: &str = "xi_trajectory.csv";
pub const EVOLUTION_CSV: &str = "evolution.csv";
pub const RUN_SUMMARY: &str = "run_summary.json";

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct NcCheckRow {
    pair: String,
    t: f64,
    deviation: f64,
    relative_deviation: f64,
    spin_leak: f64,
}

#[derive(Serialize)]
struct DualPath {
    status: &'static str,
    times: Vec<f64>,
    deviations: Vec<f64>,
    max_deviation: Option<f64>,
}

#[derive(Serialize)]
struct AlgebraReport {
    regime: Regime,
    unit_mode: UnitMode,
    hbar: f64,
    hbar_eff: f64,
    consistency_ratio: f64,
    consistency_warning: bool,
    dirac_relations: Vec<RelationCheck>,
    dirac_max_deviation: f64,
    nc_max_deviation: f64,
    nc_max_relative_deviation: f64,
    x_px_time_spread: f64,
    failing_commutators: Vec<String>,
    nc_checks: Vec<NcCheckRow>,
    dual_path: DualPath,
    bopp_sign_flipped: bool,
    tolerance: f64,
    passed: bool,
}

pub fn verify_algebra(cfg: &RunConfig) -> Result<bool, CliError> {
    let p = &cfg.params;
    let grid = cfg.grid();
    let dirac = verify_dirac_algebra();
    let flip = cfg.debug_flip_bopp_sign;
    let nc = verify_nc_algebra_with(p, &grid, |w, t| {
        let s = bopp_shift(p, w, t);
        if flip && w == NcCoord::XNc {
            PhasePoly::coord(Coord::X).scale_re(2.0) - s
        } else {
            s
        }
    })?;

    let nc_checks: Vec<NcCheckRow> = nc
        .checks
        .iter()
        .map(|c| NcCheckRow {
            pair: c.pair.clone(),
            t: c.t,
            deviation: c.deviation,
            relative_deviation: c.deviation / c.expected.residual_norm().max(std::f64::consts::SQRT_2),
            spin_leak: c.spin_leak,
        })
        .collect();
    let failing_commutators = nc.failing_pairs(ALGEBRA_TOL);

    let dual_path = if p.unit_mode == UnitMode::Natural && p.hbar == 1.0 {
        let deviations = hamiltonian_dual_path_deviation(p, &grid)?;
        let max = deviations.iter().copied().fold(0.0, f64::max);
        DualPath { status: "checked", times: grid.clone(), deviations, max_deviation: Some(max) }
    } else {
        DualPath { status: "skipped: requires natural units", times: Vec::new(), deviations: Vec::new(), max_deviation: None }
    };

    let dirac_ok = dirac.max_deviation <= ALGEBRA_TOL;
    let nc_ok = nc.max_relative_deviation <= ALGEBRA_TOL;
    let dual_ok = dual_path.max_deviation.is_none_or(|d| d <= ALGEBRA_TOL);
    let passed = dirac_ok && nc_ok && dual_ok;

    println!("regime: {}", p.regime());
    println!("hbar_eff = {:.16e} (theta*eta/(4 hbar^2) = {:.4e})", p.hbar_eff(), p.consistency_ratio());
    if p.consistency_warning() {
        println!("warning: theta*eta/(4 hbar^2) is not small; the deformation is not a perturbative correction");
    }
    println!("dirac algebra: {} (max deviation {:.2e})", verdict(dirac_ok), dirac.max_deviation);
    println!("deformed algebra: {} (max relative deviation {:.2e})", verdict(nc_ok), nc.max_relative_deviation);
    for pair in &failing_commutators {
        println!("  failing commutator {pair}");
    }
    match dual_path.max_deviation {
        Some(d) => println!("hamiltonian dual path: {} (max deviation {d:.2e})", verdict(dual_ok)),
        None => println!("hamiltonian dual path: {}", dual_path.status),
    }

    if cfg.emit.json {
        let report = AlgebraReport {
            regime: p.regime(),
            unit_mode: p.unit_mode,
            hbar: p.hbar,
            hbar_eff: p.hbar_eff(),
            consistency_ratio: p.consistency_ratio(),
            consistency_warning: p.consistency_warning(),
            dirac_relations: dirac.relations.clone(),
            dirac_max_deviation: dirac.max_deviation,
            nc_max_deviation: nc.max_deviation,
            nc_max_relative_deviation: nc.max_relative_deviation,
            x_px_time_spread: nc.x_px_time_spread,
            failing_commutators,
            nc_checks,
            dual_path,
            bopp_sign_flipped: flip,
            tolerance: ALGEBRA_TOL,
            passed,
        };
        write_json(&cfg.output_dir, ALGEBRA_REPORT, &report)?;
    }
    println!("verify-algebra: {}", verdict(passed));
    Ok(passed)
}

#[derive(Serialize)]
struct InvariantReport<'a> {
    #[serde(flatten)]
    nullspace: &'a NullspaceReport,
    user_constants: InvariantConstants,
    user_residual_max: f64,
    user_distance_to_nullspace: f64,
    tolerance: f64,
    passed: bool,
}

pub fn invariant(cfg: &RunConfig) -> Result<bool, CliError> {
    let p = &cfg.params;
    let h = build_h_nc(p)?;
    let grid = cfg.grid();
    let omega = p.symplectic_form();
    let ans = InvariantAnsatz::from_constants(cfg.constants);
    let report = solve_constant_invariant(p, &grid)?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut user_residual_max: f64 = 0.0;
    for &t in &grid {
        let set = constraint_residuals(&ans, p, t);
        let r = invariance_residual(&ans, &h, &omega, t)?.residual_norm();
        user_residual_max = user_residual_max.max(r);
        let mut row = vec![num(t)];
        row.extend(set.residuals.iter().map(|x| num(x.norm)));
        row.extend([num(r), num(set.chi.re), num(set.phi.re)]);
        rows.push(row);
    }
    let k = cfg.constants;
    let distance = report.distance_to_nullspace(&[k.a1, k.a3, k.b1, k.b3]);
    let passed = user_residual_max <= INVARIANT_TOL;

    println!("constraint nullspace dimension: {} of 4 (rank {})", report.dimension(), report.rank);
    for g in &report.generators {
        println!("  generator (a1, a3, b1, b3) = ({:.12}, {:.12}, {:.12}, {:.12})", g[0], g[1], g[2], g[3]);
    }
    if report.free_constant_tension {
        println!("{}", report.note);
    }
    println!("invariance residual of configured constants: {user_residual_max:.6e}");
    println!("distance of configured constants from the nullspace: {distance:.6e}");

    if cfg.emit.csv {
        let mut header = vec!["t"];
        header.extend(CONSTRAINT_LABELS);
        header.extend(["invariance_residual", "chi", "phi"]);
        write_csv(&cfg.output_dir, RESIDUALS_CSV, &header, &rows)?;
    }
    if cfg.emit.json {
        let out = InvariantReport {
            nullspace: &report,
            user_constants: cfg.constants,
            user_residual_max,
            user_distance_to_nullspace: distance,
            tolerance: INVARIANT_TOL,
            passed,
        };
        write_json(&cfg.output_dir, NULLSPACE_REPORT, &out)?;
    }
    println!("invariant: {}", verdict(passed));
    Ok(passed)
}

pub fn xi(cfg: &RunConfig) -> Result<bool, CliError> {
    let p = &cfg.params;
    let tr = integrate_rk4(p, cfg.t0, cfg.t1, cfg.dt, cfg.xi3_0, cfg.xi4_0)?;
    let passed = tr.max_deviation() <= XI_TOL;
    println!(
        "rk4 vs closed form over [{}, {}] with dt = {}: max |dxi| = {:.3e}, max |dF| = {:.3e}",
        cfg.t0, cfg.t1, tr.dt, tr.max_dev_xi, tr.max_dev_f
    );
    if cfg.emit.csv {
        let header = [
            "t", "re_xi1", "im_xi1", "re_xi2", "im_xi2", "re_F1", "im_F1", "re_F2", "im_F2", "re_xi1_closed",
            "im_xi1_closed", "re_xi2_closed", "im_xi2_closed", "re_F1_closed", "im_F1_closed", "re_F2_closed",
            "im_F2_closed", "re_nc_branch", "im_nc_branch", "dev_xi1", "dev_xi2", "dev_F1", "dev_F2",
        ];
        let rows: Vec<Vec<String>> = tr
            .samples
            .iter()
            .map(|s| {
                let (a, c) = (&s.integrated, &s.closed);
                [
                    s.t, a.xi[0].re, a.xi[0].im, a.xi[1].re, a.xi[1].im, a.f1.re, a.f1.im, a.f2.re, a.f2.im,
                    c.xi[0].re, c.xi[0].im, c.xi[1].re, c.xi[1].im, c.f1.re, c.f1.im, c.f2.re, c.f2.im,
                    s.nc_branch.re, s.nc_branch.im, s.dev_xi1, s.dev_xi2, s.dev_f1, s.dev_f2,
                ]
                .into_iter()
                .map(num)
                .collect()
            })
            .collect();
        write_csv(&cfg.output_dir, XI_CSV, &header, &rows)?;
    }
    println!("xi: {}", verdict(passed));
    Ok(passed)
}

pub fn evolve(cfg: &RunConfig) -> Result<bool, CliError> {
    let p = &cfg.params;
    let steps = ((cfg.t1 - cfg.t0) / cfg.dt).ceil().max(1.0) as usize;
    let settings = EvolutionSettings {
        n: cfg.fock_n,
        ell: cfg.fock_ell,
        t0: cfg.t0,
        t1: cfg.t1,
        dt: cfg.dt,
        energy_stride: (steps / 10).max(1),
        ..EvolutionSettings::default()
    };
    let ans = InvariantAnsatz::from_constants(cfg.constants);
    let run = run_evolution(p, &ans, &settings)?;

    let drift_ok = run.relative_drift <= DRIFT_TOL;
    let margin_ok = run.min_margin >= MARGIN_TOL;
    let norm_ok = run.max_norm_deviation <= NORM_TOL;
    let passed = drift_ok && margin_ok && norm_ok;

    println!("fock truncation N = {} (dim {}), ell = {}", run.n, run.dim, run.ell);
    println!("relative invariant drift: {:.3e} ({})", run.relative_drift, verdict(drift_ok));
    if !drift_ok {
        if run.ehrenfest.symbolic_residual <= INVARIANT_TOL {
            println!(
                "warning: truncation: the invariant commutes with H symbolically, so the drift comes from the \
                 Fock cutoff; increase fock_N"
            );
        } else {
            println!(
                "the configured constants are not invariant (symbolic residual {:.3e}); predicted drift {:.3e}",
                run.ehrenfest.symbolic_residual, run.ehrenfest.max_predicted
            );
        }
    }
    println!("min uncertainty margin: {:.3e} ({})", run.min_margin, verdict(margin_ok));
    println!("max norm deviation: {:.3e} ({})", run.max_norm_deviation, verdict(norm_ok));

    if cfg.emit.csv {
        let header = [
            "t", "re_I", "drift", "dx_dpx", "bound", "margin", "E_tracked", "dy_dpy", "bound_y", "margin_y",
            "dxnc_dpxnc", "bound_nc", "margin_nc", "norm_dev",
        ];
        let rows: Vec<Vec<String>> = run
            .rows
            .iter()
            .map(|r| {
                [
                    r.t,
                    r.re_i,
                    r.drift,
                    r.x_px.lhs,
                    r.x_px.rhs,
                    r.x_px.margin,
                    r.energy.unwrap_or(f64::NAN),
                    r.y_py.lhs,
                    r.y_py.rhs,
                    r.y_py.margin,
                    r.xnc_pxnc.lhs,
                    r.xnc_pxnc.rhs,
                    r.xnc_pxnc.margin,
                    r.norm_deviation,
                ]
                .into_iter()
                .map(num)
                .collect()
            })
            .collect();
        write_csv(&cfg.output_dir, EVOLUTION_CSV, &header, &rows)?;
    }
    println!("evolve: {}", verdict(passed));
    Ok(passed)
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let mut text = String::new();
    for (k, v) in cfg.canonical() {
        text.push_str(k);
        text.push('=');
        text.push_str(&v);
        text.push('\n');
    }
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn report(cfg: &RunConfig) -> Result<bool, CliError> {
    let dir = &cfg.output_dir;
    let inputs = [ALGEBRA_REPORT, NULLSPACE_REPORT, XI_CSV, EVOLUTION_CSV];
    let missing: Vec<&str> = inputs.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        return Err(CliError::Usage(format!("missing input in {}: {}", dir.display(), missing.join(", "))));
    }

    let algebra = read_json(&dir.join(ALGEBRA_REPORT))?;
    let nullspace = read_json(&dir.join(NULLSPACE_REPORT))?;
    let (xh, xr) = read_csv(&dir.join(XI_CSV))?;
    let (eh, er) = read_csv(&dir.join(EVOLUTION_CSV))?;
    let col = |h: &[String], r: &[Vec<f64>], name: &str| {
        column_max_abs(h, r, name).ok_or_else(|| CliError::Usage(format!("column '{name}' missing")))
    };

    let xi_max = ["dev_xi1", "dev_xi2", "dev_F1", "dev_F2"]
        .iter()
        .map(|c| col(&xh, &xr, c))
        .collect::<Result<Vec<f64>, _>>()?;
    let xi_passed = xi_max.iter().all(|d| *d <= XI_TOL);

    let re_i0 = er.first().map(|r| r[1].abs()).unwrap_or(0.0);
    let max_drift = col(&eh, &er, "drift")?;
    let relative_drift = max_drift / (re_i0 + 1.0);
    let min_margin = ["margin", "margin_y", "margin_nc"]
        .iter()
        .map(|c| column_min(&eh, &er, c).ok_or_else(|| CliError::Usage(format!("column '{c}' missing"))))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let max_norm_dev = col(&eh, &er, "norm_dev")?;
    let evolution_passed = relative_drift <= DRIFT_TOL && min_margin >= MARGIN_TOL && max_norm_dev <= NORM_TOL;

    let algebra_passed = algebra["passed"].as_bool().unwrap_or(false);
    let invariant_passed = nullspace["passed"].as_bool().unwrap_or(false);
    let all_passed = algebra_passed && invariant_passed && xi_passed && evolution_passed;

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash(cfg),
        "timestamp_unix": timestamp,
        "config": cfg.canonical(),
        "all_passed": all_passed,
        "sections": {
            "algebra": {
                "passed": algebra_passed,
                "regime": algebra["regime"],
                "dirac_max_deviation": algebra["dirac_max_deviation"],
                "nc_max_relative_deviation": algebra["nc_max_relative_deviation"],
                "failing_commutators": algebra["failing_commutators"],
                "dual_path_max_deviation": algebra["dual_path"]["max_deviation"],
            },
            "invariant": {
                "passed": invariant_passed,
                "nullspace_dimension": nullspace["nullspace_basis"].as_array().map(|a| a.len()),
                "generators": nullspace["generators"],
                "free_constant_tension": nullspace["free_constant_tension"],
                "user_residual_max": nullspace["user_residual_max"],
            },
            "xi": {
                "passed": xi_passed,
                "samples": xr.len(),
                "max_dev_xi1": xi_max[0],
                "max_dev_xi2": xi_max[1],
                "max_dev_F1": xi_max[2],
                "max_dev_F2": xi_max[3],
            },
            "evolution": {
                "passed": evolution_passed,
                "samples": er.len(),
                "relative_drift": relative_drift,
                "min_margin": min_margin,
                "max_norm_deviation": max_norm_dev,
            },
        },
    });
    write_json(dir, RUN_SUMMARY, &summary)?;
    for (name, ok) in [
        ("algebra", algebra_passed),
        ("invariant", invariant_passed),
        ("xi", xi_passed),
        ("evolution", evolution_passed),
    ] {
        println!("{name}: {}", verdict(ok));
    }
    println!("report: wrote {}", dir.join(RUN_SUMMARY).display());
    Ok(all_passed)
}
