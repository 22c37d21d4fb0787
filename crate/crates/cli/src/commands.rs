//! The scenario commands. Each builds one report table and says whether every
//! tolerance held.

use worldsheet_core::dynamics::{self, Couplings, StringChart};
use worldsheet_core::geometry::{Embedding, Geometry};
use worldsheet_core::invariants::{self, InvariantError, CAP_CUTOFFS};
use worldsheet_core::phase_space::{self as ps, Provenance};
use worldsheet_core::scenarios;
use worldsheet_core::surfaces;
use worldsheet_core::verify::{self, Bound};

use crate::config::{Scenario, ScenarioConfig};
use crate::report::{Cell, Report};
use crate::CliError;

pub struct Outcome {
    pub report: Report,
    pub passed: bool,
}

fn core<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

fn prefix(cfg: &ScenarioConfig, s: &str) -> Vec<Cell> {
    vec![s.into(), cfg.seed.into(), cfg.grid.into()]
}

fn string_chart(cfg: &ScenarioConfig) -> StringChart {
    StringChart { tau: cfg.tau, ..scenarios::string_chart(cfg.grid) }
}

/// Family base point: the oscillating loop is the wobble family with the wobble removed.
fn base_lambda(cfg: &ScenarioConfig, s: Scenario) -> [f64; 2] {
    match s {
        Scenario::OscillatingString => [cfg.lambda[0] - scenarios::WOBBLE_AMPLITUDE, cfg.lambda[1]],
        _ => cfg.lambda,
    }
}

pub fn embedding(cfg: &ScenarioConfig, s: Scenario) -> Result<Embedding, CliError> {
    let n = cfg.grid;
    match s {
        Scenario::OscillatingString | Scenario::WobbledString => {
            let fam = scenarios::wobble_family_on(string_chart(cfg));
            dynamics::closed_string_solution(&fam, &base_lambda(cfg, s)).map_err(core)
        }
        Scenario::StaticCylinder => surfaces::static_cylinder(scenarios::CYLINDER_RADIUS, n, n).map_err(core),
        Scenario::CliffordTorus => surfaces::clifford_torus(n).map_err(core),
        Scenario::WhitneySphere => surfaces::whitney_sphere(cfg.cap, 2 * n, n).map_err(core),
        Scenario::RoundSphere => surfaces::round_sphere(1.0, cfg.cap, 2 * n, n).map_err(core),
        Scenario::CatenoidRelaxation => Ok(scenarios::catenoid_relaxation(n, cfg.tolerances.relaxation).map_err(core)?.initial),
    }
}

pub fn geometry(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let s = cfg.scenario()?;
    let emb = embedding(cfg, s)?;
    let g = Geometry::new(&emb).map_err(core)?;
    let ratio = g.max_einstein() / (1.0 + g.max_ricci());
    let mean = (0..g.nodes())
        .map(|p| (0..g.k()).map(|i| g.forms.mean(p, i).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let area = emb.chart().integrate(&g.forms.sqrt_det).map_err(core)?;
    let passed = ratio <= cfg.tolerances.einstein;
    let mut report = Report::new(vec![
        "scenario",
        "seed",
        "grid",
        "nodes",
        "dimension",
        "codimension",
        "signature",
        "max_einstein",
        "max_ricci",
        "einstein_ratio",
        "gauss_defect",
        "frame_defect",
        "max_mean_curvature",
        "area",
        "status",
    ]);
    let mut row = prefix(cfg, s.name());
    row.extend([
        g.nodes().into(),
        g.d().into(),
        g.k().into(),
        format!("{:?}", g.forms.signature).to_lowercase().into(),
        g.max_einstein().into(),
        g.max_ricci().into(),
        ratio.into(),
        g.gauss_equation_defect().into(),
        g.frame_defect().into(),
        mean.into(),
        area.into(),
        if passed { "pass" } else { "fail" }.into(),
    ]);
    report.push(row);
    Ok(Outcome { report, passed })
}

pub fn invariants(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let s = cfg.scenario()?;
    let n = cfg.grid;
    let t = &cfg.tolerances;
    type Sample = Box<dyn Fn(f64) -> Result<Embedding, InvariantError>>;
    let (chi, nu, tol) = match s {
        Scenario::CliffordTorus => {
            let emb = surfaces::clifford_torus(n).map_err(core)?;
            (
                invariants::euler_characteristic(&emb).map_err(core)?,
                invariants::chern_number(&emb).map_err(core)?,
                (t.euler_torus, t.chern_torus),
            )
        }
        Scenario::WhitneySphere | Scenario::RoundSphere => {
            let make: Sample = if s == Scenario::WhitneySphere {
                Box::new(move |eps| Ok(surfaces::whitney_sphere(eps, 2 * n, n)?))
            } else {
                Box::new(move |eps| Ok(surfaces::round_sphere(1.0, eps, 2 * n, n)?))
            };
            let chi = invariants::cap_extrapolate(&CAP_CUTOFFS, |e| Ok::<_, InvariantError>(invariants::euler_characteristic(&make(e)?)?.value))
                .map_err(core)?;
            let nu = invariants::cap_extrapolate(&CAP_CUTOFFS, |e| Ok::<_, InvariantError>(invariants::chern_number(&make(e)?)?.value))
                .map_err(core)?;
            (chi, nu, (t.euler_sphere, t.chern_integer))
        }
        other => return Err(CliError::Unsupported { command: "invariants", scenario: other.name(), reason: "not a closed Euclidean surface" }),
    };
    let mut report =
        Report::new(vec!["scenario", "seed", "grid", "invariant", "value", "nearest", "deviation", "tolerance", "status"]);
    let mut passed = true;
    for (name, r, tol) in [("euler_characteristic", chi, tol.0), ("chern_number", nu, tol.1)] {
        let ok = r.defect <= tol;
        passed &= ok;
        let mut row = prefix(cfg, s.name());
        row.extend([name.into(), r.value.into(), r.nearest.into(), r.defect.into(), tol.into(), if ok { "pass" } else { "fail" }.into()]);
        report.push(row);
    }
    Ok(Outcome { report, passed })
}

pub fn solve(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let s = cfg.scenario()?;
    let t = &cfg.tolerances;
    let mut report =
        Report::new(vec!["scenario", "seed", "grid", "label", "lambda1", "lambda2", "iteration", "area", "residual", "status"]);
    let mut passed = true;
    let status = |ok: bool| -> Cell { if ok { "pass" } else { "fail" }.into() };
    match s {
        Scenario::OscillatingString | Scenario::WobbledString => {
            let fam = scenarios::wobble_family_on(string_chart(cfg));
            let l0 = base_lambda(cfg, s);
            for (label, d) in [("base", [0.0, 0.0]), ("plus1", [0.05, 0.0]), ("minus1", [-0.05, 0.0]), ("plus2", [0.0, 0.05]), ("minus2", [0.0, -0.05])] {
                let l = [l0[0] + d[0], l0[1] + d[1]];
                let emb = dynamics::closed_string_solution(&fam, &l).map_err(core)?;
                let r = dynamics::extremality_residual(&emb).map_err(core)?;
                let ok = r <= t.extremality;
                passed &= ok;
                let mut row = prefix(cfg, s.name());
                row.extend([label.into(), l[0].into(), l[1].into(), 0usize.into(), dynamics::area(&emb).map_err(core)?.into(), r.into(), status(ok)]);
                report.push(row);
            }
        }
        Scenario::CatenoidRelaxation => {
            let prob = scenarios::catenoid_relaxation(cfg.grid / 2, t.relaxation).map_err(core)?;
            let out = dynamics::relax_minimal_surface(&prob).map_err(core)?;
            let last = out.areas.len() - 1;
            for i in (0..=last).filter(|&i| i % 100 == 0 || i == last) {
                let mut row = prefix(cfg, s.name());
                let ok = i != last || out.residuals[i] <= t.relaxation;
                row.extend(["relaxation".into(), f64::NAN.into(), f64::NAN.into(), i.into(), out.areas[i].into(), out.residuals[i].into(), status(ok)]);
                report.push(row);
            }
            let (r, h) = scenarios::CATENOID_RINGS;
            let exact = dynamics::catenoid_area(r, h);
            let ok = (out.areas[last] - exact).abs() <= t.catenoid_area && out.residuals[last] <= t.relaxation;
            let monotone = out.areas.windows(2).all(|w| w[1] <= w[0]);
            passed &= ok && monotone;
            let mut row = prefix(cfg, s.name());
            row.extend(["analytic".into(), f64::NAN.into(), f64::NAN.into(), last.into(), exact.into(), f64::NAN.into(), status(ok && monotone)]);
            report.push(row);
        }
        other => return Err(CliError::Unsupported { command: "solve", scenario: other.name(), reason: "no solution family or relaxation" }),
    }
    Ok(Outcome { report, passed })
}

pub fn symplectic(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let s = cfg.scenario()?;
    let c = cfg.couplings;
    let (emb, geom, phi1, phi2) = match s {
        Scenario::OscillatingString | Scenario::WobbledString => {
            let fam = scenarios::wobble_family_on(string_chart(cfg));
            let pair = scenarios::tangent_pair(&fam, &base_lambda(cfg, s)).map_err(core)?;
            let [a, b] = pair.normal_parts();
            (pair.base, pair.geometry, a, b)
        }
        Scenario::StaticCylinder => {
            let (fam, g) = scenarios::cylinder_family(cfg.grid).map_err(core)?;
            let a = ps::project_deformation(&fam.base, &g, &fam.v1, Provenance::Synthetic).map_err(core)?;
            let b = ps::project_deformation(&fam.base, &g, &fam.v2, Provenance::Synthetic).map_err(core)?;
            (fam.base, g, a, b)
        }
        other => return Err(CliError::Unsupported { command: "symplectic", scenario: other.name(), reason: "no time slicing" }),
    };
    let chart = emb.chart();
    let slices = ps::default_slices(chart.axis(0).nodes);
    let part = |couplings: Couplings| -> Result<ps::SymplecticEvaluation, CliError> {
        let dens = ps::combined_density(chart, &geom, &phi1, &phi2, couplings).map_err(core)?;
        ps::symplectic_form(chart, dens, &slices, couplings).map_err(core)
    };
    let dng = part(Couplings { sigma1: 0.0, sigma2: 0.0, ..c })?;
    let zero = |x: f64| if x == 0.0 { 0.0 } else { x };
    let gb: Vec<f64> = if c.sigma1 == 0.0 {
        vec![0.0; slices.len()]
    } else {
        let d: Vec<f64> = ps::gb_kernel_density(chart, &geom, &phi1, &phi2).map_err(core)?.iter().map(|x| c.sigma1 * x).collect();
        slices.iter().map(|&i| chart.slice_integral(&d, 0, i).map(zero)).collect::<Result<_, _>>().map_err(core)?
    };
    let twist: Vec<f64> = if c.sigma2 == 0.0 {
        vec![0.0; slices.len()]
    } else {
        let d = ps::chern_kernel(chart, &geom, &phi1, &phi2, c.sigma2).map_err(core)?;
        slices.iter().map(|&i| chart.slice_integral(&d, 0, i)).collect::<Result<_, _>>().map_err(core)?
    };
    let total = part(c)?;
    let passed = total.statistic <= cfg.tolerances.slice_independence;
    let mut report = Report::new(vec![
        "scenario",
        "seed",
        "grid",
        "slice",
        "tau",
        "omega_dng",
        "omega_gb",
        "omega_twist",
        "omega",
        "statistic",
        "status",
    ]);
    for (j, &i) in slices.iter().enumerate() {
        let mut row = prefix(cfg, s.name());
        row.extend([
            i.into(),
            total.taus[j].into(),
            dng.omega[j].into(),
            gb[j].into(),
            twist[j].into(),
            total.omega[j].into(),
            total.statistic.into(),
            if passed { "pass" } else { "fail" }.into(),
        ]);
        report.push(row);
    }
    Ok(Outcome { report, passed })
}

pub fn verify(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let rows = verify::run_all(&cfg.verify_config());
    let mut report =
        Report::new(vec!["seed", "grid", "group", "name", "value", "tolerance", "bound", "status", "note"]);
    for r in &rows {
        let bound = match r.bound {
            Bound::AtMost => "at_most",
            Bound::AtLeast => "at_least",
            Bound::Info => "info",
        };
        report.push(vec![
            cfg.seed.into(),
            cfg.grid.into(),
            (r.group as usize).into(),
            r.name.clone().into(),
            r.value.into(),
            r.tolerance.into(),
            bound.into(),
            r.status.to_string().into(),
            r.note.clone().into(),
        ]);
    }
    Ok(Outcome { report, passed: verify::all_passed(&rows) })
}
