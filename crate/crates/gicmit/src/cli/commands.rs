//! Subcommand implementations behind the argument layer in the parent
//! module.

use std::collections::BTreeSet;
use std::fs;
use std::time::Duration;

use rayon::prelude::*;

use crate::dro::{ccg_master, deterministic_milp, full_enumeration, run_case, CcgConfig, YFix};
use crate::geomag::{coefficients_for_epoch, geo_to_mag, GeoPoint};
use crate::gic::solve_gic;
use crate::netmodel::{apply_overlay, load_case, PowerCase, EPRI21_JSON};
use crate::relax::{build_standard_form, RelaxConfig, StandardFormModel};
use crate::solverapi::{emit_model_text, solve_milp, SolveLimits, SolveStatus};
use crate::uncertainty::{gmd_params, support_vertices, MlatBand};

use super::output::{line_plot, stats, write_atomic, Stats};
use super::{CaseSource, CliError, GicArgs, LevelArg, MaglatArgs, ModeArg, SolveArgs, VerticesArgs};

impl CaseSource {
    /// Resolve the flags to a loaded case. Exactly one of the built-in
    /// benchmark or a file must be selected; an overlay, when given, is
    /// merged over the base document before parsing.
    pub fn load(&self) -> Result<PowerCase, CliError> {
        let base = match (self.epri21, &self.case) {
            (true, None) => EPRI21_JSON.to_string(),
            (false, Some(path)) => fs::read_to_string(path)
                .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?,
            (true, Some(_)) => {
                return Err(CliError::Usage(
                    "--epri21 and --case are mutually exclusive".into(),
                ))
            }
            (false, None) => {
                return Err(CliError::Usage(
                    "select a case with --epri21 or --case <PATH>".into(),
                ))
            }
        };
        let doc = match &self.overlay {
            Some(path) => {
                let overlay = fs::read_to_string(path).map_err(|e| {
                    CliError::Failure(format!("cannot read {}: {e}", path.display()))
                })?;
                apply_overlay(&base, &overlay)
                    .map_err(|e| CliError::Failure(format!("overlay rejected: {e}")))?
            }
            None => base,
        };
        load_case(&doc).map_err(|e| CliError::Failure(format!("case rejected: {e}")))
    }
}

/// Solve the ground-induced DC circuit for a fixed field and print one CSV
/// row per transformer (effective current and reactive loss at nominal
/// voltage) followed by one aggregate row per loss bus.
pub fn cmd_gic(args: &GicArgs) -> Result<(), CliError> {
    let case = args.source.load()?;
    let net = &case.dc_network;
    let sources: Vec<f64> = net
        .edges
        .iter()
        .map(|e| args.nu_e * e.length_e_km + args.nu_n * e.length_n_km)
        .collect();
    let state = solve_gic(net, &|_| true, &sources)
        .map_err(|e| CliError::Failure(format!("dc solve failed: {e}")))?;
    let mut csv = String::from("kind,id,bus,effective_gic_amps,qloss_mvar\n");
    for t in &net.transformers {
        let eff = state.effective_gic.get(&t.ac_edge_id).copied().unwrap_or(0.0);
        let q = t.loss_factor * eff;
        csv.push_str(&format!(
            "transformer,{},{},{:.6},{:.6}\n",
            t.ac_edge_id, t.qloss_bus, eff, q
        ));
    }
    for (bus, q) in &state.qloss {
        csv.push_str(&format!("bus,,{bus},,{q:.6}\n"));
    }
    print!("{csv}");
    if let Some(path) = &args.out {
        write_atomic(path, &csv)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Convert a geographic location to dipole coordinates and name the
/// latitude band the storm table files it under.
pub fn cmd_maglat(args: &MaglatArgs) -> Result<(), CliError> {
    if !(-90.0..=90.0).contains(&args.lat) {
        return Err(CliError::Usage(format!(
            "latitude {} is outside [-90, 90]",
            args.lat
        )));
    }
    if !(-180.0..=180.0).contains(&args.lon) {
        return Err(CliError::Usage(format!(
            "longitude {} is outside [-180, 180]",
            args.lon
        )));
    }
    let coeffs = coefficients_for_epoch(args.epoch).ok_or_else(|| {
        CliError::Usage(format!(
            "no dipole coefficients for epoch {}; choose a multiple of 5 in 1965..=2015",
            args.epoch
        ))
    })?;
    let mag = geo_to_mag(GeoPoint::new(args.lat, args.lon), &coeffs);
    let band = MlatBand::from_latitude(mag.latitude)
        .map(|b| b.as_str().to_string())
        .unwrap_or_else(|| "outside-40-75".into());
    println!("geo_latitude,geo_longitude,epoch,mag_latitude,mag_longitude,mlat_band");
    println!(
        "{},{},{},{:.4},{:.4},{band}",
        args.lat, args.lon, args.epoch, mag.latitude, mag.longitude
    );
    Ok(())
}

/// Print the vertex set of the polygonal field support.
pub fn cmd_vertices(args: &VerticesArgs) -> Result<(), CliError> {
    let nu_max = match (args.nu_max, args.level) {
        (Some(nu), None) => nu,
        (None, Some(level)) => {
            let band: MlatBand = args.band.parse().map_err(CliError::Usage)?;
            gmd_params(level.storm(), band).nu_max
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "choose either --nu-max or --level, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "an amplitude is required: --nu-max <V/KM> or --level <LEVEL>".into(),
            ))
        }
    };
    let poly = support_vertices(nu_max, args.delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut csv = String::from("index,omega_e,omega_n\n");
    for (j, (e, n)) in poly.vertices.iter().enumerate() {
        csv.push_str(&format!("{j},{e:.9},{n:.9}\n"));
    }
    print!("{csv}");
    if let Some(path) = &args.out {
        write_atomic(path, &csv)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// One sweep cell: a planning variant at one storm level and one
/// redispatch allowance.
struct CellSpec {
    mode: ModeArg,
    level: LevelArg,
    ramp: f64,
    model_ix: usize,
}

/// Everything a finished cell contributes to the report.
struct CellRow {
    cell: String,
    mode: ModeArg,
    level: LevelArg,
    ramp: f64,
    objective: f64,
    lower: f64,
    upper: f64,
    gap: f64,
    iterations: usize,
    status: String,
    lambda_binding: bool,
    worst: (f64, f64),
    branches_off: Vec<usize>,
    gens_off: Vec<usize>,
    shed_cost: Stats,
    shed_pct: Stats,
    wall_s: f64,
    trace: String,
    model_text: Option<String>,
}

fn ramp_label(r: f64) -> String {
    if r.fract().abs() < 1e-9 {
        format!("{r:.0}")
    } else {
        format!("{r}").replace('.', "p")
    }
}

fn cell_name(mode: ModeArg, level: LevelArg, ramp: f64) -> String {
    format!("{mode}_{level}_r{}", ramp_label(ramp))
}

/// Shed cost and unserved-power share under a fixed plan at one field
/// vertex; an impossible operating point reports infinite cost.
fn shed_numbers(
    sf: &StandardFormModel,
    case: &PowerCase,
    y: &[f64],
    omega: (f64, f64),
    limits: &SolveLimits,
) -> Result<(f64, f64), String> {
    let lp = sf.recourse_lp(y, omega);
    let r = solve_milp(&lp, limits).map_err(|e| e.to_string())?;
    match r.status {
        SolveStatus::Optimal => {
            let m = &sf.meta;
            let total: f64 = m
                .x_shed_p_pos
                .values()
                .chain(m.x_shed_p_neg.values())
                .chain(m.x_shed_q_pos.values())
                .chain(m.x_shed_q_neg.values())
                .map(|&k| r.primal[k])
                .sum();
            let unserved: f64 = m.x_shed_p_pos.values().map(|&k| r.primal[k]).sum();
            let load: f64 = case.buses.iter().map(|b| b.load_p).sum();
            let pct = if load > 0.0 { 100.0 * unserved / load } else { 0.0 };
            Ok((case.kappa * total, pct))
        }
        SolveStatus::Infeasible => Ok((f64::INFINITY, 100.0)),
        s => Err(format!("recourse evaluation ended with {s:?}")),
    }
}

fn off_ids(map: &std::collections::BTreeMap<usize, usize>, y: &[f64]) -> Vec<usize> {
    map.iter().filter(|(_, &j)| y[j] < 0.5).map(|(&id, _)| id).collect()
}

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

fn run_cell(
    spec: &CellSpec,
    sf: &StandardFormModel,
    case: &PowerCase,
    band: MlatBand,
    args: &SolveArgs,
) -> Result<CellRow, String> {
    let gmd = gmd_params(spec.level.storm(), band);
    let cfg = CcgConfig {
        eps: args.eps,
        time_limit: args.time_limit.map(Duration::from_secs_f64),
        ..CcgConfig::default()
    };
    let support = support_vertices(gmd.nu_max, args.delta).map_err(|e| e.to_string())?;
    let eval_limits = SolveLimits { time_limit: None, mip_gap: 1e-6, threads: 1 };
    let name = cell_name(spec.mode, spec.level, spec.ramp);
    log::info!("cell {name}: starting");

    let (report, dro) = match spec.mode {
        ModeArg::Enumerate => {
            let sol = full_enumeration(sf, &support, gmd.mu, &YFix::new(), &cfg)
                .map_err(|e| e.to_string())?;
            (None, Some(sol))
        }
        mode => {
            let cm = mode.case_mode().expect("enumeration is handled above");
            let r = run_case(sf, &gmd, args.delta, cm, &cfg).map_err(|e| e.to_string())?;
            let dro = r.dro.clone();
            (Some(r), dro)
        }
    };

    let (objective, y, wall) = match (&report, &dro) {
        (Some(r), _) => (r.objective, r.y.clone(), r.wall),
        (None, Some(s)) => (s.objective, s.y.clone(), s.wall),
        (None, None) => unreachable!("every branch produces a result"),
    };

    let (lower, upper, gap, iterations, status, lambda_binding, worst, trace) = match &dro {
        Some(s) => {
            let status = match s.outcome {
                crate::dro::SolveOutcome::Converged => "converged",
                crate::dro::SolveOutcome::IterationLimit => "iteration_limit",
                crate::dro::SolveOutcome::TimeLimit => "time_limit",
            };
            let mut trace = String::from("iteration,lower_bound,upper_bound\n");
            for (i, (lb, ub)) in s.lb_trace.iter().zip(&s.ub_trace).enumerate() {
                trace.push_str(&format!("{i},{lb:.6},{ub:.6}\n"));
            }
            let worst = support.vertices[s.worst_vertex];
            (
                s.lower_bound,
                s.upper_bound,
                s.gap,
                s.iterations,
                status.to_string(),
                s.lambda_box_binding,
                worst,
                trace,
            )
        }
        None => {
            let r = report.as_ref().expect("plain plan carries a baseline");
            let gap = r.base.as_ref().map(|b| b.rel_gap).unwrap_or(0.0);
            let trace = format!(
                "iteration,lower_bound,upper_bound\n0,{:.6},{:.6}\n",
                r.objective, r.objective
            );
            (
                r.objective,
                r.objective,
                gap,
                1,
                "optimal".to_string(),
                false,
                gmd.mu,
                trace,
            )
        }
    };

    // Post-hoc shed profile of the reported plan across the support (the
    // mean field alone for the mean-field plan).
    let eval_points: Vec<(f64, f64)> = if dro.is_some() {
        support.vertices.clone()
    } else {
        vec![gmd.mu]
    };
    let mut costs = Vec::with_capacity(eval_points.len());
    let mut pcts = Vec::with_capacity(eval_points.len());
    for &omega in &eval_points {
        let (c, p) = shed_numbers(sf, case, &y, omega, &eval_limits)?;
        costs.push(c);
        pcts.push(p);
    }

    let model_text = if args.emit_model {
        let text = match spec.mode {
            ModeArg::C0 => {
                let (ir, _) = deterministic_milp(sf, gmd.mu, &YFix::new());
                emit_model_text(&ir)
            }
            ModeArg::Enumerate => {
                let m = ccg_master(
                    sf,
                    &support.vertices,
                    gmd.mu,
                    &YFix::new(),
                    cfg.lambda_box,
                    cfg.eta_box,
                    false,
                );
                emit_model_text(&m.ir)
            }
            mode => {
                let sol = dro.as_ref().expect("robust modes carry a solve");
                let mut fix = YFix::new();
                match mode {
                    ModeArg::C2 => {
                        let base = report
                            .as_ref()
                            .and_then(|r| r.base.as_ref())
                            .expect("inherited plan carries its baseline");
                        for &j in sf.meta.y_gen_on.values().chain(sf.meta.y_branch_on.values()) {
                            fix.insert(j, base.y[j].round());
                        }
                        for &j in sf.meta.y_setpoint.values() {
                            fix.insert(j, base.y[j]);
                        }
                    }
                    ModeArg::C3 => {
                        for &j in sf.meta.y_branch_on.values() {
                            fix.insert(j, 1.0);
                        }
                    }
                    _ => {}
                }
                let m = ccg_master(
                    sf,
                    &sol.scenario_set,
                    gmd.mu,
                    &fix,
                    cfg.lambda_box,
                    cfg.eta_box,
                    false,
                );
                emit_model_text(&m.ir)
            }
        };
        Some(text)
    } else {
        None
    };

    log::info!("cell {name}: {status}, objective {objective:.4}");
    Ok(CellRow {
        cell: name,
        mode: spec.mode,
        level: spec.level,
        ramp: spec.ramp,
        objective,
        lower,
        upper,
        gap,
        iterations,
        status,
        lambda_binding,
        worst,
        branches_off: off_ids(&sf.meta.y_branch_on, &y),
        gens_off: off_ids(&sf.meta.y_gen_on, &y),
        shed_cost: stats(&costs),
        shed_pct: stats(&pcts),
        wall_s: wall.as_secs_f64(),
        trace,
        model_text,
    })
}

const REPORT_HEADER: [&str; 25] = [
    "mode",
    "level",
    "band",
    "ramp_pct",
    "delta_deg",
    "objective",
    "lower_bound",
    "upper_bound",
    "gap",
    "iterations",
    "status",
    "lambda_box_binding",
    "worst_omega_e",
    "worst_omega_n",
    "switched_off_branches",
    "committed_off_gens",
    "shed_cost_avg",
    "shed_cost_min",
    "shed_cost_max",
    "shed_cost_std",
    "shed_pct_avg",
    "shed_pct_min",
    "shed_pct_max",
    "shed_pct_std",
    "wall_s",
];

fn report_csv(rows: &[CellRow], band: MlatBand, delta: f64) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)
        .map_err(|e| CliError::Failure(e.to_string()))?;
    for r in rows {
        w.write_record(&[
            r.mode.to_string(),
            r.level.to_string(),
            band.as_str().to_string(),
            format!("{}", r.ramp),
            format!("{delta}"),
            format!("{:.6}", r.objective),
            format!("{:.6}", r.lower),
            format!("{:.6}", r.upper),
            format!("{:.3e}", r.gap),
            r.iterations.to_string(),
            r.status.clone(),
            r.lambda_binding.to_string(),
            format!("{:.6}", r.worst.0),
            format!("{:.6}", r.worst.1),
            join_ids(&r.branches_off),
            join_ids(&r.gens_off),
            format!("{:.6}", r.shed_cost.avg),
            format!("{:.6}", r.shed_cost.min),
            format!("{:.6}", r.shed_cost.max),
            format!("{:.6}", r.shed_cost.std),
            format!("{:.6}", r.shed_pct.avg),
            format!("{:.6}", r.shed_pct.min),
            format!("{:.6}", r.shed_pct.max),
            format!("{:.6}", r.shed_pct.std),
            format!("{:.3}", r.wall_s),
        ])
        .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))
}

/// Run the sweep of planning variants over storm levels and redispatch
/// allowances, then write the report, per-cell traces, optional model
/// listings, and one chart per storm level.
pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    if args.mode.is_empty() || args.level.is_empty() || args.ramp.is_empty() {
        return Err(CliError::Usage(
            "--mode, --level, and --ramp each need at least one value".into(),
        ));
    }
    for &r in &args.ramp {
        if !(0.0..=100.0).contains(&r) {
            return Err(CliError::Usage(format!(
                "ramp {r} is outside [0, 100] percent"
            )));
        }
    }
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(CliError::Usage(format!("eps {} must be positive", args.eps)));
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if let Some(t) = args.time_limit {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!(
                "time limit {t} must be positive seconds"
            )));
        }
    }
    let band: MlatBand = args.band.parse().map_err(CliError::Usage)?;
    support_vertices(1.0, args.delta).map_err(|e| CliError::Usage(e.to_string()))?;

    let case = args.source.load()?;

    let mut rc = if args.lean { RelaxConfig::lean() } else { RelaxConfig::default() };
    if let Some(n) = args.points_quadratic {
        rc.n_points_quadratic = n;
    }
    if let Some(n) = args.points_cone {
        rc.n_points_rsoc = n;
    }
    if let Some(n) = args.points_thermal {
        rc.n_points_thermal = n;
    }
    let max_nu = args
        .level
        .iter()
        .map(|l| gmd_params(l.storm(), band).nu_max)
        .fold(0.0, f64::max);
    rc.field_bound = rc.field_bound.max(1.05 * max_nu);

    // One relaxed model per distinct redispatch allowance; variants and
    // storm levels share it.
    let mut ramps: Vec<f64> = Vec::new();
    for &r in &args.ramp {
        if !ramps.iter().any(|&s| (s - r).abs() < 1e-12) {
            ramps.push(r);
        }
    }
    let mut models: Vec<StandardFormModel> = Vec::with_capacity(ramps.len());
    for &ramp in &ramps {
        let mut c = case.clone();
        for g in &mut c.generators {
            g.ramp_frac = ramp / 100.0;
        }
        let sf = build_standard_form(&c, &rc).map_err(|e| {
            CliError::Failure(format!("model build failed at ramp {ramp}%: {e}"))
        })?;
        models.push(sf);
    }

    let mut cells: Vec<CellSpec> = Vec::new();
    let mut seen = BTreeSet::new();
    for &mode in &args.mode {
        for &level in &args.level {
            for (model_ix, &ramp) in ramps.iter().enumerate() {
                let name = cell_name(mode, level, ramp);
                if seen.insert(name) {
                    cells.push(CellSpec { mode, level, ramp, model_ix });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let outcomes: Vec<Result<CellRow, String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(cell, &models[cell.model_ix], &case, band, args))
            .collect()
    });

    let mut rows: Vec<CellRow> = Vec::with_capacity(cells.len());
    let mut failures: Vec<String> = Vec::new();
    for (cell, outcome) in cells.iter().zip(outcomes) {
        let name = cell_name(cell.mode, cell.level, cell.ramp);
        match outcome {
            Ok(row) => rows.push(row),
            Err(msg) => {
                eprintln!("cell {name} failed: {msg}");
                failures.push(format!("{name}: {msg}"));
                rows.push(CellRow {
                    cell: name,
                    mode: cell.mode,
                    level: cell.level,
                    ramp: cell.ramp,
                    objective: f64::NAN,
                    lower: f64::NAN,
                    upper: f64::NAN,
                    gap: f64::NAN,
                    iterations: 0,
                    status: "failed".into(),
                    lambda_binding: false,
                    worst: (f64::NAN, f64::NAN),
                    branches_off: Vec::new(),
                    gens_off: Vec::new(),
                    shed_cost: stats(&[]),
                    shed_pct: stats(&[]),
                    wall_s: 0.0,
                    trace: String::new(),
                    model_text: None,
                });
            }
        }
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", args.out.display())))?;
    let report_path = args.out.join("report.csv");
    let report = report_csv(&rows, band, args.delta)?;
    write_atomic(&report_path, &report)
        .map_err(|e| CliError::Failure(format!("cannot write report: {e}")))?;
    for row in &rows {
        if !row.trace.is_empty() {
            let path = args.out.join(format!("trace_{}.csv", row.cell));
            write_atomic(&path, &row.trace)
                .map_err(|e| CliError::Failure(format!("cannot write trace: {e}")))?;
        }
        if let Some(text) = &row.model_text {
            let path = args.out.join(format!("model_{}.lp.txt", row.cell));
            write_atomic(&path, text)
                .map_err(|e| CliError::Failure(format!("cannot write model: {e}")))?;
        }
    }
    for &level in &args.level {
        let series: Vec<(String, Vec<(f64, f64)>)> = args
            .mode
            .iter()
            .map(|&mode| {
                let pts: Vec<(f64, f64)> = ramps
                    .iter()
                    .filter_map(|&ramp| {
                        rows.iter()
                            .find(|r| {
                                r.mode == mode
                                    && r.level == level
                                    && (r.ramp - ramp).abs() < 1e-12
                                    && r.objective.is_finite()
                            })
                            .map(|r| (ramp, r.objective))
                    })
                    .collect();
                (mode.to_string(), pts)
            })
            .filter(|(_, pts)| !pts.is_empty())
            .collect();
        if !series.is_empty() {
            let svg = line_plot(
                &format!("plan cost vs redispatch allowance ({level}, band {})", band.as_str()),
                "redispatch allowance (% of capacity)",
                "plan cost ($)",
                &series,
            );
            let path = args.out.join(format!("plot_{level}.svg"));
            write_atomic(&path, &svg)
                .map_err(|e| CliError::Failure(format!("cannot write plot: {e}")))?;
        }
    }

    for row in &rows {
        println!(
            "{}: objective={:.4} gap={:.2e} status={}",
            row.cell, row.objective, row.gap, row.status
        );
    }
    println!("report: {}", report_path.display());

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "{} of {} cells failed: {}",
            failures.len(),
            cells.len(),
            failures.join("; ")
        )))
    }
}
