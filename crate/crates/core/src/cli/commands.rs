use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{check_chi, check_kn, output_path, parse_reduction, parse_scan_range, resolve_theory, RunFile};
use super::{Command, TheoryArgs, VERSION};
use crate::boundary::{boundary_operator, BoundaryKind};
use crate::channel::{
    average_solutions, interpolate, read_profile_csv, solve_steady, time_march, write_solution_csv, ChannelConfig,
    ErrorProfile, MarchConfig, MarchOrder,
};
use crate::error::{Error, Result};
use crate::stability::{boundary_stability, Verdict};
use crate::system::{grad_theory_by_name, MomentSystem, MomentTheory, Orientation};
use crate::tensor::{Axis, Reduction};

/// Largest allowed relative energy increase per step in `energy-march`.
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
/// Largest allowed gap between the marched steady state and the steady solver.
pub const STEADY_MATCH_TOL: f64 = 1e-4;
/// Allowed flux-balance error of a steady run.
pub const FLUX_BALANCE_TOL: f64 = 1e-6;
/// Symmetric-hyperbolicity defect accepted by `assemble`.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub(super) fn dispatch(cmd: Command, file: &RunFile, jobs: usize, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Assemble {
            theory,
            axis,
            dump,
            format,
            out: path,
        } => assemble(&theory_of(&theory, file)?, &axis, &dump, &format, path.as_deref(), out),
        Command::CheckStability {
            theory,
            chi,
            bc,
            axis,
            scan_chi,
            out: path,
        } => {
            let theory = theory_of(&theory, file)?;
            let bc = bc.or(file.bc.clone()).map(|b| b.parse::<BoundaryKind>()).transpose()?;
            let axis = parse_axis(&axis)?;
            let chis = match (scan_chi, chi) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidConfig("conflicting flags: --chi and --scan-chi".into()));
                }
                (Some(range), None) => Some(parse_scan_range(&range)?),
                (None, _) => None,
            };
            let chi = check_chi(chi.or(file.chi).unwrap_or(1.0))?;
            check_stability(&theory, chi, chis, bc, axis, jobs, path.as_deref(), out)
        }
        Command::SolveChannel {
            theory,
            bc,
            kn,
            chi,
            grid,
            reference,
            out: path,
        } => {
            let explicit = theory.theory.is_some() || theory.nd.is_some() || theory.m.is_some();
            if reference.is_some() && explicit {
                return Err(Error::InvalidConfig(
                    "conflicting flags: --reference replaces --theory/--nd/--m".into(),
                ));
            }
            let cfg = channel_config(&theory, file, bc, kn, chi, grid)?;
            solve_channel(cfg, reference, jobs, path.as_deref(), out)
        }
        Command::Compare {
            run,
            reference,
            out: path,
            plot,
        } => compare(&run, &reference, &path, &plot, out),
        Command::EnergyMarch {
            theory,
            bc,
            kn,
            chi,
            cells,
            cfl,
            crossing_times,
            seed,
            steady,
            out: path,
        } => {
            let cfg = channel_config(&theory, file, bc, kn, chi, None)?;
            let mut march = MarchConfig {
                cells: cells.or(file.cells).unwrap_or(128),
                cfl: cfl.or(file.cfl).unwrap_or(0.4),
                crossing_times: crossing_times
                    .or(file.crossing_times)
                    .unwrap_or(if steady { 400.0 } else { 10.0 }),
                initial_seed: Some(seed.or(file.seed).unwrap_or(42)),
                ..Default::default()
            };
            if steady {
                march.order = MarchOrder::Second;
                march.steady_tol = Some(1e-9);
                march.initial_seed = None;
            }
            energy_march(cfg, march, steady, path.as_deref(), out)
        }
    }
}

fn theory_of(t: &TheoryArgs, file: &RunFile) -> Result<MomentTheory> {
    let red = t
        .reduction
        .as_deref()
        .or(file.reduction.as_deref())
        .map(parse_reduction)
        .transpose()?
        .unwrap_or(Reduction::Planar);
    if t.theory.is_some() || t.nd.is_some() || t.m.is_some() {
        resolve_theory(t.theory.as_deref(), t.nd, t.m.as_deref(), red)
    } else {
        resolve_theory(file.theory.as_deref(), file.nd, file.m.as_deref(), red)
    }
}

fn parse_axis(s: &str) -> Result<Axis> {
    let mut chars = s.trim().chars();
    match (chars.next().and_then(Axis::parse), chars.next()) {
        (Some(a), None) => Ok(a),
        _ => Err(Error::InvalidConfig(format!("unknown axis `{s}` (expected x, y or z)"))),
    }
}

fn channel_config(
    t: &TheoryArgs,
    file: &RunFile,
    bc: Option<String>,
    kn: Option<f64>,
    chi: Option<f64>,
    grid: Option<usize>,
) -> Result<ChannelConfig> {
    let bc = bc
        .or(file.bc.clone())
        .map(|b| b.parse())
        .transpose()?
        .unwrap_or(BoundaryKind::Obc);
    let mut cfg = ChannelConfig::new(theory_of(t, file)?, bc);
    cfg.kn = check_kn(kn.or(file.kn).unwrap_or(0.3))?;
    cfg.chi = check_chi(chi.or(file.chi).unwrap_or(1.0))?;
    cfg.grid = grid.or(file.grid).unwrap_or(512);
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn emit_json(value: &Value, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            let full = output_path(p)?;
            std::fs::write(&full, format!("{text}\n"))?;
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&json!({ "version": VERSION, "artifacts": [full] }))?
            )?;
        }
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_num(m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn assemble(
    theory: &MomentTheory,
    axis: &str,
    dump: &str,
    format: &str,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let axis = parse_axis(axis)?;
    let sys = MomentSystem::assemble(theory, axis)?;
    let defect = sys.symmetric_hyperbolicity_defect();
    if defect > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: defect });
    }
    let config = json!({ "command": "assemble", "theory": theory, "axis": axis.label().to_string(), "dump": dump });
    let pick = |name: &str| -> Result<DMatrix<f64>> {
        Ok(match name {
            "s-matrix" => sys.symmetrizer.clone(),
            "a-x" => sys.flux(Axis::X).clone(),
            "a-y" => sys.flux(Axis::Y).clone(),
            "a-z" => sys.flux(Axis::Z).clone(),
            "bgk" => sys.bgk.clone(),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown dump `{other}` (expected summary, s-matrix, a-x, a-y, a-z, bgk or all)"
                )))
            }
        })
    };
    match (dump, format) {
        ("summary", _) => {
            let report = json!({
                "version": VERSION,
                "config": config,
                "moments": sys.len(),
                "odd": sys.n_odd(),
                "even": sys.n_even(),
                "labels": sys.basis.labels(),
                "symmetric_hyperbolicity_defect": defect,
                "normal_block_defect": sys.normal_block_defect(),
                "conserved": sys.bgk.diagonal().iter().filter(|p| **p == 0.0).count(),
            });
            emit_json(&report, path, out)
        }
        (_, "json") => {
            let names: Vec<&str> = if dump == "all" {
                vec!["s-matrix", "a-x", "a-y", "a-z", "bgk"]
            } else {
                vec![dump]
            };
            let mut mats = serde_json::Map::new();
            for n in names {
                mats.insert(n.to_string(), json!(matrix_rows(&pick(n)?)));
            }
            let report = json!({
                "version": VERSION,
                "config": config,
                "labels": sys.basis.labels(),
                "matrices": mats,
            });
            emit_json(&report, path, out)
        }
        ("all", "csv") => Err(Error::InvalidConfig("--dump all needs --format json".into())),
        (_, "csv") => {
            let text = matrix_csv(&pick(dump)?);
            match path {
                Some(p) => {
                    let full = output_path(p)?;
                    std::fs::write(&full, text)?;
                    writeln!(
                        out,
                        "{}",
                        serde_json::to_string_pretty(&json!({ "version": VERSION, "artifacts": [full] }))?
                    )?;
                }
                None => out.write_all(text.as_bytes())?,
            }
            Ok(())
        }
        (_, other) => Err(Error::InvalidConfig(format!(
            "unknown format `{other}` (expected csv or json)"
        ))),
    }
}

#[derive(Serialize)]
struct WallReport {
    bc: BoundaryKind,
    orientation: String,
    verdict: Verdict,
    kernel_residual: f64,
    min_schur_eig: f64,
    neutral_modes: usize,
    neutral_forcing: f64,
    bx_minus_cond: f64,
}

fn worst(verdicts: &[Verdict]) -> Verdict {
    if verdicts.contains(&Verdict::Degenerate) {
        Verdict::Degenerate
    } else if verdicts.contains(&Verdict::Unstable) {
        Verdict::Unstable
    } else {
        Verdict::Stable
    }
}

/// Stability of both boundary kinds on both walls normal to `axis`.
pub fn stability_summary(sys: &MomentSystem, chi: f64, axis: Axis) -> Result<Value> {
    let mut walls = Vec::new();
    let mut onsager = None;
    for kind in [BoundaryKind::Mbc, BoundaryKind::Obc] {
        for o in [Orientation::minus(axis), Orientation::plus(axis)] {
            let op = boundary_operator(sys, kind, o, chi)?;
            let rep = boundary_stability(sys, &op)?;
            if let (Some(l), true) = (&op.onsager, o.positive) {
                onsager = Some((l.min_eig, l.cond_aoe_hat, l.asymmetry));
            }
            walls.push(WallReport {
                bc: kind,
                orientation: o.to_string(),
                verdict: rep.verdict,
                kernel_residual: rep.kernel_residual,
                min_schur_eig: rep.min_schur_eig,
                neutral_modes: rep.neutral_modes,
                neutral_forcing: rep.neutral_forcing,
                bx_minus_cond: rep.bx_minus_cond,
            });
        }
    }
    let of = |k: BoundaryKind| walls.iter().filter(move |w| w.bc == k);
    let verdict = |k| worst(&of(k).map(|w| w.verdict).collect::<Vec<_>>());
    let kernel = |k| of(k).map(|w| w.kernel_residual).fold(0.0, f64::max);
    let (min_eig, cond, asym) = onsager.expect("Onsager walls evaluated");
    Ok(json!({
        "theory": sys.basis.theory.name,
        "chi": chi,
        "mbc_stable": verdict(BoundaryKind::Mbc) == Verdict::Stable,
        "obc_stable": verdict(BoundaryKind::Obc) == Verdict::Stable,
        "mbc_verdict": verdict(BoundaryKind::Mbc),
        "obc_verdict": verdict(BoundaryKind::Obc),
        "min_eig_L": min_eig,
        "L_asymmetry": asym,
        "cond_Aoe_hat": cond,
        "kernel_residuals": { "mbc": kernel(BoundaryKind::Mbc), "obc": kernel(BoundaryKind::Obc) },
        "walls": walls,
    }))
}

#[allow(clippy::too_many_arguments)]
fn check_stability(
    theory: &MomentTheory,
    chi: f64,
    scan: Option<Vec<f64>>,
    bc: Option<BoundaryKind>,
    axis: Axis,
    jobs: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let sys = MomentSystem::assemble(theory, axis)?;
    let pick = |v: &mut Value| {
        if let Some(k) = bc {
            let key = format!("{k}_verdict");
            v["verdict"] = v[&key].clone();
        }
    };
    let report = match scan {
        Some(chis) => {
            let mut rows: Vec<Value> = chis
                .par_iter()
                .map(|&c| stability_summary(&sys, c, axis))
                .collect::<Result<_>>()?;
            rows.iter_mut().for_each(pick);
            json!({
                "version": VERSION,
                "config": { "command": "check-stability", "theory": theory, "scan_chi": chis, "bc": bc, "axis": axis.label().to_string(), "jobs": jobs },
                "theory": theory.name,
                "scan": rows,
            })
        }
        None => {
            let mut v = stability_summary(&sys, chi, axis)?;
            pick(&mut v);
            v["version"] = json!(VERSION);
            v["config"] = json!({ "command": "check-stability", "theory": theory, "chi": chi, "bc": bc, "axis": axis.label().to_string() });
            v
        }
    };
    emit_json(&report, path, out)
}

fn solve_channel(
    cfg: ChannelConfig,
    reference: Option<String>,
    jobs: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let red = cfg.theory.reduction;
    let (sol, theories, default_name) = match &reference {
        Some(list) => {
            let theories: Vec<MomentTheory> = list
                .split(',')
                .map(|n| grad_theory_by_name(n.trim(), red))
                .collect::<Result<_>>()?;
            let runs = theories
                .par_iter()
                .map(|th| {
                    solve_steady(&ChannelConfig {
                        theory: th.clone(),
                        ..cfg.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (average_solutions(&runs), theories, format!("reference-{}.csv", cfg.bc))
        }
        None => {
            let sol = solve_steady(&cfg)?;
            let name = format!("channel-{}-{}.csv", cfg.theory.name, cfg.bc);
            (sol, vec![cfg.theory.clone()], name)
        }
    };
    let target = output_path(path.unwrap_or(Path::new(&default_name)))?;
    write_solution_csv(&sol, BufWriter::new(File::create(&target)?))?;

    let wall_theta = -(2.0f64 / 3.0).sqrt() * cfg.wall_temperature;
    let (jump_lo, jump_hi) = sol.wall_temperature_jump(wall_theta);
    let report = json!({
        "version": VERSION,
        "config": {
            "command": "solve-channel",
            "channel": cfg,
            "reference": theories.iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
            "jobs": jobs,
        },
        "theory": sol.theory,
        "diagnostics": sol.diagnostics,
        "integrated_source": cfg.source_amplitude / 12.0,
        "temperature_jump": [jump_lo, jump_hi],
        "max_abs_sigma_yy": sol.fields.sigma_yy.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        "artifacts": [target],
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    if reference.is_none() && sol.diagnostics.flux_balance_error > FLUX_BALANCE_TOL {
        return Err(Error::Verification(format!(
            "flux balance off by {:e}",
            sol.diagnostics.flux_balance_error
        )));
    }
    Ok(())
}

fn gnuplot_script(data: &str, image: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 1200,900\n\
         set output '{image}'\n\
         set multiplot layout 2,2\n\
         set xlabel 'y'\n\
         set ylabel 'theta'\n\
         plot '{data}' using 1:2 with lines title 'run', '' using 1:3 with lines dashtype 2 title 'reference'\n\
         set ylabel 'sigma_yy'\n\
         plot '{data}' using 1:4 with lines title 'run', '' using 1:5 with lines dashtype 2 title 'reference'\n\
         set logscale y\n\
         set ylabel 'e_theta'\n\
         plot '{data}' using 1:6 with lines notitle\n\
         set ylabel 'e_sigma'\n\
         plot '{data}' using 1:7 with lines notitle\n\
         unset multiplot\n"
    )
}

fn compare(run: &Path, reference: &Path, path: &Path, plot: &Path, out: &mut dyn Write) -> Result<()> {
    let a = read_profile_csv(File::open(run)?)?;
    let b = read_profile_csv(File::open(reference)?)?;
    let same_grid = a.y.len() == b.y.len() && a.y.iter().zip(&b.y).all(|(u, v)| (u - v).abs() <= 1e-12);
    if !same_grid {
        return Err(Error::InvalidConfig(format!(
            "{} and {} are on different grids ({} vs {} points)",
            run.display(),
            reference.display(),
            a.y.len(),
            b.y.len()
        )));
    }
    let err = ErrorProfile::between(&a.fields, &b.fields, &a.y)?;
    let target = output_path(path)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&target)?));
    w.write_record([
        "y",
        "theta",
        "theta_ref",
        "sigma_yy",
        "sigma_yy_ref",
        "e_theta",
        "e_sigma",
    ])?;
    for i in 0..a.y.len() {
        w.write_record(
            [
                a.y[i],
                a.fields.theta[i],
                b.fields.theta[i],
                a.fields.sigma_yy[i],
                b.fields.sigma_yy[i],
                err.e_theta[i],
                err.e_sigma[i],
            ]
            .map(fmt_num),
        )?;
    }
    w.flush()?;
    let script = output_path(plot)?;
    let image: PathBuf = script.with_extension("png");
    std::fs::write(
        &script,
        gnuplot_script(&target.display().to_string(), &image.display().to_string()),
    )?;
    let report = json!({
        "version": VERSION,
        "config": { "command": "compare", "run": run, "reference": reference },
        "points": a.y.len(),
        "max_e_theta": err.max_theta(),
        "max_e_sigma": err.max_sigma(),
        "artifacts": [target, script],
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn energy_march(
    mut cfg: ChannelConfig,
    march: MarchConfig,
    steady: bool,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    if !steady {
        cfg.source_amplitude = 0.0;
        cfg.wall_temperature = 0.0;
    }
    let res = time_march(&cfg, &march)?;
    let mut report = json!({
        "version": VERSION,
        "config": { "command": "energy-march", "channel": cfg, "march": march, "steady": steady },
        "steps": res.steps,
        "dt": res.dt,
        "crossing_time": res.crossing_time,
        "initial_energy": res.energies[0],
        "final_energy": res.energies[res.energies.len() - 1],
        "max_relative_increase": res.max_relative_increase,
        "final_rate": res.final_rate,
    });
    let mut failure = None;
    if steady {
        let st = solve_steady(&cfg)?;
        let gap = |a: &[f64], b: &[f64]| {
            res.centers
                .iter()
                .enumerate()
                .map(|(j, y)| (a[j] - interpolate(&st.y, b, *y)).abs())
                .fold(0.0, f64::max)
        };
        let g_theta = gap(&res.fields.theta, &st.fields.theta);
        let g_sigma = gap(&res.fields.sigma_yy, &st.fields.sigma_yy);
        report["steady_gap_theta"] = json!(g_theta);
        report["steady_gap_sigma_yy"] = json!(g_sigma);
        if march.steady_tol.is_some_and(|t| res.final_rate > t) {
            failure = Some(format!("march did not settle (rate {:e})", res.final_rate));
        } else if g_theta.max(g_sigma) > STEADY_MATCH_TOL {
            failure = Some(format!("marched steady state differs by {:e}", g_theta.max(g_sigma)));
        }
    } else if res.max_relative_increase > ENERGY_DRIFT_TOL {
        failure = Some(format!("energy increased by {:e} relative", res.max_relative_increase));
    }
    if let Some(p) = path {
        let target = output_path(p)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&target)?));
        w.write_record(["t", "energy"])?;
        for (t, e) in res.times.iter().zip(&res.energies) {
            w.write_record([fmt_num(*t), fmt_num(*e)])?;
        }
        w.flush()?;
        report["artifacts"] = json!([target]);
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    match failure {
        Some(msg) => Err(Error::Verification(msg)),
        None => Ok(()),
    }
}
