//! Single runs, moment studies and convergence sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use ncbe_core::basis::build_dof_map;
use ncbe_core::cases::{self, CaseId, TestCase};
use ncbe_core::mesh::{Axis1D, Grading, TensorMesh};
use ncbe_core::observables::{
    error_norms, moment_vector, ErrorReport, ErrorRow, MomentSeries, NormKind,
};
use ncbe_core::operators::OperatorDump;
use ncbe_core::report::{self, num, Csv};
use ncbe_core::stepper::{project_initial, run, StepperConfig};
use ncbe_core::{AssemblyOptions, OperatorSet, Trajectory};

use crate::config::{Command, GridMode, Resolved, RunConfig, OUTPUT_ROOT_ENV};
use crate::error::{CliError, Result};

/// Everything produced by one solve.
pub struct RunOutput {
    pub n: usize,
    pub degree: usize,
    pub mesh: TensorMesh,
    pub ops: OperatorSet,
    pub trajectory: Trajectory,
}

pub fn build_mesh(case: &TestCase, n: usize, grid: GridMode, seed: u64) -> Result<TensorMesh> {
    let axis = |a: usize| -> Result<Axis1D> {
        let s = seed.wrapping_add(a as u64);
        Ok(match grid {
            GridMode::Uniform => Axis1D::uniform(case.x_min, case.x_max, n)?,
            GridMode::Geometric { ratio } => {
                Axis1D::nonuniform(case.x_min, case.x_max, n, Grading::Geometric { ratio }, s)?
            }
            GridMode::Random => Axis1D::nonuniform(case.x_min, case.x_max, n, Grading::Random, s)?,
        })
    };
    let axes = (0..case.dim).map(axis).collect::<Result<Vec<_>>>()?;
    Ok(TensorMesh::new(axes)?)
}

fn operator_path(dir: &Path, case: CaseId, n: usize, degree: usize) -> PathBuf {
    dir.join("operators").join(format!("{case}_n{n}_r{degree}.ops"))
}

/// Assembles (or reloads) the operators and marches one mesh to the final time.
pub fn solve(
    cfg: &RunConfig,
    case: &TestCase,
    res: &Resolved,
    n: usize,
    degree: usize,
    out_dir: Option<&Path>,
) -> Result<RunOutput> {
    let mesh = build_mesh(case, n, cfg.grid, cfg.seed)?;
    let dofs = build_dof_map(&mesh, degree)?;
    let beta = case.breakage(cfg.breakage.as_deref())?;
    let opts = AssemblyOptions { mode: cfg.mode, quad_points: cfg.quad_points };
    let cached = out_dir.map(|d| operator_path(d, case.id, n, degree)).filter(|p| cfg.reuse_operators && p.exists());
    let ops = match cached {
        Some(p) => {
            log::info!("loading operators from {}", p.display());
            OperatorSet::from_dump(&OperatorDump::load(&p)?, &dofs, cfg.mode)?
        }
        None => {
            let ops = OperatorSet::assemble(&dofs, &case.gamma, &beta, opts)?;
            if let (true, Some(d)) = (cfg.dump_operators, out_dir) {
                let p = operator_path(d, case.id, n, degree);
                create_dir(p.parent().expect("operator path has a parent"))?;
                ops.to_dump().save(&p)?;
            }
            ops
        }
    };
    if !case.mass_conserving && cfg.breakage.is_none() {
        log::warn!("case {} uses a breakage kernel that does not conserve hypervolume", case.id);
    }
    let alpha0 = project_initial(&case.initial, &ops)?;
    let forcing = case.forcing(&dofs)?;
    let mut scfg = StepperConfig { tau: res.tau, t_final: res.t_final, scheme: cfg.scheme, ..Default::default() };
    if let Some(tol) = cfg.newton_tol {
        scfg.newton_tol = tol;
    }
    let start = std::time::Instant::now();
    let trajectory = run(&ops, alpha0, &scfg, &res.snapshots, forcing.as_ref())?;
    log::info!(
        "case {} n={n} r={degree}: {} dofs, {} steps in {:.2?}",
        case.id,
        dofs.len(),
        trajectory.steps.len() - 1,
        start.elapsed()
    );
    Ok(RunOutput { n, degree, mesh, ops, trajectory })
}

/// `<output>` when given, otherwise `<root>/<command>-<case>` with the root taken from the
/// environment or the working directory.
pub fn output_dir(cfg: &RunConfig, command: &str) -> PathBuf {
    if let Some(o) = &cfg.output {
        return o.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("ncbe-out"));
    root.join(format!("{command}-{}", cfg.case))
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn moment_indices(dim: usize) -> [Vec<u32>; 2] {
    [vec![0; dim], vec![1; dim]]
}

fn moment_label(k: &[u32]) -> String {
    format!("M{}", k.iter().map(|e| e.to_string()).collect::<String>())
}

/// Moments at every snapshot against the stated closures.
pub fn moment_series(out: &RunOutput, case: &TestCase) -> Result<Vec<MomentSeries>> {
    moment_indices(case.dim)
        .iter()
        .map(|k| {
            let exact = |t: f64| case.exact_moment(k, t).unwrap_or(f64::NAN);
            Ok(MomentSeries::from_trajectory(&out.trajectory, out.ops.dofs(), k, Some(&exact))?)
        })
        .collect()
}

fn snapshot_csv(out: &RunOutput, case: &TestCase) -> Result<Csv> {
    let series = moment_series(out, case)?;
    let mut header = vec!["t".to_string(), "step".to_string(), "newton_iterations".to_string()];
    for s in &series {
        let l = moment_label(&s.k);
        header.extend([l.clone(), format!("{l}_exact"), format!("{l}_rel_err")]);
    }
    let exact = case.exact_solution();
    if exact.is_some() {
        header.extend(NormKind::ALL.iter().map(|k| k.name().to_string()));
    }
    let mut csv = Csv::new(header);
    let region = case.error_region(&out.mesh);
    for (i, snap) in out.trajectory.snapshots.iter().enumerate() {
        let mut row = vec![num(snap.t), snap.step.to_string(), snap.newton_iterations.to_string()];
        for s in &series {
            let ex = s.exact.as_ref().map(|e| e[i]).unwrap_or(f64::NAN);
            let rel = s.relative_errors().map(|r| r[i]).unwrap_or(f64::NAN);
            row.extend([num(s.numerical[i]), num(ex), num(rel)]);
        }
        if let Some(ex) = &exact {
            let norms = error_norms(&snap.alpha, out.ops.dofs(), ex, snap.t, region.as_ref())?;
            row.extend(norms.iter().map(|(_, v)| num(*v)));
        }
        csv.push(row);
    }
    Ok(csv)
}

fn coefficients_csv(out: &RunOutput) -> Csv {
    let dofs = out.ops.dofs();
    let mut header: Vec<String> = (0..dofs.dim()).map(|a| format!("x{a}")).collect();
    header.extend(out.trajectory.snapshots.iter().map(|s| format!("t={}", num(s.t))));
    let mut csv = Csv::new(header);
    for i in 0..dofs.len() {
        let mut row: Vec<String> = dofs.node_coordinates(i).into_iter().map(num).collect();
        row.extend(out.trajectory.snapshots.iter().map(|s| num(s.alpha[i])));
        csv.push(row);
    }
    csv
}

fn write_failure(dir: &Path, err: &CliError) -> Result<()> {
    let mut text = format!("error = {err}\n");
    if let CliError::Core(ncbe_core::Error::NonConvergence { time, iterations, residual, history }) = err {
        text.push_str(&format!("time = {time}\niterations = {iterations}\nresidual = {residual}\nhistory ="));
        for h in history {
            text.push_str(&format!(" {}", num(*h)));
        }
        text.push('\n');
    }
    write_file(&dir.join("failure.txt"), &text)
}

fn provenance_text(res: &Resolved, extra: &[(&'static str, String)]) -> String {
    let mut entries = res.provenance.clone();
    entries.extend(extra.iter().cloned());
    report::provenance(&entries)
}

/// Writes `failure.txt` before passing a solver error on.
fn guarded<T>(dir: &Path, r: Result<T>) -> Result<T> {
    if let Err(e) = &r {
        if e.exit_code() == 3 {
            write_failure(dir, e)?;
        }
    }
    r
}

/// One mesh, one degree. Returns the output directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<PathBuf> {
    let case = cases::case(cfg.case)?;
    let res = cfg.resolve(&case, Command::Run)?;
    let dir = output_dir(cfg, "run");
    create_dir(&dir)?;
    write_file(&dir.join("provenance.txt"), &provenance_text(&res, &[("command", "run".into())]))?;
    let (n, r) = (res.ns[0], res.degrees[0]);
    let out = guarded(&dir, solve(cfg, &case, &res, n, r, Some(&dir)))?;
    write_file(&dir.join("trajectory.csv"), &report::trajectory_csv(&out.trajectory).render())?;
    write_file(&dir.join("snapshots.csv"), &snapshot_csv(&out, &case)?.render())?;
    if cfg.save_coefficients {
        write_file(&dir.join("coefficients.csv"), &coefficients_csv(&out).render())?;
    }
    Ok(dir)
}

fn run_jobs(
    cfg: &RunConfig,
    case: &TestCase,
    res: &Resolved,
    jobs: &[(usize, usize)],
    dir: &Path,
) -> Result<Vec<RunOutput>> {
    // parallel solves, collected in job order
    let results: Vec<Result<RunOutput>> =
        jobs.par_iter().map(|&(n, r)| solve(cfg, case, res, n, r, Some(dir))).collect();
    results.into_iter().map(|r| guarded(dir, r)).collect()
}

/// Moment tables over several meshes, one CSV per moment index.
pub fn cmd_moments(cfg: &RunConfig) -> Result<PathBuf> {
    let case = cases::case(cfg.case)?;
    let res = cfg.resolve(&case, Command::Moments)?;
    let dir = output_dir(cfg, "moments");
    create_dir(&dir)?;
    write_file(&dir.join("provenance.txt"), &provenance_text(&res, &[("command", "moments".into())]))?;
    let r = res.degrees[0];
    let jobs: Vec<(usize, usize)> = res.ns.iter().map(|&n| (n, r)).collect();
    let outs = run_jobs(cfg, &case, &res, &jobs, &dir)?;
    let per_job = outs.iter().map(|o| moment_series(o, &case)).collect::<Result<Vec<_>>>()?;
    for (m, k) in moment_indices(case.dim).iter().enumerate() {
        let columns: Vec<(String, MomentSeries)> =
            outs.iter().zip(&per_job).map(|(o, s)| (o.n.to_string(), s[m].clone())).collect();
        let csv = report::moment_table_csv(&columns);
        write_file(&dir.join(format!("moments_{}.csv", moment_label(k))), &csv.render())?;
    }
    for o in &outs {
        write_file(
            &dir.join(format!("trajectory_n{}.csv", o.n)),
            &report::trajectory_csv(&o.trajectory).render(),
        )?;
    }
    if matches!(case.id, CaseId::M3 | CaseId::M4) {
        write_discrepancies(&dir)?;
    }
    Ok(dir)
}

/// Error norms at the final time for every mesh and degree.
pub fn convergence_reports(
    cfg: &RunConfig,
    case: &TestCase,
    res: &Resolved,
    dir: &Path,
) -> Result<Vec<(usize, ErrorReport, Vec<RunOutput>)>> {
    let exact = case
        .exact_solution()
        .ok_or_else(|| CliError::Config(format!("case {} has no exact solution", case.id)))?;
    let jobs: Vec<(usize, usize)> =
        res.degrees.iter().flat_map(|&r| res.ns.iter().map(move |&n| (n, r))).collect();
    let mut outs = run_jobs(cfg, case, res, &jobs, dir)?;
    let mut reports = Vec::new();
    for &r in &res.degrees {
        let (kept, rest): (Vec<_>, Vec<_>) = outs.into_iter().partition(|o| o.degree == r);
        outs = rest;
        let mut rows = Vec::new();
        for o in &kept {
            let snap = o.trajectory.final_snapshot().expect("run stores the final state");
            let region = case.error_region(&o.mesh);
            let norms = error_norms(&snap.alpha, o.ops.dofs(), &exact, snap.t, region.as_ref())?;
            rows.push(ErrorRow { label: format!("N={}", o.n), h: o.mesh.mesh_size(), dofs: o.ops.len(), norms });
        }
        reports.push((r, ErrorReport { rows }, kept));
    }
    Ok(reports)
}

/// Weight carried by the node closest to `x = 1`: its coefficient times `∫ φ`.
pub fn atom_weight(out: &RunOutput) -> Result<f64> {
    let dofs = out.ops.dofs();
    let w = moment_vector(dofs, &[0])?;
    let coords = dofs.axis(0).coordinates();
    let i = (0..coords.len())
        .min_by(|&a, &b| (coords[a] - 1.0).abs().total_cmp(&(coords[b] - 1.0).abs()))
        .expect("axis has nodes");
    let alpha = &out.trajectory.final_snapshot().expect("final state").alpha;
    Ok(alpha[i] * w[i])
}

pub fn cmd_convergence(cfg: &RunConfig) -> Result<PathBuf> {
    let case = cases::case(cfg.case)?;
    let res = cfg.resolve(&case, Command::Convergence)?;
    let dir = output_dir(cfg, "convergence");
    create_dir(&dir)?;
    let mut extra = vec![("command", "convergence".to_string())];
    if case.id == CaseId::C2 {
        extra.push((
            "error_region",
            format!("[x_min, 1 - {} h]; atom weight reported separately", cases::C2_EXCLUDED_ELEMENTS),
        ));
    }
    if case.forcing(&build_dof_map(&case.mesh(1)?, 1)?)?.is_some() {
        extra.push(("forcing", "manufactured source for the truncated box".to_string()));
    }
    write_file(&dir.join("provenance.txt"), &provenance_text(&res, &extra))?;
    let kinds: &[NormKind] = if cfg.grid == GridMode::Uniform {
        &[NormKind::L2, NormKind::RelLinf, NormKind::H1]
    } else {
        &[NormKind::L1, NormKind::L2, NormKind::RelLinf, NormKind::H1]
    };
    for (r, rep, outs) in convergence_reports(cfg, &case, &res, &dir)? {
        write_file(&dir.join(format!("convergence_r{r}.csv")), &report::error_report_csv(&rep, kinds).render())?;
        if case.id == CaseId::C2 {
            let mut csv = Csv::new(["n", "atom_weight", "exact", "abs_err"]);
            for o in &outs {
                let w = atom_weight(o)?;
                let ex = case.atom_weight(res.t_final).expect("c2 has an atom");
                csv.push(vec![o.n.to_string(), num(w), num(ex), num((w - ex).abs())]);
            }
            write_file(&dir.join(format!("atom_r{r}.csv")), &csv.render())?;
        }
    }
    Ok(dir)
}

pub fn write_discrepancies(dir: &Path) -> Result<()> {
    let rows = cases::discrepancy_report()?;
    write_file(&dir.join("discrepancies.csv"), &cases::discrepancy_csv(&rows))?;
    let mut csv = Csv::new(["case", "kernel", "closure_rate", "oracle_rate", "consistent"]);
    for rc in cases::rate_checks()? {
        csv.push(vec![rc.case.to_string(), rc.kernel, num(rc.closure), num(rc.oracle), rc.consistent.to_string()]);
    }
    write_file(&dir.join("rates.csv"), &csv.render())
}

pub fn cmd_discrepancies(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.clone().unwrap_or_else(|| {
        std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("ncbe-out")).join("discrepancies")
    });
    write_discrepancies(&dir)?;
    Ok(dir)
}

pub fn list_cases() -> String {
    let mut s = String::from("id  dim  T      tau     N    exact  title\n");
    for c in cases::registry() {
        s.push_str(&format!(
            "{:<3} {:<4} {:<6} {:<7} {:<4} {:<6} {}\n",
            c.id.as_str(),
            c.dim,
            c.t_final,
            c.tau,
            c.default_n,
            if c.has_exact_solution() { "yes" } else { "no" },
            c.title
        ));
    }
    s
}
