//! Acceptance gate: one `[PASS]`/`[FAIL]` line per criterion.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use ncbe_cli::config::{Command, RunConfig};
use ncbe_cli::experiments;
use ncbe_core::cases::reference::{C1_POINT_VALUES, MOMENT_TABLES};
use ncbe_core::cases::{self, CaseId, TestCase};
use ncbe_core::observables::{moment, NormKind};
use ncbe_core::operators::oracle::{dense_oracle_residuals, ORACLE_DOF_LIMIT};
use ncbe_core::stepper::{project_initial, run, StepperConfig, TimeScheme};
use ncbe_core::{build_dof_map, AssemblyOptions, ExactSolution, OperatorSet};

struct Gate {
    results: Vec<(String, bool)>,
}

impl Gate {
    fn record(&mut self, id: &str, pass: bool, detail: String, start: Instant) {
        let tag = if pass { "[PASS]" } else { "[FAIL]" };
        println!("{tag} {id} {detail} ({:.1}s)", start.elapsed().as_secs_f64());
        self.results.push((id.to_string(), pass));
    }

    fn error(&mut self, id: &str, err: impl std::fmt::Display, start: Instant) {
        self.record(id, false, format!("error: {err}"), start);
    }
}

fn random_alpha(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Small operator configurations covering every registry kernel pair.
fn oracle_configs() -> Vec<(String, TestCase, usize, usize, usize)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in cases::registry() {
        let ns: &[usize] = if c.dim == 3 { &[2] } else { &[2, 4, 8] };
        let betas: Vec<_> = std::iter::once(c.beta.clone()).chain(c.beta_variants.clone()).collect();
        for (b, beta) in betas.iter().enumerate() {
            let key = format!("{}d {} {}", c.dim, c.gamma.name, beta.name);
            if !seen.insert(key.clone()) {
                continue;
            }
            for &n in ns {
                for r in [1, 2] {
                    if (n * r + 1).pow(c.dim as u32) <= ORACLE_DOF_LIMIT {
                        out.push((key.clone(), c.clone(), b, n, r));
                    }
                }
            }
        }
    }
    out
}

fn breakage_of(c: &TestCase, b: usize) -> ncbe_core::BreakageKernel {
    if b == 0 {
        c.beta.clone()
    } else {
        c.beta_variants[b - 1].clone()
    }
}

fn assemble(c: &TestCase, b: usize, n: usize, r: usize) -> ncbe_core::Result<OperatorSet> {
    let dofs = build_dof_map(&c.mesh(n)?, r)?;
    OperatorSet::assemble(&dofs, &c.gamma, &breakage_of(c, b), AssemblyOptions::default())
}

fn ac1(gate: &mut Gate) {
    let start = Instant::now();
    let configs = oracle_configs();
    let res: ncbe_core::Result<Vec<(String, f64)>> = configs
        .par_iter()
        .map(|(key, c, b, n, r)| {
            let ops = assemble(c, *b, *n, *r)?;
            let beta = breakage_of(c, *b);
            let alphas: Vec<Vec<f64>> = (0..10).map(|seed| random_alpha(ops.len(), seed)).collect();
            let refs: Vec<&[f64]> = alphas.iter().map(Vec::as_slice).collect();
            let slow_all = dense_oracle_residuals(ops.dofs(), &c.gamma, &beta, &refs)?;
            let mut worst = 0.0f64;
            for (alpha, slow) in alphas.iter().zip(&slow_all) {
                let fast = ops.nonlinear_residual(alpha);
                let diff = fast.iter().zip(&slow.residual).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(diff / (1.0 + max_abs(&slow.residual)));
            }
            Ok((format!("{key} N={n} r={r}"), worst))
        })
        .collect();
    match res {
        Ok(rows) => {
            let (label, worst) = rows.iter().fold((String::new(), 0.0f64), |acc, (l, w)| {
                if *w > acc.1 {
                    (l.clone(), *w)
                } else {
                    acc
                }
            });
            let elapsed = start.elapsed().as_secs_f64();
            let pass = worst <= 1e-10 && elapsed < 60.0;
            gate.record(
                "AC-1 oracle equivalence",
                pass,
                format!("{} configurations x 10 vectors, worst scaled difference {worst:.2e} at {label}", rows.len()),
                start,
            );
        }
        Err(e) => gate.error("AC-1 oracle equivalence", e, start),
    }
}

fn ac2(gate: &mut Gate) {
    let start = Instant::now();
    let configs = oracle_configs();
    let res: ncbe_core::Result<Vec<(String, f64)>> = configs
        .par_iter()
        .map(|(key, c, b, n, r)| {
            let ops = assemble(c, *b, *n, *r)?;
            let mut worst = 0.0f64;
            for seed in 0..10 {
                let a = random_alpha(ops.len(), 2 * seed);
                let d = random_alpha(ops.len(), 2 * seed + 1);
                let lin = ops.linearize(&a);
                let jd = ops.jacobian_apply(&lin, &d);
                let eps = 1e-5;
                let shifted = |s: f64| -> Vec<f64> { a.iter().zip(&d).map(|(x, y)| x + s * y).collect() };
                let plus = ops.nonlinear_residual(&shifted(eps));
                let minus = ops.nonlinear_residual(&shifted(-eps));
                let diff: f64 = plus
                    .iter()
                    .zip(&minus)
                    .zip(&jd)
                    .map(|((p, m), j)| ((p - m) / (2.0 * eps) - j).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let norm = jd.iter().map(|v| v * v).sum::<f64>().sqrt();
                worst = worst.max(diff / norm.max(f64::MIN_POSITIVE));
            }
            Ok((format!("{key} N={n} r={r}"), worst))
        })
        .collect();
    match res {
        Ok(rows) => {
            let (label, worst) =
                rows.iter().fold((String::new(), 0.0f64), |acc, (l, w)| if *w > acc.1 { (l.clone(), *w) } else { acc });
            gate.record(
                "AC-2 jacobian",
                worst <= 1e-6,
                format!("{} configurations x 10 directions, worst relative difference {worst:.2e} at {label}", rows.len()),
                start,
            );
        }
        Err(e) => gate.error("AC-2 jacobian", e, start),
    }
}

fn march(
    c: &TestCase,
    n: usize,
    r: usize,
    tau: f64,
    t_final: f64,
    scheme: TimeScheme,
    snapshots: &[f64],
) -> ncbe_core::Result<(OperatorSet, ncbe_core::Trajectory)> {
    let ops = assemble(c, 0, n, r)?;
    let alpha0 = project_initial(&c.initial, &ops)?;
    let forcing = c.forcing(ops.dofs())?;
    let cfg = StepperConfig { tau, t_final, scheme, ..Default::default() };
    let traj = run(&ops, alpha0, &cfg, snapshots, forcing.as_ref())?;
    Ok((ops, traj))
}

fn ac3(gate: &mut Gate) {
    let start = Instant::now();
    let jobs = [(CaseId::M1, 160), (CaseId::M2, 160), (CaseId::M4, 160), (CaseId::M5, 80), (CaseId::M6, 20)];
    let rows: Vec<(CaseId, Result<(f64, f64), String>)> = jobs
        .par_iter()
        .map(|&(id, n)| {
            let out = cases::case(id).and_then(|c| march(&c, n, 1, 1e-3, c.t_final, TimeScheme::Bdf2, &[]));
            let summary = out.map_err(|e| e.to_string()).map(|(_, traj)| {
                let m1 = traj.steps[0].hypervolume;
                let drift = traj.steps.iter().fold(0.0f64, |m, s| m.max(((s.hypervolume - m1) / m1).abs()));
                let dip = traj.steps.windows(2).fold(f64::NEG_INFINITY, |m, w| m.max(w[0].number - w[1].number));
                (drift, dip)
            });
            (id, summary)
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, r) in rows {
        match r {
            Ok((drift, dip)) => {
                pass &= drift <= 1e-8 && dip <= 1e-10;
                parts.push(format!("{id}: drift {drift:.1e}, smallest number increment {:.1e}", -dip));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{id}: {e}"));
            }
        }
    }
    gate.record("AC-3 conservation", pass, parts.join("; "), start);
}

fn convergence(case: CaseId, ns: &[usize], degrees: &[usize]) -> ncbe_cli::Result<Vec<(usize, Vec<f64>, Vec<f64>, Vec<f64>)>> {
    let mut cfg = RunConfig::new(case);
    cfg.n = ns.to_vec();
    cfg.degrees = degrees.to_vec();
    let c = cases::case(case)?;
    let res = cfg.resolve(&c, Command::Convergence)?;
    let dir = tempfile::tempdir().expect("temporary directory");
    let reports = experiments::convergence_reports(&cfg, &c, &res, dir.path())?;
    let mut out = Vec::new();
    for (r, rep, _) in reports {
        let eoc = |k: NormKind| -> Vec<f64> {
            rep.eoc(k).map(|v| v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect()).unwrap_or_default()
        };
        out.push((r, eoc(NormKind::L2), eoc(NormKind::H1), eoc(NormKind::RelLinf)));
    }
    Ok(out)
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}

fn ac4(gate: &mut Gate) {
    let start = Instant::now();
    match convergence(CaseId::C1, &[20, 40, 80, 160, 320], &[1]) {
        Ok(rows) => {
            let (_, l2, h1, rl) = &rows[0];
            let (a, b, c) = (*l2.last().unwrap(), *h1.last().unwrap(), *rl.last().unwrap());
            let pass = within(a, 2.0, 0.1) && within(b, 1.0, 0.1) && within(c, 2.0, 0.1);
            gate.record(
                "AC-4 1D spatial order",
                pass,
                format!("c1 r=1 EOC L2 {} H1 {} RelLinf {}", fmt_list(l2), fmt_list(h1), fmt_list(rl)),
                start,
            );
        }
        Err(e) => gate.error("AC-4 1D spatial order", e, start),
    }
}

fn ac5(gate: &mut Gate) {
    let start = Instant::now();
    let c3 = convergence(CaseId::C3, &[2, 4, 8], &[1, 2, 3]);
    let c4 = convergence(CaseId::C4, &[1, 2, 4, 8], &[1]);
    match (c3, c4) {
        (Ok(c3), Ok(c4)) => {
            let mut pass = true;
            let mut parts = Vec::new();
            for (r, l2, _, _) in &c3 {
                let last = *l2.last().unwrap();
                pass &= within(last, *r as f64 + 1.0, 0.15);
                parts.push(format!("c3 r={r} L2 EOC {}", fmt_list(l2)));
            }
            let (_, l2, _, _) = &c4[0];
            pass &= within(*l2.last().unwrap(), 2.0, 0.15);
            parts.push(format!("c4 r=1 L2 EOC {}", fmt_list(l2)));
            gate.record("AC-5 2D/3D spatial order", pass, parts.join("; "), start);
        }
        (Err(e), _) | (_, Err(e)) => gate.error("AC-5 2D/3D spatial order", e, start),
    }
}

fn final_moment(out: &(OperatorSet, ncbe_core::Trajectory), k: &[u32]) -> ncbe_core::Result<f64> {
    moment(&out.1.final_snapshot().expect("final state").alpha, out.0.dofs(), k)
}

fn printed_rel(case: &str, k: &[u32], n: usize) -> f64 {
    let t = MOMENT_TABLES.iter().find(|t| t.case == case && t.k == k).expect("reference table");
    let j = t.grids.iter().position(|&g| g == n).expect("reference grid");
    t.rows.last().expect("rows").2[j].1
}

fn factor3(v: f64, target: f64) -> bool {
    v >= target / 3.0 && v <= target * 3.0
}

fn ac6(gate: &mut Gate) {
    let start = Instant::now();
    let run_moments = |id: CaseId, n: usize| -> ncbe_core::Result<(f64, f64)> {
        let c = cases::case(id)?;
        let out = march(&c, n, 1, 1e-3, c.t_final, TimeScheme::Bdf2, &[])?;
        let k0 = vec![0; c.dim];
        let k1 = vec![1; c.dim];
        let e0 = c.exact_moment(&k0, c.t_final)?;
        let m0 = final_moment(&out, &k0)?;
        let m1 = final_moment(&out, &k1)?;
        Ok(((m0 - e0).abs() / e0, (m1 - 1.0).abs()))
    };
    let jobs = [(CaseId::M1, 80), (CaseId::M1, 160), (CaseId::M1, 320), (CaseId::M2, 320), (CaseId::M5, 160), (CaseId::M6, 25)];
    let res: ncbe_core::Result<Vec<(f64, f64)>> = jobs.par_iter().map(|&(id, n)| run_moments(id, n)).collect();
    match res {
        Ok(v) => {
            let m1_m0: Vec<f64> = v[..3].iter().map(|x| x.0).collect();
            let m1_m1: Vec<f64> = v[..3].iter().map(|x| x.1).collect();
            let band0 = (8e-4..=8e-3).contains(&m1_m0[2]);
            let band1 = (7e-4..=7e-3).contains(&m1_m1[2]);
            let mono = m1_m0.windows(2).all(|w| w[1] < w[0]) && m1_m1.windows(2).all(|w| w[1] < w[0]);
            let m2 = factor3(v[3].0, printed_rel("m2", &[0], 320));
            let m5 = factor3(v[4].0, printed_rel("m5", &[0, 0], 160));
            let m6 = factor3(v[5].0, printed_rel("m6", &[0, 0, 0], 25));
            let ok = |b: bool| if b { "ok" } else { "out" };
            let detail = format!(
                "m1 M0 rel {:.3e} ({}), M1 dev {:.3e} ({}), N-monotone {} [M0 {:.3e}/{:.3e}/{:.3e}, M1 {:.3e}/{:.3e}/{:.3e}]; \
                 m2 M0 rel {:.3e} ({}); m5 M00 rel {:.3e} ({}); m6 M000 rel {:.3e} ({})",
                m1_m0[2],
                ok(band0),
                m1_m1[2],
                ok(band1),
                ok(mono),
                m1_m0[0],
                m1_m0[1],
                m1_m0[2],
                m1_m1[0],
                m1_m1[1],
                m1_m1[2],
                v[3].0,
                ok(m2),
                v[4].0,
                ok(m5),
                v[5].0,
                ok(m6)
            );
            gate.record("AC-6 moment tables", band0 && band1 && mono && m2 && m5 && m6, detail, start);
        }
        Err(e) => gate.error("AC-6 moment tables", e, start),
    }
}

/// Observed orders from `|M(τ) - M_ref|` over halving steps, `M_ref` from BDF2 at `τ_ref`.
fn temporal_orders(id: CaseId, n: usize, scheme: TimeScheme, taus: &[f64], tau_ref: f64) -> ncbe_core::Result<(Vec<f64>, Vec<f64>)> {
    let c = cases::case(id)?;
    let k = vec![0; c.dim];
    let mut jobs: Vec<(f64, TimeScheme)> = taus.iter().map(|&t| (t, scheme)).collect();
    jobs.push((tau_ref, TimeScheme::Bdf2));
    let values: ncbe_core::Result<Vec<f64>> = jobs
        .par_iter()
        .map(|&(tau, s)| final_moment(&march(&c, n, 1, tau, c.t_final, s, &[])?, &k))
        .collect();
    let values = values?;
    let reference = *values.last().unwrap();
    let errs: Vec<f64> = values[..taus.len()].iter().map(|v| (v - reference).abs()).collect();
    let orders = errs.windows(2).zip(taus.windows(2)).map(|(e, t)| (e[0] / e[1]).ln() / (t[0] / t[1]).ln()).collect();
    Ok((errs, orders))
}

fn ac7(gate: &mut Gate) {
    let start = Instant::now();
    let taus = [4e-3, 2e-3, 1e-3];
    let bdf2 = temporal_orders(CaseId::M1, 320, TimeScheme::Bdf2, &taus, 2.5e-4);
    let be = temporal_orders(CaseId::M1, 320, TimeScheme::BackwardEuler, &taus, 2.5e-4);
    match (bdf2, be) {
        (Ok((e2, p2)), Ok((e1, p1))) => {
            let pass = p2.iter().all(|&p| within(p, 2.0, 0.2)) && p1.iter().all(|&p| within(p, 1.0, 0.2));
            let sci = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join("/");
            gate.record(
                "AC-7 temporal order",
                pass,
                format!(
                    "m1 M0(T): BDF2 errors {} orders {}; BE errors {} orders {}",
                    sci(&e2),
                    fmt_list(&p2),
                    sci(&e1),
                    fmt_list(&p1)
                ),
                start,
            );
        }
        (Err(e), _) | (_, Err(e)) => gate.error("AC-7 temporal order", e, start),
    }
    // supplementary measurement on a case whose number moment is not linear in time
    let start = Instant::now();
    let taus = [3e-3, 1.5e-3, 7.5e-4];
    let bdf2 = temporal_orders(CaseId::M2, 320, TimeScheme::Bdf2, &taus, 1.875e-4);
    let be = temporal_orders(CaseId::M2, 320, TimeScheme::BackwardEuler, &taus, 1.875e-4);
    if let (Ok((_, p2)), Ok((_, p1))) = (bdf2, be) {
        println!(
            "       AC-7 supplementary (not counted): m2 M0(T) orders BDF2 {} BE {} ({:.1}s)",
            fmt_list(&p2),
            fmt_list(&p1),
            start.elapsed().as_secs_f64()
        );
    }
}

fn ac8(gate: &mut Gate) {
    let start = Instant::now();
    let res = (|| -> ncbe_core::Result<Vec<(f64, f64, f64, f64)>> {
        let c = cases::case(CaseId::C1)?;
        let exact = c.exact_solution().expect("c1 has an exact solution");
        let times = [0.3, 0.6, 0.9];
        let (ops, traj) = march(&c, 320, 1, c.tau, c.t_final, TimeScheme::Bdf2, &times)?;
        let mut rows = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            let snap = traj.at(t).expect("snapshot stored");
            let err = (ops.dofs().eval(&snap.alpha, &[5.0])? - exact.value(&[5.0], t)).abs();
            let (_, _, _, cols) = C1_POINT_VALUES[i];
            rows.push((t, err, cols[1], cols[3]));
        }
        Ok(rows)
    })();
    match res {
        Ok(rows) => {
            let hard = rows.iter().all(|&(_, e, mvim, _)| e <= mvim / 10.0);
            let soft = rows.iter().all(|&(_, e, _, fem)| e <= 10.0 * fem && e >= fem / 10.0);
            let parts: Vec<String> = rows
                .iter()
                .map(|(t, e, m, f)| format!("t={t}: err {e:.3e} (MVIM {m:.3e}, printed FEM {f:.3e})"))
                .collect();
            gate.record(
                "AC-8 point values",
                hard,
                format!("{}; soft factor-10 match with printed FEM column: {}", parts.join("; "), if soft { "yes" } else { "no" }),
                start,
            );
        }
        Err(e) => gate.error("AC-8 point values", e, start),
    }
}

fn ac9(gate: &mut Gate) {
    let start = Instant::now();
    let res = (|| -> ncbe_core::Result<(f64, bool, f64, bool)> {
        let check = ncbe_core::BreakageKernel::ternary_literal()?.check_hypervolume_conservation(&[1.0], 1e-12)?;
        let report = cases::discrepancy_report()?;
        let m3 = report.iter().any(|d| d.case == CaseId::M3 && (d.derived + 0.4).abs() < 1e-9);
        let m4 = cases::rate_checks()?
            .into_iter()
            .find(|r| r.case == CaseId::M4)
            .map(|r| r.oracle)
            .unwrap_or(f64::NAN);
        let m4_listed = report.iter().any(|d| d.case == CaseId::M4 && (d.derived - m4).abs() < 1e-12);
        Ok((check.defect, !check.pass && m3, m4, m4_listed))
    })();
    match res {
        Ok((defect, m3_ok, m4, m4_listed)) => {
            let pass = m3_ok && (defect + 0.4).abs() < 1e-9 && within(m4, 0.79739, 1e-4) && m4_listed;
            gate.record(
                "AC-9 discrepancy report",
                pass,
                format!("m3 literal hypervolume defect at y=1 {defect:.6}; m4 oracle rate {m4:.6} listed {m4_listed}"),
                start,
            );
        }
        Err(e) => gate.error("AC-9 discrepancy report", e, start),
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output directory")
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("csv")))
        .collect();
    out.sort();
    out
}

fn ac10(gate: &mut Gate) {
    let start = Instant::now();
    let res = (|| -> ncbe_cli::Result<(usize, bool)> {
        let mut identical = true;
        let mut count = 0;
        let random = ncbe_cli::GridMode::Random;
        let uniform = ncbe_cli::GridMode::Uniform;
        let configs: Vec<(CaseId, &str, Vec<usize>, ncbe_cli::GridMode)> = vec![
            (CaseId::M2, "moments", vec![20, 40], random),
            (CaseId::C1, "convergence", vec![10, 20, 40], random),
            (CaseId::C2, "convergence", vec![80, 160], uniform),
        ];
        for (id, cmd, ns, grid) in configs {
            let mut outputs = Vec::new();
            for _ in 0..2 {
                let dir = tempfile::tempdir().expect("temporary directory");
                let mut cfg = RunConfig::new(id);
                cfg.n = ns.clone();
                cfg.grid = grid;
                cfg.seed = 7;
                cfg.output = Some(dir.path().to_path_buf());
                match cmd {
                    "moments" => experiments::cmd_moments(&cfg)?,
                    _ => experiments::cmd_convergence(&cfg)?,
                };
                outputs.push(files(dir.path()));
            }
            count += outputs[0].len();
            identical &= !outputs[0].is_empty() && outputs[0] == outputs[1];
        }
        Ok((count, identical))
    })();
    match res {
        Ok((count, identical)) => gate.record(
            "AC-10 determinism",
            identical,
            format!("{count} CSV files compared byte for byte across repeated runs"),
            start,
        ),
        Err(e) => gate.error("AC-10 determinism", e, start),
    }
}

fn main() -> ExitCode {
    let filter: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').map(str::to_string).collect());
    let selected = |n: &str| filter.as_ref().is_none_or(|f| f.iter().any(|x| x == n));
    let mut gate = Gate { results: Vec::new() };
    let criteria: [(&str, fn(&mut Gate)); 10] = [
        ("1", ac1),
        ("2", ac2),
        ("3", ac3),
        ("4", ac4),
        ("5", ac5),
        ("6", ac6),
        ("7", ac7),
        ("8", ac8),
        ("9", ac9),
        ("10", ac10),
    ];
    for (n, f) in criteria {
        if selected(n) {
            f(&mut gate);
        }
    }
    let failed: Vec<&str> = gate.results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    println!("acceptance: {} passed, {} failed", gate.results.len() - failed.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
