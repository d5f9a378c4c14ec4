use ncbe_core::cases::{self, CaseId, TestCase};
use ncbe_core::observables::{conservation_report, eoc, error_norms, moment, NormKind};
use ncbe_core::operators::OperatorDump;
use ncbe_core::stepper::{project_initial, run, StepperConfig, TimeScheme};
use ncbe_core::{build_dof_map, AssemblyOptions, ExactSolution, Nonlinearity, OperatorSet, Trajectory};

fn march(c: &TestCase, n: usize, r: usize, tau: f64, t_final: f64, scheme: TimeScheme) -> (OperatorSet, Trajectory) {
    let dofs = build_dof_map(&c.mesh(n).unwrap(), r).unwrap();
    let ops = OperatorSet::assemble(&dofs, &c.gamma, &c.beta, AssemblyOptions::default()).unwrap();
    let alpha0 = project_initial(&c.initial, &ops).unwrap();
    let forcing = c.forcing(&dofs).unwrap();
    let cfg = StepperConfig { tau, t_final, scheme, ..Default::default() };
    let traj = run(&ops, alpha0, &cfg, &[], forcing.as_ref()).unwrap();
    (ops, traj)
}

#[test]
fn moment_cases_keep_hypervolume_on_short_horizons() {
    for (id, n) in [(CaseId::M1, 40), (CaseId::M2, 40), (CaseId::M5, 10), (CaseId::M6, 4)] {
        let c = cases::case(id).unwrap();
        let (ops, traj) = march(&c, n, 1, 1e-2, 0.3, TimeScheme::Bdf2);
        let rep = conservation_report(&traj, &ops).unwrap();
        assert!(rep.max_drift <= 1e-10, "{id}: {}", rep.max_drift);
        assert!(rep.number_nondecreasing, "{id}");
    }
}

#[test]
fn number_moment_follows_its_closure_up_to_truncation() {
    // product kernel: dM0/dt = M1^2 (1 - O(x_min)), with M1 the truncated first moment of e^{-x}
    let c = cases::case(CaseId::M1).unwrap();
    let (ops, traj) = march(&c, 40, 2, 1e-2, 1.0, TimeScheme::Bdf2);
    let snap = traj.final_snapshot().unwrap();
    let alpha0 = project_initial(&c.initial, &ops).unwrap();
    let m1 = moment(&alpha0, ops.dofs(), &[1]).unwrap();
    let m0_start = moment(&alpha0, ops.dofs(), &[0]).unwrap();
    let m0 = moment(&snap.alpha, ops.dofs(), &[0]).unwrap();
    assert!((m0 - (m0_start + m1 * m1)).abs() < 1e-8, "{m0} {m0_start} {m1}");
}

#[test]
fn manufactured_case_converges_at_second_order() {
    let c = cases::case(CaseId::C1).unwrap();
    let exact = c.exact_solution().unwrap();
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for n in [10, 20, 40] {
        let (ops, traj) = march(&c, n, 1, 1e-3, 0.2, TimeScheme::Bdf2);
        let snap = traj.final_snapshot().unwrap();
        let norms = error_norms(&snap.alpha, ops.dofs(), &exact, snap.t, None).unwrap();
        errs.push(norms.iter().find(|(k, _)| *k == NormKind::L2).unwrap().1);
        hs.push(5.0 / n as f64);
    }
    let orders = eoc(&errs, &hs).unwrap();
    let last = orders.last().unwrap().unwrap();
    assert!((last - 2.0).abs() < 0.2, "{orders:?}");
    assert!(exact.value(&[1.0], 0.2) > 0.0);
}

#[test]
fn backward_euler_and_bdf2_agree_as_tau_shrinks() {
    let c = cases::case(CaseId::M2).unwrap();
    let m0 = |scheme, tau| {
        let (ops, traj) = march(&c, 20, 1, tau, 0.3, scheme);
        moment(&traj.final_snapshot().unwrap().alpha, ops.dofs(), &[0]).unwrap()
    };
    let reference = m0(TimeScheme::Bdf2, 1e-3);
    let e_be = (m0(TimeScheme::BackwardEuler, 1e-2) - reference).abs();
    let e_bdf2 = (m0(TimeScheme::Bdf2, 1e-2) - reference).abs();
    assert!(e_bdf2 < e_be, "{e_bdf2} {e_be}");
}

#[test]
fn operator_dump_round_trips_through_a_file() {
    let c = cases::case(CaseId::M3).unwrap();
    let dofs = build_dof_map(&c.mesh(6).unwrap(), 2).unwrap();
    let ops = OperatorSet::assemble(&dofs, &c.gamma, &c.beta, AssemblyOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m3.ops");
    ops.to_dump().save(&path).unwrap();
    let back = OperatorSet::from_dump(&OperatorDump::load(&path).unwrap(), &dofs, Nonlinearity::Consistent).unwrap();
    let alpha: Vec<f64> = (0..dofs.len()).map(|i| 1.0 / (1.0 + i as f64)).collect();
    assert_eq!(ops.nonlinear_residual(&alpha), back.nonlinear_residual(&alpha));
    assert_eq!(back.kernel_id(), ops.kernel_id());
}
