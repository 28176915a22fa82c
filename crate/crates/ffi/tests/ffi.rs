use std::ptr;

use notrade_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { nt_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|c| *c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn solve(rho0: f64, rho1: f64, c: f64, opts: Option<&NtSolverOptions>) -> (NtStatus, *mut NtSolution) {
    let mut sol = ptr::null_mut();
    let o = opts.map_or(ptr::null(), |o| o as *const _);
    let status = unsafe { nt_solve(rho0, rho1, c, o, &mut sol) };
    (status, sol)
}

#[test]
fn solve_and_query() {
    let (status, sol) = solve(0.8, 0.4, 0.5, None);
    assert_eq!(status, NtStatus::Ok);
    assert!(!sol.is_null());
    unsafe {
        let mut lambda = 0.0;
        assert_eq!(nt_solution_lambda(sol, &mut lambda), NtStatus::Ok);
        assert!((lambda - 0.549).abs() < 2e-3, "{lambda}");

        let mut conv = 0;
        assert_eq!(nt_solution_converged(sol, &mut conv), NtStatus::Ok);
        assert_eq!(conv, 1);

        // G(0, +1) = −c/(2ρ1), short slice shifted by c/ρ1
        let (mut gl, mut gs) = (0.0, 0.0);
        assert_eq!(nt_solution_boundary(sol, 0.0, 1, &mut gl), NtStatus::Ok);
        assert_eq!(nt_solution_boundary(sol, 0.0, -1, &mut gs), NtStatus::Ok);
        assert!((gl + 0.625).abs() < 1e-6, "{gl}");
        assert!((gs - gl - 1.25).abs() < 1e-12);

        let mut q = 0;
        assert_eq!(nt_solution_decide(sol, 0.0, gl + 0.01, 1, &mut q), NtStatus::Ok);
        assert_eq!(q, 1);
        assert_eq!(nt_solution_decide(sol, 0.0, gl - 0.01, 1, &mut q), NtStatus::Ok);
        assert_eq!(q, -1);

        let mut h = 0.0;
        assert_eq!(nt_solution_bias(sol, 0.3, -0.2, 1, &mut h), NtStatus::Ok);
        let mut h_mirror = 0.0;
        assert_eq!(nt_solution_bias(sol, -0.3, 0.2, -1, &mut h_mirror), NtStatus::Ok);
        assert!((h - h_mirror).abs() < 1e-6);

        let mut n = 0usize;
        assert_eq!(nt_solution_grid_len(sol, &mut n), NtStatus::Ok);
        let (mut x, mut hv, mut g) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        assert_eq!(nt_solution_tabulate(sol, x.as_mut_ptr(), hv.as_mut_ptr(), g.as_mut_ptr(), n), NtStatus::Ok);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(
            nt_solution_tabulate(sol, x.as_mut_ptr(), hv.as_mut_ptr(), g.as_mut_ptr(), n - 1),
            NtStatus::BufferTooSmall
        );

        let mut r = NtSimResult::default();
        assert_eq!(nt_simulate(sol, 20_000, 9, &mut r), NtStatus::Ok);
        assert_eq!(r.n_steps, 20_000);
        assert!((r.net - (r.gross - r.cost)).abs() < 1e-12);
        let mut r2 = NtSimResult::default();
        nt_simulate(sol, 20_000, 9, &mut r2);
        assert_eq!(r, r2);
        assert_eq!(nt_simulate(sol, 0, 9, &mut r2), NtStatus::SimulationFailure);

        nt_solution_free(sol);
    }
}

#[test]
fn invalid_arguments_report_errors() {
    let (status, sol) = solve(0.8, 0.0, 0.5, None);
    assert_eq!(status, NtStatus::InvalidArgument);
    assert!(sol.is_null());
    assert!(last_error().contains("rho1"), "{}", last_error());

    let (status, _) = solve(0.8, -0.4, 0.5, None);
    assert_eq!(status, NtStatus::InvalidArgument);

    let mut opts = nt_solver_options_default();
    opts.grid_nodes = 2;
    assert_eq!(solve(0.8, 0.4, 0.5, Some(&opts)).0, NtStatus::InvalidArgument);

    unsafe {
        assert_eq!(nt_solve(0.8, 0.4, 0.5, ptr::null(), ptr::null_mut()), NtStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(nt_solution_lambda(ptr::null(), &mut v), NtStatus::NullPointer);
        assert_eq!(nt_naive_boundary(0.8, 0.4, 0.5, 0.0, 0, &mut v), NtStatus::InvalidArgument);
        nt_solution_free(ptr::null_mut());
    }
}

#[test]
fn not_converged_still_returns_iterate() {
    let mut opts = nt_solver_options_default();
    opts.max_iterations = 2;
    let (status, sol) = solve(0.8, 0.4, 0.5, Some(&opts));
    assert_eq!(status, NtStatus::NotConverged);
    assert!(!sol.is_null());
    unsafe {
        let (mut it, mut conv) = (0u32, 1i32);
        nt_solution_iterations(sol, &mut it);
        nt_solution_converged(sol, &mut conv);
        assert_eq!((it, conv), (2, 0));
        nt_solution_free(sol);
    }
}

#[test]
fn closed_form_boundaries() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(nt_naive_boundary(0.8, 0.4, 0.5, 1.0, 1, &mut v), NtStatus::Ok);
        assert!((v - (-2.0 - 0.625)).abs() < 1e-14);
        assert_eq!(nt_first_order_boundary(0.8, 0.4, 0.0, 1.0, 1, &mut v), NtStatus::Ok);
        assert_eq!(v, -2.0);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/notrade.h")).unwrap();
    for name in [
        "nt_solver_options_default",
        "nt_solve",
        "nt_solution_free",
        "nt_solution_lambda",
        "nt_solution_iterations",
        "nt_solution_converged",
        "nt_solution_boundary",
        "nt_solution_bias",
        "nt_solution_decide",
        "nt_solution_grid_len",
        "nt_solution_tabulate",
        "nt_naive_boundary",
        "nt_first_order_boundary",
        "nt_simulate",
        "nt_last_error_message",
        "nt_version",
        "typedef struct NtSolution NtSolution",
        "NT_STATUS_NOT_CONVERGED = 3",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
    let version = unsafe { std::ffi::CStr::from_ptr(nt_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/notrade.h");
    let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-std=c99", "-Wall", "-x", "c", header]).output()
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
