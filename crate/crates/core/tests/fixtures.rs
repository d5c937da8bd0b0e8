//! Regression fixtures of the solver at the default grid, and cross-checks
//! of the discrete problem against independent oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magstar::basis::{AxiField, Basis};
use magstar::config::RunConfig;
use magstar::diagnostics::reconstruct_fields;
use magstar::eos::{solve_radial_star, EquationOfState};
use magstar::equilibrium::{
    EquilibriumProblem, JacobianMode, MagneticCurrentFunction, SolverSettings, StateVector, SweepOrder,
};
use magstar::geometry::x_norm;
use magstar::potentials::{linv_fd_oracle, FdOracleSettings};
use magstar::verify::VerifyContext;

fn k_linear() -> MagneticCurrentFunction {
    MagneticCurrentFunction::new(vec![1.0, 1.0]).unwrap()
}

fn problem_for(gamma: f64, basis: Basis) -> EquilibriumProblem {
    let eos = EquationOfState::guarded(gamma, 0.0, true).unwrap();
    let prof = solve_radial_star(&eos, 1.0, 2048).unwrap();
    EquilibriumProblem::new(prof, basis, SolverSettings::default()).unwrap()
}

// Values recorded from the first converged run at Ns = 24, Nμ = 12.
const OBLATENESS_W02_E0: f64 = 0.012066314570648181;
const OBLATENESS_W02_E05: f64 = 0.012114270478559102;

#[test]
fn rotating_magnetized_star_matches_recorded_run() {
    let pb = RunConfig::default().problem().unwrap();
    for (eps, expected) in [(0.0, OBLATENESS_W02_E0), (0.05, OBLATENESS_W02_E05)] {
        let params = pb.params(0.02, eps, k_linear());
        let out = pb.solve_from_predictor(&params).unwrap();
        assert!(out.iterations <= 8, "{} iterations", out.iterations);
        assert!(out.residual < 1e-9);
        let sol = reconstruct_fields(&pb, &out.state, &params).unwrap();
        assert!((sol.oblateness() - expected).abs() < 1e-6 * expected, "{}", sol.oblateness());
        // M0 = 4/π for the n = 1 star of unit radius and central density
        assert!((sol.total_mass - 4.0 / std::f64::consts::PI).abs() < 1e-12);
    }
}

#[test]
fn magnetic_residual_at_background_matches_fd_oracle() {
    let pb = RunConfig::default().problem().unwrap();
    let b = pb.basis();
    let params = pb.params(0.0, 0.1, MagneticCurrentFunction::constant(1.0));
    let f2 = pb.residual_f2(&StateVector::zero(b), &params).unwrap();
    let prof = pb.profile.clone();
    let rho = move |r: f64, z: f64| {
        let s = (r * r + z * z).sqrt();
        if s < 1.0 {
            prof.density(s)
        } else {
            0.0
        }
    };
    let fd = linv_fd_oracle(
        &rho,
        &FdOracleSettings {
            extent: 8.0,
            cells: 384,
            ..Default::default()
        },
    )
    .unwrap();
    let expected: Vec<f64> = pb
        .nodes()
        .iter()
        .map(|&(s, mu)| -0.1 * fd.value(s * (1.0 - mu * mu).sqrt(), s * mu))
        .collect();
    let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = f2.iter().zip(&expected).fold(0.0f64, |m, (a, e)| m.max((a - e).abs()));
    assert!(worst < 1e-3 * scale, "{worst:e} vs {scale:e}");
}

#[test]
fn condition_is_stable_under_refinement() {
    let k = k_linear();
    let cond = |ns| {
        let pb = problem_for(2.0, Basis::new(ns, 12).unwrap());
        let p = pb.params(0.0, 0.0, k.clone());
        pb.assemble_jacobian(&StateVector::zero(pb.basis()), &p, JacobianMode::Analytic)
            .unwrap()
            .condition
    };
    let (c16, c24) = (cond(16), cond(24));
    assert!(c16.is_finite() && c24.is_finite());
    let ratio = c24 / c16;
    assert!((0.5..=2.0).contains(&ratio), "{c16:e} -> {c24:e}");
}

#[test]
fn dilation_condition_grows_toward_four_thirds() {
    let b = Basis::new(12, 6).unwrap();
    let conds: Vec<f64> = [1.34, 1.335, 1.3334]
        .iter()
        .map(|&g| {
            let pb = problem_for(g, b);
            let p = pb.params(0.0, 0.0, k_linear());
            pb.assemble_jacobian(&StateVector::zero(b), &p, JacobianMode::Analytic)
                .unwrap()
                .dilation_condition(b)
        })
        .collect();
    assert!(conds.windows(2).all(|w| w[1] > w[0]), "{conds:?}");
}

#[test]
fn newton_returns_to_background_from_perturbation() {
    let pb = RunConfig::default().problem().unwrap();
    let b = pb.basis();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut raw = |l_max: usize| {
        let mut c = vec![0.0; b.len()];
        for l in 0..l_max {
            for m in 0..4 {
                c[b.index(l, m)] = rng.gen_range(-1.0..1.0);
            }
        }
        AxiField::from_coefficients(b, c).unwrap()
    };
    let (z, p) = (raw(3), raw(3));
    let start = StateVector {
        zeta: z.scaled(1e-2 / x_norm(&z)),
        phi: p.scaled(1e-2 / x_norm(&p)),
    };
    let params = pb.params(0.0, 0.0, k_linear());
    let out = pb.newton_solve(&params, &start).unwrap();
    assert!(out.residual < 1e-9);
    assert!(out.state.zeta.coefficients.iter().all(|c| c.abs() < 1e-8));
    // quadratic phase
    for w in out.trace.windows(2) {
        if w[0].residual < 1e-3 && w[1].residual > 0.0 {
            assert!(w[1].residual / w[0].residual < 0.3, "{:?}", out.trace);
        }
    }
}

#[test]
fn sweep_is_continuous_in_parameters() {
    let pb = problem_for(2.0, Basis::new(12, 6).unwrap());
    let w = [0.0, 0.01, 0.02];
    let e = [0.0, 0.025, 0.05];
    let pts = pb.continuation_sweep(&w, &e, &k_linear(), SweepOrder::OmegaFirst).unwrap();
    let states: Vec<StateVector> = pts.into_iter().map(|p| p.outcome.unwrap().state).collect();
    // omega2 varies fastest
    let at = |i: usize, j: usize| &states[j * 3 + i];
    for j in 0..3 {
        for i in 1..3 {
            let jump = at(i, j).max_abs_diff(at(i - 1, j));
            assert!(jump < 10.0 * (w[i] - w[i - 1]), "{jump}");
        }
    }
    for i in 0..3 {
        for j in 1..3 {
            let jump = at(i, j).max_abs_diff(at(i, j - 1));
            assert!(jump < 10.0 * (e[j] - e[j - 1]), "{jump}");
        }
    }
}

#[test]
fn randomized_criterion_is_reproducible_from_seed() {
    let values = |seed| {
        let mut cfg = RunConfig::default();
        cfg.grid.ns = 10;
        cfg.grid.nmu = 5;
        cfg.seed = seed;
        VerifyContext::new(&cfg).unwrap().run(4).values
    };
    let a = values(7);
    assert!(!a.is_empty());
    assert_eq!(a, values(7));
    assert_ne!(a, values(8));
}
