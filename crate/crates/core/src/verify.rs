//! The acceptance suite. Each criterion is a function of a shared
//! [`VerifyContext`] and returns a named pass/fail record with the measured
//! values, so the CLI and the test harness report identical numbers.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{AxiField, Basis};
use crate::config::RunConfig;
use crate::diagnostics::{diagnose, reconstruct_fields};
use crate::eos::{solve_radial_star, EquationOfState, DEFAULT_GAMMA_EXCLUSION};
use crate::equilibrium::{
    EquilibriumProblem, JacobianMode, MagneticCurrentFunction, NewtonOutcome, StateVector, SweepOrder,
};
use crate::error::{Result, StarError};
use crate::geometry::{mass_factor_derivative, x_norm_on};
use crate::kernels::C5;
use crate::potentials::{linv_apply, linv_apply_radius, linv_fd_oracle, linv_gradient, FdOracleSettings};

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub values: BTreeMap<String, f64>,
}

impl CriterionResult {
    fn new(id: usize, name: &str) -> Self {
        Self {
            id,
            name: name.into(),
            pass: true,
            summary: String::new(),
            values: BTreeMap::new(),
        }
    }

    fn value(&mut self, key: &str, v: f64) -> f64 {
        self.values.insert(key.into(), v);
        v
    }

    /// Records a sub-check; the criterion fails if any sub-check fails.
    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.pass = false;
            if !self.summary.is_empty() {
                self.summary.push_str("; ");
            }
            self.summary.push_str(&what.into());
        }
    }

    fn failed(id: usize, name: &str, err: &StarError) -> Self {
        let mut r = Self::new(id, name);
        r.require(false, format!("error: {err}"));
        r
    }

    /// One-line report.
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let detail = if self.summary.is_empty() {
            self.values
                .iter()
                .take(4)
                .map(|(k, v)| format!("{k}={v:.3e}"))
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            self.summary.clone()
        };
        format!("[{status}] {:>2} {}: {}", self.id, self.name, detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

/// Names of the criteria in order.
pub const CRITERIA: [&str; 12] = [
    "lane_emden_analytic",
    "hydrostatic_identity",
    "linv_manufactured",
    "linv_origin_bound",
    "jacobian_consistency",
    "origin_block_structure",
    "newton_convergence",
    "mass_invariance",
    "first_order_asymptotics",
    "oblateness",
    "pde_verification",
    "four_thirds_degeneracy",
];

/// Shared state of a verification run: the `γ = 2` problem on the
/// configured grid with `k(ψ) = 1 + ψ`, and a cache of solved points.
pub struct VerifyContext {
    pub config: RunConfig,
    /// Multiplies every tolerance; below 1 tightens the suite.
    pub scale: f64,
    pub problem: EquilibriumProblem,
    pub k: MagneticCurrentFunction,
    solutions: RefCell<HashMap<(u64, u64), NewtonOutcome>>,
}

impl VerifyContext {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let mut cfg = config.clone();
        cfg.eos.gamma = 2.0;
        cfg.eos.radius = 1.0;
        let problem = cfg.problem()?;
        Ok(Self {
            scale: config.tolerances.verify_scale,
            config: config.clone(),
            problem,
            k: MagneticCurrentFunction::new(vec![1.0, 1.0])?,
            solutions: RefCell::new(HashMap::new()),
        })
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// Newton solution at `(ω², ε)` from the first-order predictor, cached.
    pub fn solve(&self, omega2: f64, epsilon: f64) -> Result<NewtonOutcome> {
        let key = (omega2.to_bits(), epsilon.to_bits());
        if let Some(o) = self.solutions.borrow().get(&key) {
            return Ok(o.clone());
        }
        let params = self.problem.params(omega2, epsilon, self.k.clone());
        let out = self.problem.solve_from_predictor(&params)?;
        self.solutions.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    fn x_norm(&self, f: &AxiField) -> f64 {
        x_norm_on(f, &self.problem.interp.grid)
    }

    /// Runs one criterion by number (1-based); errors become failures.
    pub fn run(&self, id: usize) -> CriterionResult {
        let name = CRITERIA[id - 1];
        let out = match id {
            1 => lane_emden_analytic(self),
            2 => hydrostatic_identity(self),
            3 => linv_manufactured(self),
            4 => linv_origin_bound(self),
            5 => jacobian_consistency(self),
            6 => origin_block_structure(self),
            7 => newton_convergence(self),
            8 => mass_invariance(self),
            9 => first_order_asymptotics(self),
            10 => oblateness(self),
            11 => pde_verification(self),
            12 => four_thirds_degeneracy(self),
            _ => unreachable!("criteria are numbered 1..=12"),
        };
        out.unwrap_or_else(|e| CriterionResult::failed(id, name, &e))
    }

    pub fn run_all(&self) -> VerifyReport {
        let criteria: Vec<CriterionResult> = (1..=CRITERIA.len()).map(|i| self.run(i)).collect();
        VerifyReport {
            config_hash: self.config.hash(),
            seed: self.config.seed,
            all_pass: criteria.iter().all(|c| c.pass),
            criteria,
        }
    }
}

/// Accepts `value` in `center ± half_width · scale`.
fn in_band(value: f64, center: f64, half_width: f64, scale: f64) -> bool {
    (value - center).abs() <= half_width * scale
}

pub fn lane_emden_analytic(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(1, CRITERIA[0]);
    let eos = EquationOfState::polytrope(2.0)?;
    let prof = solve_radial_star(&eos, 1.0, ctx.config.eos.radial_grid)?;
    let xi_err = r.value("xi1_error", (prof.xi1 - PI).abs());
    let mut worst: f64 = 0.0;
    for k in 0..=1000 {
        let s = k as f64 / 1000.0;
        let exact = if s == 0.0 { 1.0 } else { (PI * s).sin() / (PI * s) };
        worst = worst.max((prof.density(s) / prof.central_density - exact).abs());
    }
    r.value("density_error", worst);
    r.require(xi_err < 1e-8 * ctx.scale, format!("xi1 off by {xi_err:.3e}"));
    r.require(worst < 1e-6 * ctx.scale, format!("density off by {worst:.3e}"));
    Ok(r)
}

pub fn hydrostatic_identity(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(2, CRITERIA[1]);
    for gamma in [2.0, 5.0 / 3.0, 1.5] {
        let eos = EquationOfState::polytrope(gamma)?;
        let prof = solve_radial_star(&eos, 1.0, ctx.config.eos.radial_grid)?;
        let eos = prof.eos;
        let hc = eos.enthalpy_of(prof.central_density);
        let c0 = hc - prof.potential(0.0);
        let worst = (0..=1000)
            .map(|k| {
                let s = k as f64 / 1000.0;
                (eos.enthalpy_of(prof.density(s)) - prof.potential(s) - c0).abs()
            })
            .fold(0.0, f64::max)
            / hc;
        r.value(&format!("relative_spread_gamma_{gamma:.4}"), worst);
        r.require(worst < 1e-6 * ctx.scale, format!("gamma {gamma}: spread {worst:.3e}"));
    }
    Ok(r)
}

fn manufactured_source(s: f64, _mu: f64) -> f64 {
    if s > 4.0 {
        0.0
    } else {
        (4.0 * s * s - 10.0) * (-s * s).exp()
    }
}

pub fn linv_manufactured(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(3, CRITERIA[2]);
    r.value("c5", C5);
    r.require((C5 + 1.0 / (8.0 * PI * PI)).abs() < 1e-15, "C5 normalization");
    let targets: Vec<[f64; 2]> = (1..=20)
        .flat_map(|i| (0..=20).map(move |j| [0.1 * i as f64, 0.1 * j as f64]))
        .filter(|t| t[0].hypot(t[1]) <= 2.0)
        .collect();
    let exact: Vec<f64> = targets.iter().map(|t| t[0] * t[0] * (-(t[0] * t[0] + t[1] * t[1])).exp()).collect();
    let umax = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let kernel = linv_apply_radius(&manufactured_source, 4.0, &targets, &ctx.problem.quadrature)?;
    let f = |x: f64, z: f64| manufactured_source(x.hypot(z), 0.0);
    let fd = linv_fd_oracle(
        &f,
        &FdOracleSettings {
            extent: 8.0,
            cells: 256,
            ..Default::default()
        },
    )?;
    let (mut ek, mut ef, mut ekf): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for ((t, u), k) in targets.iter().zip(&exact).zip(&kernel) {
        let o = fd.value(t[0], t[1]);
        ek = ek.max((k - u).abs());
        ef = ef.max((o - u).abs());
        ekf = ekf.max((k - o).abs());
    }
    let (ek, ef, ekf) = (ek / umax, ef / umax, ekf / umax);
    r.value("kernel_error", ek);
    r.value("fd_error", ef);
    r.value("kernel_vs_fd", ekf);
    let tol = 1e-3 * ctx.scale;
    r.require(ek < tol, format!("kernel route error {ek:.3e}"));
    r.require(ef < tol, format!("FD oracle error {ef:.3e}"));
    r.require(ekf < 2.0 * tol, format!("kernel vs FD {ekf:.3e}"));
    Ok(r)
}

pub fn linv_origin_bound(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(4, CRITERIA[3]);
    let mut rng = ctx.rng(4);
    let settings = ctx.problem.quadrature;
    let dir = [0.5f64.sqrt(), 0.5f64.sqrt()];
    let mut worst: f64 = 0.0;
    for case in 0..5 {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = move |s: f64, mu: f64| {
            if s >= 1.0 {
                return 0.0;
            }
            let w = (1.0 - s * s).powi(2);
            w * (1.0 + 0.5 * c[0] + c[1] * s * s + c[2] * s * s * mu * mu + c[3] * s.powi(4))
        };
        let mut norm: f64 = 0.0;
        for i in 0..=100 {
            for j in 0..=20 {
                norm = norm.max(f(i as f64 / 100.0, j as f64 / 20.0).abs());
            }
        }
        let mut ratios = vec![];
        for rad in [1e-1, 1e-2, 1e-3] {
            let t = [rad * dir[0], rad * dir[1]];
            let v = linv_apply(&f, None, &[t], &settings)?[0];
            let g = linv_gradient(&f, None, &[t], &settings)?[0];
            ratios.push((v.abs() + g[0].hypot(g[1])) / (norm * rad));
        }
        let fitted = (ratios.iter().map(|x| x.ln()).sum::<f64>() / ratios.len() as f64).exp();
        let spread = ratios.iter().map(|x| (x / fitted - 1.0).abs()).fold(0.0, f64::max);
        r.value(&format!("source{case}_c"), fitted);
        r.value(&format!("source{case}_spread"), spread);
        worst = worst.max(spread);
        r.require(fitted.is_finite() && fitted > 0.0, format!("source {case}: C = {fitted}"));
    }
    r.value("max_spread", worst);
    r.require(worst <= 0.2 * ctx.scale, format!("C varies by {worst:.3}"));
    Ok(r)
}

/// Random smooth direction in coefficient space with `‖·‖_X = norm`.
fn random_direction(ctx: &VerifyContext, rng: &mut ChaCha8Rng, norm: f64) -> AxiField {
    let b: Basis = ctx.problem.basis();
    let mut c = vec![0.0; b.len()];
    for l in 0..b.l_modes {
        for m in 0..b.radial_degree {
            c[b.index(l, m)] = rng.gen_range(-1.0..1.0) / ((1 + l) * (1 + l) * (1 + m) * (1 + m)) as f64;
        }
    }
    let f = AxiField::from_coefficients(b, c).expect("basis sized");
    let n = ctx.x_norm(&f);
    f.scaled(norm / n)
}

pub fn jacobian_consistency(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(5, CRITERIA[4]);
    let pb = &ctx.problem;
    // a cubic k so that every block has a nonvanishing third derivative
    let k = MagneticCurrentFunction::new(vec![1.0, 1.0, 1.0, 1.0])?;
    let params = pb.params(0.02, 0.05, k.clone());
    let pred = pb.first_order_predictors(&k)?;
    let state = StateVector {
        zeta: pred.zeta1.scaled(0.02),
        phi: pred.phi1.scaled(0.05),
    };
    let (_, blocks) = pb.analytic_jacobian_blocks(&state, &params)?;
    let n = pb.basis().len();
    let mut rng = ctx.rng(5);
    let steps = [0.4, 0.2];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut record = |r: &mut CriterionResult, label: &str, e: [f64; 2]| {
        let ratio = e[0] / e[1];
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        r.require(
            in_band(ratio, 4.0, 0.5, ctx.scale),
            format!("{label}: ratio {ratio:.3}"),
        );
    };
    let zero = AxiField::zero(pb.basis());
    for d in 0..10 {
        let xi = random_direction(ctx, &mut rng, 0.05);
        let eta = random_direction(ctx, &mut rng, 0.05);
        for (which, dir) in [
            ("zeta", StateVector { zeta: xi.clone(), phi: zero.clone() }),
            ("phi", StateVector { zeta: zero.clone(), phi: eta.clone() }),
        ] {
            let v = nalgebra::DVector::from_vec(dir.to_vec());
            let (top, bottom) = if which == "zeta" {
                (&blocks.j11, &blocks.j21)
            } else {
                (&blocks.j12, &blocks.j22)
            };
            let off = if which == "zeta" { 0 } else { n };
            let jv1 = top * v.rows(off, n);
            let jv2 = bottom * v.rows(off, n);
            let mut e1 = [0.0; 2];
            let mut e2 = [0.0; 2];
            for (q, h) in steps.iter().enumerate() {
                let fp = pb.residual(&state.axpy(*h, &dir), &params)?;
                let fm = pb.residual(&state.axpy(-*h, &dir), &params)?;
                for t in 0..n {
                    e1[q] = f64::max(e1[q], ((fp.f1[t] - fm.f1[t]) / (2.0 * h) - jv1[t]).abs());
                    e2[q] = f64::max(e2[q], ((fp.f2[t] - fm.f2[t]) / (2.0 * h) - jv2[t]).abs());
                }
            }
            let (l1, l2) = if which == "zeta" { ("dF1/dzeta", "dF2/dzeta") } else { ("dF1/dphi", "dF2/dphi") };
            record(&mut r, &format!("direction {d} {l1}"), e1);
            record(&mut r, &format!("direction {d} {l2}"), e2);
        }
        // mass factor derivative
        let mut em = [0.0; 2];
        let md = mass_factor_derivative(&state.zeta, &xi, &pb.profile)?;
        for (q, h) in steps.iter().enumerate() {
            let mp = crate::geometry::mass_factor(&state.zeta.axpy(*h, &xi), &pb.profile)?;
            let mm = crate::geometry::mass_factor(&state.zeta.axpy(-*h, &xi), &pb.profile)?;
            em[q] = ((mp - mm) / (2.0 * h) - md).abs();
        }
        record(&mut r, &format!("direction {d} M'"), em);
    }
    r.value("min_ratio", lo);
    r.value("max_ratio", hi);
    Ok(r)
}

pub fn origin_block_structure(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(6, CRITERIA[5]);
    let pb = &ctx.problem;
    let params = pb.params(0.0, 0.0, ctx.k.clone());
    let jac = pb.assemble_jacobian(&StateVector::zero(pb.basis()), &params, JacobianMode::Analytic)?;
    let n = pb.basis().len();
    let m = &jac.matrix;
    let mut ident: f64 = 0.0;
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            ident = ident.max((m[(n + i, n + j)] - e).abs());
            off = off.max(m[(i, n + j)].abs()).max(m[(n + i, j)].abs());
        }
    }
    r.value("phi_block_identity_error", ident);
    r.value("off_diagonal_max", off);
    r.value("condition", jac.condition);
    r.require(ident < 1e-10 * ctx.scale, format!("phi-phi block off identity by {ident:.3e}"));
    r.require(off < 1e-10 * ctx.scale, format!("coupling {off:.3e}"));
    r.require(jac.condition.is_finite(), "zeta block singular");
    Ok(r)
}

pub fn newton_convergence(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(7, CRITERIA[6]);
    let out = ctx.solve(0.02, 0.05)?;
    r.value("iterations", out.iterations as f64);
    r.value("residual", out.residual);
    let res: Vec<f64> = out.trace.iter().map(|t| t.residual).collect();
    let mut worst: f64 = 0.0;
    for w in res.windows(2) {
        if w[0] < 1e-3 && w[0] > 0.0 {
            worst = worst.max(w[1] / w[0]);
        }
    }
    r.value("quadratic_phase_ratio", worst);
    r.require(out.residual < 1e-9 * ctx.scale, format!("residual {:.3e}", out.residual));
    r.require(out.iterations <= 10, format!("{} iterations", out.iterations));
    r.require(worst < 0.3 * ctx.scale, format!("decay ratio {worst:.3e}"));
    Ok(r)
}

pub fn mass_invariance(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(8, CRITERIA[7]);
    let pb = &ctx.problem;
    let sw = &ctx.config.sweep;
    let points = pb.continuation_sweep(&sw.omega2, &sw.epsilon, &ctx.k, SweepOrder::OmegaFirst)?;
    let mut worst: f64 = 0.0;
    let mut converged = 0;
    for p in &points {
        match &p.outcome {
            Ok(o) => {
                converged += 1;
                let params = pb.params(p.omega2, p.epsilon, ctx.k.clone());
                let sol = reconstruct_fields(pb, &o.state, &params)?;
                worst = worst.max(sol.mass_relative_error());
            }
            Err(e) => r.require(false, format!("({}, {}) failed: {e}", p.omega2, p.epsilon)),
        }
    }
    r.value("points", points.len() as f64);
    r.value("converged", converged as f64);
    r.value("max_relative_mass_error", worst);
    r.require(worst < 1e-9 * ctx.scale, format!("mass drift {worst:.3e}"));
    Ok(r)
}

pub fn first_order_asymptotics(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(9, CRITERIA[8]);
    let pred = ctx.problem.first_order_predictors(&ctx.k)?;
    let zeta_err = |w: f64| -> Result<f64> {
        let s = ctx.solve(w, 0.0)?.state;
        Ok(ctx.x_norm(&s.zeta.axpy(-w, &pred.zeta1)) / w)
    };
    let phi_err = |e: f64| -> Result<f64> {
        let s = ctx.solve(0.0, e)?.state;
        Ok(ctx.x_norm(&s.phi.axpy(-e, &pred.phi1)) / e)
    };
    let rz = r.value("zeta_ratio", zeta_err(0.04)? / zeta_err(0.01)?);
    let rp = r.value("phi_ratio", phi_err(0.08)? / phi_err(0.04)?);
    let eps = [0.02, 0.04, 0.08];
    let mut xs = vec![];
    let mut ys = vec![];
    for e in eps {
        let s = ctx.solve(0.0, e)?.state;
        xs.push(f64::ln(e));
        ys.push(ctx.x_norm(&s.zeta).ln());
    }
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    r.value("zeta_epsilon_exponent", slope);
    r.require(in_band(rz, 4.0, 1.0, ctx.scale), format!("zeta predictor ratio {rz:.3}"));
    r.require(in_band(rp, 2.0, 0.5, ctx.scale), format!("phi predictor ratio {rp:.3}"));
    r.require(in_band(slope, 2.0, 0.2, ctx.scale), format!("zeta(0, eps) exponent {slope:.3}"));
    Ok(r)
}

fn oblateness_of(ctx: &VerifyContext, omega2: f64, epsilon: f64) -> Result<f64> {
    let out = ctx.solve(omega2, epsilon)?;
    let params = ctx.problem.params(omega2, epsilon, ctx.k.clone());
    Ok(reconstruct_fields(&ctx.problem, &out.state, &params)?.oblateness())
}

pub fn oblateness(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(10, CRITERIA[9]);
    let o0 = r.value("oblateness_eps0", oblateness_of(ctx, 0.02, 0.0)?);
    let o1 = r.value("oblateness_eps005", oblateness_of(ctx, 0.02, 0.05)?);
    let rel = r.value("relative_change", (o1 - o0).abs() / o0.abs());
    r.require(o0 > 0.0, format!("oblateness {o0:.3e} not positive"));
    r.require(rel < 0.1 * ctx.scale, format!("magnetic change {rel:.3e}"));
    Ok(r)
}

pub fn pde_verification(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(11, CRITERIA[10]);
    let out = ctx.solve(0.02, 0.05)?;
    let params = ctx.problem.params(0.02, 0.05, ctx.k.clone());
    let sol = reconstruct_fields(&ctx.problem, &out.state, &params)?;
    let rep = diagnose(&sol, &ctx.config.diagnostics)?;
    let s = ctx.scale;
    r.value("momentum_relative", rep.momentum.relative);
    r.value("div_b", rep.div_b.value);
    r.value("div_b_floor", rep.div_b.floor);
    r.value("faraday", rep.faraday.value);
    r.value("faraday_floor", rep.faraday.floor);
    r.value("force_coarse", rep.force_identity.coarse.deviation);
    r.value("force_fine", rep.force_identity.fine.deviation);
    r.value("force_ratio", rep.force_identity.ratio);
    let nf = ctx.config.diagnostics.noise_factor * s;
    r.require(rep.momentum.relative < 1e-4 * s, format!("momentum {:.3e}", rep.momentum.relative));
    r.require(rep.div_b.passes(nf), format!("div B {:.3e} vs floor {:.3e}", rep.div_b.value, rep.div_b.floor));
    r.require(
        rep.faraday.passes(nf),
        format!("Faraday {:.3e} vs floor {:.3e}", rep.faraday.value, rep.faraday.floor),
    );
    r.require(
        in_band(rep.force_identity.ratio, 4.0, 1.0, s),
        format!("force identity ratio {:.3}", rep.force_identity.ratio),
    );
    Ok(r)
}

pub fn four_thirds_degeneracy(ctx: &VerifyContext) -> Result<CriterionResult> {
    let mut r = CriterionResult::new(12, CRITERIA[11]);
    let mut conds = vec![];
    for gamma in [1.36, 1.34, 1.334] {
        let eos = EquationOfState::polytrope(gamma)?;
        let prof = solve_radial_star(&eos, 1.0, ctx.config.eos.radial_grid)?;
        let pb = EquilibriumProblem::new(prof, ctx.problem.basis(), ctx.problem.settings)?;
        let params = pb.params(0.0, 0.0, ctx.k.clone());
        let jac = pb.assemble_jacobian(&StateVector::zero(pb.basis()), &params, JacobianMode::Analytic)?;
        r.value(&format!("dilation_condition_gamma_{gamma}"), jac.dilation_condition(pb.basis()));
        conds.push(r.value(&format!("condition_gamma_{gamma}"), jac.condition));
    }
    let growth = r.value("growth", conds[2] / conds[0]);
    r.require(conds.windows(2).all(|w| w[1] > w[0]), "condition not monotone");
    r.require(growth >= 10.0 / ctx.scale, format!("growth {growth:.2}"));
    let rejected = matches!(
        EquationOfState::polytrope(4.0 / 3.0),
        Err(StarError::DegenerateGamma { .. })
    );
    let overridden = EquationOfState::guarded(4.0 / 3.0, DEFAULT_GAMMA_EXCLUSION, true).is_ok();
    r.require(rejected, "gamma = 4/3 accepted without override");
    r.require(overridden, "override does not admit 4/3");
    Ok(r)
}
