//! The residual system `F = (F₁, F₂)` for the unknowns `(ζ, φ)`, its
//! Jacobian, Newton's method and continuation in `(ω², ε)`.
//!
//! Residuals are collocated at the grid nodes `x_t`:
//!
//! ```text
//! F₁(x) = U(g(x)) - U(0) + ½ω² r(g(x))² - h(Mρ₀(x)) + h(Mρ₀(0)) - εK(φ(x))
//! F₂(x) = φ(x) - ε L⁻¹[ρ k(ψ)](g(x))
//! ```
//!
//! with `U` and `L⁻¹` evaluated on the pulled-back sources. The quadrature
//! rules are attached to the node preimages, which do not move with `ζ`, so
//! the discrete residual is a smooth function of the coefficients and its
//! derivative is assembled exactly.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{AxiField, Basis, GridValues, Interpolator};
use crate::eos::{EquationOfState, RadialStarProfile};
use crate::error::{Result, StarError};
use crate::geometry::{det3, MassRule, DEFAULT_TRUST_RADIUS};
use crate::potentials::{AxiKernelTable, CollocationRules};
use crate::quadrature::QuadratureSettings;

/// Highest supported degree of the current function polynomial.
pub const MAX_K_DEGREE: usize = 6;

/// `k(ψ) = Σ cᵢ ψⁱ` with `K = ∫₀^ψ k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticCurrentFunction {
    pub coefficients: Vec<f64>,
}

impl MagneticCurrentFunction {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() > MAX_K_DEGREE + 1 {
            return Err(StarError::Config(format!(
                "k must have degree <= {MAX_K_DEGREE}, got {} coefficients",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(StarError::Config("non-finite coefficient in k".into()));
        }
        Ok(Self { coefficients })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            coefficients: vec![c],
        }
    }

    #[inline]
    pub fn k(&self, s: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    #[inline]
    pub fn k_prime(&self, s: f64) -> f64 {
        let n = self.coefficients.len();
        (1..n).rev().fold(0.0, |acc, i| acc * s + i as f64 * self.coefficients[i])
    }

    /// `K(s) = ∫₀^s k`.
    #[inline]
    pub fn big_k(&self, s: f64) -> f64 {
        let n = self.coefficients.len();
        (0..n).rev().fold(0.0, |acc, i| acc * s + self.coefficients[i] / (i + 1) as f64) * s
    }
}

/// Continuation guards on the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterGuards {
    pub omega2_max: f64,
    pub epsilon_max: f64,
}

impl Default for ParameterGuards {
    fn default() -> Self {
        Self {
            omega2_max: 0.05,
            epsilon_max: 0.1,
        }
    }
}

/// Physical parameters of one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Square of the rotation speed.
    pub omega2: f64,
    pub epsilon: f64,
    pub eos: EquationOfState,
    pub k: MagneticCurrentFunction,
    /// Mass held fixed by the normalization factor.
    pub target_mass: f64,
}

impl ModelParams {
    pub fn omega(&self) -> f64 {
        self.omega2.sqrt()
    }

    pub fn check(&self, guards: &ParameterGuards) -> Result<()> {
        if !(self.omega2 >= 0.0) || self.omega2 > guards.omega2_max {
            return Err(StarError::Guard(format!(
                "omega^2 = {} outside [0, {}]",
                self.omega2, guards.omega2_max
            )));
        }
        if !(self.epsilon.abs() <= guards.epsilon_max) {
            return Err(StarError::Guard(format!(
                "|epsilon| = {} exceeds {}",
                self.epsilon.abs(),
                guards.epsilon_max
            )));
        }
        Ok(())
    }
}

/// Numerical settings of the equilibrium solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// `None` sizes the rules from the basis.
    pub quadrature: Option<QuadratureSettings>,
    /// Largest `‖ζ‖_X` a Newton iterate may have.
    pub trust_radius: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub guards: ParameterGuards,
    /// Subtract the discrete residual of the Lane-Emden state from `F₁`.
    pub well_balanced: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            quadrature: None,
            trust_radius: DEFAULT_TRUST_RADIUS,
            newton_tol: 1e-9,
            max_iter: 20,
            guards: ParameterGuards::default(),
            well_balanced: true,
        }
    }
}

/// The unknown pair `(ζ, φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub zeta: AxiField,
    pub phi: AxiField,
}

impl StateVector {
    pub fn zero(basis: Basis) -> Self {
        Self {
            zeta: AxiField::zero(basis),
            phi: AxiField::zero(basis),
        }
    }

    pub fn basis(&self) -> Basis {
        self.zeta.basis()
    }

    /// Offset of the `φ` block in [`Self::to_vec`].
    pub fn phi_offset(&self) -> usize {
        self.zeta.coefficients.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.zeta.coefficients.clone();
        v.extend_from_slice(&self.phi.coefficients);
        v
    }

    pub fn from_slice(basis: Basis, v: &[f64]) -> Result<Self> {
        let n = basis.len();
        if v.len() != 2 * n {
            return Err(StarError::Config(format!("state needs {} entries, got {}", 2 * n, v.len())));
        }
        Ok(Self {
            zeta: AxiField::from_coefficients(basis, v[..n].to_vec())?,
            phi: AxiField::from_coefficients(basis, v[n..].to_vec())?,
        })
    }

    /// Interpolates both fields, rejecting functions that do not vanish at
    /// the origin (they are outside the solution space).
    pub fn from_functions<F, G>(interp: &Interpolator, zeta: F, phi: G) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
        G: Fn(f64, f64) -> f64,
    {
        for (name, v) in [("zeta", zeta(0.0, 1.0)), ("phi", phi(0.0, 1.0))] {
            if v != 0.0 {
                return Err(StarError::Domain(format!("{name}(0) = {v}; fields must vanish at the origin")));
            }
        }
        Ok(Self {
            zeta: AxiField::interpolate(interp, zeta),
            phi: AxiField::interpolate(interp, phi),
        })
    }

    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        Self {
            zeta: self.zeta.axpy(c, &other.zeta),
            phi: self.phi.axpy(c, &other.phi),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Nodal values of `F₁` and `F₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl ResidualVector {
    pub fn max_norm(&self) -> f64 {
        self.f1.iter().chain(&self.f2).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.f1.clone();
        v.extend_from_slice(&self.f2);
        v
    }
}

/// Jacobian blocks with nodal rows and coefficient columns.
#[derive(Debug, Clone)]
pub struct JacobianBlocks {
    /// `∂F₁/∂ζ`
    pub j11: DMatrix<f64>,
    /// `∂F₁/∂φ`
    pub j12: DMatrix<f64>,
    /// `∂F₂/∂ζ`
    pub j21: DMatrix<f64>,
    /// `∂F₂/∂φ`
    pub j22: DMatrix<f64>,
}

impl JacobianBlocks {
    pub fn nodal(&self) -> DMatrix<f64> {
        let n = self.j11.nrows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.j11);
        m.view_mut((0, n), (n, n)).copy_from(&self.j12);
        m.view_mut((n, 0), (n, n)).copy_from(&self.j21);
        m.view_mut((n, n), (n, n)).copy_from(&self.j22);
        m
    }
}

/// How `∂F₁/∂ζ` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobianMode {
    Analytic,
    /// Central differences per basis direction for `∂F₁/∂ζ`.
    FiniteDifference,
}

/// Coefficient-space Jacobian and its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct AssembledJacobian {
    pub matrix: DMatrix<f64>,
    /// Spectral condition number `σ_max / σ_min`.
    pub condition: f64,
    /// `σ_max`.
    pub norm: f64,
}

impl AssembledJacobian {
    /// `‖J‖ ‖e‖ / ‖J e‖` for the uniform compression `ζ = s²`, a lower
    /// bound on the condition number that follows the one mode which
    /// softens as `γ → 4/3`.
    pub fn dilation_condition(&self, basis: Basis) -> f64 {
        self.norm / self.matrix.column(basis.index(0, 0)).norm()
    }
}

/// One Newton iteration for the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub state: StateVector,
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<NewtonStep>,
}

/// Writes the trace as CSV.
pub fn write_trace<W: Write>(mut w: W, trace: &[NewtonStep]) -> Result<()> {
    writeln!(w, "iteration,residual,step,condition")?;
    for t in trace {
        writeln!(w, "{},{:.6e},{:.6e},{:.6e}", t.iteration, t.residual, t.step, t.condition)?;
    }
    Ok(())
}

/// `ζ₁` and `φ₁` with `ζ ≈ ω² ζ₁`, `φ ≈ ε φ₁`.
#[derive(Debug, Clone)]
pub struct Predictors {
    pub zeta1: AxiField,
    pub phi1: AxiField,
}

/// Fields of one state at every place the residual needs them.
struct Evaluation {
    mass_factor: f64,
    phi_nodes: GridValues,
    zeta_union: GridValues,
    phi_union: GridValues,
    table: AxiKernelTable,
    /// `ρ₀ det Dg` on the union grid.
    w3: Vec<f64>,
    /// `ρ₀ k(φ) det Dg̃` on the union grid.
    w5: Vec<f64>,
    /// `U` at every target including the origin (last).
    u: Vec<f64>,
    /// `L⁻¹[ρ k]` at the node targets.
    l: Vec<f64>,
    f: ResidualVector,
}

/// A discretized equilibrium problem around one background star.
#[derive(Debug, Clone)]
pub struct EquilibriumProblem {
    pub profile: RadialStarProfile,
    pub interp: Interpolator,
    pub rules: CollocationRules,
    pub mass_rule: MassRule,
    pub settings: SolverSettings,
    /// Rules actually used for the singular integrals.
    pub quadrature: QuadratureSettings,
    eval_matrix: DMatrix<f64>,
    /// `F₁` of the Lane-Emden state, subtracted when well balanced.
    background: Vec<f64>,
}

impl EquilibriumProblem {
    pub fn new(profile: RadialStarProfile, basis: Basis, settings: SolverSettings) -> Result<Self> {
        let quadrature = settings
            .quadrature
            .unwrap_or_else(|| QuadratureSettings::for_radial_degree(basis.radial_degree));
        if !(settings.trust_radius > 0.0) || !(settings.newton_tol > 0.0) || quadrature.points < 2 {
            return Err(StarError::Config("solver tolerances must be positive".into()));
        }
        let interp = Interpolator::new(basis);
        let rules = CollocationRules::new(&interp, &profile, quadrature);
        let mass_rule = MassRule::default_for(basis, &profile);
        let eval_matrix = interp.evaluation_matrix();
        let mut out = Self {
            profile,
            interp,
            rules,
            mass_rule,
            settings,
            quadrature,
            eval_matrix,
            background: vec![],
        };
        out.background = vec![0.0; basis.len()];
        if settings.well_balanced {
            let p = out.params(0.0, 0.0, MagneticCurrentFunction::constant(0.0));
            out.background = out.raw_residual(&StateVector::zero(basis), &p)?.f1;
        }
        Ok(out)
    }

    pub fn basis(&self) -> Basis {
        self.interp.basis()
    }

    /// Background mass under the mass rule; the mass every solution keeps.
    pub fn target_mass(&self) -> f64 {
        self.mass_rule.background_mass
    }

    pub fn params(&self, omega2: f64, epsilon: f64, k: MagneticCurrentFunction) -> ModelParams {
        ModelParams {
            omega2,
            epsilon,
            eos: self.profile.eos,
            k,
            target_mass: self.target_mass(),
        }
    }

    /// The discrete `F₁` of the Lane-Emden state before balancing.
    pub fn background_residual(&self) -> &[f64] {
        &self.background
    }

    pub fn evaluation_matrix(&self) -> &DMatrix<f64> {
        &self.eval_matrix
    }

    /// Nodes `(s, μ)` in residual order.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.interp.grid.nodes().collect()
    }

    fn check_state(&self, state: &StateVector, params: &ModelParams) -> Result<()> {
        if state.basis() != self.basis() || state.phi.basis() != self.basis() {
            return Err(StarError::Config("state basis does not match the problem".into()));
        }
        if params.eos.gamma != self.profile.eos.gamma {
            return Err(StarError::Config("parameters and background disagree on gamma".into()));
        }
        let norm = crate::geometry::x_norm_on(&state.zeta, &self.interp.grid);
        if norm > self.settings.trust_radius {
            return Err(StarError::TrustRadius {
                field: "zeta",
                norm,
                radius: self.settings.trust_radius,
            });
        }
        Ok(())
    }

    fn mass_factor_of(&self, zeta: &AxiField) -> Result<(f64, f64)> {
        let d = self.mass_rule.deformed_mass(zeta)?;
        Ok((self.target_mass() / d, d))
    }

    fn evaluate(&self, state: &StateVector, params: &ModelParams, subtract: bool) -> Result<Evaluation> {
        self.check_state(state, params)?;
        let rules = &self.rules;
        let (m, _) = self.mass_factor_of(&state.zeta)?;
        let zeta_nodes = state.zeta.eval_grid(self.interp.radial(), self.interp.angular());
        let phi_nodes = state.phi.eval_grid(self.interp.radial(), self.interp.angular());
        let zeta_union = rules.sample(&state.zeta);
        let phi_union = rules.sample(&state.phi);
        let table = AxiKernelTable::build(rules, &zeta_union, &zeta_nodes)?;

        let nsu = rules.s.len();
        let nmu = rules.mu_len();
        let mut w3 = vec![0.0; nsu * nmu];
        let mut w5 = vec![0.0; nsu * nmu];
        for su in 0..nsu {
            let rho = rules.rho0[su];
            let s = rules.s.x[su];
            for mu in 0..nmu {
                let k = su * nmu + mu;
                let z = zeta_union.at(su, mu);
                let lam = 1.0 + z.eta;
                let d = lam + z.s_eta_s;
                let l2 = lam * lam;
                w3[k] = rho * l2 * d;
                let phi = s * s * phi_union.eta[k];
                w5[k] = rho * params.k.k(phi) * l2 * l2 * d;
            }
        }
        let nt = rules.n_targets();
        let u: Vec<f64> = (0..nt).map(|t| m * table.contract(rules, t, &table.targets[t].g3, &w3)).collect();
        let l: Vec<f64> = (0..nt - 1)
            .map(|t| m * table.contract(rules, t, &table.targets[t].k5, &w5))
            .collect();

        let eos = &self.profile.eos;
        let hc = eos.enthalpy_of(m * self.profile.central_density);
        let u0 = u[nt - 1];
        let nmu_nodes = self.interp.grid.mu.len();
        let mut f1 = vec![0.0; nt - 1];
        let mut f2 = vec![0.0; nt - 1];
        for t in 0..nt - 1 {
            let (i, j) = (t / nmu_nodes, t % nmu_nodes);
            let s = self.interp.grid.s[i];
            let phi = s * s * phi_nodes.at(i, j).eta;
            let p = table.targets[t].p;
            let rho = self.profile.density(s);
            f1[t] = u[t] - u0 + 0.5 * params.omega2 * p * p - eos.enthalpy_of(m * rho) + hc
                - params.epsilon * params.k.big_k(phi);
            if subtract {
                f1[t] -= self.background[t];
            }
            f2[t] = phi - params.epsilon * l[t];
        }
        Ok(Evaluation {
            mass_factor: m,
            phi_nodes,
            zeta_union,
            phi_union,
            table,
            w3,
            w5,
            u,
            l,
            f: ResidualVector { f1, f2 },
        })
    }

    fn raw_residual(&self, state: &StateVector, params: &ModelParams) -> Result<ResidualVector> {
        Ok(self.evaluate(state, params, false)?.f)
    }

    /// `F₁` and `F₂` at the nodes.
    pub fn residual(&self, state: &StateVector, params: &ModelParams) -> Result<ResidualVector> {
        Ok(self.evaluate(state, params, self.settings.well_balanced)?.f)
    }

    pub fn residual_f1(&self, state: &StateVector, params: &ModelParams) -> Result<Vec<f64>> {
        Ok(self.residual(state, params)?.f1)
    }

    pub fn residual_f2(&self, state: &StateVector, params: &ModelParams) -> Result<Vec<f64>> {
        Ok(self.residual(state, params)?.f2)
    }

    /// `L⁻¹[ρ_ζ k(φ)]` at the deformed nodes, the nonlocal part of `F₂`.
    pub fn magnetic_potential_at_nodes(&self, state: &StateVector, params: &ModelParams) -> Result<Vec<f64>> {
        Ok(self.evaluate(state, params, false)?.l)
    }

    /// Residual and the analytic Jacobian blocks at one state.
    pub fn analytic_jacobian_blocks(
        &self,
        state: &StateVector,
        params: &ModelParams,
    ) -> Result<(ResidualVector, JacobianBlocks)> {
        let ev = self.evaluate(state, params, self.settings.well_balanced)?;
        let blocks = self.blocks_from(&ev, state, params)?;
        Ok((ev.f, blocks))
    }

    fn blocks_from(&self, ev: &Evaluation, state: &StateVector, params: &ModelParams) -> Result<JacobianBlocks> {
        let rules = &self.rules;
        let b = self.basis();
        let nb = b.len();
        let nt = rules.n_targets();
        let m = ev.mass_factor;
        let eps = params.epsilon;
        let eos = &self.profile.eos;
        let nsu = rules.s.len();
        let nmu = rules.mu_len();

        // union-grid coefficients of δλ and δ(sλ_s)
        let len = nsu * nmu;
        let (mut x3, mut y3, mut z3) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        let (mut x5, mut y5, mut z5, mut v5) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        for su in 0..nsu {
            let rho = rules.rho0[su];
            let s = rules.s.x[su];
            for mu in 0..nmu {
                let k = su * nmu + mu;
                let zp = ev.zeta_union.at(su, mu);
                let lam = 1.0 + zp.eta;
                let d = lam + zp.s_eta_s;
                let l2 = lam * lam;
                let l3 = l2 * lam;
                x3[k] = rho * (2.0 * lam * d + l2);
                y3[k] = rho * l2;
                z3[k] = ev.w3[k] / lam;
                let phi = s * s * ev.phi_union.eta[k];
                let kk = params.k.k(phi);
                x5[k] = rho * kk * (4.0 * l3 * d + l2 * l2);
                y5[k] = rho * kk * l2 * l2;
                z5[k] = ev.w5[k] / lam;
                v5[k] = rho * params.k.k_prime(phi) * l2 * l2 * d * s * s;
            }
        }

        let dm = self.mass_factor_gradient(&state.zeta, m)?;
        let mut j11 = DMatrix::zeros(nb, nb);
        let mut j21 = DMatrix::zeros(nb, nb);
        let mut j22 = DMatrix::zeros(nb, nb);
        let mut j12 = DMatrix::zeros(nb, nb);

        let w = rules.width;
        let mut xa = vec![0.0; w * w];
        let mut ya = vec![0.0; w * w];
        let mut row = vec![0.0; nb];

        // origin row of U, subtracted from every F₁ row
        let origin = nt - 1;
        let mut origin_row = vec![0.0; nb];
        {
            let e = &ev.table.targets[origin];
            self.fill_block(e.s_rule, e.mu_rule, |k, idx| {
                xa[k] = m * (x3[idx] * e.g3[k] + z3[idx] * e.g3s[k]);
                ya[k] = m * y3[idx] * e.g3[k];
            });
            self.tensor_contract(e.s_rule, e.mu_rule, &xa, Some(&ya), &mut origin_row);
        }
        let u0 = ev.u[origin];
        let hc_rate = eos.enthalpy_scale_derivative(m, self.profile.central_density);
        let nmu_nodes = self.interp.grid.mu.len();

        for t in 0..nt - 1 {
            let e = &ev.table.targets[t];
            let (i, j) = (t / nmu_nodes, t % nmu_nodes);
            let s_t = self.interp.grid.s[i];
            let lam_t = e.lambda;

            // ∂F₁/∂ζ
            self.fill_block(e.s_rule, e.mu_rule, |k, idx| {
                xa[k] = m * (x3[idx] * e.g3[k] + z3[idx] * e.g3s[k]);
                ya[k] = m * y3[idx] * e.g3[k];
            });
            row.iter_mut().for_each(|v| *v = 0.0);
            self.tensor_contract(e.s_rule, e.mu_rule, &xa, Some(&ya), &mut row);
            let motion = m * ev.table.contract(rules, t, &e.g3t, &ev.w3) / lam_t
                + params.omega2 * e.p * e.p / lam_t;
            let rho_t = self.profile.density(s_t);
            let dm_coeff = (ev.u[t] - u0) / m - eos.enthalpy_scale_derivative(m, rho_t) + hc_rate;
            for c in 0..nb {
                let ec = self.eval_matrix[(t, c)] / (s_t * s_t);
                j11[(t, c)] = row[c] - origin_row[c] + motion * ec + dm_coeff * dm[c];
            }

            // ∂F₁/∂φ
            let phi_t = s_t * s_t * ev.phi_nodes.at(i, j).eta;
            let kt = params.k.k(phi_t);
            for c in 0..nb {
                j12[(t, c)] = -eps * kt * self.eval_matrix[(t, c)];
            }

            // ∂F₂/∂ζ
            self.fill_block(e.s_rule, e.mu_rule, |k, idx| {
                xa[k] = m * (x5[idx] * e.k5[k] + z5[idx] * e.k5s[k]);
                ya[k] = m * y5[idx] * e.k5[k];
            });
            row.iter_mut().for_each(|v| *v = 0.0);
            self.tensor_contract(e.s_rule, e.mu_rule, &xa, Some(&ya), &mut row);
            let motion5 = m * ev.table.contract(rules, t, &e.k5t, &ev.w5) / lam_t;
            let dm5 = ev.l[t] / m;
            for c in 0..nb {
                let ec = self.eval_matrix[(t, c)] / (s_t * s_t);
                j21[(t, c)] = -eps * (row[c] + motion5 * ec + dm5 * dm[c]);
            }

            // ∂F₂/∂φ
            self.fill_block(e.s_rule, e.mu_rule, |k, idx| {
                xa[k] = m * v5[idx] * e.k5[k];
            });
            row.iter_mut().for_each(|v| *v = 0.0);
            self.tensor_contract(e.s_rule, e.mu_rule, &xa, None, &mut row);
            for c in 0..nb {
                j22[(t, c)] = self.eval_matrix[(t, c)] - eps * row[c];
            }
        }
        Ok(JacobianBlocks { j11, j12, j21, j22 })
    }

    /// Calls `f(k, union_index)` for every point of a rule block.
    #[inline]
    fn fill_block<F: FnMut(usize, usize)>(&self, s_rule: usize, mu_rule: usize, mut f: F) {
        let w = self.rules.width;
        let nmu = self.rules.mu_len();
        for a in 0..w {
            let base = (s_rule * w + a) * nmu + mu_rule * w;
            for b in 0..w {
                f(a * w + b, base + b);
            }
        }
    }

    /// `out[c] += Σ_{a,b} (x_ab e_c + y_ab s∂_s e_c)` over a rule block, `e_c = R_m P_l`.
    fn tensor_contract(&self, s_rule: usize, mu_rule: usize, x: &[f64], y: Option<&[f64]>, out: &mut [f64]) {
        let w = self.rules.width;
        let b = self.basis();
        let (nr, nl) = (b.radial_degree, b.l_modes);
        let radial = &self.rules.radial;
        let angular = &self.rules.angular;
        let mut tmp = vec![0.0; w * nr];
        for a in 0..w {
            let su = s_rule * w + a;
            let r = radial.row(su);
            let rs = radial.row_s(su);
            for bb in 0..w {
                let k = a * w + bb;
                let xv = x[k];
                let t = &mut tmp[bb * nr..(bb + 1) * nr];
                match y {
                    Some(y) => {
                        let yv = y[k];
                        for m in 0..nr {
                            t[m] += xv * r[m] + yv * rs[m];
                        }
                    }
                    None => {
                        for m in 0..nr {
                            t[m] += xv * r[m];
                        }
                    }
                }
            }
        }
        for bb in 0..w {
            let p = angular.row(mu_rule * w + bb);
            let t = &tmp[bb * nr..(bb + 1) * nr];
            for l in 0..nl {
                let pl = p[l];
                let o = &mut out[l * nr..(l + 1) * nr];
                for m in 0..nr {
                    o[m] += pl * t[m];
                }
            }
        }
    }

    /// `∂M/∂a_c` for every coefficient of `ζ`.
    fn mass_factor_gradient(&self, zeta: &AxiField, m: f64) -> Result<Vec<f64>> {
        let rule = &self.mass_rule;
        let b = self.basis();
        let (nr, nl) = (b.radial_degree, b.l_modes);
        let gz = zeta.eval_grid(&rule.radial, &rule.angular);
        let mut out = vec![0.0; b.len()];
        let mut tmp = vec![0.0; nr];
        for (j, wm) in rule.mu.w.iter().enumerate() {
            tmp.iter_mut().for_each(|v| *v = 0.0);
            for (i, dw) in rule.density_weight.iter().enumerate() {
                let zp = gz.at(i, j);
                let lam = 1.0 + zp.eta;
                let d = lam + zp.s_eta_s;
                let xv = dw * wm * (2.0 * lam * d + lam * lam);
                let yv = dw * wm * lam * lam;
                let (r, rs) = (rule.radial.row(i), rule.radial.row_s(i));
                for mm in 0..nr {
                    tmp[mm] += xv * r[mm] + yv * rs[mm];
                }
            }
            let p = rule.angular.row(j);
            for l in 0..nl {
                for mm in 0..nr {
                    out[l * nr + mm] += p[l] * tmp[mm];
                }
            }
        }
        let scale = -m * m / self.target_mass();
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }

    /// Nodal Jacobian `∂F/∂(ζ, φ)` with the `∂F₁/∂ζ` block chosen by `mode`.
    pub fn nodal_jacobian(
        &self,
        state: &StateVector,
        params: &ModelParams,
        mode: JacobianMode,
    ) -> Result<(ResidualVector, DMatrix<f64>)> {
        let (f, mut blocks) = self.analytic_jacobian_blocks(state, params)?;
        if mode == JacobianMode::FiniteDifference {
            blocks.j11 = self.finite_difference_zeta_block(state, params)?;
        }
        Ok((f, blocks.nodal()))
    }

    /// `∂F₁/∂ζ` by central differences per basis direction with step
    /// `1e-5 · max(1, |a_c|)`.
    pub fn finite_difference_zeta_block(&self, state: &StateVector, params: &ModelParams) -> Result<DMatrix<f64>> {
        let nb = self.basis().len();
        let mut out = DMatrix::zeros(nb, nb);
        for c in 0..nb {
            let h = 1e-5 * state.zeta.coefficients[c].abs().max(1.0);
            let mut plus = state.clone();
            plus.zeta.coefficients[c] += h;
            let mut minus = state.clone();
            minus.zeta.coefficients[c] -= h;
            let fp = self.residual(&plus, params)?.f1;
            let fm = self.residual(&minus, params)?.f1;
            for t in 0..nb {
                out[(t, c)] = (fp[t] - fm[t]) / (2.0 * h);
            }
        }
        Ok(out)
    }

    /// Coefficient-space Jacobian `diag(B⁻¹, B⁻¹) ∂F/∂a` with its condition number.
    pub fn assemble_jacobian(
        &self,
        state: &StateVector,
        params: &ModelParams,
        mode: JacobianMode,
    ) -> Result<AssembledJacobian> {
        let (_, nodal) = self.nodal_jacobian(state, params, mode)?;
        let nb = self.basis().len();
        let top = self.interp.project_columns(&nodal.rows(0, nb).into_owned());
        let bottom = self.interp.project_columns(&nodal.rows(nb, nb).into_owned());
        let mut matrix = DMatrix::zeros(2 * nb, 2 * nb);
        matrix.view_mut((0, 0), (nb, 2 * nb)).copy_from(&top);
        matrix.view_mut((nb, 0), (nb, 2 * nb)).copy_from(&bottom);
        let (norm, condition) = spectral_condition(&matrix)?;
        Ok(AssembledJacobian {
            matrix,
            condition,
            norm,
        })
    }

    /// Damped Newton iteration from `initial`.
    pub fn newton_solve(&self, params: &ModelParams, initial: &StateVector) -> Result<NewtonOutcome> {
        params.check(&self.settings.guards)?;
        let tol = self.settings.newton_tol;
        let mut state = initial.clone();
        let mut trace = Vec::new();
        let (mut f, mut jac) = self.nodal_jacobian(&state, params, JacobianMode::Analytic)?;
        let mut res = f.max_norm();
        for iter in 0..=self.settings.max_iter {
            if res < tol {
                trace.push(NewtonStep {
                    iteration: iter,
                    residual: res,
                    step: 0.0,
                    condition: f64::NAN,
                });
                return Ok(NewtonOutcome {
                    state,
                    residual: res,
                    iterations: iter,
                    trace,
                });
            }
            if iter == self.settings.max_iter {
                break;
            }
            let lu = jac.clone().lu();
            let rhs = -DVector::from_vec(f.to_vec());
            let delta = lu
                .solve(&rhs)
                .ok_or_else(|| StarError::Singular(format!("Newton matrix singular at iteration {iter}")))?;
            let condition = lu
                .try_inverse()
                .map(|inv| column_norm1(&inv) * column_norm1(&jac))
                .unwrap_or(f64::INFINITY);
            let dir = StateVector::from_slice(self.basis(), delta.as_slice())?;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let trial = state.axpy(alpha, &dir);
                match self.residual(&trial, params) {
                    Ok(ft) if ft.max_norm() < (1.0 - 1e-4 * alpha) * res || ft.max_norm() < tol => {
                        accepted = Some(trial);
                        break;
                    }
                    Ok(_) | Err(StarError::TrustRadius { .. }) | Err(StarError::Fold { .. }) => alpha *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            trace.push(NewtonStep {
                iteration: iter,
                residual: res,
                step: alpha,
                condition,
            });
            let Some(next) = accepted else {
                return Err(StarError::NoConvergence {
                    iterations: iter,
                    residual: res,
                    trace,
                });
            };
            state = next;
            let out = self.nodal_jacobian(&state, params, JacobianMode::Analytic)?;
            f = out.0;
            jac = out.1;
            res = f.max_norm();
        }
        Err(StarError::NoConvergence {
            iterations: self.settings.max_iter,
            residual: res,
            trace,
        })
    }

    /// First-order responses to `ω²` and `ε` at the Lane-Emden state.
    pub fn first_order_predictors(&self, k: &MagneticCurrentFunction) -> Result<Predictors> {
        let b = self.basis();
        let zero = StateVector::zero(b);
        let p0 = self.params(0.0, 0.0, MagneticCurrentFunction::constant(1.0));
        let ev = self.evaluate(&zero, &p0, self.settings.well_balanced)?;
        let blocks = self.blocks_from(&ev, &zero, &p0)?;
        let nt = ev.table.targets.len() - 1;
        let r2: Vec<f64> = (0..nt).map(|t| -0.5 * ev.table.targets[t].p.powi(2)).collect();
        let zeta1 = blocks
            .j11
            .lu()
            .solve(&DVector::from_vec(r2))
            .ok_or_else(|| StarError::Singular("dF1/dzeta at the origin".into()))?;
        let k0 = k.k(0.0);
        let phi_nodal: Vec<f64> = ev.l.iter().map(|v| k0 * v).collect();
        Ok(Predictors {
            zeta1: AxiField::from_coefficients(b, zeta1.as_slice().to_vec())?,
            phi1: AxiField::from_coefficients(b, self.interp.coefficients_from_values(&phi_nodal))?,
        })
    }

    /// Solves from the first-order predictor.
    pub fn solve_from_predictor(&self, params: &ModelParams) -> Result<NewtonOutcome> {
        let pred = self.first_order_predictors(&params.k)?;
        let guess = StateVector {
            zeta: pred.zeta1.scaled(params.omega2),
            phi: pred.phi1.scaled(params.epsilon),
        };
        self.newton_solve(params, &guess)
    }

    /// Sweep over a `(ω², ε)` grid starting at `(0, 0)`.
    pub fn continuation_sweep(
        &self,
        omega2: &[f64],
        epsilon: &[f64],
        k: &MagneticCurrentFunction,
        order: SweepOrder,
    ) -> Result<Vec<SweepPoint>> {
        if omega2.first() != Some(&0.0) || epsilon.first() != Some(&0.0) {
            return Err(StarError::Config("sweep lists must start at 0".into()));
        }
        let pred = self.first_order_predictors(k)?;
        let (na, ne) = (omega2.len(), epsilon.len());
        let mut solved: Vec<Option<StateVector>> = vec![None; na * ne];
        let mut points = Vec::with_capacity(na * ne);
        let visit: Vec<(usize, usize)> = match order {
            SweepOrder::OmegaFirst => (0..ne).flat_map(|j| (0..na).map(move |i| (i, j))).collect(),
            SweepOrder::EpsilonFirst => (0..na).flat_map(|i| (0..ne).map(move |j| (i, j))).collect(),
        };
        for (i, j) in visit {
            let params = self.params(omega2[i], epsilon[j], k.clone());
            // nearest solved neighbour, preferring the one just visited along the sweep
            let neighbours = match order {
                SweepOrder::OmegaFirst => [(i.wrapping_sub(1), j), (i, j.wrapping_sub(1))],
                SweepOrder::EpsilonFirst => [(i, j.wrapping_sub(1)), (i.wrapping_sub(1), j)],
            };
            let start = neighbours
                .iter()
                .filter(|(a, b)| *a < na && *b < ne)
                .find_map(|&(a, b)| solved[a * ne + b].as_ref().map(|s| (a, b, s.clone())));
            let guess = match start {
                Some((a, b, s)) => StateVector {
                    zeta: s.zeta.axpy(omega2[i] - omega2[a], &pred.zeta1),
                    phi: s.phi.axpy(epsilon[j] - epsilon[b], &pred.phi1),
                },
                None => StateVector {
                    zeta: pred.zeta1.scaled(omega2[i]),
                    phi: pred.phi1.scaled(epsilon[j]),
                },
            };
            let outcome = self.newton_solve(&params, &guess);
            if let Ok(o) = &outcome {
                solved[i * ne + j] = Some(o.state.clone());
            }
            points.push(SweepPoint {
                omega2: omega2[i],
                epsilon: epsilon[j],
                outcome,
            });
        }
        Ok(points)
    }
}

/// Traversal order of a continuation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepOrder {
    /// `ω²` varies fastest.
    OmegaFirst,
    EpsilonFirst,
}

#[derive(Debug)]
pub struct SweepPoint {
    pub omega2: f64,
    pub epsilon: f64,
    pub outcome: Result<NewtonOutcome>,
}

fn column_norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `(σ_max, σ_max / σ_min)`.
pub fn spectral_condition(a: &DMatrix<f64>) -> Result<(f64, f64)> {
    let sv = a.clone().singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if !(lo > 0.0) {
        return Err(StarError::Singular("matrix is not invertible".into()));
    }
    Ok((hi, hi / lo))
}

/// `det Dg_ζ` at the nodes, used to report fold margins.
pub fn nodal_det(problem: &EquilibriumProblem, zeta: &AxiField) -> Vec<f64> {
    let gv = zeta.eval_grid(problem.interp.radial(), problem.interp.angular());
    (0..gv.eta.len()).map(|k| det3(&gv.at(k / gv.n_mu, k % gv.n_mu))).collect()
}
