//! Physical fields of a converged state and checks against the original
//! momentum, induction and divergence equations.
//!
//! Everything here works on a uniform `(r, z)` grid in physical space with
//! centered second-order stencils, independent of the collocation basis.
//! Fields are even in `z`, so stencils that cross `z = 0` read mirrored
//! values; stencils never cross the axis.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::basis::AxiField;
use crate::eos::RadialStarProfile;
use crate::equilibrium::{EquilibriumProblem, ModelParams, StateVector};
use crate::error::Result;
use crate::geometry::{preimage_radius, x_norm_on, MassRule};
use crate::potentials::{linv_apply_source, newtonian_potential, PulledBackSource};
use crate::quadrature::QuadratureSettings;

/// Tolerances and grids of the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSettings {
    /// Spacing of the verification grid.
    pub spacing: f64,
    /// Spacing of the field dump grid.
    pub dump_spacing: f64,
    /// Half width of the dump box.
    pub dump_extent: f64,
    /// Points with `ρ ≤ cutoff · M ρ_c` are left out of derivative checks.
    pub density_cutoff: f64,
    pub momentum_tol: f64,
    /// Allowed multiple of the stencil noise floor for `∇·B` and Faraday.
    pub noise_factor: f64,
    pub mass_tol: f64,
    /// Acceptable band for the force identity refinement ratio.
    pub force_ratio_min: f64,
    pub force_ratio_max: f64,
    /// Height `|z|` and ratio of the far-field `ψ` check.
    pub psi_decay_radius: f64,
    pub psi_decay_ratio: f64,
}

impl Default for DiagnosticSettings {
    fn default() -> Self {
        Self {
            spacing: 0.025,
            dump_spacing: 0.05,
            dump_extent: 1.5,
            density_cutoff: 0.05,
            momentum_tol: 1e-4,
            noise_factor: 10.0,
            mass_tol: 1e-6,
            force_ratio_min: 3.0,
            force_ratio_max: 5.0,
            psi_decay_radius: 4.0,
            psi_decay_ratio: 1.0 / 30.0,
        }
    }
}

/// A converged state with the physical fields it defines.
#[derive(Debug, Clone)]
pub struct StarSolution {
    pub params: ModelParams,
    pub zeta: AxiField,
    pub phi: AxiField,
    pub profile: RadialStarProfile,
    pub quadrature: QuadratureSettings,
    pub mass_factor: f64,
    /// `M(ζ) ∫ ρ₀ det Dg_ζ` under the solver's mass rule.
    pub total_mass: f64,
    pub target_mass: f64,
    pub r_eq: f64,
    pub r_pol: f64,
    pub zeta_norm: f64,
    pub phi_norm: f64,
}

/// Samples of the physical fields on a uniform `(r, z)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub spacing: f64,
    pub n_r: usize,
    pub n_z: usize,
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
    pub u: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_z: Vec<f64>,
    pub j_theta: Vec<f64>,
}

impl FieldGrid {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_z + j
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,z,rho,psi,U,Br,Bz,Jtheta")?;
        for i in 0..self.n_r {
            for j in 0..self.n_z {
                let k = self.idx(i, j);
                writeln!(
                    w,
                    "{:.6},{:.6},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    i as f64 * self.spacing,
                    j as f64 * self.spacing,
                    self.rho[k],
                    self.psi[k],
                    self.u[k],
                    self.b_r[k],
                    self.b_z[k],
                    self.j_theta[k]
                )?;
            }
        }
        Ok(())
    }
}

/// Builds the solution record for a state of `problem`.
pub fn reconstruct_fields(problem: &EquilibriumProblem, state: &StateVector, params: &ModelParams) -> Result<StarSolution> {
    let deformed = problem.mass_rule.deformed_mass(&state.zeta)?;
    let m = problem.target_mass() / deformed;
    let r_eq = 1.0 + state.zeta.eval(1.0, 0.0).eta;
    let r_pol = 1.0 + state.zeta.eval(1.0, 1.0).eta;
    Ok(StarSolution {
        params: params.clone(),
        zeta: state.zeta.clone(),
        phi: state.phi.clone(),
        profile: problem.profile.clone(),
        quadrature: problem.quadrature,
        mass_factor: m,
        total_mass: m * deformed,
        target_mass: problem.target_mass(),
        r_eq,
        r_pol,
        zeta_norm: x_norm_on(&state.zeta, &problem.interp.grid),
        phi_norm: x_norm_on(&state.phi, &problem.interp.grid),
    })
}

impl StarSolution {
    /// Preimage `(s, μ)` of the physical point `(r, z)` if it lies in the star.
    pub fn preimage(&self, r: f64, z: f64) -> Option<(f64, f64)> {
        let rho = r.hypot(z);
        if rho == 0.0 {
            return Some((0.0, 1.0));
        }
        let mu = z.abs() / rho;
        preimage_radius(&self.zeta, rho, mu).map(|s| (s, mu))
    }

    pub fn density(&self, r: f64, z: f64) -> f64 {
        match self.preimage(r, z) {
            Some((s, _)) => self.mass_factor * self.profile.density(s),
            None => 0.0,
        }
    }

    pub fn central_density(&self) -> f64 {
        self.mass_factor * self.profile.central_density
    }

    fn phi_at(&self, s: f64, mu: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.phi.eval(s, mu).value(s)
    }

    /// `ρ₀ M k(φ)` in preimage coordinates, the source of `ψ`.
    fn magnetic_source(&self) -> impl Fn(f64, f64) -> f64 + '_ {
        move |s, mu| self.mass_factor * self.profile.density(s) * self.params.k.k(self.phi_at(s, mu))
    }

    /// `ψ` at many points; exterior points go through the integral formula.
    pub fn psi_many(&self, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; points.len()];
        let mut outside = vec![];
        for (k, p) in points.iter().enumerate() {
            match self.preimage(p[0], p[1]) {
                Some((s, mu)) => out[k] = self.phi_at(s, mu),
                None => outside.push(k),
            }
        }
        if !outside.is_empty() && self.params.epsilon != 0.0 {
            let src = self.magnetic_source();
            let source = PulledBackSource::new(Some(&self.zeta), &src);
            let targets: Vec<[f64; 2]> = outside.iter().map(|&k| points[k]).collect();
            let vals = linv_apply_source(&source, &targets, &self.quadrature)?;
            for (k, v) in outside.iter().zip(vals) {
                out[*k] = self.params.epsilon * v;
            }
        }
        Ok(out)
    }

    pub fn psi(&self, r: f64, z: f64) -> Result<f64> {
        Ok(self.psi_many(&[[r, z]])?[0])
    }

    /// Gravitational potential at many points.
    pub fn potential_many(&self, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        let m = self.mass_factor;
        let density = |s: f64, _mu: f64| m * self.profile.density(s);
        newtonian_potential(&density, Some(&self.zeta), points, &self.quadrature)
    }

    /// `h(ρ) - ½ω²r² - U + εK(ψ)`, constant inside an exact equilibrium.
    pub fn bernoulli_many(&self, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        let u = self.potential_many(points)?;
        let psi = self.psi_many(points)?;
        Ok(points
            .iter()
            .zip(u.iter().zip(&psi))
            .map(|(p, (u, psi))| {
                let h = self.params.eos.enthalpy_of(self.density(p[0], p[1]));
                h - 0.5 * self.params.omega2 * p[0] * p[0] - u + self.params.epsilon * self.params.k.big_k(*psi)
            })
            .collect())
    }

    /// `(r_eq - r_pol) / r_eq`.
    pub fn oblateness(&self) -> f64 {
        (self.r_eq - self.r_pol) / self.r_eq
    }

    pub fn mass_relative_error(&self) -> f64 {
        (self.total_mass - self.target_mass).abs() / self.target_mass
    }

    /// Mass from an independent, finer pulled-back rule.
    pub fn mass_fine(&self) -> Result<f64> {
        let rule = MassRule::new(self.zeta.basis(), &self.profile, 96, 48);
        Ok(self.mass_factor * rule.deformed_mass(&self.zeta)?)
    }

    /// Samples every field on `[0, extent]²` with the given spacing.
    pub fn sample_fields(&self, spacing: f64, extent: f64) -> Result<FieldGrid> {
        let n = (extent / spacing).round() as usize + 1;
        let mut points = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                points.push([i as f64 * spacing, j as f64 * spacing]);
            }
        }
        let rho: Vec<f64> = points.iter().map(|p| self.density(p[0], p[1])).collect();
        let psi = self.psi_many(&points)?;
        let u = self.potential_many(&points)?;
        let mut grid = FieldGrid {
            spacing,
            n_r: n,
            n_z: n,
            rho,
            psi,
            u,
            b_r: vec![0.0; n * n],
            b_z: vec![0.0; n * n],
            j_theta: vec![0.0; n * n],
        };
        let h = spacing;
        let at = |g: &FieldGrid, i: usize, j: isize| g.psi[g.idx(i, j.unsigned_abs())];
        for i in 0..n {
            for j in 0..n {
                let k = grid.idx(i, j);
                let ji = j as isize;
                let dz = if j + 1 < n {
                    (at(&grid, i, ji + 1) - at(&grid, i, ji - 1)) / (2.0 * h)
                } else {
                    (at(&grid, i, ji) - at(&grid, i, ji - 1)) / h
                };
                if i == 0 {
                    // ψ ≈ r² v near the axis
                    grid.b_z[k] = -2.0 * grid.psi[grid.idx(1, j)] / (h * h);
                    continue;
                }
                let r = i as f64 * h;
                let dr = if i + 1 < n {
                    (grid.psi[grid.idx(i + 1, j)] - grid.psi[grid.idx(i - 1, j)]) / (2.0 * h)
                } else {
                    (grid.psi[k] - grid.psi[grid.idx(i - 1, j)]) / h
                };
                grid.b_r[k] = dz / r;
                grid.b_z[k] = -dr / r;
                grid.j_theta[k] = r * self.params.epsilon * grid.rho[k] * self.params.k.k(grid.psi[k]);
            }
        }
        Ok(grid)
    }
}

/// Uniform grid mask of points whose density clears the cutoff.
struct InteriorGrid {
    h: f64,
    n: usize,
    inside: Vec<bool>,
}

impl InteriorGrid {
    fn new(sol: &StarSolution, h: f64, cutoff: f64) -> Self {
        let reach = sol.r_eq.max(sol.r_pol).max(1.0) + 2.0 * h;
        let n = (reach / h).ceil() as usize + 1;
        let floor = cutoff * sol.central_density();
        let mut inside = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                inside[i * n + j] = sol.density(i as f64 * h, j as f64 * h) > floor;
            }
        }
        Self { h, n, inside }
    }

    fn is_in(&self, i: isize, j: isize) -> bool {
        i >= 0 && (i as usize) < self.n && (j.unsigned_abs()) < self.n && self.inside[i as usize * self.n + j.unsigned_abs()]
    }

    /// All points within `reach` grid steps (max norm) are inside.
    fn stencil_in(&self, i: usize, j: usize, reach: isize) -> bool {
        let (i, j) = (i as isize, j as isize);
        (-reach..=reach).all(|a| (-reach..=reach).all(|b| self.is_in(i + a, j + b)))
    }

    fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h, j as f64 * self.h]
    }
}

/// Sampled scalar on an [`InteriorGrid`] with `z`-mirroring.
struct Samples<'a> {
    grid: &'a InteriorGrid,
    v: Vec<f64>,
}

impl Samples<'_> {
    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        self.v[i as usize * self.grid.n + j.unsigned_abs()]
    }
}

fn sample_inside(grid: &InteriorGrid, f: impl Fn(&[[f64; 2]]) -> Result<Vec<f64>>) -> Result<Samples<'_>> {
    let mut pts = vec![];
    let mut idx = vec![];
    for i in 0..grid.n {
        for j in 0..grid.n {
            if grid.inside[i * grid.n + j] {
                pts.push(grid.point(i, j));
                idx.push(i * grid.n + j);
            }
        }
    }
    let vals = f(&pts)?;
    let mut v = vec![f64::NAN; grid.n * grid.n];
    for (k, val) in idx.into_iter().zip(vals) {
        v[k] = val;
    }
    Ok(Samples { grid, v })
}

/// Momentum balance result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumResidual {
    /// `max |∇Φ| / max |∇h(ρ₀)|`.
    pub relative: f64,
    pub absolute: f64,
    pub points: usize,
}

/// `max |∇(h - ½ω²r² - U + εK(ψ))|` over points whose stencil stays inside
/// the cutoff region, relative to `max |∇h(ρ₀)|`.
pub fn momentum_residual(sol: &StarSolution, settings: &DiagnosticSettings) -> Result<MomentumResidual> {
    let grid = InteriorGrid::new(sol, settings.spacing, settings.density_cutoff);
    let phi = sample_inside(&grid, |p| sol.bernoulli_many(p))?;
    let h = grid.h;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..grid.n {
        for j in 0..grid.n {
            if !grid.stencil_in(i, j, 1) {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            let dr = if i == 0 { 0.0 } else { (phi.at(ii + 1, jj) - phi.at(ii - 1, jj)) / (2.0 * h) };
            let dz = (phi.at(ii, jj + 1) - phi.at(ii, jj - 1)) / (2.0 * h);
            worst = worst.max(dr.hypot(dz));
            count += 1;
        }
    }
    let scale = enthalpy_gradient_scale(&sol.profile);
    Ok(MomentumResidual {
        relative: worst / scale,
        absolute: worst,
        points: count,
    })
}

/// `max_s |d h(ρ₀(s))/ds|` of the background.
pub fn enthalpy_gradient_scale(profile: &RadialStarProfile) -> f64 {
    let n = 2000;
    let eos = profile.eos;
    (0..n)
        .map(|k| {
            let s = profile.radius * (k as f64 + 0.5) / n as f64;
            let (rho, drho) = profile.density_and_derivative(s);
            if rho <= 0.0 {
                return 0.0;
            }
            eos.enthalpy_scale_derivative(1.0, rho) / rho * drho.abs()
        })
        .fold(0.0, f64::max)
}

/// Deviation between `(∇×B)×B` and `-(Lψ)∇ψ` at one spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceIdentity {
    pub spacing: f64,
    pub deviation: f64,
    /// Largest `|J_θ B|` on the same points, for scale.
    pub scale: f64,
    pub points: usize,
    /// Interior points with `r < 2h`, left out because `B` needs `ψ/r` there.
    pub axis_excluded: usize,
}

/// Force identity on the points of the coarse grid `2h`, evaluated with
/// stencils of spacing `h`.
pub fn force_identity_at(sol: &StarSolution, h: f64, coarse: f64, cutoff: f64) -> Result<ForceIdentity> {
    let grid = InteriorGrid::new(sol, h, cutoff);
    let psi = sample_inside(&grid, |p| sol.psi_many(p))?;
    let step = (coarse / h).round() as usize;
    let eps = sol.params.epsilon;
    let b = |i: isize, j: isize| {
        let r = i as f64 * h;
        let br = (psi.at(i, j + 1) - psi.at(i, j - 1)) / (2.0 * h * r);
        let bz = -(psi.at(i + 1, j) - psi.at(i - 1, j)) / (2.0 * h * r);
        (br, bz)
    };
    let mut out = ForceIdentity {
        spacing: h,
        deviation: 0.0,
        scale: 0.0,
        points: 0,
        axis_excluded: 0,
    };
    for i in (0..grid.n).step_by(step) {
        for j in (0..grid.n).step_by(step) {
            if (i as f64) * h < 2.0 * coarse {
                out.axis_excluded += grid.inside[i * grid.n + j] as usize;
                continue;
            }
            // the same physical neighbourhood at both spacings
            if !grid.stencil_in(i, j, 2 * step as isize) {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            let (br, bz) = b(ii, jj);
            let curl = (b(ii, jj + 1).0 - b(ii, jj - 1).0) / (2.0 * h) - (b(ii + 1, jj).1 - b(ii - 1, jj).1) / (2.0 * h);
            let r = i as f64 * h;
            let [x, z] = grid.point(i, j);
            let lpsi = eps * sol.density(x, z) * sol.params.k.k(psi.at(ii, jj));
            // (∇×B)×B + (Lψ)∇ψ with ∇ψ = (-r B_z, r B_r)
            let fr = curl * bz + lpsi * (-r * bz);
            let fz = -curl * br + lpsi * (r * br);
            out.deviation = out.deviation.max(fr.hypot(fz));
            out.scale = out.scale.max((curl * br.hypot(bz)).abs());
            out.points += 1;
        }
    }
    Ok(out)
}

/// Force identity at spacings `2h` and `h` on shared points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceIdentityCheck {
    pub coarse: ForceIdentity,
    pub fine: ForceIdentity,
    /// `coarse.deviation / fine.deviation`, `NaN` when both vanish.
    pub ratio: f64,
}

pub fn force_identity_check(sol: &StarSolution, settings: &DiagnosticSettings) -> Result<ForceIdentityCheck> {
    let h = settings.spacing;
    let coarse = force_identity_at(sol, 2.0 * h, 2.0 * h, settings.density_cutoff)?;
    let fine = force_identity_at(sol, h, 2.0 * h, settings.density_cutoff)?;
    let ratio = if fine.deviation > 0.0 {
        coarse.deviation / fine.deviation
    } else {
        f64::NAN
    };
    Ok(ForceIdentityCheck { coarse, fine, ratio })
}

/// Discrete `B` from `ψ` by centered differences, on points with `i ≥ 1`.
struct DiscreteB {
    h: f64,
    n: usize,
    b_r: Vec<f64>,
    b_z: Vec<f64>,
}

fn discrete_b(psi: &Samples<'_>) -> DiscreteB {
    let g = psi.grid;
    let (h, n) = (g.h, g.n);
    let mut b_r = vec![f64::NAN; n * n];
    let mut b_z = vec![f64::NAN; n * n];
    for i in 1..n {
        for j in 0..n {
            if !g.stencil_in(i, j, 1) {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            let r = i as f64 * h;
            b_r[i * n + j] = (psi.at(ii, jj + 1) - psi.at(ii, jj - 1)) / (2.0 * h * r);
            b_z[i * n + j] = -(psi.at(ii + 1, jj) - psi.at(ii - 1, jj)) / (2.0 * h * r);
        }
    }
    DiscreteB { h, n, b_r, b_z }
}

/// `max |(1/r)(∂_r(r B_r) + ∂_z(r B_z))|` of a field given on a uniform
/// grid with `z`-mirroring (`B_r` odd, `B_z` even). `NaN` entries are skipped.
pub fn divergence_max(h: f64, n: usize, b_r: &[f64], b_z: &[f64]) -> f64 {
    let br = |i: usize, j: isize| if j < 0 { -b_r[i * n + (-j) as usize] } else { b_r[i * n + j as usize] };
    let bz = |i: usize, j: isize| b_z[i * n + j.unsigned_abs()];
    let mut worst: f64 = 0.0;
    for i in 2..n.saturating_sub(1) {
        for j in 0..n - 1 {
            let jj = j as isize;
            let r = i as f64 * h;
            let d = ((i + 1) as f64 * h * br(i + 1, jj) - (i - 1) as f64 * h * br(i - 1, jj)) / (2.0 * h)
                + r * (bz(i, jj + 1) - bz(i, jj - 1)) / (2.0 * h);
            let d = d / r;
            if d.is_finite() {
                worst = worst.max(d.abs());
            }
        }
    }
    worst
}

/// `max |∇×(v×B)|` with `v = ω r e_θ`, whose `θ` component is the only one.
fn faraday_max(omega: f64, b: &DiscreteB) -> f64 {
    let (h, n) = (b.h, b.n);
    // v×B = ω r (B_z, -B_r) in (r, z); E_r even and E_z odd in z
    let er = |i: usize, j: isize| omega * i as f64 * h * b.b_z[i * n + j.unsigned_abs()];
    let ez = |i: usize, j: isize| {
        let v = -omega * i as f64 * h * b.b_r[i * n + j.unsigned_abs()];
        if j < 0 {
            -v
        } else {
            v
        }
    };
    let mut worst: f64 = 0.0;
    for i in 2..n.saturating_sub(1) {
        for j in 0..n - 1 {
            let jj = j as isize;
            let c = (er(i, jj + 1) - er(i, jj - 1)) / (2.0 * h) - (ez(i + 1, jj) - ez(i - 1, jj)) / (2.0 * h);
            if c.is_finite() {
                worst = worst.max(c.abs());
            }
        }
    }
    worst
}

/// A measured value against a noise floor from a known divergence-free,
/// curl-free configuration of the same magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCheck {
    pub value: f64,
    pub floor: f64,
}

impl NoiseCheck {
    pub fn passes(&self, factor: f64) -> bool {
        self.value <= factor * self.floor
    }
}

fn reference_psi(grid: &InteriorGrid, amplitude: f64) -> Samples<'_> {
    let mut v = vec![f64::NAN; grid.n * grid.n];
    for i in 0..grid.n {
        for j in 0..grid.n {
            if grid.inside[i * grid.n + j] {
                let [r, z] = grid.point(i, j);
                v[i * grid.n + j] = amplitude * r * r * (-(r * r + z * z)).exp() * (1.0 + 0.3 * z * z);
            }
        }
    }
    Samples { grid, v }
}

fn magnetic_checks(sol: &StarSolution, settings: &DiagnosticSettings) -> Result<(NoiseCheck, NoiseCheck)> {
    let grid = InteriorGrid::new(sol, settings.spacing, settings.density_cutoff);
    let psi = sample_inside(&grid, |p| sol.psi_many(p))?;
    let amplitude = psi.v.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let b = discrete_b(&psi);
    let refb = discrete_b(&reference_psi(&grid, amplitude));
    let omega = sol.params.omega();
    Ok((
        NoiseCheck {
            value: divergence_max(b.h, b.n, &b.b_r, &b.b_z),
            floor: divergence_max(refb.h, refb.n, &refb.b_r, &refb.b_z),
        },
        NoiseCheck {
            value: faraday_max(omega, &b),
            floor: faraday_max(omega, &refb),
        },
    ))
}

pub fn div_b_check(sol: &StarSolution, settings: &DiagnosticSettings) -> Result<NoiseCheck> {
    Ok(magnetic_checks(sol, settings)?.0)
}

pub fn faraday_check(sol: &StarSolution, settings: &DiagnosticSettings) -> Result<NoiseCheck> {
    Ok(magnetic_checks(sol, settings)?.1)
}

/// Far-field behaviour of `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiDecay {
    pub psi_max: f64,
    /// Largest `|ψ|` on the planes `|z| = psi_decay_radius`, for `r` up to
    /// the evaluation-grid extent.
    pub at_radius: f64,
    pub ratio: f64,
    /// `|ψ|` falls with `|z|` along every sampled vertical line above the star.
    pub decreasing: bool,
}

pub fn psi_decay(sol: &StarSolution, settings: &DiagnosticSettings) -> Result<PsiDecay> {
    let mut inner = vec![];
    for i in 0..=20 {
        for j in 0..=20 {
            inner.push([i as f64 * 0.05, j as f64 * 0.05]);
        }
    }
    let psi_max = sol.psi_many(&inner)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let z_top = settings.psi_decay_radius;
    let z0 = 1.5f64.min(z_top);
    let levels: Vec<f64> = (0..6).map(|k| z0 + k as f64 * (z_top - z0) / 5.0).collect();
    let mut decreasing = true;
    let mut at_radius: f64 = 0.0;
    for i in 1..=10 {
        let r = i as f64 * settings.dump_extent / 10.0;
        let pts: Vec<[f64; 2]> = levels.iter().map(|&z| [r, z]).collect();
        let v: Vec<f64> = sol.psi_many(&pts)?.iter().map(|v| v.abs()).collect();
        decreasing &= v.windows(2).all(|w| w[1] <= w[0]);
        at_radius = at_radius.max(*v.last().unwrap());
    }
    Ok(PsiDecay {
        psi_max,
        at_radius,
        ratio: if psi_max > 0.0 { at_radius / psi_max } else { 0.0 },
        decreasing,
    })
}

/// One named check in the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Every diagnostic of one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub omega2: f64,
    pub epsilon: f64,
    pub momentum: MomentumResidual,
    pub force_identity: ForceIdentityCheck,
    pub div_b: NoiseCheck,
    pub faraday: NoiseCheck,
    pub psi_decay: PsiDecay,
    pub oblateness: f64,
    pub r_eq: f64,
    pub r_pol: f64,
    pub mass: f64,
    pub mass_fine: f64,
    pub zeta_norm: f64,
    pub phi_norm: f64,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

fn check(name: &str, value: f64, threshold: f64, pass: bool) -> CheckResult {
    CheckResult {
        name: name.into(),
        value,
        threshold,
        pass,
    }
}

/// Runs every diagnostic.
pub fn diagnose(sol: &StarSolution, settings: &DiagnosticSettings) -> Result<DiagnosticsReport> {
    let momentum = momentum_residual(sol, settings)?;
    let force = force_identity_check(sol, settings)?;
    let (div_b, faraday) = magnetic_checks(sol, settings)?;
    let decay = psi_decay(sol, settings)?;
    let mass_fine = sol.mass_fine()?;
    let fine_err = (mass_fine - sol.target_mass).abs() / sol.target_mass;

    // without a field both sides of the force identity vanish
    let force_pass = if force.fine.deviation <= 1e-14 * force.fine.scale.max(1e-300) || force.coarse.deviation == 0.0 {
        true
    } else {
        force.ratio >= settings.force_ratio_min && force.ratio <= settings.force_ratio_max
    };
    let checks = vec![
        check("momentum_residual", momentum.relative, settings.momentum_tol, momentum.relative < settings.momentum_tol),
        check("force_identity_ratio", force.ratio, settings.force_ratio_min, force_pass),
        check("div_b", div_b.value, settings.noise_factor * div_b.floor, div_b.passes(settings.noise_factor)),
        check("faraday", faraday.value, settings.noise_factor * faraday.floor, faraday.passes(settings.noise_factor)),
        check("mass", fine_err, settings.mass_tol, fine_err < settings.mass_tol),
        check("oblateness_nonnegative", sol.oblateness(), 0.0, sol.oblateness() >= -1e-12),
        check(
            "psi_decay",
            decay.ratio,
            settings.psi_decay_ratio,
            decay.ratio <= settings.psi_decay_ratio && decay.decreasing,
        ),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(DiagnosticsReport {
        omega2: sol.params.omega2,
        epsilon: sol.params.epsilon,
        momentum,
        force_identity: force,
        div_b,
        faraday,
        psi_decay: decay,
        oblateness: sol.oblateness(),
        r_eq: sol.r_eq,
        r_pol: sol.r_pol,
        mass: sol.total_mass,
        mass_fine,
        zeta_norm: sol.zeta_norm,
        phi_norm: sol.phi_norm,
        checks,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Basis;
    use crate::eos::{solve_radial_star, EquationOfState};
    use crate::equilibrium::{MagneticCurrentFunction, SolverSettings};

    fn problem() -> EquilibriumProblem {
        let eos = EquationOfState::polytrope(2.0).unwrap();
        let prof = solve_radial_star(&eos, 1.0, 1024).unwrap();
        EquilibriumProblem::new(prof, Basis::new(8, 5).unwrap(), SolverSettings::default()).unwrap()
    }

    fn solved(pb: &EquilibriumProblem, w: f64, e: f64) -> StarSolution {
        let p = pb.params(w, e, MagneticCurrentFunction::new(vec![1.0, 1.0]).unwrap());
        let out = pb.solve_from_predictor(&p).unwrap();
        reconstruct_fields(pb, &out.state, &p).unwrap()
    }

    #[test]
    fn background_has_no_field_and_passes() {
        let pb = problem();
        let sol = solved(&pb, 0.0, 0.0);
        let g = sol.sample_fields(0.1, 1.2).unwrap();
        assert!(g.psi.iter().chain(&g.b_r).chain(&g.b_z).all(|v| *v == 0.0));
        // spherical density
        let a = sol.density(0.5, 0.0);
        let b = sol.density(0.3, 0.4);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(sol.density(0.0, 1.01), 0.0);
        let rep = diagnose(&sol, &DiagnosticSettings::default()).unwrap();
        assert!(rep.all_pass, "{:?}", rep.checks);
        assert!(rep.momentum.relative < 5e-5, "{:?}", rep.momentum);
        assert_eq!(rep.oblateness, 0.0);
    }

    #[test]
    fn magnetic_fields_are_regular_on_axis() {
        let pb = problem();
        let sol = solved(&pb, 0.0, 0.05);
        let z = 0.3;
        let br = |r: f64| {
            let d = 1e-4;
            (sol.psi(r, z + d).unwrap() - sol.psi(r, z - d).unwrap()) / (2.0 * d * r)
        };
        let bz = |r: f64| {
            let d = r * 1e-3;
            -(sol.psi(r + d, z).unwrap() - sol.psi(r - d, z).unwrap()) / (2.0 * d * r)
        };
        assert!(br(1e-3).abs() < 0.2 * br(1e-2).abs());
        assert!((bz(1e-3) - bz(1e-2)).abs() < 0.01 * bz(1e-2).abs());
    }

    #[test]
    fn exterior_psi_is_continuous_with_interior() {
        let pb = problem();
        let sol = solved(&pb, 0.01, 0.05);
        let surface = sol.r_eq;
        let inside = sol.psi(surface - 1e-6, 0.0).unwrap();
        let outside = sol.psi(surface + 1e-6, 0.0).unwrap();
        assert!((inside - outside).abs() < 1e-4 * inside.abs(), "{inside} {outside}");
    }

    #[test]
    fn divergence_detects_non_potential_field() {
        let n = 20;
        let h = 0.05;
        let b_r = vec![1.0; n * n];
        let b_z = vec![0.0; n * n];
        assert!(divergence_max(h, n, &b_r, &b_z) > 1.0);
        // B_r = 0, B_z = const is divergence free
        let b_r = vec![0.0; n * n];
        let b_z = vec![1.0; n * n];
        assert_eq!(divergence_max(h, n, &b_r, &b_z), 0.0);
    }

    #[test]
    fn corrupted_state_fails_momentum() {
        let pb = problem();
        let p = pb.params(0.02, 0.05, MagneticCurrentFunction::new(vec![1.0, 1.0]).unwrap());
        let out = pb.solve_from_predictor(&p).unwrap();
        let ds = DiagnosticSettings::default();
        let good = momentum_residual(&reconstruct_fields(&pb, &out.state, &p).unwrap(), &ds).unwrap();
        let mut bad = out.state.clone();
        bad.zeta = bad.zeta.scaled(1.1);
        let bad = momentum_residual(&reconstruct_fields(&pb, &bad, &p).unwrap(), &ds).unwrap();
        assert!(bad.relative > 10.0 * good.relative, "{good:?} {bad:?}");
    }

    #[test]
    fn field_dump_has_header_and_rows() {
        let pb = problem();
        let sol = solved(&pb, 0.01, 0.02);
        let g = sol.sample_fields(0.25, 1.5).unwrap();
        let mut buf = vec![];
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,z,rho,psi,U,Br,Bz,Jtheta");
        assert_eq!(lines.count(), 49);
    }
}
