//! Polytropic equation of state and the nonrotating Lane-Emden background.
//!
//! The pressure law is `p = κ ρ^γ`. The background star is computed in
//! Lane-Emden variables `ρ = ρc θ(ξ)^n`, `s = α ξ` with `n = 1/(γ-1)` and
//! rescaled so that its support is the ball of radius `R`. We fix the central
//! density to one and calibrate `κ` to the requested radius; for `γ = 2` the
//! radius does not depend on `ρc` at all, so this is the only normalization
//! that works across the whole admissible range.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StarError};

/// Default exclusion half-width around `γ = 4/3`.
pub const DEFAULT_GAMMA_EXCLUSION: f64 = 1e-4;

/// Default number of Lane-Emden steps for downstream solvers.
pub const DEFAULT_RADIAL_GRID: usize = 2048;

/// Upper limit on the dimensionless radius searched for the first zero.
pub const DEFAULT_XI_MAX: f64 = 1000.0;

/// End of the series start at the regular singular point.
const SERIES_START: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationOfState {
    pub gamma: f64,
    /// Polytropic constant in `p = κ ρ^γ`.
    pub kappa: f64,
}

impl EquationOfState {
    /// Polytrope with `κ = 1` and the default guard around `4/3`.
    pub fn polytrope(gamma: f64) -> Result<Self> {
        Self::guarded(gamma, DEFAULT_GAMMA_EXCLUSION, false)
    }

    /// Polytrope with an explicit exclusion width and override flag.
    ///
    /// Accepts `6/5 < γ ≤ 2`.
    pub fn guarded(gamma: f64, exclusion: f64, allow_four_thirds: bool) -> Result<Self> {
        if !(gamma > 1.2 && gamma <= 2.0) || !gamma.is_finite() {
            return Err(StarError::Config(format!(
                "polytropic exponent must satisfy 6/5 < gamma <= 2, got {gamma}"
            )));
        }
        if !allow_four_thirds && (gamma - 4.0 / 3.0).abs() <= exclusion {
            return Err(StarError::DegenerateGamma {
                gamma,
                tolerance: exclusion,
            });
        }
        Ok(Self { gamma, kappa: 1.0 })
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }

    /// Polytropic index `n = 1/(γ-1)`.
    pub fn index(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.kappa * rho.max(0.0).powf(self.gamma)
    }

    /// `h(ρ) = κ γ/(γ-1) ρ^{γ-1}` without the sign check.
    #[inline]
    pub fn enthalpy_of(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.kappa * self.gamma / (self.gamma - 1.0) * rho.powf(self.gamma - 1.0)
    }

    /// `ρ ∂h/∂ρ (Mρ₀)` style helper: `d/dM h(M ρ) = κ γ M^{γ-2} ρ^{γ-1}`.
    #[inline]
    pub fn enthalpy_scale_derivative(&self, scale: f64, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.kappa * self.gamma * scale.powf(self.gamma - 2.0) * rho.powf(self.gamma - 1.0)
    }
}

/// Specific enthalpy `∫₀^ρ p'(s)/s ds`.
pub fn enthalpy(rho: f64, eos: &EquationOfState) -> Result<f64> {
    if rho < 0.0 || rho.is_nan() {
        return Err(StarError::Domain(format!("negative density {rho}")));
    }
    Ok(eos.enthalpy_of(rho))
}

/// Inverse of [`enthalpy`]. Callers clamp negative enthalpy (vacuum) to zero first.
pub fn enthalpy_inverse(h: f64, eos: &EquationOfState) -> Result<f64> {
    if h < 0.0 || h.is_nan() {
        return Err(StarError::Domain(format!("negative enthalpy {h}")));
    }
    let g = eos.gamma;
    Ok(((g - 1.0) * h / (g * eos.kappa)).powf(1.0 / (g - 1.0)))
}

/// One row of the tabulated background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub s: f64,
    pub rho0: f64,
    pub h0: f64,
    pub u0: f64,
}

/// JSON sidecar accompanying the profile CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub gamma: f64,
    pub kappa: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub rho_c: f64,
    pub xi1: f64,
    #[serde(rename = "M0")]
    pub total_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// The nonrotating spherically symmetric star.
#[derive(Debug, Clone)]
pub struct RadialStarProfile {
    /// Equation of state with `κ` calibrated to the radius.
    pub eos: EquationOfState,
    pub radius: f64,
    pub central_density: f64,
    pub xi1: f64,
    pub total_mass: f64,
    /// Length scale `α` with `s = α ξ`.
    pub alpha: f64,
    samples: Vec<ProfileSample>,
    theta: Vec<f64>,
    dtheta: Vec<f64>,
    ddtheta: Vec<f64>,
    xi_step: f64,
}

#[derive(Debug, Clone, Copy)]
struct LeState {
    theta: f64,
    dtheta: f64,
    /// `∫₀^ξ θ^n t dt`
    i2: f64,
}

#[inline]
fn signed_pow(x: f64, n: f64) -> f64 {
    if x >= 0.0 {
        x.powf(n)
    } else {
        -(-x).powf(n)
    }
}

fn le_rhs(xi: f64, y: &LeState, n: f64) -> LeState {
    let tn = signed_pow(y.theta, n);
    LeState {
        theta: y.dtheta,
        dtheta: -2.0 * y.dtheta / xi - tn,
        i2: tn * xi,
    }
}

fn rk4_step(xi: f64, y: &LeState, h: f64, n: f64) -> LeState {
    let add = |a: &LeState, b: &LeState, f: f64| LeState {
        theta: a.theta + f * b.theta,
        dtheta: a.dtheta + f * b.dtheta,
        i2: a.i2 + f * b.i2,
    };
    let k1 = le_rhs(xi, y, n);
    let k2 = le_rhs(xi + 0.5 * h, &add(y, &k1, 0.5 * h), n);
    let k3 = le_rhs(xi + 0.5 * h, &add(y, &k2, 0.5 * h), n);
    let k4 = le_rhs(xi + h, &add(y, &k3, h), n);
    LeState {
        theta: y.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
        dtheta: y.dtheta + h / 6.0 * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta),
        i2: y.i2 + h / 6.0 * (k1.i2 + 2.0 * k2.i2 + 2.0 * k3.i2 + k4.i2),
    }
}

fn series_start(xi: f64, n: f64) -> LeState {
    let x2 = xi * xi;
    LeState {
        theta: 1.0 - x2 / 6.0 + n * x2 * x2 / 120.0,
        dtheta: -xi / 3.0 + n * xi * x2 / 30.0,
        i2: x2 / 2.0 - n * x2 * x2 / 24.0,
    }
}

/// First zero of the Lane-Emden function and the slope there.
#[derive(Debug, Clone, Copy)]
pub struct LaneEmdenSurface {
    pub xi1: f64,
    pub dtheta1: f64,
    pub i2: f64,
}

/// Integrate with fixed step `h` until `θ` changes sign, then locate the zero
/// by bisecting on the length of a single RK4 step from the last node.
pub fn lane_emden_surface(n: f64, h: f64, xi_max: f64) -> Result<LaneEmdenSurface> {
    let xi0 = SERIES_START.min(h);
    let mut xi = xi0;
    let mut y = series_start(xi0, n);
    // first step lands on the uniform lattice h, 2h, ...
    let mut step = h - xi0;
    if step <= 0.0 {
        step = h;
    }
    loop {
        if xi > xi_max {
            return Err(StarError::NoSurface { xi_max });
        }
        let next = rk4_step(xi, &y, step, n);
        if next.theta <= 0.0 {
            let (mut lo, mut hi) = (0.0, step);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if rk4_step(xi, &y, mid, n).theta > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            let end = rk4_step(xi, &y, tau, n);
            return Ok(LaneEmdenSurface {
                xi1: xi + tau,
                dtheta1: end.dtheta,
                i2: end.i2,
            });
        }
        xi += step;
        y = next;
        step = h;
    }
}

/// Solve for the background star of radius `radius`.
///
/// `grid_size` is both the number of RK4 steps per unit `π` used to locate
/// the surface and the number of table intervals on `[0, R]`.
pub fn solve_radial_star(
    eos: &EquationOfState,
    radius: f64,
    grid_size: usize,
) -> Result<RadialStarProfile> {
    solve_radial_star_with(eos, radius, grid_size, DEFAULT_XI_MAX)
}

pub fn solve_radial_star_with(
    eos: &EquationOfState,
    radius: f64,
    grid_size: usize,
    xi_max: f64,
) -> Result<RadialStarProfile> {
    if grid_size < 32 {
        return Err(StarError::Config(format!(
            "radial grid_size must be >= 32, got {grid_size}"
        )));
    }
    if !(radius > 0.0) {
        return Err(StarError::Config(format!("radius must be positive, got {radius}")));
    }
    let n = eos.index();
    let surface = lane_emden_surface(n, PI / grid_size as f64, xi_max)?;
    let xi1 = surface.xi1;

    // tabulate on a lattice that ends exactly at xi1
    let h = xi1 / grid_size as f64;
    let mut theta = Vec::with_capacity(grid_size + 1);
    let mut dtheta = Vec::with_capacity(grid_size + 1);
    let mut i2 = Vec::with_capacity(grid_size + 1);
    theta.push(1.0);
    dtheta.push(0.0);
    i2.push(0.0);
    let xi0 = SERIES_START.min(h);
    let mut y = series_start(xi0, n);
    if xi0 < h {
        y = rk4_step(xi0, &y, h - xi0, n);
    }
    for k in 1..=grid_size {
        if k > 1 {
            y = rk4_step((k - 1) as f64 * h, &y, h, n);
        }
        theta.push(y.theta);
        dtheta.push(y.dtheta);
        i2.push(y.i2);
    }
    // the surface is the boundary by definition
    theta[grid_size] = 0.0;
    for t in theta.iter_mut() {
        *t = t.max(0.0);
    }
    let ddtheta: Vec<f64> = (0..=grid_size)
        .map(|k| {
            if k == 0 {
                -1.0 / 3.0
            } else {
                let xi = k as f64 * h;
                -2.0 * dtheta[k] / xi - theta[k].powf(n)
            }
        })
        .collect();

    let rho_c: f64 = 1.0;
    let alpha = radius / xi1;
    let kappa = 4.0 * PI * alpha * alpha * rho_c.powf(1.0 - 1.0 / n) / (n + 1.0);
    let eos = eos.with_kappa(kappa);
    let dtheta1 = dtheta[grid_size];
    let total_mass = 4.0 * PI * alpha.powi(3) * rho_c * xi1 * xi1 * dtheta1.abs();
    let i2_end = i2[grid_size];
    let pot_scale = 4.0 * PI * alpha * alpha * rho_c;
    let samples = (0..=grid_size)
        .map(|k| {
            let xi = k as f64 * h;
            let rho0 = rho_c * theta[k].powf(n);
            ProfileSample {
                s: alpha * xi,
                rho0,
                h0: eos.enthalpy_of(rho0),
                u0: pot_scale * (-xi * dtheta[k] + i2_end - i2[k]),
            }
        })
        .collect();

    Ok(RadialStarProfile {
        eos,
        radius,
        central_density: rho_c,
        xi1,
        total_mass,
        alpha,
        samples,
        theta,
        dtheta,
        ddtheta,
        xi_step: h,
    })
}

/// Total mass of the nonrotating star with central density `rho_c` for a
/// fixed equation of state, and `dM/dρc` by central differences.
pub fn mass_of_central_density(eos: &EquationOfState, rho_c: f64) -> Result<(f64, f64)> {
    if !(rho_c > 0.0) {
        return Err(StarError::Domain(format!(
            "central density must be positive, got {rho_c}"
        )));
    }
    let mass = |rc: f64| -> Result<f64> {
        let n = eos.index();
        let alpha = (eos.kappa * (n + 1.0) * rc.powf(1.0 / n - 1.0) / (4.0 * PI)).sqrt();
        let surf = lane_emden_surface(n, PI / 4096.0, DEFAULT_XI_MAX)?;
        Ok(4.0 * PI * alpha.powi(3) * rc * surf.xi1 * surf.xi1 * surf.dtheta1.abs())
    };
    let m = mass(rho_c)?;
    let d = 1e-4 * rho_c;
    let dm = (mass(rho_c + d)? - mass(rho_c - d)?) / (2.0 * d);
    Ok((m, dm))
}

/// Quintic Hermite basis on `t ∈ [0,1]`: value weights and derivative weights.
#[inline]
fn quintic_hermite(t: f64) -> ([f64; 6], [f64; 6]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let v = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * (t3 - 2.0 * t4 + t5),
    ];
    let d = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
    ];
    (v, d)
}

impl RadialStarProfile {
    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn polytropic_index(&self) -> f64 {
        self.eos.index()
    }

    /// `θ` and `dθ/dξ` at dimensionless radius `xi ∈ [0, ξ₁]`.
    fn theta_at(&self, xi: f64) -> (f64, f64) {
        let h = self.xi_step;
        let last = self.theta.len() - 1;
        let pos = (xi / h).clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last - 1);
        let t = pos - k as f64;
        let (v, d) = quintic_hermite(t);
        let c = [
            self.theta[k],
            h * self.dtheta[k],
            h * h * self.ddtheta[k],
            self.theta[k + 1],
            h * self.dtheta[k + 1],
            h * h * self.ddtheta[k + 1],
        ];
        let mut val = 0.0;
        let mut der = 0.0;
        for i in 0..6 {
            val += c[i] * v[i];
            der += c[i] * d[i];
        }
        (val.max(0.0), der / h)
    }

    /// Background density `ρ₀(s)`; zero outside the support.
    #[inline]
    pub fn density(&self, s: f64) -> f64 {
        let s = s.abs();
        if s >= self.radius {
            return 0.0;
        }
        let (th, _) = self.theta_at(s / self.alpha);
        self.central_density * th.powf(self.eos.index())
    }

    /// `ρ₀(s)` and `dρ₀/ds`.
    #[inline]
    pub fn density_and_derivative(&self, s: f64) -> (f64, f64) {
        let s = s.abs();
        if s >= self.radius {
            return (0.0, 0.0);
        }
        let n = self.eos.index();
        let (th, dth) = self.theta_at(s / self.alpha);
        if th <= 0.0 {
            return (0.0, 0.0);
        }
        let rho = self.central_density * th.powf(n);
        let drho = self.central_density * n * th.powf(n - 1.0) * dth / self.alpha;
        (rho, drho)
    }

    /// Gravitational potential of the background, `U₀(s)`, valid for all `s ≥ 0`.
    pub fn potential(&self, s: f64) -> f64 {
        let s = s.abs();
        if s >= self.radius {
            return self.total_mass / s;
        }
        // cubic Hermite in U0 with U0' = 4π α ρc θ'
        let h = self.xi_step * self.alpha;
        let last = self.samples.len() - 1;
        let pos = (s / h).clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last - 1);
        let t = pos - k as f64;
        let d0 = 4.0 * PI * self.alpha * self.central_density * self.dtheta[k];
        let d1 = 4.0 * PI * self.alpha * self.central_density * self.dtheta[k + 1];
        let u0 = self.samples[k].u0;
        let u1 = self.samples[k + 1].u0;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * h * d1
    }

    pub fn central_enthalpy(&self) -> f64 {
        self.eos.enthalpy_of(self.central_density)
    }

    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            gamma: self.eos.gamma,
            kappa: self.eos.kappa,
            radius: self.radius,
            rho_c: self.central_density,
            xi1: self.xi1,
            total_mass: self.total_mass,
            config_hash: None,
        }
    }

    /// CSV with header `s,rho0,h0,U0`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,rho0,h0,U0")?;
        for r in &self.samples {
            writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", r.s, r.rho0, r.h0, r.u0)?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str, config_hash: Option<&str>) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let f = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let mut side = self.sidecar();
        side.config_hash = config_hash.map(str::to_owned);
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&side)?,
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    /// Oracle: ∫₀^ρ p'(t)/t dt by quadrature of the defining integral.
    fn enthalpy_by_quadrature(rho: f64, eos: &EquationOfState) -> f64 {
        let g = eos.gamma;
        // p'(t)/t = κ γ t^{γ-2}; substitute t = ρ u^k to tame t^{γ-2} at 0
        let k = 8.0;
        simpson(
            |u| {
                if u == 0.0 {
                    return 0.0;
                }
                let t = rho * u.powf(k);
                let dt = rho * k * u.powf(k - 1.0);
                eos.kappa * g * t.powf(g - 2.0) * dt
            },
            0.0,
            1.0,
            20000,
        )
    }

    #[test]
    fn enthalpy_examples() {
        let e2 = EquationOfState::polytrope(2.0).unwrap();
        assert_eq!(enthalpy(0.0, &e2).unwrap(), 0.0);
        assert!((enthalpy(1.0, &e2).unwrap() - 2.0).abs() < 1e-15);
        assert!((enthalpy_by_quadrature(1.0, &e2) - 2.0).abs() < 1e-9);

        let e43 = EquationOfState::guarded(4.0 / 3.0, DEFAULT_GAMMA_EXCLUSION, true).unwrap();
        let h = enthalpy(8.0, &e43).unwrap();
        assert!((h - 8.0).abs() < 1e-12);
        assert!((enthalpy_by_quadrature(8.0, &e43) - h).abs() < 1e-7);
    }

    #[test]
    fn enthalpy_rejects_negative_density() {
        let e = EquationOfState::polytrope(1.5).unwrap();
        assert!(enthalpy(-1e-3, &e).is_err());
        assert!(enthalpy_inverse(-1e-3, &e).is_err());
    }

    #[test]
    fn enthalpy_inverse_examples() {
        let e2 = EquationOfState::polytrope(2.0).unwrap();
        assert_eq!(enthalpy_inverse(0.0, &e2).unwrap(), 0.0);
        assert!((enthalpy_inverse(2.0, &e2).unwrap() - 1.0).abs() < 1e-15);
        let e = EquationOfState::polytrope(1.5).unwrap();
        let back = enthalpy_inverse(enthalpy(0.37, &e).unwrap(), &e).unwrap();
        assert!((back - 0.37).abs() < 1e-12);
    }

    #[test]
    fn gamma_guard() {
        assert!(EquationOfState::polytrope(1.1).is_err());
        assert!(EquationOfState::polytrope(2.1).is_err());
        assert!(matches!(
            EquationOfState::polytrope(4.0 / 3.0),
            Err(StarError::DegenerateGamma { .. })
        ));
        assert!(EquationOfState::guarded(4.0 / 3.0, 1e-4, true).is_ok());
        assert!(EquationOfState::polytrope(1.334).is_ok());
    }

    #[test]
    fn n1_surface_is_pi() {
        let e = EquationOfState::polytrope(2.0).unwrap();
        let p = solve_radial_star(&e, 1.0, 2048).unwrap();
        assert!((p.xi1 - PI).abs() < 1e-8, "xi1 = {}", p.xi1);
        let worst = (0..=200)
            .map(|i| {
                let s = i as f64 / 200.0;
                let exact = if s == 0.0 { 1.0 } else { (PI * s).sin() / (PI * s) };
                (p.density(s) - exact).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "worst {worst}");
        assert_eq!(p.samples().last().unwrap().rho0, 0.0);
        assert_eq!(p.density(1.0), 0.0);
    }

    #[test]
    fn surface_density_vanishes_for_any_radius() {
        let e = EquationOfState::polytrope(2.0).unwrap();
        for r in [0.5, 1.0, 3.0] {
            let p = solve_radial_star(&e, r, 64).unwrap();
            assert_eq!(p.samples().last().unwrap().rho0, 0.0);
            assert!((p.samples().last().unwrap().s - r).abs() < 1e-12);
        }
    }

    /// Oracle for n = 1.5: the same ODE with a much smaller step, with the
    /// step-halving difference as the error estimate.
    #[test]
    fn n15_surface() {
        let n = 1.5;
        let fine = lane_emden_surface(n, 1e-4, 100.0).unwrap().xi1;
        let finer = lane_emden_surface(n, 5e-5, 100.0).unwrap().xi1;
        assert!((fine - finer).abs() < 1e-10);
        assert!((finer - 3.65375).abs() < 1e-5);
        let e = EquationOfState::polytrope(5.0 / 3.0).unwrap();
        let p = solve_radial_star(&e, 1.0, 1024).unwrap();
        assert!((p.xi1 - finer).abs() < 1e-5);
    }

    #[test]
    fn refinement_is_fourth_order() {
        let err = |g: usize| (lane_emden_surface(1.0, PI / g as f64, 100.0).unwrap().xi1 - PI).abs();
        for g in [32usize, 64, 128] {
            let ratio = err(g) / err(2 * g);
            assert!(ratio >= 8.0, "grid {g}: ratio {ratio}");
        }
    }

    #[test]
    fn hydrostatic_identity_and_mass() {
        for gamma in [2.0, 5.0 / 3.0, 1.4] {
            let e = EquationOfState::polytrope(gamma).unwrap();
            let p = solve_radial_star(&e, 1.0, 2048).unwrap();
            let c = p.samples()[0].h0 - p.samples()[0].u0;
            let worst = p
                .samples()
                .iter()
                .map(|r| (r.h0 - r.u0 - c).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6 * p.central_enthalpy(), "gamma {gamma}: {worst}");

            let m = simpson(|s| 4.0 * PI * s * s * p.density(s), 0.0, 1.0, 4000);
            assert!((m - p.total_mass).abs() < 1e-7 * p.total_mass, "gamma {gamma}");
            // exterior potential joins continuously
            assert!((p.potential(1.0 - 1e-12) - p.total_mass).abs() < 1e-6);
        }
    }

    #[test]
    fn n1_mass_closed_form() {
        let e = EquationOfState::polytrope(2.0).unwrap();
        let p = solve_radial_star(&e, 1.0, 2048).unwrap();
        assert!((p.total_mass - 4.0 / PI).abs() < 1e-9);
        assert!((p.eos.kappa - 2.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn mass_derivative_sign_follows_scaling() {
        let e2 = EquationOfState::polytrope(2.0).unwrap();
        assert!(mass_of_central_density(&e2, 1.0).unwrap().1 > 0.0);
        let e13 = EquationOfState::polytrope(1.30).unwrap();
        assert!(mass_of_central_density(&e13, 1.0).unwrap().1 < 0.0);
        let e43 = EquationOfState::guarded(4.0 / 3.0, 1e-4, true).unwrap();
        let (m, dm) = mass_of_central_density(&e43, 1.0).unwrap();
        assert!(dm.abs() < 1e-8 * m, "dM/drho_c = {dm}");
        // scaling exponent (3γ-4)/(2(γ-1)) for γ = 2 is 1
        let (m1, _) = mass_of_central_density(&e2, 1.0).unwrap();
        let (m2, _) = mass_of_central_density(&e2, 2.0).unwrap();
        assert!((m2 / m1 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn no_surface_near_n5() {
        let e = EquationOfState::guarded(1.2001, 1e-4, false).unwrap();
        assert!(matches!(
            solve_radial_star_with(&e, 1.0, 64, 30.0),
            Err(StarError::NoSurface { .. })
        ));
    }

    #[test]
    fn csv_header() {
        let e = EquationOfState::polytrope(2.0).unwrap();
        let p = solve_radial_star(&e, 1.0, 32).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,rho0,h0,U0\n"));
        assert_eq!(text.lines().count(), 34);
    }
}
