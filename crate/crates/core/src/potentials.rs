//! Gravitational potential and the inverse of `L = ∇·(r⁻²∇)`.
//!
//! Both operators are integrals over the pulled-back source `y ∈ B₁` with
//! the source sitting at `g_ζ(y)`. After the azimuthal reduction each is a
//! 2D integral over `(s, μ) ∈ [0,1]²` whose kernel has a logarithmic ring
//! singularity at the target's preimage. Per target, both axes get split
//! rules graded toward that preimage (see [`crate::quadrature`]).
//!
//! `L⁻¹ f = C₅ r² ∫_{ℝ⁵} |Z - Y|⁻³ f̃(Y) dY` where `f̃` is the extension of
//! `f` to ℝ⁵ that treats `r` as a 4D radius.

use std::io::Write;

use crate::basis::{AngularTable, AxiField, Basis, FieldPoint, GridValues, Interpolator, RadialTable};
use crate::eos::RadialStarProfile;
use crate::error::{Result, StarError};
use crate::geometry::{det3, det5, preimage_radius};
use crate::kernels::{kernel_pair, C5};
use crate::quadrature::{QuadratureSettings, Rule1d};

/// Which of the two reduced kernels an integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `G3`, measure `s² ds dμ`, Jacobian `det Dg_ζ`.
    Gravity,
    /// `K5`, measure `s⁴ (1-μ²) ds dμ`, Jacobian `det Dg̃_ζ`.
    Magnetic,
}

/// Kernel integral at one target with its gradient in `(p, z)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelSums {
    pub value: f64,
    pub d_p: f64,
    pub d_z: f64,
}

/// A source density given in preimage coordinates on the ball of radius
/// `radius`, carried to physical space by `g_ζ`.
pub struct PulledBackSource<'a> {
    /// `None` is the identity map. A deformation requires `radius == 1`.
    pub zeta: Option<&'a AxiField>,
    pub radius: f64,
    /// Density at preimage `(s, μ)`, `s ∈ [0, radius]`, `μ ∈ [0, 1]`.
    pub density: &'a dyn Fn(f64, f64) -> f64,
}

impl<'a> PulledBackSource<'a> {
    pub fn new(zeta: Option<&'a AxiField>, density: &'a dyn Fn(f64, f64) -> f64) -> Self {
        Self {
            zeta,
            radius: 1.0,
            density,
        }
    }

    /// Undeformed source on the ball of the given radius.
    pub fn ball(radius: f64, density: &'a dyn Fn(f64, f64) -> f64) -> Self {
        Self {
            zeta: None,
            radius,
            density,
        }
    }

    /// Preimage split point `(s̄, μ)` of a target `(p, z)`, `z ≥ 0`, with `s̄` in units of `radius`.
    fn split_of(&self, p: f64, z: f64) -> (f64, f64) {
        let rho = p.hypot(z);
        if rho == 0.0 {
            return (0.0, 1.0);
        }
        let mu = (z / rho).clamp(0.0, 1.0);
        let s = match self.zeta {
            Some(zeta) => preimage_radius(zeta, rho, mu).unwrap_or(1.0),
            None => (rho / self.radius).min(1.0),
        };
        (s, mu)
    }

    /// Integral of the chosen kernel against the source at target `(p, z)`.
    pub fn kernel_sums(&self, kind: KernelKind, p: f64, z: f64, settings: &QuadratureSettings) -> Result<KernelSums> {
        self.sums_with(kind, p, z, settings, false)
    }

    /// As [`Self::kernel_sums`] but on mirrored rules, which the gradient needs.
    pub fn kernel_gradient_sums(
        &self,
        kind: KernelKind,
        p: f64,
        z: f64,
        settings: &QuadratureSettings,
    ) -> Result<KernelSums> {
        self.sums_with(kind, p, z, settings, true)
    }

    fn sums_with(
        &self,
        kind: KernelKind,
        p: f64,
        z: f64,
        settings: &QuadratureSettings,
        centered: bool,
    ) -> Result<KernelSums> {
        let sign = if z < 0.0 { -1.0 } else { 1.0 };
        let z = z.abs();
        let (ss, ms) = self.split_of(p, z);
        let (srule, mrule) = if centered {
            (
                Rule1d::centered(ss, 1.0, settings.points, settings.grading),
                Rule1d::centered(ms, 1.0, settings.points, settings.grading),
            )
        } else {
            (settings.rule(ss, 1.0), settings.rule(ms, 1.0))
        };
        let map = MapSamples::new(self.zeta, &srule.x, &mrule.x)?;
        let big = self.radius;
        let mut out = KernelSums::default();
        for (a, (&sb, &ws)) in srule.x.iter().zip(&srule.w).enumerate() {
            let s = big * sb;
            let radial = match kind {
                KernelKind::Gravity => ws * big * s * s,
                KernelKind::Magnetic => ws * big * s.powi(4),
            };
            for (b, (&mu, &wm)) in mrule.x.iter().zip(&mrule.w).enumerate() {
                let rho = (self.density)(s, mu);
                if rho == 0.0 {
                    continue;
                }
                let fp = map.at(a, b);
                let lam = 1.0 + fp.eta;
                let st = (1.0 - mu * mu).max(0.0).sqrt();
                let q = lam * s * st;
                let y = lam * s * mu;
                let w = match kind {
                    KernelKind::Gravity => radial * wm * rho * det3(&fp),
                    KernelKind::Magnetic => radial * wm * (1.0 - mu * mu) * rho * det5(&fp),
                };
                for dz in [z - y, z + y] {
                    let kp = kernel_pair(p, q, dz);
                    let k = match kind {
                        KernelKind::Gravity => kp.g3,
                        KernelKind::Magnetic => kp.k5,
                    };
                    let (gp, gz) = k.target_gradient(p, q, dz);
                    out.value += w * k.value;
                    out.d_p += w * gp;
                    out.d_z += w * gz;
                }
            }
        }
        out.d_z *= sign;
        Ok(out)
    }
}

/// Deformation samples on a tensor rule; identity when there is no map.
struct MapSamples {
    grid: Option<GridValues>,
}

impl MapSamples {
    fn new(zeta: Option<&AxiField>, s: &[f64], mu: &[f64]) -> Result<Self> {
        let Some(zeta) = zeta else {
            return Ok(Self { grid: None });
        };
        let b = zeta.basis();
        let gv = zeta.eval_grid(&RadialTable::new(&b, s), &AngularTable::new(&b, mu));
        for i in 0..s.len() {
            for j in 0..mu.len() {
                let d = det3(&gv.at(i, j));
                if !(d > 0.0) {
                    return Err(StarError::Fold { det: d, s: s[i], mu: mu[j] });
                }
            }
        }
        Ok(Self { grid: Some(gv) })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> FieldPoint {
        match &self.grid {
            Some(g) => g.at(i, j),
            None => FieldPoint::default(),
        }
    }
}

/// `U(z) = ∫_{B₁} ρ(y) det Dg_ζ(y) / |z - g_ζ(y)| dy` at targets `(p, z)`.
///
/// `density` is given in preimage coordinates, e.g. `M(ζ) ρ₀(s)`.
pub fn newtonian_potential(
    density: &dyn Fn(f64, f64) -> f64,
    zeta: Option<&AxiField>,
    targets: &[[f64; 2]],
    settings: &QuadratureSettings,
) -> Result<Vec<f64>> {
    let src = PulledBackSource::new(zeta, density);
    targets
        .iter()
        .map(|t| Ok(src.kernel_sums(KernelKind::Gravity, t[0], t[1], settings)?.value))
        .collect()
}

/// `L⁻¹` of a pulled-back source at targets `(p, z)`.
pub fn linv_apply(
    source: &dyn Fn(f64, f64) -> f64,
    zeta: Option<&AxiField>,
    targets: &[[f64; 2]],
    settings: &QuadratureSettings,
) -> Result<Vec<f64>> {
    linv_apply_source(&PulledBackSource::new(zeta, source), targets, settings)
}

/// `L⁻¹` of an undeformed source supported in the ball of radius `radius`.
pub fn linv_apply_radius(
    source: &dyn Fn(f64, f64) -> f64,
    radius: f64,
    targets: &[[f64; 2]],
    settings: &QuadratureSettings,
) -> Result<Vec<f64>> {
    linv_apply_source(&PulledBackSource::ball(radius, source), targets, settings)
}

pub fn linv_apply_source(
    src: &PulledBackSource<'_>,
    targets: &[[f64; 2]],
    settings: &QuadratureSettings,
) -> Result<Vec<f64>> {
    targets
        .iter()
        .map(|t| {
            if t[0] == 0.0 {
                return Ok(0.0);
            }
            let k = src.kernel_sums(KernelKind::Magnetic, t[0], t[1], settings)?;
            Ok(C5 * t[0] * t[0] * k.value)
        })
        .collect()
}

/// `∇L⁻¹f` as `(∂_r, ∂_z)` at targets, by the product rule on `C₅ r² I(z)`.
pub fn linv_gradient(
    source: &dyn Fn(f64, f64) -> f64,
    zeta: Option<&AxiField>,
    targets: &[[f64; 2]],
    settings: &QuadratureSettings,
) -> Result<Vec<[f64; 2]>> {
    linv_gradient_source(&PulledBackSource::new(zeta, source), targets, settings)
}

pub fn linv_gradient_source(
    src: &PulledBackSource<'_>,
    targets: &[[f64; 2]],
    settings: &QuadratureSettings,
) -> Result<Vec<[f64; 2]>> {
    targets
        .iter()
        .map(|t| {
            let p = t[0];
            let k = src.kernel_gradient_sums(KernelKind::Magnetic, p, t[1], settings)?;
            Ok([C5 * (2.0 * p * k.value + p * p * k.d_p), C5 * p * p * k.d_z])
        })
        .collect()
}

/// A scalar field sampled at the collocation nodes plus the origin.
///
/// Interpolates as `f(0) + s² η(s, μ)` with `η` in the field basis, which
/// covers smooth fields that do not vanish at the origin.
#[derive(Debug, Clone)]
pub struct ScalarFieldAxi {
    pub origin: f64,
    pub nodal: Vec<f64>,
    pub increment: AxiField,
}

impl ScalarFieldAxi {
    pub fn from_nodal(interp: &Interpolator, origin: f64, nodal: Vec<f64>) -> Result<Self> {
        if nodal.len() != interp.grid.len() {
            return Err(StarError::Config(format!(
                "expected {} nodal values, got {}",
                interp.grid.len(),
                nodal.len()
            )));
        }
        if !origin.is_finite() || nodal.iter().any(|v| !v.is_finite()) {
            return Err(StarError::Domain("non-finite nodal value".into()));
        }
        let shifted: Vec<f64> = nodal.iter().map(|v| v - origin).collect();
        let increment = AxiField::from_coefficients(interp.basis(), interp.coefficients_from_values(&shifted))?;
        Ok(Self {
            origin,
            nodal,
            increment,
        })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(interp: &Interpolator, f: F) -> Result<Self> {
        let nodal = interp.grid.nodes().map(|(s, mu)| f(s, mu)).collect();
        Self::from_nodal(interp, f(0.0, 1.0), nodal)
    }

    /// Value at `(s, μ)`.
    pub fn value(&self, s: f64, mu: f64) -> f64 {
        if s == 0.0 {
            return self.origin;
        }
        self.origin + self.increment.eval(s, mu).value(s)
    }

    /// Value at cylindrical `(r, z)`.
    pub fn value_rz(&self, r: f64, z: f64) -> f64 {
        let s = r.hypot(z);
        if s == 0.0 {
            return self.origin;
        }
        self.value(s, z / s)
    }

    /// CSV dump `p,z,value` at the given points.
    pub fn write_csv<W: Write>(&self, mut w: W, points: &[[f64; 2]]) -> Result<()> {
        writeln!(w, "p,z,value")?;
        for pt in points {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", pt[0], pt[1], self.value_rz(pt[0], pt[1]))?;
        }
        Ok(())
    }
}

/// Settings for the finite-difference `L⁻¹` oracle on `[0, extent]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOracleSettings {
    pub extent: f64,
    pub cells: usize,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FdOracleSettings {
    fn default() -> Self {
        Self {
            extent: 6.0,
            cells: 192,
            tolerance: 1e-12,
            max_iter: 20_000,
        }
    }
}

/// Vertex values of `u = L⁻¹f` on the oracle's `(r, z)` box.
#[derive(Debug, Clone)]
pub struct FdField {
    pub spacing: f64,
    pub n: usize,
    /// `v = u/r²` at vertices, `[i * (n+1) + j]` for `r_i = i h`, `z_j = j h`.
    pub v: Vec<f64>,
    pub iterations: usize,
}

impl FdField {
    #[inline]
    pub fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[i * (self.n + 1) + j]
    }

    /// `u(r, z)` by bilinear interpolation of `v`.
    pub fn value(&self, r: f64, z: f64) -> f64 {
        let h = self.spacing;
        let z = z.abs();
        let x = (r / h).clamp(0.0, self.n as f64);
        let y = (z / h).clamp(0.0, self.n as f64);
        let i = (x.floor() as usize).min(self.n - 1);
        let j = (y.floor() as usize).min(self.n - 1);
        let (tx, ty) = (x - i as f64, y - j as f64);
        let v = (1.0 - tx) * (1.0 - ty) * self.v_at(i, j)
            + tx * (1.0 - ty) * self.v_at(i + 1, j)
            + (1.0 - tx) * ty * self.v_at(i, j + 1)
            + tx * ty * self.v_at(i + 1, j + 1);
        r * r * v
    }

    /// Sample onto the collocation basis.
    pub fn to_axi(&self, interp: &Interpolator) -> Result<ScalarFieldAxi> {
        ScalarFieldAxi::from_fn(interp, |s, mu| self.value(s * (1.0 - mu * mu).max(0.0).sqrt(), s * mu))
    }
}

/// Solves `v_rr + 3v_r/r + v_zz = f` for `v = u/r²` by vertex-centred finite
/// volumes with `r³` weights, symmetry at `r = 0` and `z = 0`, and
/// `v = A/ρ³` on the outer edges where `A = C₅ ∫_{ℝ⁵} f̃`. Returns `u = r² v`.
pub fn linv_fd_oracle(source: &dyn Fn(f64, f64) -> f64, settings: &FdOracleSettings) -> Result<FdField> {
    let n = settings.cells;
    if n < 4 || !(settings.extent > 0.0) {
        return Err(StarError::Config("FD oracle needs at least 4 cells and a positive extent".into()));
    }
    let h = settings.extent / n as f64;
    let np = n + 1;
    let idx = |i: usize, j: usize| i * np + j;
    // cell measures
    let face = |i: usize| {
        let r = (i as f64 + 0.5) * h;
        r * r * r
    };
    let vol_r = |i: usize| {
        let hi = (i as f64 + 0.5) * h;
        let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
        (hi.powi(4) - lo.powi(4)) / 4.0
    };
    let len_z = |j: usize| if j == 0 { 0.5 * h } else { h };

    let mut f = vec![0.0; np * np];
    let mut total = 0.0;
    for i in 0..np {
        for j in 0..np {
            let v = source(i as f64 * h, j as f64 * h);
            f[idx(i, j)] = v;
            if i < n && j < n {
                total += vol_r(i) * len_z(j) * v;
            }
        }
    }
    // ∫_{ℝ⁵} f̃ = 2π² ∫∫ r³ f dr dz over z ∈ ℝ
    let amp = C5 * 2.0 * std::f64::consts::PI.powi(2) * 2.0 * total;
    let mut v = vec![0.0; np * np];
    for i in 0..np {
        for j in 0..np {
            if i == n || j == n {
                let rho = (i as f64).hypot(j as f64) * h;
                v[idx(i, j)] = amp / rho.powi(3);
            }
        }
    }

    // A v = b over interior unknowns, A symmetric positive definite.
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            for j in 0..n {
                let k = idx(i, j);
                let c = x[k];
                let mut acc = 0.0;
                let lz = len_z(j);
                acc += face(i) * lz / h * (c - x[idx(i + 1, j)]);
                if i > 0 {
                    acc += face(i - 1) * lz / h * (c - x[idx(i - 1, j)]);
                }
                let vr = vol_r(i);
                acc += vr / h * (c - x[idx(i, j + 1)]);
                if j > 0 {
                    acc += vr / h * (c - x[idx(i, j - 1)]);
                }
                out[k] = acc;
            }
        }
    };
    let diag = |i: usize, j: usize| {
        let lz = len_z(j);
        let mut d = face(i) * lz / h + vol_r(i) / h;
        if i > 0 {
            d += face(i - 1) * lz / h;
        }
        if j > 0 {
            d += vol_r(i) / h;
        }
        d
    };
    // right-hand side: -vol f plus boundary couplings
    let mut rhs = vec![0.0; np * np];
    {
        let mut bnd = vec![0.0; np * np];
        apply(&v, &mut bnd); // interior entries of v are zero: picks up -coupling·v_boundary
        for i in 0..n {
            for j in 0..n {
                let k = idx(i, j);
                rhs[k] = -vol_r(i) * len_z(j) * f[k] - bnd[k];
            }
        }
    }
    let interior = |k: usize| k / np < n && k % np < n;
    let mut x = vec![0.0; np * np];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = (0..np * np)
        .map(|k| if interior(k) { r[k] / diag(k / np, k % np) } else { 0.0 })
        .collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; np * np];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let bnorm = rhs.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut iterations = 0;
    if bnorm > 0.0 {
        loop {
            apply(&p, &mut ap);
            let pap: f64 = (0..np * np).filter(|&k| interior(k)).map(|k| p[k] * ap[k]).sum();
            let alpha = rz / pap;
            for k in 0..np * np {
                if interior(k) {
                    x[k] += alpha * p[k];
                    r[k] -= alpha * ap[k];
                }
            }
            iterations += 1;
            let rn = r.iter().map(|a| a * a).sum::<f64>().sqrt();
            if rn <= settings.tolerance * bnorm {
                break;
            }
            if iterations >= settings.max_iter || !rn.is_finite() {
                return Err(StarError::LinearSolve(format!(
                    "FD oracle CG stalled at relative residual {:.3e} after {iterations} iterations",
                    rn / bnorm
                )));
            }
            for k in 0..np * np {
                if interior(k) {
                    z[k] = r[k] / diag(k / np, k % np);
                }
            }
            let rz_new: f64 = (0..np * np).filter(|&k| interior(k)).map(|k| r[k] * z[k]).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..np * np {
                if interior(k) {
                    p[k] = z[k] + beta * p[k];
                }
            }
        }
    }
    for k in 0..np * np {
        if interior(k) {
            v[k] = x[k];
        }
    }
    Ok(FdField {
        spacing: h,
        n,
        v,
        iterations,
    })
}

/// Split rules shared by all collocation targets.
///
/// Rule `i < Ns` on the radial axis is split at node radius `s_i`; rule `Ns`
/// is graded toward the origin. Likewise rule `j < Nμ` on the angular axis
/// is split at `μ_j` and rule `Nμ` serves the origin target. All points are
/// concatenated so fields can be tabulated once per Newton iteration.
#[derive(Debug, Clone)]
pub struct CollocationRules {
    pub basis: Basis,
    pub settings: QuadratureSettings,
    /// Points per rule.
    pub width: usize,
    pub node_s: Vec<f64>,
    pub node_mu: Vec<f64>,
    pub s: Rule1d,
    pub mu: Rule1d,
    pub radial: RadialTable,
    pub angular: AngularTable,
    /// `ρ₀` at every radial point.
    pub rho0: Vec<f64>,
}

impl CollocationRules {
    pub fn new(interp: &Interpolator, profile: &RadialStarProfile, settings: QuadratureSettings) -> Self {
        let basis = interp.basis();
        let grid = &interp.grid;
        let mut s = Rule1d { x: vec![], w: vec![] };
        for &si in grid.s.iter().chain(std::iter::once(&0.0)) {
            let r = settings.rule(si, 1.0);
            s.x.extend(r.x);
            s.w.extend(r.w);
        }
        let mut mu = Rule1d { x: vec![], w: vec![] };
        for &mj in &grid.mu {
            let r = settings.rule(mj, 1.0);
            mu.x.extend(r.x);
            mu.w.extend(r.w);
        }
        let r = Rule1d::gauss(0.0, 1.0, 2 * settings.points);
        mu.x.extend(r.x);
        mu.w.extend(r.w);
        let radial = RadialTable::new(&basis, &s.x);
        let angular = AngularTable::new(&basis, &mu.x);
        let rho0 = s.x.iter().map(|&x| profile.density(x)).collect();
        Self {
            basis,
            settings,
            width: 2 * settings.points,
            node_s: grid.s.clone(),
            node_mu: grid.mu.clone(),
            s,
            mu,
            radial,
            angular,
            rho0,
        }
    }

    pub fn n_targets(&self) -> usize {
        self.node_s.len() * self.node_mu.len() + 1
    }

    /// Radial and angular rule indices of target `t` (nodes first, then the origin).
    #[inline]
    pub fn rules_of(&self, t: usize) -> (usize, usize) {
        let nmu = self.node_mu.len();
        if t == self.n_targets() - 1 {
            (self.node_s.len(), nmu)
        } else {
            (t / nmu, t % nmu)
        }
    }

    /// Number of angular points in the union grid; row stride of union arrays.
    #[inline]
    pub fn mu_len(&self) -> usize {
        self.mu.len()
    }

    /// Union-grid samples of a field.
    pub fn sample(&self, field: &AxiField) -> GridValues {
        field.eval_grid(&self.radial, &self.angular)
    }
}

/// Precomputed kernel weights at every collocation target for one
/// deformation.
///
/// For target `t` and source point `(a, b)` of its rule block:
///
/// * `g3 = w s² (G⁺ + G⁻)` with images `dz = z ∓ y`;
/// * `g3t`, `g3s` are the same with `G` replaced by its target and source
///   scaling derivatives `(p∂_p + z∂_z)G` and `(q∂_q + y∂_y)G`;
/// * `k5 = w s⁴ (1-μ²) C₅ p² (K⁺ + K⁻)`, with `k5t` including the scaling of
///   the `p²` prefactor and `k5s` the source scaling.
///
/// Densities and Jacobian determinants are not included.
#[derive(Debug, Clone)]
pub struct AxiKernelTable {
    pub width: usize,
    pub targets: Vec<TargetKernels>,
}

#[derive(Debug, Clone)]
pub struct TargetKernels {
    pub p: f64,
    pub z: f64,
    /// Radial scaling `λ` at the target's preimage.
    pub lambda: f64,
    pub s_rule: usize,
    pub mu_rule: usize,
    pub g3: Vec<f64>,
    pub g3t: Vec<f64>,
    pub g3s: Vec<f64>,
    pub k5: Vec<f64>,
    pub k5t: Vec<f64>,
    pub k5s: Vec<f64>,
}

impl AxiKernelTable {
    /// `zeta_union` are union-grid samples of `ζ`, `zeta_nodes` the samples at the collocation nodes.
    pub fn build(rules: &CollocationRules, zeta_union: &GridValues, zeta_nodes: &GridValues) -> Result<Self> {
        let w = rules.width;
        let nt = rules.n_targets();
        let nmu_nodes = rules.node_mu.len();
        let mut targets = Vec::with_capacity(nt);
        for t in 0..nt {
            let (ir, jr) = rules.rules_of(t);
            let origin = t == nt - 1;
            let (p, z, lambda) = if origin {
                (0.0, 0.0, 1.0)
            } else {
                let (i, j) = (t / nmu_nodes, t % nmu_nodes);
                let (s, mu) = (rules.node_s[i], rules.node_mu[j]);
                let lam = 1.0 + zeta_nodes.at(i, j).eta;
                (lam * s * (1.0 - mu * mu).sqrt(), lam * s * mu, lam)
            };
            let mut e = TargetKernels {
                p,
                z,
                lambda,
                s_rule: ir,
                mu_rule: jr,
                g3: vec![0.0; w * w],
                g3t: vec![0.0; w * w],
                g3s: vec![0.0; w * w],
                k5: vec![0.0; w * w],
                k5t: vec![0.0; w * w],
                k5s: vec![0.0; w * w],
            };
            let pre5 = C5 * p * p;
            for a in 0..w {
                let su = ir * w + a;
                let s = rules.s.x[su];
                let ws = rules.s.w[su];
                for b in 0..w {
                    let mu_u = jr * w + b;
                    let mu = rules.mu.x[mu_u];
                    let wm = rules.mu.w[mu_u];
                    let fp = zeta_union.at(su, mu_u);
                    let lam = 1.0 + fp.eta;
                    if !(det3(&fp) > 0.0) {
                        return Err(StarError::Fold { det: det3(&fp), s, mu });
                    }
                    let st = (1.0 - mu * mu).sqrt();
                    let q = lam * s * st;
                    let y = lam * s * mu;
                    let base3 = ws * wm * s * s;
                    let base5 = ws * wm * s.powi(4) * (1.0 - mu * mu) * pre5;
                    let k = a * w + b;
                    for (dz, ys) in [(z - y, y), (z + y, -y)] {
                        let kp = kernel_pair(p, q, dz);
                        e.g3[k] += base3 * kp.g3.value;
                        e.g3t[k] += base3 * kp.g3.target_scaling(p, q, z, dz);
                        e.g3s[k] += base3 * kp.g3.source_scaling(p, q, ys, dz);
                        if !origin {
                            e.k5[k] += base5 * kp.k5.value;
                            e.k5t[k] += base5 * kp.k5.target_scaling(p, q, z, dz);
                            e.k5s[k] += base5 * kp.k5.source_scaling(p, q, ys, dz);
                        }
                    }
                    e.k5t[k] += 2.0 * e.k5[k];
                }
            }
            targets.push(e);
        }
        Ok(Self { width: w, targets })
    }

    /// `Σ kernel · weight` over target `t`'s block of a union-grid array.
    #[inline]
    pub fn contract(&self, rules: &CollocationRules, t: usize, kernel: &[f64], union: &[f64]) -> f64 {
        let e = &self.targets[t];
        let w = self.width;
        let stride = rules.mu_len();
        let mut acc = 0.0;
        for a in 0..w {
            let row = (e.s_rule * w + a) * stride + e.mu_rule * w;
            let u = &union[row..row + w];
            let k = &kernel[a * w..(a + 1) * w];
            for b in 0..w {
                acc += k[b] * u[b];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::{solve_radial_star, EquationOfState};
    use std::f64::consts::PI;

    fn settings() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    #[test]
    fn uniform_ball_potential() {
        let one = |_s: f64, _mu: f64| 1.0;
        let targets = [[0.0, 0.0], [0.3, 0.4], [0.0, 0.8], [0.95, 0.1], [1.2, 0.5], [0.0, 2.0]];
        let u = newtonian_potential(&one, None, &targets, &settings()).unwrap();
        for (t, v) in targets.iter().zip(&u) {
            let r = t[0].hypot(t[1]);
            let exact = if r <= 1.0 {
                2.0 * PI * (1.0 - r * r / 3.0)
            } else {
                4.0 * PI / 3.0 / r
            };
            assert!((v - exact).abs() < 1e-5 * exact, "{t:?}: {v} vs {exact}");
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let zero = |_s: f64, _mu: f64| 0.0;
        let t = [[0.2, 0.3], [1.5, 0.0]];
        assert!(newtonian_potential(&zero, None, &t, &settings()).unwrap().iter().all(|v| *v == 0.0));
        assert!(linv_apply(&zero, None, &t, &settings()).unwrap().iter().all(|v| *v == 0.0));
        assert!(linv_gradient(&zero, None, &t, &settings())
            .unwrap()
            .iter()
            .all(|g| g[0] == 0.0 && g[1] == 0.0));
    }

    #[test]
    fn background_potential_matches_radial_profile() {
        let prof = solve_radial_star(&EquationOfState::polytrope(2.0).unwrap(), 1.0, 2048).unwrap();
        let rho = |s: f64, _mu: f64| prof.density(s);
        let targets: Vec<[f64; 2]> = [0.0, 0.2, 0.5, 0.77, 0.99, 1.3]
            .iter()
            .flat_map(|&r| [[r, 0.0], [r * 0.6, r * 0.8]])
            .collect();
        let u = newtonian_potential(&rho, None, &targets, &settings()).unwrap();
        for (t, v) in targets.iter().zip(&u) {
            let exact = prof.potential(t[0].hypot(t[1]));
            assert!((v - exact).abs() < 1e-5 * exact, "{t:?}: {v} vs {exact}");
        }
    }

    #[test]
    fn potential_positive_and_linear() {
        let f = |s: f64, mu: f64| (1.0 - s * s) * (1.0 + 0.5 * mu * mu);
        let g = |s: f64, mu: f64| (s * 3.0).cos().powi(2) * (1.0 - mu * mu * 0.3);
        let fg = |s: f64, mu: f64| 2.0 * f(s, mu) - 0.7 * g(s, mu);
        let t = [[0.1, 0.2], [0.6, 0.6], [1.4, 0.2]];
        let s = settings();
        let a = newtonian_potential(&f, None, &t, &s).unwrap();
        let b = newtonian_potential(&g, None, &t, &s).unwrap();
        let c = newtonian_potential(&fg, None, &t, &s).unwrap();
        for k in 0..3 {
            assert!(a[k] > 0.0 && b[k] > 0.0);
            assert!((c[k] - (2.0 * a[k] - 0.7 * b[k])).abs() < 1e-13 * c[k].abs().max(1.0));
        }
        let la = linv_apply(&f, None, &t, &s).unwrap();
        let lb = linv_apply(&g, None, &t, &s).unwrap();
        let lc = linv_apply(&fg, None, &t, &s).unwrap();
        for k in 0..3 {
            assert!((lc[k] - (2.0 * la[k] - 0.7 * lb[k])).abs() < 1e-13);
        }
    }

    fn manufactured(s: f64, _mu: f64) -> f64 {
        if s > 4.0 {
            0.0
        } else {
            (4.0 * s * s - 10.0) * (-s * s).exp()
        }
    }

    #[test]
    fn manufactured_solution_recovered() {
        let targets: Vec<[f64; 2]> = (1..=8)
            .flat_map(|i| (0..=4).map(move |j| [0.24 * i as f64, 0.4 * j as f64]))
            .filter(|t| t[0].hypot(t[1]) <= 2.0)
            .collect();
        let u = linv_apply_radius(&manufactured, 4.0, &targets, &settings()).unwrap();
        let mut worst: f64 = 0.0;
        for (t, v) in targets.iter().zip(&u) {
            let exact = t[0] * t[0] * (-(t[0] * t[0] + t[1] * t[1])).exp();
            worst = worst.max((v - exact).abs());
        }
        assert!(worst < 1e-3 * (-1.0f64).exp(), "{worst}");
    }

    #[test]
    fn fd_oracle_manufactured() {
        let f = |r: f64, z: f64| manufactured(r.hypot(z), 0.0);
        let sol = linv_fd_oracle(
            &f,
            &FdOracleSettings {
                extent: 8.0,
                cells: 256,
                ..Default::default()
            },
        )
        .unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            for j in 0..=40 {
                let (r, z) = (0.1 * i as f64, 0.1 * j as f64);
                let exact = r * r * (-(r * r + z * z)).exp();
                worst = worst.max((sol.value(r, z) - exact).abs());
            }
        }
        assert!(worst < 1e-3 * (-1.0f64).exp(), "{worst}");
    }

    #[test]
    fn fd_oracle_is_second_order() {
        let f = |r: f64, z: f64| manufactured(r.hypot(z), 0.0);
        let err = |cells: usize| {
            let sol = linv_fd_oracle(
                &f,
                &FdOracleSettings {
                    extent: 8.0,
                    cells,
                    ..Default::default()
                },
            )
            .unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..=8 {
                for j in 0..=8 {
                    let (r, z) = (0.25 * i as f64, 0.25 * j as f64);
                    let exact = r * r * (-(r * r + z * z)).exp();
                    worst = worst.max((sol.value(r, z) - exact).abs());
                }
            }
            worst
        };
        let ratio = err(64) / err(128);
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn kernel_route_matches_fd_oracle_on_background() {
        let prof = solve_radial_star(&EquationOfState::polytrope(2.0).unwrap(), 1.0, 2048).unwrap();
        let src = |s: f64, _mu: f64| prof.density(s);
        let f = |r: f64, z: f64| prof.density(r.hypot(z));
        let fd = linv_fd_oracle(
            &f,
            &FdOracleSettings {
                extent: 6.0,
                cells: 384,
                ..Default::default()
            },
        )
        .unwrap();
        let targets: Vec<[f64; 2]> = (1..=5)
            .flat_map(|i| (0..=5).map(move |j| [0.2 * i as f64, 0.2 * j as f64]))
            .collect();
        let u = linv_apply(&src, None, &targets, &settings()).unwrap();
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (t, v) in targets.iter().zip(&u) {
            let o = fd.value(t[0], t[1]);
            assert!((v - o).abs() < 1e-3 * scale, "{t:?}: {v} vs {o}");
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let f = |s: f64, mu: f64| (1.0 - s * s).powi(2) * (1.0 + 0.3 * mu * mu);
        let s = settings();
        let h = 1e-4;
        for t in [[0.3, 0.2], [0.7, 0.1], [0.2, 0.9], [1.3, 0.4]] {
            let g = linv_gradient(&f, None, &[t], &s).unwrap()[0];
            let pts = [[t[0] + h, t[1]], [t[0] - h, t[1]], [t[0], t[1] + h], [t[0], t[1] - h]];
            let v = linv_apply(&f, None, &pts, &s).unwrap();
            let fr = (v[0] - v[1]) / (2.0 * h);
            let fz = (v[2] - v[3]) / (2.0 * h);
            let scale = g[0].abs().max(g[1].abs());
            assert!((fr - g[0]).abs() < 1e-4 * scale, "{t:?} r: {fr} vs {}", g[0]);
            assert!((fz - g[1]).abs() < 1e-4 * scale, "{t:?} z: {fz} vs {}", g[1]);
        }
    }

    #[test]
    fn axis_values_vanish() {
        let f = |s: f64, _mu: f64| 1.0 - s * s;
        let v = linv_apply(&f, None, &[[0.0, 0.3], [0.0, 1.5]], &settings()).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        let g = linv_gradient(&f, None, &[[0.0, 0.3]], &settings()).unwrap();
        assert_eq!(g[0][0], 0.0);
    }

    #[test]
    fn scalar_field_round_trip() {
        let it = Interpolator::new(Basis::new(12, 6).unwrap());
        let f = |s: f64, mu: f64| 1.5 + s * s * (0.3 - mu * mu) + 0.1 * s.powi(4);
        let sf = ScalarFieldAxi::from_fn(&it, f).unwrap();
        for &(s, mu) in &[(0.0, 1.0), (0.4, 0.3), (0.9, 0.95)] {
            assert!((sf.value(s, mu) - f(s, mu)).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        sf.write_csv(&mut buf, &[[0.1, 0.2]]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("p,z,value\n"));
    }
}
