//! The deformation map `g_ζ(x) = x (1 + ζ(x)/|x|²)`, its inverse and
//! Jacobians, the `X` norm, and the mass normalization factor.
//!
//! With `λ = 1 + ζ/|x|²` the map scales each ray by `λ`, so
//! `det Dg = λ² (λ + s λ_s)` in three dimensions and `λ⁴ (λ + s λ_s)` for
//! the five-dimensional extension.

use nalgebra::Matrix3;

use crate::basis::{polar, AngularTable, AxiField, AxiGrid, FieldPoint, RadialTable};
use crate::eos::RadialStarProfile;
use crate::error::{Result, StarError};
use crate::quadrature::Rule1d;

/// Default bound on `‖ζ‖_X` accepted by the solvers.
pub const DEFAULT_TRUST_RADIUS: f64 = 0.15;

/// Radial scaling `λ` and `λ + s λ_s` from a deformation sample.
#[inline]
pub fn scaling(p: &FieldPoint) -> (f64, f64) {
    let lam = 1.0 + p.eta;
    (lam, lam + p.s_eta_s)
}

#[inline]
pub fn det3(p: &FieldPoint) -> f64 {
    let (l, d) = scaling(p);
    l * l * d
}

#[inline]
pub fn det5(p: &FieldPoint) -> f64 {
    let (l, d) = scaling(p);
    l * l * l * l * d
}

/// `g_ζ(x)`.
pub fn g_apply(zeta: &AxiField, x: [f64; 3]) -> [f64; 3] {
    let (s, mu) = polar(x);
    if s == 0.0 {
        return [0.0; 3];
    }
    let lam = 1.0 + zeta.eval(s, mu).eta;
    [lam * x[0], lam * x[1], lam * x[2]]
}

/// `Dg_ζ(x)` and its determinant. At the origin the limit along the
/// polar axis is returned.
pub fn g_jacobian(zeta: &AxiField, x: [f64; 3]) -> Result<(Matrix3<f64>, f64)> {
    let (s, mu) = polar(x);
    if s == 0.0 {
        let lam = 1.0 + zeta.eval(0.0, 1.0).eta;
        return check_det(Matrix3::identity() * lam, lam.powi(3), s, mu);
    }
    let fp = zeta.eval(s, mu);
    let lam = 1.0 + fp.eta;
    let grad = eta_gradient(&fp, x, s, mu);
    let mut m = Matrix3::identity() * lam;
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] += x[i] * grad[j];
        }
    }
    check_det(m, det3(&fp), s, mu)
}

fn check_det(m: Matrix3<f64>, det: f64, s: f64, mu: f64) -> Result<(Matrix3<f64>, f64)> {
    if det <= 0.0 || !det.is_finite() {
        return Err(StarError::Fold { det, s, mu });
    }
    Ok((m, det))
}

/// Cartesian gradient of `η = ζ/|x|²`.
#[inline]
fn eta_gradient(fp: &FieldPoint, x: [f64; 3], s: f64, mu: f64) -> [f64; 3] {
    let eta_s = fp.s_eta_s / s;
    let tang = fp.eta_mu / s;
    let mut g = [0.0; 3];
    for k in 0..3 {
        let sh = x[k] / s;
        let e3 = if k == 2 { 1.0 } else { 0.0 };
        g[k] = eta_s * sh + tang * (e3 - mu * sh);
    }
    g
}

/// Preimage radius `t` with `t λ(t, μ) = rho`, if `t ≤ 1`.
pub fn preimage_radius(zeta: &AxiField, rho: f64, mu: f64) -> Option<f64> {
    if rho == 0.0 {
        return Some(0.0);
    }
    let b = zeta.basis();
    let mut p = vec![0.0; b.l_modes];
    let mut dp = vec![0.0; b.l_modes];
    b.angular_values(mu, &mut p, &mut dp);
    let mut r = vec![0.0; b.radial_degree];
    let mut rs = vec![0.0; b.radial_degree];
    let mut eval = |t: f64| {
        b.radial_values(t, &mut r, &mut rs);
        let fp = zeta.contract(&r, &rs, &p, &dp);
        let (lam, dl) = scaling(&fp);
        (t * lam - rho, dl)
    };
    let (top, _) = eval(1.0);
    if top < -1e-13 * rho.max(1.0) {
        return None;
    }
    if top <= 0.0 {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut t = rho.min(1.0);
    for _ in 0..100 {
        let (f, df) = eval(t);
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = t - f / df;
        if !(next > lo && next < hi) || df <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * t.max(1e-300) || hi - lo <= 1e-16 {
            return Some(next);
        }
        t = next;
    }
    Some(t)
}

/// `g_ζ⁻¹(z)` for `z ∈ g_ζ(B̄₁)`.
pub fn g_inverse(zeta: &AxiField, z: [f64; 3]) -> Result<[f64; 3]> {
    let (rho, mu) = polar(z);
    if rho == 0.0 {
        return Ok([0.0; 3]);
    }
    let t = preimage_radius(zeta, rho, mu).ok_or(StarError::OutsideDomain { radius: rho, mu })?;
    let f = t / rho;
    Ok([z[0] * f, z[1] * f, z[2] * f])
}

/// `‖f‖_X = max |∇f(x)|/|x|` over the collocation nodes of the field's basis.
pub fn x_norm(field: &AxiField) -> f64 {
    x_norm_on(field, &AxiGrid::new(field.basis()))
}

/// `‖f‖_X` sampled on the nodes of `grid`.
pub fn x_norm_on(field: &AxiField, grid: &AxiGrid) -> f64 {
    let rt = RadialTable::new(&field.basis(), &grid.s);
    let at = AngularTable::new(&field.basis(), &grid.mu);
    let gv = field.eval_grid(&rt, &at);
    let mut best: f64 = 0.0;
    for i in 0..grid.s.len() {
        for (j, &mu) in grid.mu.iter().enumerate() {
            best = best.max(gv.at(i, j).gradient_ratio(mu));
        }
    }
    best
}

/// Five-dimensional extension of a field, identifying `(q, y₅)` with `(r, x₃)`.
pub fn tilde5(field: &AxiField, q: f64, y5: f64) -> f64 {
    field.value_at([q, 0.0, y5])
}

/// Radial scaling `1 + ζ̃/(q² + y₅²)` of the extended map.
pub fn tilde5_scale(zeta: &AxiField, q: f64, y5: f64) -> f64 {
    let (s, mu) = polar([q, 0.0, y5]);
    1.0 + zeta.eval(s, mu).eta
}

/// `det Dg̃_ζ` at `(q, y₅)`.
pub fn tilde5_det(zeta: &AxiField, q: f64, y5: f64) -> f64 {
    let (s, mu) = polar([q, 0.0, y5]);
    det5(&zeta.eval(s, mu))
}

/// Product rule for integrals of `ρ₀`-weighted quantities over `B₁`.
#[derive(Debug, Clone)]
pub struct MassRule {
    pub s: Rule1d,
    pub mu: Rule1d,
    pub radial: RadialTable,
    pub angular: AngularTable,
    /// `4π s² ρ₀(s) w_s` per radial point; multiply by `w_μ`.
    pub density_weight: Vec<f64>,
    /// `∫ ρ₀` under this rule; the mass that `M(ζ)` preserves.
    pub background_mass: f64,
}

impl MassRule {
    pub fn new(field_basis: crate::basis::Basis, profile: &RadialStarProfile, ns: usize, nmu: usize) -> Self {
        let s = Rule1d::gauss(0.0, 1.0, ns);
        let mu = Rule1d::gauss(0.0, 1.0, nmu);
        let radial = RadialTable::new(&field_basis, &s.x);
        let angular = AngularTable::new(&field_basis, &mu.x);
        let density_weight = s
            .x
            .iter()
            .zip(&s.w)
            .map(|(s, w)| 4.0 * std::f64::consts::PI * s * s * profile.density(*s) * w)
            .collect::<Vec<f64>>();
        let background_mass = density_weight.iter().sum::<f64>() * mu.w.iter().sum::<f64>();
        Self {
            s,
            mu,
            radial,
            angular,
            density_weight,
            background_mass,
        }
    }

    pub fn default_for(field_basis: crate::basis::Basis, profile: &RadialStarProfile) -> Self {
        Self::new(field_basis, profile, 48, 24)
    }

    /// `∫_{B₁} ρ₀ det Dg_ζ dx`.
    pub fn deformed_mass(&self, zeta: &AxiField) -> Result<f64> {
        let gv = zeta.eval_grid(&self.radial, &self.angular);
        let mut total = 0.0;
        for (i, dw) in self.density_weight.iter().enumerate() {
            for (j, wm) in self.mu.w.iter().enumerate() {
                let p = gv.at(i, j);
                let d = det3(&p);
                if d <= 0.0 {
                    return Err(StarError::Fold {
                        det: d,
                        s: self.s.x[i],
                        mu: self.mu.x[j],
                    });
                }
                total += dw * wm * d;
            }
        }
        if total <= 0.0 {
            return Err(StarError::Fold {
                det: total,
                s: f64::NAN,
                mu: f64::NAN,
            });
        }
        Ok(total)
    }
}

/// `M(ζ) = M₀ / ∫ ρ₀ det Dg_ζ`.
///
/// `M₀` is the background mass under the same rule, so `M(0) = 1` exactly.
pub fn mass_factor(zeta: &AxiField, profile: &RadialStarProfile) -> Result<f64> {
    let rule = MassRule::default_for(zeta.basis(), profile);
    Ok(rule.background_mass / rule.deformed_mass(zeta)?)
}

/// `M'(ζ)ξ = -M(ζ) ∫ ρ₀ det Dg tr(Dg⁻¹ D(ξ x/|x|²)) / ∫ ρ₀ det Dg`.
pub fn mass_factor_derivative(
    zeta: &AxiField,
    xi: &AxiField,
    profile: &RadialStarProfile,
) -> Result<f64> {
    let rule = MassRule::default_for(zeta.basis(), profile);
    let denom = rule.deformed_mass(zeta)?;
    let m = rule.background_mass / denom;
    let gz = zeta.eval_grid(&rule.radial, &rule.angular);
    let gx = xi.eval_grid(&rule.radial, &rule.angular);
    let mut num = 0.0;
    for (i, &s) in rule.s.x.iter().enumerate() {
        for (j, &mu) in rule.mu.x.iter().enumerate() {
            let x = [s * (1.0 - mu * mu).sqrt(), 0.0, s * mu];
            let pz = gz.at(i, j);
            let px = gx.at(i, j);
            let dg = Matrix3::identity() * (1.0 + pz.eta)
                + nalgebra::Vector3::from(x) * nalgebra::RowVector3::from(eta_gradient(&pz, x, s, mu));
            let dv = Matrix3::identity() * px.eta
                + nalgebra::Vector3::from(x) * nalgebra::RowVector3::from(eta_gradient(&px, x, s, mu));
            let inv = dg.try_inverse().ok_or(StarError::Fold { det: 0.0, s, mu })?;
            let tr = (inv * dv).trace();
            num += rule.density_weight[i] * rule.mu.w[j] * det3(&pz) * tr;
        }
    }
    Ok(-m * num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Basis, Interpolator};
    use crate::eos::{solve_radial_star, EquationOfState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn profile() -> RadialStarProfile {
        solve_radial_star(&EquationOfState::polytrope(2.0).unwrap(), 1.0, 512).unwrap()
    }

    fn random_field(basis: Basis, scale: f64, seed: u64) -> AxiField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..basis.len())
            .map(|k| {
                let (l, m) = (k / basis.radial_degree, k % basis.radial_degree);
                rng.gen_range(-1.0..1.0) / (1.0 + (l + m) as f64).powi(3)
            })
            .collect();
        let f = AxiField::from_coefficients(basis, coeffs).unwrap();
        let n = x_norm(&f);
        f.scaled(scale / n)
    }

    #[test]
    fn identity_and_dilation() {
        let b = Basis::new(6, 3).unwrap();
        let x = [0.2, -0.3, 0.4];
        assert_eq!(g_apply(&AxiField::zero(b), x), x);
        let z = g_apply(&AxiField::quadratic(b, 0.1), x);
        for k in 0..3 {
            assert!((z[k] - 1.1 * x[k]).abs() < 1e-15);
        }
        assert_eq!(g_apply(&AxiField::quadratic(b, 0.1), [0.0; 3]), [0.0; 3]);
        let (m, d) = g_jacobian(&AxiField::quadratic(b, 0.1), x).unwrap();
        assert!((d - 1.1f64.powi(3)).abs() < 1e-14);
        assert!((m - Matrix3::identity() * 1.1).norm() < 1e-14);
        let back = g_inverse(&AxiField::quadratic(b, 0.1), x).unwrap();
        for k in 0..3 {
            assert!((back[k] - x[k] / 1.1).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let b = Basis::new(8, 4).unwrap();
        let zeta = random_field(b, 0.1, 3);
        let x = [0.31, 0.12, 0.5];
        let (m, d) = g_jacobian(&zeta, x).unwrap();
        let h = 1e-5;
        let mut fd = Matrix3::zeros();
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (g_apply(&zeta, xp), g_apply(&zeta, xm));
            for i in 0..3 {
                fd[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        assert!((fd - m).norm() < 1e-8);
        assert!((fd.determinant() - d).abs() < 1e-6);
        assert!((m.determinant() - d).abs() < 1e-12);
    }

    #[test]
    fn fold_is_reported() {
        let b = Basis::new(4, 2).unwrap();
        assert!(matches!(
            g_jacobian(&AxiField::quadratic(b, -1.5), [0.1, 0.0, 0.2]),
            Err(StarError::Fold { .. })
        ));
    }

    #[test]
    fn inverse_round_trip() {
        let b = Basis::new(10, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zeta = random_field(b, 0.1, 5);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = [
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.6..0.6),
            ];
            let z = g_apply(&zeta, x);
            let y = g_inverse(&zeta, z).unwrap();
            let zz = g_apply(&zeta, y);
            for k in 0..3 {
                worst = worst.max((zz[k] - z[k]).abs());
            }
        }
        assert!(worst < 1e-12, "{worst}");
        assert!(g_inverse(&zeta, [0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn x_norm_examples() {
        let b = Basis::new(6, 3).unwrap();
        assert_eq!(x_norm(&AxiField::zero(b)), 0.0);
        assert!((x_norm(&AxiField::quadratic(b, 0.3)) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn x_norm_refinement() {
        let f = |s: f64, mu: f64| s * s * (0.2 * s * s * (1.0 - mu * mu) + 0.05 * (3.0 * s).sin() * mu * mu);
        let field = AxiField::interpolate(&Interpolator::new(Basis::new(32, 6).unwrap()), f);
        let a = x_norm_on(&field, &AxiGrid::new(Basis::new(32, 6).unwrap()));
        let b = x_norm_on(&field, &AxiGrid::new(Basis::new(64, 6).unwrap()));
        assert!(b >= a - 1e-12);
        assert!((a - b).abs() < 1e-3);
    }

    #[test]
    fn tilde5_examples() {
        let b = Basis::new(6, 3).unwrap();
        assert_eq!(tilde5_scale(&AxiField::zero(b), 0.3, 0.2), 1.0);
        let z = random_field(b, 0.1, 2);
        assert!((tilde5(&z, 0.3, 0.4) - z.value_at([0.3, 0.0, 0.4])).abs() < 1e-15);
        let q = AxiField::quadratic(b, 0.2);
        assert!((tilde5_det(&q, 0.3, 0.4) - 1.2f64.powi(5)).abs() < 1e-13);
    }

    #[test]
    fn mass_factor_examples() {
        let p = profile();
        let rule = MassRule::default_for(Basis::new(8, 4).unwrap(), &p);
        assert!((rule.background_mass - p.total_mass).abs() < 1e-8 * p.total_mass);
        let b = Basis::new(8, 4).unwrap();
        assert!((mass_factor(&AxiField::zero(b), &p).unwrap() - 1.0).abs() < 1e-12);
        let c = 0.07;
        let m = mass_factor(&AxiField::quadratic(b, c), &p).unwrap();
        assert!((m - (1.0 + c).powi(-3)).abs() < 1e-12);
        let xi = AxiField::quadratic(b, 1.0);
        let d = mass_factor_derivative(&AxiField::zero(b), &xi, &p).unwrap();
        assert!((d + 3.0).abs() < 1e-10, "{d}");
        assert_eq!(mass_factor_derivative(&AxiField::zero(b), &AxiField::zero(b), &p).unwrap(), 0.0);
    }

    #[test]
    fn mass_factor_derivative_matches_differences() {
        let p = profile();
        let b = Basis::new(8, 4).unwrap();
        let zeta = random_field(b, 0.08, 7);
        let xi = random_field(b, 1.0, 8);
        let d = mass_factor_derivative(&zeta, &xi, &p).unwrap();
        let errs: Vec<f64> = [1e-3, 5e-4]
            .iter()
            .map(|h| {
                let mp = mass_factor(&zeta.axpy(*h, &xi), &p).unwrap();
                let mm = mass_factor(&zeta.axpy(-*h, &xi), &p).unwrap();
                ((mp - mm) / (2.0 * h) - d).abs()
            })
            .collect();
        assert!(errs[0] < 1e-5 * d.abs().max(1.0));
        let ratio = errs[0] / errs[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn trust_radius_keeps_determinant_above_half() {
        let b = Basis::new(10, 5).unwrap();
        let grid = AxiGrid::new(b);
        let mut worst = f64::INFINITY;
        for seed in 0..40 {
            let z = random_field(b, DEFAULT_TRUST_RADIUS, seed);
            for (s, mu) in grid.nodes() {
                worst = worst.min(det3(&z.eval(s, mu)));
            }
        }
        assert!(worst > 0.5, "{worst}");
    }
}
