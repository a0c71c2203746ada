//! Mean field and thermal RPA around the static minimum.
//!
//! The linearized Hamiltonian `H(r) = b S_z - r·S + ¼Σ(n r_μ²/v_μ + v_μ)`
//! gives the Hartree partition function
//! `ln Z(r) = -¼β Σ (n r_μ²/v_μ + v_μ) + n ln 2cosh(½βλ)` with
//! `λ = |r - b ẑ|`. Static fields are stored alongside the magnetizations
//! `m_μ = r_μ/v_μ`, which stay finite when a coupling vanishes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::concurrence::Correlators;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::util::{bisect, coth, ln_2cosh, sech2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    SymmetryBreaking,
    Normal,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::SymmetryBreaking => "symmetry_breaking",
            Phase::Normal => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseConstants {
    /// `v_x - v_z`.
    pub b_c: f64,
    /// `(v_y - v_z)/(v_x - v_z)`, undefined when `v_x = v_z`.
    pub chi: Option<f64>,
    /// No symmetry-breaking solution exists (`v_z ≥ v_x` or `v_x = 0`).
    pub normal_only: bool,
    vx: f64,
}

impl PhaseConstants {
    /// `T_c(b) = v_x b̃ / ln[(1+b̃)/(1-b̃)]`, `b̃ = b/b_c`, with `T_c(0) = v_x/2`.
    pub fn t_c(&self, b: f64) -> f64 {
        if self.normal_only {
            return 0.0;
        }
        let bt = b.abs() / self.b_c;
        if bt >= 1.0 {
            0.0
        } else if bt < 1e-8 {
            0.5 * self.vx * (1.0 - bt * bt / 3.0)
        } else {
            self.vx * bt / (2.0 * bt.atanh())
        }
    }

    pub fn is_symmetry_breaking(&self, b: f64, t: f64) -> bool {
        !self.normal_only && b.abs() < self.b_c && t < self.t_c(b)
    }
}

pub fn critical_constants(params: &ModelParams) -> PhaseConstants {
    let b_c = params.vx - params.vz;
    let normal_only = !(params.vx > 0.0 && b_c > 0.0);
    let chi = if b_c != 0.0 { Some((params.vy - params.vz) / b_c) } else { None };
    PhaseConstants { b_c, chi, normal_only, vx: params.vx }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub phase: Phase,
    pub temperature: f64,
    /// Static fields `(x, y, z)`; the symmetry-breaking minimum is `(±x, 0, z)`
    /// and the `+x` representative is stored.
    pub r: [f64; 3],
    /// Magnetizations `m_μ = r_μ/v_μ`.
    pub m: [f64; 3],
    pub lambda: f64,
    /// Signed ω².
    pub omega2: f64,
    pub omega: f64,
    pub zeta: f64,
    pub f: [f64; 3],
    pub constants: PhaseConstants,
}

fn beta(t: f64) -> f64 {
    if t > 0.0 {
        1.0 / t
    } else {
        f64::INFINITY
    }
}

/// `tanh(½βλ)/λ`, with its `λ → 0` and `T → 0` limits.
fn tanh_over_lambda(lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        if lambda > 0.0 {
            1.0 / lambda
        } else {
            f64::INFINITY
        }
    } else if lambda < 1e-8 * t {
        0.5 / t
    } else {
        (0.5 * lambda / t).tanh() / lambda
    }
}

fn half_beta_sech2(lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        0.5 / t * sech2(0.5 * lambda / t)
    }
}

/// Root of a monotone gap equation `g(λ) = 0` on `[lo, hi]`, polished by one
/// Newton step.
fn gap_root(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let root = bisect(&g, lo, hi, 1e-15 * hi.abs().max(f64::MIN_POSITIVE))?;
    let d = dg(root);
    let polished = if d != 0.0 { root - g(root) / d } else { root };
    Some(if polished.is_finite() && g(polished).abs() <= g(root).abs() { polished } else { root })
}

/// Self-consistent minimum of `-T ln Z(r)` at temperature `t`, with ω and ζ.
/// Parameters are taken as given (no validation), so finite differences
/// may step across the usual constraints.
fn solve_raw(p: &ModelParams, t: f64) -> Result<MeanFieldSolution> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("temperature must be finite and >= 0, got {t}")));
    }
    let consts = critical_constants(p);
    let (b, vx, vy, vz) = (p.b, p.vx, p.vy, p.vz);
    let scale = p.energy_scale();
    if consts.is_symmetry_breaking(b, t) {
        let bt = b / consts.b_c;
        let lambda = if t == 0.0 {
            vx
        } else {
            let lo = (vx * bt).max(1e-14 * vx);
            gap_root(|l| l - vx * (0.5 * l / t).tanh(), |l| 1.0 - vx * half_beta_sech2(l, t), lo, vx)
                .ok_or_else(|| Error::Numerical(format!("symmetry-breaking gap equation has no root at T = {t}")))?
        };
        let x = (lambda * lambda - (vx * bt).powi(2)).max(0.0).sqrt();
        let z = -vz * bt;
        let f = [1.0, vy / vx, vz / vx];
        let omega2 = x * x * (1.0 - f[1]) * (1.0 - f[2]);
        Ok(MeanFieldSolution {
            phase: Phase::SymmetryBreaking,
            temperature: t,
            r: [x, 0.0, z],
            m: [x / vx, 0.0, -bt],
            lambda,
            omega2,
            omega: omega2.max(0.0).sqrt(),
            zeta: vx * half_beta_sech2(lambda, t),
            f,
            constants: consts,
        })
    } else {
        let lambda = if t == 0.0 {
            b + vz
        } else if b == 0.0 {
            0.0
        } else {
            let hi = b + vz.abs() + scale;
            gap_root(|l| l - b - vz * (0.5 * l / t).tanh(), |l| 1.0 - vz * half_beta_sech2(l, t), 0.0, hi)
                .ok_or_else(|| Error::Numerical(format!("normal gap equation has no root at T = {t}")))?
        };
        if !(lambda > 1e-14 * scale) {
            return Err(Error::Divergence(format!(
                "normal-phase gap λ = {lambda} vanishes (b = {b}, T = {t}); no isolated minimum"
            )));
        }
        let tl = tanh_over_lambda(lambda, t);
        let f = [vx * tl, vy * tl, vz * tl];
        let omega2 = lambda * lambda * (1.0 - f[0]) * (1.0 - f[1]);
        let mz = -lambda * tl;
        Ok(MeanFieldSolution {
            phase: Phase::Normal,
            temperature: t,
            r: [0.0, 0.0, vz * mz],
            m: [0.0, 0.0, mz],
            lambda,
            omega2,
            omega: omega2.max(0.0).sqrt(),
            zeta: vz * half_beta_sech2(lambda, t),
            f,
            constants: consts,
        })
    }
}

pub fn solve_mean_field(params: &ModelParams, t: f64) -> Result<MeanFieldSolution> {
    solve_raw(params, t)
}

/// Hartree log partition function `ln Z(r)` written in magnetizations.
pub fn hartree_log_partition(m: [f64; 3], params: &ModelParams, t: f64) -> f64 {
    let beta = beta(t);
    let nf = params.n as f64;
    let v = params.couplings();
    let lam = [v[0] * m[0], v[1] * m[1], v[2] * m[2] - params.b];
    let lambda = (lam[0] * lam[0] + lam[1] * lam[1] + lam[2] * lam[2]).sqrt();
    let quad: f64 = (0..3).map(|k| nf * v[k] * m[k] * m[k] + v[k]).sum();
    -0.25 * beta * quad + nf * ln_2cosh(0.5 * beta * lambda)
}

/// RPA energy at an arbitrary static point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpaEnergy {
    pub lambda: f64,
    pub f: [f64; 3],
    /// Signed ω²; negative values are meaningful to the static path integral.
    pub omega2: f64,
}

impl RpaEnergy {
    pub fn omega(&self) -> Option<f64> {
        (self.omega2 >= 0.0).then(|| self.omega2.sqrt())
    }
}

/// `ω² = Σ_μ λ_μ² (1 - f_μ')(1 - f_μ'')` with `λ = r - b ẑ` and
/// `f_μ = v_μ tanh(½βλ)/λ`.
pub fn rpa_energy_general(r: [f64; 3], params: &ModelParams, t: f64) -> RpaEnergy {
    let lam = [r[0], r[1], r[2] - params.b];
    rpa_energy_lambda(lam, params.couplings(), t)
}

pub(crate) fn rpa_energy_lambda(lam: [f64; 3], v: [f64; 3], t: f64) -> RpaEnergy {
    let lambda = (lam[0] * lam[0] + lam[1] * lam[1] + lam[2] * lam[2]).sqrt();
    if lambda == 0.0 {
        let tl = tanh_over_lambda(0.0, t);
        return RpaEnergy { lambda, f: v.map(|x| x * tl), omega2: 0.0 };
    }
    let tl = tanh_over_lambda(lambda, t);
    let f = v.map(|x| x * tl);
    let omega2 = lam[0] * lam[0] * (1.0 - f[1]) * (1.0 - f[2])
        + lam[1] * lam[1] * (1.0 - f[0]) * (1.0 - f[2])
        + lam[2] * lam[2] * (1.0 - f[0]) * (1.0 - f[1]);
    RpaEnergy { lambda, f, omega2 }
}

fn det3(a: &[[Complex64; 3]; 3]) -> Complex64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// `(λ² - ω²) Det[δ_μμ' - 2v_μ Σ_ν s_μ^ν s_μ'^{-ν}(p_{-ν} - p_ν)/(ε_ν - ε_{-ν} - ω)]`
/// with `|±⟩` the eigenstates of `λ̂·s` and `ε_± = ±λ/2`. The prefactor
/// cancels the pole at `ω = λ`.
pub fn rpa_determinant(r: [f64; 3], params: &ModelParams, t: f64, omega: f64) -> f64 {
    let lambda = rpa_energy_general(r, params, t).lambda;
    let q = lambda * lambda - omega * omega;
    scaled_determinant(r, params, t, omega) / (q * q)
}

/// `Det[(λ² - ω²) K] = (λ² - ω²)² F(ω)` for the determinant `F` above.
/// Its entries have no pole, and the factor `(λ² - ω²)²` never changes
/// sign, so roots are searched on this form.
fn scaled_determinant(r: [f64; 3], params: &ModelParams, t: f64, w: f64) -> f64 {
    let lam = [r[0], r[1], r[2] - params.b];
    let lambda = (lam[0] * lam[0] + lam[1] * lam[1] + lam[2] * lam[2]).sqrt();
    let (up, down) = spinor_basis(lam, lambda);
    let s_elem = |mu: usize, bra: [Complex64; 2], ket: [Complex64; 2]| -> Complex64 {
        // ⟨bra| s_μ |ket⟩ with s = σ/2
        let i = Complex64::i();
        let sk = match mu {
            0 => [ket[1], ket[0]],
            1 => [-i * ket[1], i * ket[0]],
            _ => [ket[0], -ket[1]],
        };
        0.5 * (bra[0].conj() * sk[0] + bra[1].conj() * sk[1])
    };
    // p_- - p_+ = tanh(½βλ)
    let dp = if t == 0.0 { 1.0 } else { (0.5 * lambda / t).tanh() };
    let q = lambda * lambda - w * w;
    let v = params.couplings();
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    #[allow(clippy::needless_range_loop)]
    for mu in 0..3 {
        for nu in 0..3 {
            // ν = +: (p_- - p_+)/(λ - ω); ν = -: (p_+ - p_-)/(-λ - ω); times λ² - ω²
            let plus = s_elem(mu, up, down) * s_elem(nu, down, up) * dp * (lambda + w);
            let minus = s_elem(mu, down, up) * s_elem(nu, up, down) * dp * (lambda - w);
            let delta = if mu == nu { q } else { 0.0 };
            m[mu][nu] = Complex64::new(delta, 0.0) - 2.0 * v[mu] * (plus + minus);
        }
    }
    det3(&m).re
}

/// Eigenvectors of `λ̂·σ` for eigenvalues +1 and -1.
fn spinor_basis(lam: [f64; 3], lambda: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let c = |x: f64, y: f64| Complex64::new(x, y);
    if lambda == 0.0 {
        return ([c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]);
    }
    let (nx, ny, nz) = (lam[0] / lambda, lam[1] / lambda, lam[2] / lambda);
    let theta = nz.clamp(-1.0, 1.0).acos();
    let phi = ny.atan2(nx);
    let (ct, st) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let e = Complex64::from_polar(1.0, phi);
    ([c(ct, 0.0), e * st], [c(-st, 0.0), e * ct])
}

/// Smallest root of the determinant condition in `(0, 2λ)`; `None` when
/// there is none (then ω² < 0 in closed form).
///
/// The scaled determinant is a degree-6 polynomial in ω carrying the factor
/// `(λ² - ω²)²`, so `F(ω)` is a quadratic. It is interpolated from nodes far
/// from `ω = λ`, where the division loses no digits, and solved exactly.
pub fn rpa_energy_determinant(r: [f64; 3], params: &ModelParams, t: f64) -> Option<f64> {
    let lambda = rpa_energy_general(r, params, t).lambda;
    if !(lambda > 0.0) {
        return None;
    }
    let [a, b, c] = determinant_quadratic(r, params, t, lambda);
    let scale = a.abs().max(b.abs() * lambda).max(c.abs() * lambda * lambda);
    let roots: Vec<f64> = if c.abs() <= 1e-14 * scale {
        if b == 0.0 {
            vec![]
        } else {
            vec![-a / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            // cancellation-free pair
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut v = vec![q / c];
            if q != 0.0 {
                v.push(a / q);
            }
            v
        }
    };
    roots.into_iter().filter(|&w| w > 0.0 && w < 2.0 * lambda).min_by(f64::total_cmp)
}

/// `F(ω) = a + bω + cω²` from three nodes at distance ≥ λ from `ω = λ`.
fn determinant_quadratic(r: [f64; 3], params: &ModelParams, t: f64, lambda: f64) -> [f64; 3] {
    let f = |w: f64| {
        let q = lambda * lambda - w * w;
        scaled_determinant(r, params, t, w) / (q * q)
    };
    let (x0, x1, x2) = (0.0, 2.0 * lambda, 3.0 * lambda);
    let (f0, f1, f2) = (f(x0), f(x1), f(x2));
    // Newton divided differences
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    let c = (d12 - d01) / (x2 - x0);
    let b = d01 - c * (x0 + x1);
    let a = f0 - b * x0 - c * x0 * x0;
    [a, b, c]
}

/// `ζ = 1 - (λ²/ω²) Det[-(2v_μ/(nβ)) ∂²ln Z(r)/∂r_μ∂r_μ']` at any point,
/// with the Hessian of the Hartree function written out:
/// `δ_μμ' - v_μ[½β sech²(½βλ) λ̂_μλ̂_μ' + (tanh(½βλ)/λ)(δ_μμ' - λ̂_μλ̂_μ')]`.
pub fn zeta_general(r: [f64; 3], params: &ModelParams, t: f64) -> f64 {
    let lam = [r[0], r[1], r[2] - params.b];
    let rpa = rpa_energy_general(r, params, t);
    let lambda = rpa.lambda;
    let hat = lam.map(|x| x / lambda);
    let tl = tanh_over_lambda(lambda, t);
    let s2 = half_beta_sech2(lambda, t);
    let v = params.couplings();
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for mu in 0..3 {
        for nu in 0..3 {
            let delta = if mu == nu { 1.0 } else { 0.0 };
            let proj = hat[mu] * hat[nu];
            m[mu][nu] = Complex64::new(delta - v[mu] * (s2 * proj + tl * (delta - proj)), 0.0);
        }
    }
    1.0 - lambda * lambda / rpa.omega2 * det3(&m).re
}

/// `ln sinh(a)` for `a > 0`.
fn ln_sinh(a: f64) -> f64 {
    a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2
}

fn check_isolated(sol: &MeanFieldSolution) -> Result<()> {
    let scale = sol.lambda.abs().max(1e-300);
    if !(sol.omega2 > 0.0) || sol.omega < 1e-12 * scale {
        let cause = if sol.phase == Phase::SymmetryBreaking && sol.f[1] >= 1.0 {
            "continuously degenerate XXZ minimum (v_y = v_x)"
        } else {
            "critical point (ω → 0)"
        };
        return Err(Error::Divergence(format!("ω² = {:e} at the minimum: {cause}", sol.omega2)));
    }
    if !(sol.zeta < 1.0) {
        return Err(Error::Divergence(format!("ζ = {} ≥ 1: static fluctuations unbounded", sol.zeta)));
    }
    Ok(())
}

/// `ln Z = ln Z(r₀) - ½ ln(1-ζ) + ln sinh(½βλ) - ln sinh(½βω)`, plus `ln 2`
/// for the two degenerate symmetry-breaking minima `±x`.
pub fn log_partition_mfrpa(params: &ModelParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("MF+RPA ln Z needs T > 0, got {t}")));
    }
    let sol = solve_raw(params, t)?;
    check_isolated(&sol)?;
    let beta = 1.0 / t;
    let mut lnz = hartree_log_partition(sol.m, params, t) - 0.5 * (1.0 - sol.zeta).ln()
        + ln_sinh(0.5 * beta * sol.lambda)
        - ln_sinh(0.5 * beta * sol.omega);
    if sol.phase == Phase::SymmetryBreaking {
        lnz += std::f64::consts::LN_2;
    }
    Ok(lnz)
}

/// Parameter with respect to which an RPA correction is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eta {
    Vx,
    Vy,
    Vz,
    B,
}

fn shifted(p: &ModelParams, eta: Eta, h: f64) -> ModelParams {
    let mut q = *p;
    match eta {
        Eta::Vx => q.vx += h,
        Eta::Vy => q.vy += h,
        Eta::Vz => q.vz += h,
        Eta::B => q.b += h,
    }
    q
}

/// `∂λ/∂η` by implicit differentiation of the gap equation.
fn dlambda(sol: &MeanFieldSolution, eta: Eta) -> f64 {
    let t_l = if sol.temperature == 0.0 { 1.0 } else { (0.5 * sol.lambda / sol.temperature).tanh() };
    let denom = 1.0 - sol.zeta;
    match (sol.phase, eta) {
        (Phase::SymmetryBreaking, Eta::Vx) => t_l / denom,
        (Phase::SymmetryBreaking, _) => 0.0,
        (Phase::Normal, Eta::B) => 1.0 / denom,
        (Phase::Normal, Eta::Vz) => t_l / denom,
        (Phase::Normal, _) => 0.0,
    }
}

/// Richardson-extrapolated central difference of `(ω, ζ, λ)` in `η`.
fn numeric_derivatives(p: &ModelParams, t: f64, eta: Eta) -> Result<[f64; 3]> {
    let h = 1e-5 * p.energy_scale();
    let eval = |q: ModelParams| -> Result<[f64; 3]> {
        let s = solve_raw(&q, t)?;
        Ok([s.omega, s.zeta, s.lambda])
    };
    let central = |h: f64| -> Result<[f64; 3]> {
        let (a, b) = (eval(shifted(p, eta, h))?, eval(shifted(p, eta, -h))?);
        Ok([0, 1, 2].map(|k| (a[k] - b[k]) / (2.0 * h)))
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    Ok([0, 1, 2].map(|k| (4.0 * d2[k] - d1[k]) / 3.0))
}

/// `δ_η = (∂λ/∂η) coth½βλ - (∂ω/∂η) coth½βω + T/(1-ζ) ∂ζ/∂η`.
pub fn rpa_delta(params: &ModelParams, sol: &MeanFieldSolution, eta: Eta) -> Result<f64> {
    let t = sol.temperature;
    let d = numeric_derivatives(params, t, eta)?;
    let (cl, cw) = if t == 0.0 { (1.0, 1.0) } else { (coth(0.5 * sol.lambda / t), coth(0.5 * sol.omega / t)) };
    Ok(dlambda(sol, eta) * cl - d[0] * cw + t / (1.0 - sol.zeta) * d[1])
}

/// `(∂λ/∂η)` from the gap equation next to its finite-difference value.
pub fn dlambda_check(params: &ModelParams, t: f64, eta: Eta) -> Result<(f64, f64)> {
    let sol = solve_raw(params, t)?;
    Ok((dlambda(&sol, eta), numeric_derivatives(params, t, eta)?[2]))
}

/// MF+RPA correlators
/// `α_μ = (n m_μ²/2 - ½ + δ_{v_μ})/(2(n-1))`, `s_z = (n m_z - δ_b)/(2n)`.
/// The minus in `s_z` follows from `s_z = -(T/n) ∂ln Z/∂b`.
pub fn mfrpa_observables(params: &ModelParams, t: f64) -> Result<(MeanFieldSolution, Correlators)> {
    mfrpa_observables_with(params, t, true)
}

/// As [`mfrpa_observables`]; `include_rpa = false` keeps only the Hartree
/// terms.
pub fn mfrpa_observables_with(
    params: &ModelParams,
    t: f64,
    include_rpa: bool,
) -> Result<(MeanFieldSolution, Correlators)> {
    params.require_pairs()?;
    let sol = solve_raw(params, t)?;
    let nf = params.n as f64;
    let delta = |eta| -> Result<f64> {
        if include_rpa {
            rpa_delta(params, &sol, eta)
        } else {
            Ok(0.0)
        }
    };
    if include_rpa {
        check_isolated(&sol)?;
    }
    let alpha = |k: usize, eta| -> Result<f64> {
        Ok((nf * sol.m[k] * sol.m[k] / 2.0 - 0.5 + delta(eta)?) / (2.0 * (nf - 1.0)))
    };
    let c = Correlators {
        alpha_x: alpha(0, Eta::Vx)?,
        alpha_y: alpha(1, Eta::Vy)?,
        alpha_z: alpha(2, Eta::Vz)?,
        sz: (nf * sol.m[2] - delta(Eta::B)?) / (2.0 * nf),
    };
    Ok((sol, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concurrence::{concurrence, PairDensity};
    use crate::exact::diagonalize;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chi_params(n: usize, b: f64, chi: f64) -> ModelParams {
        ModelParams::with_chi(n, b, 1.0, chi, 0.0).unwrap()
    }

    #[test]
    fn critical_constants_basic() {
        let c = critical_constants(&chi_params(10, 0.0, 0.5));
        assert_eq!(c.b_c, 1.0);
        assert!((c.t_c(0.0) - 0.5).abs() < 1e-15);
        assert!((c.t_c(1e-10) - 0.5).abs() < 1e-12);
        assert_eq!(c.t_c(1.0), 0.0);
        assert!((c.t_c(0.5) - 0.5 / 3f64.ln()).abs() < 1e-14);
        assert!((c.t_c(0.5) - 0.4551).abs() < 1e-4);
        let t1 = c.t_c(0.3);
        assert!(t1 < 0.5 && t1 > c.t_c(0.6));
        assert!(critical_constants(&ModelParams::new(4, 0.1, 1.0, 0.0, 1.5).unwrap()).normal_only);
    }

    #[test]
    fn zero_temperature_branches() {
        let p = ModelParams::new(10, 0.4, 1.0, 0.3, -0.2).unwrap();
        let s = solve_mean_field(&p, 0.0).unwrap();
        assert_eq!(s.phase, Phase::SymmetryBreaking);
        assert_eq!(s.lambda, 1.0);
        let bt: f64 = 0.4 / 1.2;
        let expected = ((1.0 - bt * bt) * (1.0 - 0.3) * (1.0 + 0.2)).sqrt();
        assert!((s.omega - expected).abs() < 1e-14);
        let s = solve_mean_field(&p.with_field(2.0), 0.0).unwrap();
        assert_eq!(s.phase, Phase::Normal);
        assert!((s.lambda - 1.8).abs() < 1e-15);
        assert!((s.omega - ((1.8f64 - 1.0) * (1.8 - 0.3)).sqrt()).abs() < 1e-14);
        for b in [1.2 - 1e-7, 1.2 + 1e-7] {
            assert!(solve_mean_field(&p.with_field(b), 0.0).unwrap().omega < 1e-3);
        }
    }

    #[test]
    fn gap_equation_residuals() {
        for (b, t) in [(0.3, 0.1), (0.3, 0.4), (1.5, 0.2), (0.8, 0.9)] {
            let p = ModelParams::new(10, b, 1.0, 0.4, 0.2).unwrap();
            let s = solve_mean_field(&p, t).unwrap();
            let rhs = match s.phase {
                Phase::SymmetryBreaking => (0.5 * s.lambda / t).tanh(),
                Phase::Normal => b + 0.2 * (0.5 * s.lambda / t).tanh(),
            };
            assert!((s.lambda - rhs).abs() <= 1e-12, "{b} {t}");
        }
    }

    #[test]
    fn phase_boundary_is_continuous() {
        let p = chi_params(10, 0.5, 0.5);
        let tc = critical_constants(&p).t_c(0.5);
        let below = solve_mean_field(&p, tc * (1.0 - 1e-9)).unwrap();
        let above = solve_mean_field(&p, tc * (1.0 + 1e-9)).unwrap();
        assert_eq!(below.phase, Phase::SymmetryBreaking);
        assert_eq!(above.phase, Phase::Normal);
        assert!((below.lambda - 0.5).abs() < 1e-4);
        assert!((below.lambda - above.lambda).abs() < 1e-4);
        assert!(below.r[0] < 1e-3);
        assert!(below.omega < 1e-3 && above.omega < 1e-3);
    }

    #[test]
    fn free_limit() {
        let p = ModelParams::new(10, 0.7, 0.0, 0.0, 0.0).unwrap();
        let s = solve_mean_field(&p, 0.3).unwrap();
        assert!((s.omega - s.lambda).abs() < 1e-15 && (s.lambda - 0.7).abs() < 1e-12);
        let lnz = log_partition_mfrpa(&p, 0.3).unwrap();
        assert!((lnz - 10.0 * ln_2cosh(0.7 / 0.6)).abs() < 1e-12);
        let q = ModelParams::new(10, 0.7, 1e-7, 0.0, 1e-7).unwrap();
        assert!((log_partition_mfrpa(&q, 0.3).unwrap() - lnz).abs() < 1e-5);
    }

    #[test]
    fn xxz_diverges() {
        let p = ModelParams::new(10, 0.3, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(log_partition_mfrpa(&p, 0.1), Err(Error::Divergence(_))));
    }

    #[test]
    fn zeta_closed_forms_match_general() {
        for (b, t) in [(0.3, 0.1), (0.3, 0.35), (1.5, 0.2), (0.5, 0.6)] {
            let p = ModelParams::new(10, b, 1.0, 0.4, 0.2).unwrap();
            let s = solve_mean_field(&p, t).unwrap();
            let g = zeta_general(s.r, &p, t);
            assert!((g - s.zeta).abs() < 1e-10, "{b} {t}: {g} vs {}", s.zeta);
        }
    }

    #[test]
    fn minimum_rpa_energy_matches_closed_form() {
        for (b, t) in [(0.3, 0.1), (1.5, 0.2)] {
            let p = ModelParams::new(10, b, 1.0, 0.4, 0.2).unwrap();
            let s = solve_mean_field(&p, t).unwrap();
            let g = rpa_energy_general(s.r, &p, t);
            assert!((g.omega2 - s.omega2).abs() < 1e-12);
            let d = rpa_energy_determinant(s.r, &p, t).unwrap();
            assert!((d - s.omega).abs() < 1e-8);
        }
    }

    #[test]
    fn free_determinant_root_is_lambda() {
        let p = ModelParams::new(5, 0.6, 0.0, 0.0, 0.0).unwrap();
        let r = [0.2, -0.1, 0.3];
        let lam = rpa_energy_general(r, &p, 0.4).lambda;
        assert!((rpa_energy_determinant(r, &p, 0.4).unwrap() - lam).abs() < 1e-12);
    }

    #[test]
    fn negative_omega2_has_no_determinant_root() {
        let p = ModelParams::new(10, 0.2, 1.0, 0.1, 0.0).unwrap();
        let r = [0.05, 0.0, 0.0];
        let g = rpa_energy_general(r, &p, 0.05);
        assert!(g.omega2 < 0.0);
        assert!(rpa_energy_determinant(r, &p, 0.05).is_none());
    }

    #[test]
    fn hartree_minimum_is_minimal() {
        let p = ModelParams::new(20, 0.3, 1.0, 0.4, 0.2).unwrap();
        let t = 0.15;
        let s = solve_mean_field(&p, t).unwrap();
        let f0 = -t * hartree_log_partition(s.m, &p, t);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let mut r = s.r;
            for x in r.iter_mut() {
                *x += rng.random_range(-0.1..0.1);
            }
            let m = [r[0] / p.vx, r[1] / p.vy, r[2] / p.vz];
            assert!(-t * hartree_log_partition(m, &p, t) >= f0 - 1e-12);
        }
    }

    #[test]
    fn analytic_dlambda_matches_difference() {
        for (b, t) in [(0.3, 0.2), (1.4, 0.3)] {
            let p = ModelParams::new(10, b, 1.0, 0.4, 0.2).unwrap();
            for eta in [Eta::Vx, Eta::Vy, Eta::Vz, Eta::B] {
                let (a, n) = dlambda_check(&p, t, eta).unwrap();
                assert!((a - n).abs() < 1e-7, "{eta:?}: {a} vs {n}");
            }
        }
    }

    #[test]
    fn observables_are_derivatives_of_log_partition() {
        let p = ModelParams::new(50, 0.35, 1.0, 0.4, 0.2).unwrap();
        let t = 0.2;
        let (_, c) = mfrpa_observables(&p, t).unwrap();
        let h = 1e-5;
        let nf = 50.0;
        let d = |eta: Eta| {
            let up = log_partition_mfrpa(&shifted(&p, eta, h), t).unwrap();
            let dn = log_partition_mfrpa(&shifted(&p, eta, -h), t).unwrap();
            (up - dn) / (2.0 * h)
        };
        assert!((t / (nf - 1.0) * d(Eta::Vx) - c.alpha_x).abs() < 1e-6);
        assert!((t / (nf - 1.0) * d(Eta::Vy) - c.alpha_y).abs() < 1e-6);
        assert!((t / (nf - 1.0) * d(Eta::Vz) - c.alpha_z).abs() < 1e-6);
        assert!((-t / nf * d(Eta::B) - c.sz).abs() < 1e-6);
        // normal phase
        let q = p.with_field(1.6);
        let (_, c) = mfrpa_observables(&q, t).unwrap();
        let up = log_partition_mfrpa(&q.with_field(1.6 + h), t).unwrap();
        let dn = log_partition_mfrpa(&q.with_field(1.6 - h), t).unwrap();
        assert!((-t / nf * (up - dn) / (2.0 * h) - c.sz).abs() < 1e-6);
    }

    #[test]
    fn hartree_only_concurrence() {
        let p = chi_params(100, 0.5, 0.5);
        let t = 0.08;
        let (s, c) = mfrpa_observables_with(&p, t, false).unwrap();
        let r = concurrence(&PairDensity::unchecked(c));
        // C_+ = ½ n/(n-1) (tanh² ½βλ - 1) ≈ -2e^{-βλ}
        let th = (0.5 * s.lambda / t).tanh();
        assert!((r.c_plus - 0.5 * 100.0 / 99.0 * (th * th - 1.0)).abs() < 1e-12);
        let asymptotic = -2.0 * (-s.lambda / t).exp();
        assert!((r.c_plus - asymptotic).abs() < 0.02 * asymptotic.abs());
    }

    #[test]
    fn close_to_exact_at_large_n() {
        let p = chi_params(100, 0.5, 0.5);
        let spec = diagonalize(&p).unwrap();
        let t = 0.14;
        let (_, c) = mfrpa_observables(&p, t).unwrap();
        let e = spec.thermal_observables(t).unwrap();
        assert!(c.max_abs_diff(&e) < 1e-3, "{c:?} vs {e:?}");
        let lnz = log_partition_mfrpa(&p, 0.1).unwrap();
        let exact = spec.log_partition(0.1).unwrap();
        assert!(((lnz - exact) / exact).abs() < 0.01);
    }

    #[test]
    fn determinant_root_next_to_lambda() {
        // ω sits 0.2% below λ, inside the double zero of the scaled form
        let p = ModelParams::new(10, 1.4282480413388339, 1.0, -0.3849899426657668, -0.05857208299789967).unwrap();
        let r = [-1.3314780147501029, -0.9101683927123376, 1.2937606191060658];
        let t = 0.14437880370313574;
        let w = rpa_energy_general(r, &p, t).omega().unwrap();
        let d = rpa_energy_determinant(r, &p, t).unwrap();
        assert!((w - d).abs() < 1e-10, "{w} vs {d}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduced_determinant_is_quadratic(
            x in -1.5..1.5f64, y in -1.5..1.5f64, z in -1.5..1.5f64,
            vy in -0.9..0.9f64, vz in -0.9..0.9f64, t in 0.02..1.0f64, s in 0.05..4.0f64,
        ) {
            let p = ModelParams::new(10, 0.3, 1.0, vy, vz).unwrap();
            let r = [x, y, z];
            let lambda = rpa_energy_general(r, &p, t).lambda;
            prop_assume!(lambda > 1e-2 && (s - 1.0).abs() > 0.05);
            let [a, b, c] = determinant_quadratic(r, &p, t, lambda);
            let w = s * lambda;
            let direct = rpa_determinant(r, &p, t, w);
            let fit = a + b * w + c * w * w;
            prop_assert!((direct - fit).abs() <= 1e-9 * (1.0 + direct.abs()), "{} vs {}", direct, fit);
        }

        #[test]
        fn determinant_matches_closed_form(
            x in -1.5..1.5f64, y in -1.5..1.5f64, z in -1.5..1.5f64,
            b in 0.0..1.5f64, vy in -0.9..0.9f64, vz in -0.9..0.9f64, t in 0.02..1.0f64,
        ) {
            let p = ModelParams::new(10, b, 1.0, vy, vz).unwrap();
            let r = [x, y, z];
            let g = rpa_energy_general(r, &p, t);
            prop_assume!(g.lambda > 1e-3);
            match (g.omega(), rpa_energy_determinant(r, &p, t)) {
                (Some(w), Some(d)) if w < 2.0 * g.lambda => prop_assert!((w - d).abs() < 1e-8, "{} vs {}", w, d),
                (None, None) => {}
                (Some(w), None) => prop_assert!(w >= 2.0 * g.lambda * (1.0 - 1e-9) || w < 1e-6),
                (w, d) => prop_assert!(false, "closed form {:?} vs determinant {:?}", w, d),
            }
        }
    }
}
