//! Closed-form MF+RPA entanglement: asymptotic and full concurrences,
//! factorizing field, limit temperatures, separable windows and the
//! near-critical finite-size forms.
//!
//! The asymptotic forms use the `T = 0` values of `λ` and `ω` while keeping
//! the thermal factor `coth ½βω`:
//! `C_± ≈ [1 - (ω/(λ-v_y))^{±1} coth ½βω]/(n-1) - 2e^{-βλ}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mean_field::{critical_constants, solve_mean_field, Phase, PhaseConstants};
use crate::params::ModelParams;
use crate::util::{bisect, coth, sech2, xcoth_sq};

/// `12³/5⁵`: below it the near-critical `C_-` turns complex at `T = 0`.
pub const DELTA_C: f64 = 1728.0 / 3125.0;

/// Dimensionless variables of the near-critical expansion,
/// `χ = 1 - δ/n` and `(b/b_c)² = 1 - ε/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticInputs {
    pub chi: f64,
    pub btilde: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub delta_c: f64,
    pub lambda: f64,
    pub omega: f64,
}

impl AsymptoticInputs {
    pub fn new(params: &ModelParams, b: f64) -> Result<Self> {
        let (consts, chi) = sb_constants(params)?;
        let n = params.n as f64;
        let btilde = b.abs() / consts.b_c;
        let br = zero_t_branch(params, b)?;
        Ok(Self {
            chi,
            btilde,
            delta: n * (1.0 - chi),
            epsilon: n * (1.0 - btilde * btilde),
            delta_c: DELTA_C,
            lambda: br.lambda,
            omega: br.omega2.max(0.0).sqrt(),
        })
    }
}

fn sb_constants(params: &ModelParams) -> Result<(PhaseConstants, f64)> {
    let c = critical_constants(params);
    match c.chi {
        Some(chi) if !c.normal_only => Ok((c, chi)),
        _ => Err(Error::Domain("no symmetry-breaking phase: requires v_x > v_z and v_x > 0".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizingField {
    /// `b_c √χ`.
    pub b_s: f64,
    /// Finite-size value `(1 - 1/n) b_s`.
    pub b_s_exact: f64,
}

/// `b_s = b_c√χ`; `None` outside `0 < χ < 1`, where `C` stays parallel at `T = 0`.
pub fn factorizing_field(params: &ModelParams) -> Option<FactorizingField> {
    let (c, chi) = sb_constants(params).ok()?;
    if !(chi > 0.0 && chi < 1.0) {
        return None;
    }
    let b_s = c.b_c * chi.sqrt();
    Some(FactorizingField { b_s, b_s_exact: (1.0 - 1.0 / params.n as f64) * b_s })
}

/// `T = 0` mean-field data entering the asymptotic forms.
#[derive(Debug, Clone, Copy)]
struct Branch {
    phase: Phase,
    lambda: f64,
    omega2: f64,
    /// `λ - v_y`.
    a: f64,
    /// `(λ - v_y)/ω²`, finite through the XXZ point where both vanish.
    a_over_omega2: f64,
}

fn zero_t_branch(params: &ModelParams, b: f64) -> Result<Branch> {
    let c = critical_constants(params);
    let b = b.abs();
    let (vx, vy, vz) = (params.vx, params.vy, params.vz);
    if !c.normal_only && b < c.b_c {
        let bt = b / c.b_c;
        let s = (1.0 - bt * bt) * (vx - vz);
        let a = vx - vy;
        Ok(Branch { phase: Phase::SymmetryBreaking, lambda: vx, omega2: s * a, a, a_over_omega2: 1.0 / s })
    } else {
        let lambda = b + vz;
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("normal-phase gap λ = b + v_z = {lambda} must be positive")));
        }
        let a = lambda - vy;
        let omega2 = (lambda - vx) * a;
        Ok(Branch { phase: Phase::Normal, lambda, omega2, a, a_over_omega2: 1.0 / (lambda - vx) })
    }
}

impl Branch {
    /// `(ω/a) coth ½βω`.
    fn plus_term(&self, t: f64) -> f64 {
        if self.a <= 0.0 {
            return f64::INFINITY;
        }
        if t == 0.0 {
            (self.omega2 / (self.a * self.a)).sqrt()
        } else {
            2.0 * t * xcoth_sq(self.omega2 / (4.0 * t * t)) / self.a
        }
    }

    /// `(a/ω) coth ½βω`.
    fn minus_term(&self, t: f64) -> f64 {
        if t == 0.0 {
            (self.a * self.a_over_omega2).sqrt()
        } else {
            2.0 * t * xcoth_sq(self.omega2 / (4.0 * t * t)) * self.a_over_omega2
        }
    }

    fn exp_term(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            2.0 * (-self.lambda / t).exp()
        }
    }

    fn c_plus(&self, n: usize, t: f64) -> f64 {
        (1.0 - self.plus_term(t)) / (n as f64 - 1.0) - self.exp_term(t)
    }

    fn c_minus(&self, n: usize, t: f64) -> Option<f64> {
        (self.phase == Phase::SymmetryBreaking)
            .then(|| (1.0 - self.minus_term(t)) / (n as f64 - 1.0) - self.exp_term(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticMode {
    /// `λ`, `ω` at `T = 0`, thermal factor kept.
    ZeroTemperature,
    /// `λ(T)`, `ω(T)` from the thermal mean field, for comparison.
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConcurrence {
    pub phase: Phase,
    pub lambda: f64,
    pub omega: f64,
    pub c_plus: f64,
    /// Defined only in the symmetry-breaking branch.
    pub c_minus: Option<f64>,
}

pub fn asymptotic_concurrence(params: &ModelParams, t: f64, b: f64) -> Result<AsymptoticConcurrence> {
    asymptotic_concurrence_with(params, t, b, AsymptoticMode::ZeroTemperature)
}

pub fn asymptotic_concurrence_with(
    params: &ModelParams,
    t: f64,
    b: f64,
    mode: AsymptoticMode,
) -> Result<AsymptoticConcurrence> {
    params.require_pairs()?;
    check_temperature(t)?;
    let mut br = zero_t_branch(params, b)?;
    if mode == AsymptoticMode::Thermal && t > 0.0 {
        let sol = solve_mean_field(&params.with_field(b), t)?;
        br.phase = sol.phase;
        br.lambda = sol.lambda;
        br.omega2 = sol.omega2;
        br.a = sol.lambda - params.vy;
        br.a_over_omega2 = br.a / sol.omega2;
    }
    Ok(AsymptoticConcurrence {
        phase: br.phase,
        lambda: br.lambda,
        omega: br.omega2.max(0.0).sqrt(),
        c_plus: br.c_plus(params.n, t),
        c_minus: br.c_minus(params.n, t),
    })
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("temperature must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `C_-` from the full square-root form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CMinus {
    Value {
        c: f64,
    },
    /// The radicand is negative; `b_f` is the field where it turned negative.
    ComplexTermination {
        b_f: f64,
    },
}

impl CMinus {
    pub fn value(&self) -> Option<f64> {
        match *self {
            CMinus::Value { c } => Some(c),
            CMinus::ComplexTermination { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullConcurrence {
    pub phase: Phase,
    pub c_plus: f64,
    /// Square-root form, symmetry-breaking phase only.
    pub c_minus: Option<CMinus>,
    /// First-order expansion of the square-root form.
    pub c_minus_expanded: Option<f64>,
}

/// Ingredients of the full forms in units `v_x = 1`.
struct Reduced {
    n: f64,
    t: f64,
    vy: f64,
    vz: f64,
    /// `b/b_c`.
    bt: f64,
    /// `tanh ½βλ` (equal to `λ` itself in the symmetry-breaking phase).
    th: f64,
    lambda: f64,
    omega: f64,
    zeta: f64,
    f: [f64; 3],
    phase: Phase,
}

impl Reduced {
    fn new(params: &ModelParams, t: f64, b: f64) -> Result<Self> {
        if !(params.vx > 0.0) {
            return Err(Error::Domain("full MF+RPA concurrence needs v_x > 0".into()));
        }
        let s = 1.0 / params.vx;
        let p = params.scaled(s).with_field(b * s);
        let t = t * s;
        let sol = solve_mean_field(&p, t)?;
        let c = critical_constants(&p);
        let th = if t == 0.0 { 1.0 } else { (0.5 * sol.lambda / t).tanh() };
        Ok(Self {
            n: p.n as f64,
            t,
            vy: p.vy,
            vz: p.vz,
            bt: if c.b_c > 0.0 { p.b / c.b_c } else { f64::INFINITY },
            th,
            lambda: sol.lambda,
            omega: sol.omega,
            zeta: sol.zeta,
            f: sol.f,
            phase: sol.phase,
        })
    }

    /// `ω coth ½βω`.
    fn w_coth(&self) -> f64 {
        if self.t == 0.0 {
            self.omega
        } else {
            2.0 * self.t * xcoth_sq((0.5 * self.omega / self.t).powi(2))
        }
    }

    /// `coth(½βω)/ω`.
    fn coth_over_w(&self) -> f64 {
        let w = self.omega;
        if self.t == 0.0 {
            1.0 / w
        } else {
            coth(0.5 * w / self.t) / w
        }
    }

    fn zeta_tail(&self) -> f64 {
        let z = self.zeta / (1.0 - self.zeta);
        z * z * (1.0 - (3.0 - self.zeta) * self.t)
    }

    fn c_plus_sb(&self) -> f64 {
        let (l2, b2) = (self.lambda * self.lambda, self.bt * self.bt);
        let zr = self.zeta / (1.0 - self.zeta);
        -(1.0 - l2) / 2.0
            + (1.0 - self.w_coth() / (1.0 - self.vy) * (1.0 + zr * (1.0 - self.vy) * l2 / (l2 - b2)) - self.zeta_tail())
                / (self.n - 1.0)
    }

    /// Square-root form; `Err(radicand)` when the radicand is negative.
    fn c_minus_sb(&self) -> std::result::Result<f64, f64> {
        let (l2, b2) = (self.lambda * self.lambda, self.bt * self.bt);
        let zr = self.zeta / (1.0 - self.zeta);
        let e = 1.0 / (self.n - 1.0);
        let k = (1.0 - self.vy) * self.coth_over_w();
        let first = (l2 - b2) / 2.0
            + e * ((1.0 - b2) / 2.0 - k * ((l2 + b2) / 2.0 + zr * l2 * (1.0 - self.vz)) - self.zeta_tail());
        let p = (1.0 + b2) / 2.0 + e * (k * (l2 + b2) / 2.0 - (1.0 - b2) / 2.0);
        let q = 1.0 + k / self.n;
        let radicand = p * p - b2 * q * q;
        if radicand < 0.0 {
            Err(radicand)
        } else {
            Ok(first - radicand.sqrt())
        }
    }

    fn c_minus_sb_expanded(&self) -> f64 {
        let (l2, b2) = (self.lambda * self.lambda, self.bt * self.bt);
        let zr = self.zeta / (1.0 - self.zeta);
        let k = (1.0 - self.vy) * self.coth_over_w();
        -(1.0 - l2) / 2.0
            + (1.0 - k * ((l2 - b2) / (1.0 - b2) + zr * (1.0 - self.vz) * l2) - self.zeta_tail()) / (self.n - 1.0)
    }

    fn c_plus_normal(&self) -> f64 {
        let t = self.t;
        // ζ/v_z = ½β sech² ½βλ stays finite at v_z = 0
        let zeta_over_vz = if t == 0.0 { 0.0 } else { 0.5 / t * sech2(0.5 * self.lambda / t) };
        let wc = self.w_coth();
        let [fx, fy, _] = self.f;
        let one_minus_zeta = 1.0 - self.zeta;
        let sum: f64 = [(fx, 1.0), (fy, self.vy)]
            .iter()
            .map(|&(f_mu, v_mu)| wc * fx / (1.0 - f_mu) * (v_mu * zeta_over_vz - self.zeta / one_minus_zeta))
            .sum();
        -(1.0 - self.th * self.th) / 2.0
            + (1.0 - wc * fx / (1.0 - fy) + 0.5 * sum - 3.0 * t * zeta_over_vz / one_minus_zeta) / (self.n - 1.0)
    }
}

/// Full MF+RPA concurrences at the thermal mean-field point.
pub fn full_concurrence(params: &ModelParams, t: f64, b: f64) -> Result<FullConcurrence> {
    params.require_pairs()?;
    check_temperature(t)?;
    let r = Reduced::new(params, t, b)?;
    match r.phase {
        Phase::SymmetryBreaking => {
            let c_minus = match r.c_minus_sb() {
                Ok(c) => CMinus::Value { c },
                Err(_) => CMinus::ComplexTermination { b_f: termination_field(params, t, b)? },
            };
            Ok(FullConcurrence {
                phase: r.phase,
                c_plus: r.c_plus_sb(),
                c_minus: Some(c_minus),
                c_minus_expanded: Some(r.c_minus_sb_expanded()),
            })
        }
        Phase::Normal => {
            Ok(FullConcurrence { phase: r.phase, c_plus: r.c_plus_normal(), c_minus: None, c_minus_expanded: None })
        }
    }
}

/// Smallest field in `[0, b]` where the square-root form turns complex.
fn termination_field(params: &ModelParams, t: f64, b: f64) -> Result<f64> {
    const SCAN: usize = 400;
    let radicand = |bb: f64| -> f64 {
        match Reduced::new(params, t, bb) {
            Ok(r) if r.phase == Phase::SymmetryBreaking => match r.c_minus_sb() {
                Ok(_) => 1.0,
                Err(_) => -1.0,
            },
            _ => 1.0,
        }
    };
    let mut prev = 0.0;
    for k in 1..=SCAN {
        let bb = b * k as f64 / SCAN as f64;
        if radicand(bb) < 0.0 {
            return bisect(radicand, prev, bb, 1e-12 * b.max(1e-300))
                .ok_or_else(|| Error::Numerical("failed to bracket the termination field".into()));
        }
        prev = bb;
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpaLimitTemperatures {
    /// `None` when that concurrence type is absent at `T → 0`.
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

const TL_RTOL: f64 = 1e-10;
const TL_MAX_ITER: usize = 200;
const TL_DAMPING: f64 = 0.5;
const TL_ZERO_DENOM: f64 = 1e-12;

/// Solves `T = λ/ln[2(n-1)/(1 - (ω/(λ-v_y))^{±1} coth(½ω/T))]` by damped
/// fixed-point iteration, falling back to bisection on `C_±(T) = 0`.
pub fn limit_temperature_rpa(params: &ModelParams, b: f64) -> Result<RpaLimitTemperatures> {
    params.require_pairs()?;
    let br = zero_t_branch(params, b)?;
    let c = critical_constants(params);
    let n = params.n as f64;
    let start = match c.chi {
        Some(chi) if !c.normal_only && b > 5.0 * c.b_c && chi < 1.0 => {
            (b + params.vz) / (4.0 * (n - 1.0) * (b / c.b_c) / (1.0 - chi)).ln()
        }
        _ => br.lambda / (2.0 * n).ln(),
    };
    let plus = solve_tl(&br, params.n, start, |t| 1.0 - br.plus_term(t));
    let minus = if br.phase == Phase::SymmetryBreaking {
        solve_tl(&br, params.n, start, |t| 1.0 - br.minus_term(t))
    } else {
        None
    };
    Ok(RpaLimitTemperatures { plus, minus })
}

fn solve_tl(br: &Branch, n: usize, start: f64, denom: impl Fn(f64) -> f64) -> Option<f64> {
    let d0 = denom(0.0);
    if d0.abs() <= TL_ZERO_DENOM {
        // at b_s to rounding: T_L vanishes there, and ln(1/d0) would turn
        // the rounding residue into a spurious finite root
        return Some(0.0);
    }
    if !(d0 > 0.0) || !d0.is_finite() {
        return None;
    }
    let two_n1 = 2.0 * (n as f64 - 1.0);
    let lambda = br.lambda;
    let g = |t: f64| -> Option<f64> {
        let d = denom(t);
        let arg = two_n1 / d;
        (d > 0.0 && arg > 1.0).then(|| lambda / arg.ln())
    };
    let mut t = start;
    for _ in 0..TL_MAX_ITER {
        let Some(next) = g(t) else { break };
        let next = (1.0 - TL_DAMPING) * t + TL_DAMPING * next;
        if (next - t).abs() <= TL_RTOL * next {
            return Some(next);
        }
        t = next;
    }
    // C_±(T) decreases monotonically and is below zero past the T = 0 estimate
    let upper = lambda / (two_n1 / d0).ln();
    if !(upper > 0.0) || !upper.is_finite() {
        return None;
    }
    let c = |t: f64| denom(t) / (n as f64 - 1.0) - 2.0 * (-lambda / t).exp();
    bisect(c, upper * 1e-9, upper * (1.0 + 1e-12), TL_RTOL * upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableWindow {
    /// Lower edge; `None` when the window extends through `b = 0`.
    pub b_lower: Option<f64>,
    pub b_upper: f64,
}

impl SeparableWindow {
    pub fn is_half_open(&self) -> bool {
        self.b_lower.is_none()
    }
}

/// Edges `b_L^±` where the asymptotic `C_∓` and `C_±` vanish, with `ω`
/// evaluated self-consistently at each edge.
pub fn separable_window(params: &ModelParams, t: f64) -> Result<SeparableWindow> {
    params.require_pairs()?;
    check_temperature(t)?;
    let fs = factorizing_field(params).ok_or_else(|| Error::Domain("separable window needs 0 < χ < 1".into()))?;
    let b_c = critical_constants(params).b_c;
    let n = params.n;
    let c_minus = |b: f64| zero_t_branch(params, b).ok().and_then(|br| br.c_minus(n, t)).unwrap_or(f64::NEG_INFINITY);
    let c_plus = |b: f64| zero_t_branch(params, b).map(|br| br.c_plus(n, t)).unwrap_or(f64::NEG_INFINITY);
    let tol = 1e-13 * b_c;
    if t == 0.0 {
        return Ok(SeparableWindow { b_lower: Some(fs.b_s), b_upper: fs.b_s });
    }
    let b_lower = if c_minus(0.0) > 0.0 { bisect(c_minus, 0.0, fs.b_s, tol) } else { None };
    // C_+ increases with b and stays positive for b → ∞ at any fixed T
    let mut hi = b_c * (1.0 - 1e-15);
    while c_plus(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 * b_c {
            return Err(Error::Numerical("no upper edge of the separable window".into()));
        }
    }
    let b_upper = if c_plus(0.0) >= 0.0 {
        0.0
    } else {
        bisect(c_plus, 0.0, hi, tol).ok_or_else(|| Error::Numerical("failed to bracket b_L^+".into()))?
    };
    Ok(SeparableWindow { b_lower, b_upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    /// Exact larger root of `2√(δ/ε) + ¼ε(ε-4) = 0`.
    pub epsilon_f: f64,
    /// `2.4 + (5/3)√(δ_c - δ)`.
    pub epsilon_f_approx: f64,
    pub b_f: f64,
    /// `ε_f²/(8n)`.
    pub c_at_bf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearCritical {
    pub omega: f64,
    /// `None` in the complex regime.
    pub c_minus: Option<f64>,
    pub complex: bool,
    /// Reported at `T = 0` for `δ < δ_c`.
    pub termination: Option<Termination>,
}

/// Near-critical `C_-` for `χ = 1 - δ/n`, `(b/b_c)² = 1 - ε/n`.
pub fn near_critical_cminus(delta: f64, epsilon: f64, t: f64, params: &ModelParams) -> Result<NearCritical> {
    params.require_pairs()?;
    check_temperature(t)?;
    if !(delta >= 0.0 && epsilon >= 0.0) {
        return Err(Error::Domain(format!("need δ >= 0 and ε >= 0, got δ = {delta}, ε = {epsilon}")));
    }
    let n = params.n as f64;
    let b_c = params.vx - params.vz;
    let omega = (epsilon * delta).sqrt() * b_c / n;
    let cth = if t == 0.0 { 1.0 } else { coth(0.5 * omega / t) };
    let s = (delta / epsilon).sqrt() * cth;
    let exp_term = if t == 0.0 { 0.0 } else { 2.0 * (-params.vx / t).exp() };
    let radicand = 2.0 * s + 0.25 * epsilon * (epsilon - 4.0);
    let (c_minus, complex) =
        if radicand < 0.0 { (None, true) } else { (Some((0.5 * epsilon - s - radicand.sqrt()) / n - exp_term), false) };
    let termination = if t == 0.0 && delta < DELTA_C {
        let g = |e: f64| 2.0 * (delta / e).sqrt() + 0.25 * e * (e - 4.0);
        let epsilon_f = bisect(g, 2.4, 4.0, 1e-14).ok_or_else(|| Error::Numerical("ε_f root not bracketed".into()))?;
        Some(Termination {
            epsilon_f,
            epsilon_f_approx: 2.4 + 5.0 / 3.0 * (DELTA_C - delta).sqrt(),
            b_f: b_c * (1.0 - epsilon_f / n).max(0.0).sqrt(),
            c_at_bf: epsilon_f * epsilon_f / (8.0 * n),
        })
    } else {
        None
    };
    Ok(NearCritical { omega, c_minus, complex, termination })
}

/// `(nC_-, nC_+) → δ/(e^{δ/2} ± 1)` at `b_s^∓`, `δ = n(1 - χ)`.
pub fn side_limits_at_bs(n: usize, chi: f64) -> Result<(f64, f64)> {
    if !(chi > 0.0 && chi <= 1.0) {
        return Err(Error::Domain(format!("side limits need 0 < χ <= 1, got {chi}")));
    }
    let delta = n as f64 * (1.0 - chi);
    if delta == 0.0 {
        return Ok((2.0, 0.0));
    }
    let e = (0.5 * delta).exp();
    Ok((delta / (e - 1.0), delta / (e + 1.0)))
}

/// Reentry scale `α^{-1}(b - b_s) δ e^{-δ/2}/(1 - e^{-δ})`, `α = ln coth(δ/4)`.
pub fn anomalous_tl(b: f64, b_s: f64, delta: f64) -> Result<f64> {
    if !(b > b_s) || !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("need b > b_s and finite δ > 0, got b - b_s = {}, δ = {delta}", b - b_s)));
    }
    let alpha = coth(0.25 * delta).ln();
    if !(alpha > 0.0) {
        // coth(δ/4) rounds to 1: the effect has disappeared
        return Ok(0.0);
    }
    Ok((b - b_s) * delta * (-0.5 * delta).exp() / (-(-delta).exp_m1()) / alpha)
}
