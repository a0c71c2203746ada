//! Static path + RPA: exact integration over the static auxiliary fields,
//! Gaussian treatment of the non-static ones.
//!
//! `Z = Π_μ √(nβ/4πv_μ) ∫ d³r Z(r) (ω/λ) sinh(½βλ)/sinh(½βω)`. Axes with
//! `v_μ > 0` are integrated by nested adaptive quadrature in the log domain.
//! An axis with `v_μ = 0` carries no auxiliary field and is dropped; an axis
//! with `v_μ < 0` is integrated along the imaginary direction at the saddle
//! point, i.e. by the second-order cumulant of the log-integrand with the
//! signed variance `σ² = 2v_μ/(βn)`. The sinh ratio is continued to
//! `sin` where `ω² < 0` and breaks down once `β|ω| → 2π`.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::concurrence::{concurrence_of, ConcurrenceReport, Correlators};
use crate::error::{Error, Result};
use crate::mean_field::{rpa_energy_general, solve_mean_field};
use crate::params::ModelParams;
use crate::quadrature::{integrate, QuadConfig};
use crate::util::{ln_2cosh, ln_x_over_sinh_sq, sech2, xcoth_defect_sq};

/// Breakdown threshold on `β|ω|`, as a fraction of `2π`.
const BREAKDOWN_FRACTION: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownPolicy {
    /// Any non-negligible sample beyond the threshold is an error.
    Strict,
    /// Drop such samples and flag the result.
    ExcludeRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeCoupling {
    /// Imaginary-axis saddle point with the signed Gaussian variance.
    SaddlePoint,
    /// Drop the axis as if `v_μ = 0`.
    Omit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CspaConfig {
    pub rel_tol: f64,
    pub initial_intervals: usize,
    pub max_intervals: usize,
    /// Cutoff `r_max = w√(v_μ/(βn)) + |b| + v_x` uses `w = cutoff_widths`.
    pub cutoff_widths: f64,
    /// Relative Hartree weight below which samples are negligible.
    pub weight_floor: f64,
    pub negative_coupling: NegativeCoupling,
    pub breakdown: BreakdownPolicy,
}

impl Default for CspaConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            initial_intervals: 4,
            max_intervals: 600,
            cutoff_widths: 12.0,
            weight_floor: 1e-12,
            negative_coupling: NegativeCoupling::SaddlePoint,
            breakdown: BreakdownPolicy::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CspaResult {
    pub ln_z: f64,
    pub correlators: Option<Correlators>,
    /// Smallest `2π - β|ω|` over non-negligible samples with `ω² < 0`;
    /// `+∞` when none were met.
    pub margin: f64,
    /// Some samples were dropped under [`BreakdownPolicy::ExcludeRegion`].
    pub excluded: bool,
    pub evaluations: usize,
}

/// Log-integrand at one static point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandPoint {
    /// `ln Z(r)` including `-¼β Σ (n r_μ²/v_μ + v_μ)`.
    pub ln_hartree: f64,
    /// `ln[(ω/λ) sinh(½βλ)/sinh(½βω)]`; `None` past breakdown.
    pub ln_rpa: Option<f64>,
    pub lambda: f64,
    pub omega2: f64,
    /// `2π - β|ω|` when `ω² < 0`.
    pub margin: Option<f64>,
}

impl IntegrandPoint {
    pub fn ln_weight(&self) -> Option<f64> {
        self.ln_rpa.map(|r| self.ln_hartree + r)
    }
}

/// The static-path integrand at `r`, without the normalization prefactor.
/// Components along axes with `v_μ = 0` must be zero.
pub fn cspa_integrand(r: [f64; 3], params: &ModelParams, t: f64) -> Result<IntegrandPoint> {
    check_temperature(t)?;
    let v = params.couplings();
    for mu in 0..3 {
        if v[mu] == 0.0 && r[mu] != 0.0 {
            return Err(Error::Domain(format!("no auxiliary field along axis {mu} (v = 0), got r = {}", r[mu])));
        }
    }
    let beta = 1.0 / t;
    let n = params.n as f64;
    let gauss: f64 = (0..3).filter(|&mu| v[mu] != 0.0).map(|mu| -0.25 * beta * n * r[mu] * r[mu] / v[mu]).sum();
    let ctx = Ctx::new(params, t, &CspaConfig::default());
    let (ln_rpa, rpa) = ctx.rho(r);
    Ok(IntegrandPoint {
        ln_hartree: gauss - 0.25 * beta * v.iter().sum::<f64>() + n * ln_2cosh(0.5 * beta * rpa.lambda),
        ln_rpa,
        lambda: rpa.lambda,
        omega2: rpa.omega2,
        margin: margin_of(beta, rpa.omega2),
    })
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("static path integration needs finite T > 0, got {t}")));
    }
    Ok(())
}

fn margin_of(beta: f64, omega2: f64) -> Option<f64> {
    (omega2 < 0.0).then(|| 2.0 * std::f64::consts::PI - beta * (-omega2).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axis {
    Integrated {
        lo: f64,
        hi: f64,
        symmetric: bool,
    },
    /// Cumulant expansion around `r_μ = 0` with signed variance `σ²`.
    Expanded {
        sigma2: f64,
    },
}

struct Ctx {
    params: ModelParams,
    n: f64,
    t: f64,
    beta: f64,
    v: [f64; 3],
    axes: [Axis; 3],
}

struct RpaParts {
    lambda: f64,
    lam: [f64; 3],
    f: [f64; 3],
    omega2: f64,
}

/// Point values carried into the integrals.
struct Sample {
    ln_weight: f64,
    /// `ln_weight`, or past breakdown the weight the RPA factor reaches at
    /// the threshold, which the dropped sample would at least carry.
    ln_bound: f64,
    omega2: f64,
    /// `[A_x, A_y, A_z, S]`.
    obs: [f64; 4],
}

impl Ctx {
    fn new(params: &ModelParams, t: f64, cfg: &CspaConfig) -> Self {
        let beta = 1.0 / t;
        let n = params.n as f64;
        let v = params.couplings();
        let axes = std::array::from_fn(|mu| {
            let vm = v[mu];
            if vm > 0.0 {
                let r = cfg.cutoff_widths * (vm / (beta * n)).sqrt() + params.b.abs() + params.vx;
                if mu < 2 {
                    Axis::Integrated { lo: 0.0, hi: r, symmetric: true }
                } else {
                    Axis::Integrated { lo: -r, hi: r, symmetric: false }
                }
            } else if vm < 0.0 && cfg.negative_coupling == NegativeCoupling::SaddlePoint {
                Axis::Expanded { sigma2: 2.0 * vm / (beta * n) }
            } else {
                Axis::Expanded { sigma2: 0.0 }
            }
        });
        Self { params: *params, n, t, beta, v, axes }
    }

    fn rho(&self, r: [f64; 3]) -> (Option<f64>, RpaParts) {
        let e = rpa_energy_general(r, &self.params, self.t);
        let lam = [r[0], r[1], r[2] - self.params.b];
        let parts = RpaParts { lambda: e.lambda, lam, f: e.f, omega2: e.omega2 };
        let hb2 = 0.25 * self.beta * self.beta;
        let x2w = hb2 * e.omega2;
        if x2w < 0.0 && (-x2w).sqrt() >= std::f64::consts::PI * BREAKDOWN_FRACTION {
            return (None, parts);
        }
        let ln_w = ln_x_over_sinh_sq(x2w);
        let ln_l = ln_x_over_sinh_sq(hb2 * e.lambda * e.lambda);
        (ln_w.zip(ln_l).map(|(a, b)| a - b), parts)
    }

    fn gauss(&self, r: [f64; 3]) -> f64 {
        (0..3)
            .filter(|&mu| matches!(self.axes[mu], Axis::Integrated { .. }))
            .map(|mu| -0.25 * self.beta * self.n * r[mu] * r[mu] / self.v[mu])
            .sum()
    }

    fn phi(&self, lambda: f64) -> f64 {
        self.n * ln_2cosh(0.5 * self.beta * lambda)
    }

    /// First and second derivatives of `ln g = φ(λ) + ρ` along axis `mu`.
    fn log_derivatives(&self, r: [f64; 3], mu: usize, parts: &RpaParts, rho0: f64) -> Option<(f64, f64)> {
        let (n, beta, lambda) = (self.n, self.beta, parts.lambda);
        let d1_phi = 0.5 * n * beta * (0.5 * beta * lambda).tanh();
        let phi_over_l = if lambda > 1e-12 { d1_phi / lambda } else { 0.25 * n * beta * beta };
        let d2_phi = 0.25 * n * beta * beta * sech2(0.5 * beta * lambda);
        let c = if lambda > 0.0 { parts.lam[mu] / lambda } else { 0.0 };
        let g1 = d1_phi * c;
        let g2 = d2_phi * c * c + phi_over_l * (1.0 - c * c);
        // five-point stencils on the O(1) RPA factor only
        let h = 1e-3 * lambda.max(self.t).max(1e-3 * self.params.energy_scale());
        let at = |s: f64| {
            let mut rr = r;
            rr[mu] += s * h;
            self.rho(rr).0
        };
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        let r1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        let r2 = (-p2 + 16.0 * p1 - 30.0 * rho0 + 16.0 * m1 - m2) / (12.0 * h * h);
        Some((g1 + r1, g2 + r2))
    }

    /// `(2/(βω) - coth ½βω) ∂ω/∂v_μ` at fixed static fields.
    fn omega_terms(&self, parts: &RpaParts) -> [f64; 3] {
        let q =
            if parts.lambda > 1e-12 { (0.5 * self.beta * parts.lambda).tanh() / parts.lambda } else { 0.5 * self.beta };
        let x2 = 0.25 * self.beta * self.beta * parts.omega2;
        let g = -xcoth_defect_sq(x2);
        let [lx, ly, lz] = parts.lam.map(|l| l * l);
        let [fx, fy, fz] = parts.f;
        let dw2 = [
            -q * (ly * (1.0 - fz) + lz * (1.0 - fy)),
            -q * (lx * (1.0 - fz) + lz * (1.0 - fx)),
            -q * (lx * (1.0 - fy) + ly * (1.0 - fx)),
        ];
        dw2.map(|d| 0.25 * self.beta * g * d)
    }

    /// `None` at breakdown.
    fn sample(&self, r: [f64; 3], observables: bool) -> Option<Sample> {
        let (rho0, parts) = self.rho(r);
        let ln_hartree = self.gauss(r) + self.phi(parts.lambda);
        let rho0 = match rho0 {
            Some(x) => x,
            None => {
                let ln_bound = ln_hartree + self.rho_at_threshold(parts.lambda);
                return Some(Sample { ln_weight: f64::NAN, ln_bound, omega2: parts.omega2, obs: [0.0; 4] });
            }
        };
        let mut ln_weight = ln_hartree + rho0;
        let mut obs = [0.0; 4];
        for mu in 0..3 {
            match self.axes[mu] {
                Axis::Integrated { .. } => {
                    if observables {
                        obs[mu] = 0.5 * self.n * r[mu] * r[mu] / (self.v[mu] * self.v[mu]);
                        if mu == 2 {
                            obs[3] = 0.5 * r[2] / self.v[2];
                        }
                    }
                }
                Axis::Expanded { sigma2 } => {
                    if sigma2 == 0.0 && !observables {
                        continue;
                    }
                    let Some((d1, d2)) = self.log_derivatives(r, mu, &parts, rho0) else {
                        let ln_bound = ln_hartree + self.rho_at_threshold(parts.lambda);
                        return Some(Sample { ln_weight: f64::NAN, ln_bound, omega2: parts.omega2, obs });
                    };
                    ln_weight += 0.5 * sigma2 * (d2 + d1 * d1);
                    obs[mu] = 2.0 / (self.beta * self.beta * self.n) * (d2 + d1 * d1);
                    if mu == 2 {
                        obs[3] = d1 / (self.beta * self.n);
                    }
                }
            }
        }
        if observables {
            let w = self.omega_terms(&parts);
            for mu in 0..3 {
                obs[mu] += w[mu];
            }
        }
        Some(Sample { ln_weight, ln_bound: ln_weight, omega2: parts.omega2, obs })
    }

    /// RPA factor just inside the breakdown threshold.
    fn rho_at_threshold(&self, lambda: f64) -> f64 {
        let x = std::f64::consts::PI * BREAKDOWN_FRACTION;
        let ln_w = ln_x_over_sinh_sq(-x * x).unwrap_or(0.0);
        let ln_l = ln_x_over_sinh_sq(0.25 * self.beta * self.beta * lambda * lambda).unwrap_or(0.0);
        ln_w - ln_l
    }

    fn integrated(&self) -> Vec<(usize, f64, f64)> {
        (0..3)
            .filter_map(|mu| match self.axes[mu] {
                Axis::Integrated { lo, hi, .. } => Some((mu, lo, hi)),
                Axis::Expanded { .. } => None,
            })
            .collect()
    }

    /// `ln` of the constant factors: couplings, Gaussian normalization and
    /// the parity folding of the even axes.
    fn ln_prefactor(&self) -> f64 {
        let mut c = -0.25 * self.beta * self.v.iter().sum::<f64>();
        for mu in 0..3 {
            if let Axis::Integrated { symmetric, .. } = self.axes[mu] {
                c += 0.5 * (self.n * self.beta / (4.0 * std::f64::consts::PI * self.v[mu])).ln();
                if symmetric {
                    c += std::f64::consts::LN_2;
                }
            }
        }
        c
    }
}

const SCAN_POINTS: usize = 25;
/// Log-weight drop required at the cutoff faces.
const FACE_DROP: f64 = 36.0;

/// Peak of the log-integrand over a coarse grid plus the mean-field point,
/// widening cutoffs until the faces are negligible.
fn locate_peak(ctx: &mut Ctx) -> Result<f64> {
    for _ in 0..12 {
        let axes = ctx.integrated();
        let mut peak = f64::NEG_INFINITY;
        let mut face = vec![f64::NEG_INFINITY; axes.len()];
        let total = SCAN_POINTS.pow(axes.len() as u32);
        let ctx_ref = &*ctx;
        let samples = crate::parallel::map_range(total, |idx| {
            let mut r = [0.0; 3];
            let mut k = idx;
            let mut at_face = vec![false; axes.len()];
            for (a, &(mu, lo, hi)) in axes.iter().enumerate() {
                let i = k % SCAN_POINTS;
                k /= SCAN_POINTS;
                r[mu] = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
                let symmetric = matches!(ctx_ref.axes[mu], Axis::Integrated { symmetric: true, .. });
                at_face[a] = i == SCAN_POINTS - 1 || (i == 0 && !symmetric);
            }
            let w = ctx_ref.sample(r, false).map(|s| s.ln_bound);
            (w.unwrap_or(f64::NEG_INFINITY), at_face)
        });
        for (w, at_face) in samples {
            peak = peak.max(w);
            for (a, &f) in at_face.iter().enumerate() {
                if f {
                    face[a] = face[a].max(w);
                }
            }
        }
        if let Ok(sol) = solve_mean_field(&ctx.params, ctx.t) {
            let mut r = [0.0; 3];
            for &(mu, _, _) in &axes {
                r[mu] = sol.r[mu].abs() * if mu == 2 { sol.r[2].signum() } else { 1.0 };
            }
            if let Some(s) = ctx.sample(r, false) {
                if s.ln_weight.is_finite() {
                    peak = peak.max(s.ln_weight);
                }
            }
        }
        if !peak.is_finite() {
            return Err(Error::Numerical("static path integrand vanishes on the whole scan grid".into()));
        }
        let mut widened = false;
        for (a, &(mu, _, _)) in axes.iter().enumerate() {
            if face[a] > peak - FACE_DROP {
                if let Axis::Integrated { lo, hi, symmetric } = ctx.axes[mu] {
                    let (lo, hi) = if symmetric { (lo, 1.5 * hi) } else { (1.5 * lo, 1.5 * hi) };
                    ctx.axes[mu] = Axis::Integrated { lo, hi, symmetric };
                    widened = true;
                }
            }
        }
        if !widened {
            return Ok(peak);
        }
    }
    Err(Error::Quadrature("integration box could not be made wide enough".into()))
}

fn atomic_min(cell: &AtomicU64, x: f64) {
    let mut cur = cell.load(Ordering::Relaxed);
    while x < f64::from_bits(cur) {
        match cell.compare_exchange_weak(cur, x.to_bits(), Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => break,
            Err(c) => cur = c,
        }
    }
}

type PointFn<'a> = dyn Fn([f64; 3]) -> Result<Vec<f64>> + Sync + 'a;

fn nested(
    axes: &[(usize, f64, f64)],
    r: [f64; 3],
    f: &PointFn<'_>,
    cfg: &QuadConfig,
    depth: usize,
) -> Result<Vec<f64>> {
    let Some(&(mu, lo, hi)) = axes.first() else {
        return f(r);
    };
    // inner integrals must be quieter than the outer error estimate; their
    // absolute floor is spread over the enclosing axes
    let rel_tol = if depth == 0 { cfg.rel_tol } else { 0.1 * cfg.rel_tol };
    let level = QuadConfig { parallel_nodes: depth == 0, rel_tol, ..*cfg };
    let inner_abs = cfg.abs_tol / (hi - lo);
    let inner = |u: f64| {
        let mut rr = r;
        rr[mu] = u;
        nested(&axes[1..], rr, f, &QuadConfig { abs_tol: inner_abs, ..*cfg }, depth + 1)
    };
    Ok(integrate(inner, lo, hi, &level)?.value)
}

fn run(params: &ModelParams, t: f64, cfg: &CspaConfig, observables: bool) -> Result<CspaResult> {
    check_temperature(t)?;
    if observables {
        params.require_pairs()?;
    }
    let mut ctx = Ctx::new(params, t, cfg);
    let shift = locate_peak(&mut ctx)?;
    let ctx = ctx;
    let margin = AtomicU64::new(f64::INFINITY.to_bits());
    let excluded = AtomicBool::new(false);
    let evaluations = AtomicUsize::new(0);
    let ln_floor = cfg.weight_floor.ln();
    let dim = if observables { 5 } else { 1 };
    let point = |r: [f64; 3]| -> Result<Vec<f64>> {
        evaluations.fetch_add(1, Ordering::Relaxed);
        let Some(s) = ctx.sample(r, observables) else { unreachable!() };
        let relevant = s.ln_bound - shift > ln_floor;
        if relevant {
            if let Some(m) = margin_of(ctx.beta, s.omega2) {
                atomic_min(&margin, m);
            }
        }
        if s.ln_weight.is_nan() {
            if relevant {
                let m = margin_of(ctx.beta, s.omega2).unwrap_or(0.0);
                match cfg.breakdown {
                    BreakdownPolicy::Strict => return Err(Error::Breakdown { temperature: t, margin: m }),
                    BreakdownPolicy::ExcludeRegion => excluded.store(true, Ordering::Relaxed),
                }
            }
            return Ok(vec![0.0; dim]);
        }
        let w = (s.ln_weight - shift).exp();
        let mut out = Vec::with_capacity(dim);
        out.push(w);
        if observables {
            out.extend(s.obs.iter().map(|o| w * o));
        }
        Ok(out)
    };
    // ln w is the concave Gaussian plus a convex φ, so the normalized peak
    // is at least as wide as the Gaussian alone; slices far below it are
    // settled by an absolute floor instead of their own negligible mass
    let peak_volume: f64 = ctx
        .integrated()
        .iter()
        .map(|&(mu, lo, hi)| (4.0 * std::f64::consts::PI * ctx.v[mu] / (ctx.beta * ctx.n)).sqrt().min(hi - lo))
        .product();
    let qcfg = QuadConfig {
        rel_tol: cfg.rel_tol,
        abs_tol: 1e-3 * cfg.rel_tol * peak_volume,
        initial_intervals: cfg.initial_intervals,
        max_intervals: cfg.max_intervals,
        parallel_nodes: false,
        // observables vanishing by symmetry are judged against the weight
        first_floor: 1.0,
    };
    let axes = ctx.integrated();
    let integral = nested(&axes, [0.0; 3], &point, &qcfg, 0)?;
    if !(integral[0] > 0.0) {
        return Err(Error::Numerical("static path integral is not positive".into()));
    }
    let ln_z = ctx.ln_prefactor() + shift + integral[0].ln();
    let correlators = observables.then(|| {
        let avg = |k: usize| integral[k] / integral[0];
        let alpha = |mu: usize| {
            let hartree_shift = match ctx.axes[mu] {
                Axis::Integrated { .. } => t / ctx.v[mu],
                Axis::Expanded { .. } => 0.0,
            };
            (avg(1 + mu) - hartree_shift - 0.5) / (2.0 * (ctx.n - 1.0))
        };
        Correlators { alpha_x: alpha(0), alpha_y: alpha(1), alpha_z: alpha(2), sz: avg(4) }
    });
    Ok(CspaResult {
        ln_z,
        correlators,
        margin: f64::from_bits(margin.load(Ordering::Relaxed)),
        excluded: excluded.load(Ordering::Relaxed),
        evaluations: evaluations.load(Ordering::Relaxed),
    })
}

pub fn cspa_log_partition(params: &ModelParams, t: f64, cfg: &CspaConfig) -> Result<CspaResult> {
    run(params, t, cfg, false)
}

/// `ln Z` together with `α_μ` and `⟨s_z⟩` as static-path averages.
pub fn cspa_observables(params: &ModelParams, t: f64, cfg: &CspaConfig) -> Result<CspaResult> {
    run(params, t, cfg, true)
}

pub fn cspa_concurrence(params: &ModelParams, t: f64, cfg: &CspaConfig) -> Result<ConcurrenceReport> {
    let r = cspa_observables(params, t, cfg)?;
    concurrence_of(r.correlators.expect("observables requested"))
}
