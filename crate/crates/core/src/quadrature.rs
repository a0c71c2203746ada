//! Adaptive Gauss–Kronrod (7/15) quadrature of vector-valued integrands.
//!
//! Acceptance is relative to the L1 mass of each component, so components
//! with cancellations do not force needless refinement. Nesting one call
//! inside another's integrand gives tensor-product integration.

use crate::error::{Error, Result};
use crate::parallel::map_collect;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights on the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    /// Absolute floor on the accepted error, per component.
    pub abs_tol: f64,
    pub initial_intervals: usize,
    pub max_intervals: usize,
    /// Evaluate the 15 nodes of each interval in parallel.
    pub parallel_nodes: bool,
    /// Components `k > 0` also accept an error up to
    /// `rel_tol * first_floor * ∫|f_0|`, for integrands whose first component
    /// is a normalization and whose others may vanish by symmetry.
    pub first_floor: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            initial_intervals: 4,
            max_intervals: 2000,
            parallel_nodes: false,
            first_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    /// `∫|f_k|` estimates.
    pub l1: Vec<f64>,
    pub intervals: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    l1: Vec<f64>,
}

fn nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; 15];
    for j in 0..7 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x
}

fn combine(a: f64, b: f64, fx: Vec<Vec<f64>>) -> Result<Segment> {
    let dim = fx[14].len();
    if fx.iter().any(|v| v.len() != dim) {
        return Err(Error::Quadrature("integrand changed its output length".into()));
    }
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut l1 = vec![0.0; dim];
    for k in 0..dim {
        let mut rk = WGK[7] * fx[14][k];
        let mut rg = WG[3] * fx[14][k];
        let mut ra = WGK[7] * fx[14][k].abs();
        for j in 0..7 {
            let pair = fx[2 * j][k] + fx[2 * j + 1][k];
            rk += WGK[j] * pair;
            ra += WGK[j] * (fx[2 * j][k].abs() + fx[2 * j + 1][k].abs());
            if j % 2 == 1 {
                rg += WG[j / 2] * pair;
            }
        }
        kron[k] = rk * h;
        gauss[k] = rg * h;
        l1[k] = ra * h.abs();
    }
    let error = kron.iter().zip(&gauss).map(|(k, g)| (k - g).abs()).collect();
    Ok(Segment { a, b, value: kron, error, l1 })
}

fn eval_segment<F>(f: &F, a: f64, b: f64, parallel: bool) -> Result<Segment>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let x = nodes(a, b);
    let fx: Vec<Vec<f64>> = if parallel {
        map_collect(&x, |&xi| f(xi)).into_iter().collect::<Result<_>>()?
    } else {
        x.iter().map(|&xi| f(xi)).collect::<Result<_>>()?
    };
    if fx.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    combine(a, b, fx)
}

/// `∫_a^b f(x) dx` for vector-valued `f`.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    let m = cfg.initial_intervals.max(1);
    let edges: Vec<f64> = (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
    let mut segs: Vec<Segment> = if cfg.parallel_nodes {
        map_collect(&(0..m).collect::<Vec<_>>(), |&i| eval_segment(&f, edges[i], edges[i + 1], false))
            .into_iter()
            .collect::<Result<_>>()?
    } else {
        (0..m).map(|i| eval_segment(&f, edges[i], edges[i + 1], false)).collect::<Result<_>>()?
    };
    let mut evaluations = 15 * m;
    loop {
        let dim = segs[0].value.len();
        let sum = |pick: fn(&Segment) -> &Vec<f64>, k: usize| segs.iter().map(|s| pick(s)[k]).sum::<f64>();
        let l1_first = sum(|s| &s.l1, 0);
        let tol: Vec<f64> = (0..dim)
            .map(|k| {
                let floor = if k > 0 { cfg.rel_tol * cfg.first_floor * l1_first } else { 0.0 };
                (cfg.rel_tol * sum(|s| &s.l1, k)).max(cfg.abs_tol).max(floor)
            })
            .collect();
        let err: Vec<f64> = (0..dim).map(|k| sum(|s| &s.error, k)).collect();
        if err.iter().zip(&tol).all(|(e, t)| e <= t) {
            return Ok(QuadResult {
                value: (0..dim).map(|k| sum(|s| &s.value, k)).collect(),
                error: err,
                l1: (0..dim).map(|k| sum(|s| &s.l1, k)).collect(),
                intervals: segs.len(),
                evaluations,
            });
        }
        if segs.len() >= cfg.max_intervals {
            let k = (0..dim).max_by(|&i, &j| (err[i] / tol[i]).total_cmp(&(err[j] / tol[j]))).unwrap_or(0);
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {} intervals (component {k}: error {:e} > tolerance {:e})",
                segs.len(),
                err[k],
                tol[k]
            )));
        }
        // split the interval carrying the largest share of any component's budget
        let score = |s: &Segment| (0..dim).map(|k| s.error[k] / tol[k].max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        let (worst, _) = segs.iter().enumerate().map(|(i, s)| (i, score(s))).fold((0, f64::NEG_INFINITY), |acc, x| {
            if x.1 > acc.1 {
                x
            } else {
                acc
            }
        });
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(Error::Quadrature(format!("interval around {mid} cannot be split further")));
        }
        segs.push(eval_segment(&f, s.a, mid, cfg.parallel_nodes)?);
        segs.push(eval_segment(&f, mid, s.b, cfg.parallel_nodes)?);
        evaluations += 30;
        // keep summation order independent of the split history
        segs.sort_by(|p, q| p.a.total_cmp(&q.a));
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    Ok(integrate(|x| Ok(vec![f(x)]), a, b, cfg)?.value[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weights_integrate_polynomials() {
        let cfg = QuadConfig { initial_intervals: 1, ..Default::default() };
        for p in 0..=13 {
            let r = integrate_scalar(|x| x.powi(p), 0.0, 1.0, &cfg).unwrap();
            assert!((r - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
        }
        let s: f64 = WGK.iter().sum::<f64>() * 2.0 - WGK[7];
        assert!((s - 2.0).abs() < 1e-14);
        let g: f64 = WG.iter().sum::<f64>() * 2.0 - WG[3];
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn peaked_integrand() {
        let cfg = QuadConfig::default();
        let w: f64 = 1e-3;
        let r = integrate_scalar(|x| (-(x - 0.3).powi(2) / (2.0 * w * w)).exp(), -1.0, 1.0, &cfg).unwrap();
        let exact = w * (2.0 * std::f64::consts::PI).sqrt();
        assert!((r - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn vector_components_with_cancellation() {
        let cfg = QuadConfig::default();
        let r = integrate(|x| Ok(vec![x.cos(), x.sin(), 1.0]), 0.0, 2.0 * std::f64::consts::PI, &cfg).unwrap();
        assert!(r.value[0].abs() < 1e-12 && r.value[1].abs() < 1e-12);
        assert!((r.value[2] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((r.l1[0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn noise_component_needs_first_floor() {
        // second component is pure rounding noise with no relative accuracy
        let f = |x: f64| Ok(vec![(-x * x).exp(), 1e-17 * ((1e6 * x).sin())]);
        let strict = QuadConfig { max_intervals: 200, ..Default::default() };
        assert!(integrate(f, -5.0, 5.0, &strict).is_err());
        let floored = QuadConfig { first_floor: 1.0, ..strict };
        let r = integrate(f, -5.0, 5.0, &floored).unwrap();
        assert!((r.value[0] - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn nested_gaussian() {
        let cfg = QuadConfig { rel_tol: 1e-11, ..Default::default() };
        let inner = |x: f64| integrate_scalar(|y| (-(x * x + 2.0 * y * y)).exp(), -8.0, 8.0, &cfg);
        let r = integrate(|x| Ok(vec![inner(x)?]), -8.0, 8.0, &cfg).unwrap();
        let exact = std::f64::consts::PI / 2f64.sqrt();
        assert!((r.value[0] - exact).abs() < 1e-10);
    }

    #[test]
    fn parallel_nodes_are_deterministic() {
        let f = |x: f64| Ok(vec![(3.0 * x).sin().exp(), x * x]);
        let a = integrate(f, 0.0, 5.0, &QuadConfig { parallel_nodes: true, ..Default::default() }).unwrap();
        let b = integrate(f, 0.0, 5.0, &QuadConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_convergence_is_reported() {
        let cfg = QuadConfig { max_intervals: 8, ..Default::default() };
        let r = integrate_scalar(|x| (1.0 / x.abs().max(1e-300)).sqrt(), -1.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::Quadrature(_))));
        assert!(integrate_scalar(|x| 1.0 / x, 0.0, 1.0, &cfg).is_err());
    }

    proptest! {
        #[test]
        fn exponential_moments(c in -3.0f64..3.0, a in -2.0f64..0.0, b in 0.1f64..2.0) {
            let r = integrate_scalar(|x| (c * x).exp(), a, b, &QuadConfig::default()).unwrap();
            let exact = if c.abs() < 1e-12 { b - a } else { ((c * b).exp() - (c * a).exp()) / c };
            prop_assert!((r - exact).abs() <= 1e-11 * exact.abs().max(1.0));
        }
    }
}
