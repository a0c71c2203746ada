//! Small numerical helpers shared across modules.

/// ln(2 cosh x), stable for large |x|.
pub(crate) fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// coth(x) for x > 0.
pub(crate) fn coth(x: f64) -> f64 {
    if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// Below this |x²| the power series are used; their truncation error there
/// is below 1e-17 while the closed forms lose digits to cancellation.
const SERIES_X2: f64 = 0.1;

/// ln(sinh x / x) = x² Σ c_k x^{2k}.
const LN_SINHC: [f64; 7] =
    [1.0 / 6.0, -1.0 / 180.0, 1.0 / 2835.0, -1.0 / 37800.0, 1.0 / 467775.0, -691.0 / 3831077250.0, 2.0 / 127702575.0];

/// (1 - x coth x)/x² = -Σ d_k x^{2k}.
const XCOTH_DEFECT: [f64; 7] =
    [1.0 / 3.0, -1.0 / 45.0, 2.0 / 945.0, -1.0 / 4725.0, 2.0 / 93555.0, -1382.0 / 638512875.0, 4.0 / 18243225.0];

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// (x coth x - 1)/x² as a function of x², analytic through 0.
pub(crate) fn xcoth_defect_sq(x2: f64) -> f64 {
    if x2.abs() < SERIES_X2 {
        horner(&XCOTH_DEFECT, x2)
    } else {
        (xcoth_sq(x2) - 1.0) / x2
    }
}

/// x coth(x) as a function of x², analytic through x² = 0 and continued to
/// x² < 0 as u cot(u) with u² = -x².
pub(crate) fn xcoth_sq(x2: f64) -> f64 {
    if x2.abs() < SERIES_X2 {
        1.0 + x2 * xcoth_defect_sq(x2)
    } else if x2 > 0.0 {
        let x = x2.sqrt();
        x * coth(x)
    } else {
        let u = (-x2).sqrt();
        u / u.tan()
    }
}

/// ln(x / sinh x) as a function of x², continued to ln(u / sin u) for x² < 0.
/// Returns `None` when u ≥ π (the continuation has no meaning there).
pub(crate) fn ln_x_over_sinh_sq(x2: f64) -> Option<f64> {
    if x2.abs() < SERIES_X2 {
        Some(-x2 * horner(&LN_SINHC, x2))
    } else if x2 > 0.0 {
        let x = x2.sqrt();
        // ln(x / sinh x) = ln(2x) - x - ln(1 - e^{-2x})
        Some((2.0 * x).ln() - x - (-(-2.0 * x).exp()).ln_1p())
    } else {
        let u = (-x2).sqrt();
        if u >= std::f64::consts::PI {
            None
        } else {
            Some((u / u.sin()).ln())
        }
    }
}

/// sech²(x) = 1 - tanh²(x).
pub(crate) fn sech2(x: f64) -> f64 {
    let a = x.abs();
    if a > 350.0 {
        0.0
    } else {
        let e = (-2.0 * a).exp();
        4.0 * e / ((1.0 + e) * (1.0 + e))
    }
}

/// Bisection on a bracketing interval followed by a secant polish.
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them be zero).
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= xtol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Log-sum-exp of a slice; `-inf` for an empty slice or all `-inf` terms.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_closed_forms() {
        for &x2 in &[1e-7f64, -1e-7, 2e-6, -2e-6] {
            let x = x2.abs().sqrt();
            let exact_xc = if x2 > 0.0 { x / x.tanh() } else { x / x.tan() };
            assert!((xcoth_sq(x2) - exact_xc).abs() < 1e-13);
            let exact_ls = if x2 > 0.0 { (x / x.sinh()).ln() } else { (x / x.sin()).ln() };
            assert!((ln_x_over_sinh_sq(x2).unwrap() - exact_ls).abs() < 1e-13);
        }
        // both sides of the series cutoff
        for &x2 in &[0.099f64, -0.099, 0.101, -0.101, 0.05, -0.05] {
            let x = x2.abs().sqrt();
            let exact_xc = if x2 > 0.0 { x / x.tanh() } else { x / x.tan() };
            assert!((xcoth_sq(x2) - exact_xc).abs() < 1e-15, "{x2}");
            assert!((xcoth_defect_sq(x2) - (exact_xc - 1.0) / x2).abs() < 1e-14, "{x2}");
            let exact_ls = if x2 > 0.0 { (x / x.sinh()).ln() } else { (x / x.sin()).ln() };
            assert!((ln_x_over_sinh_sq(x2).unwrap() - exact_ls).abs() < 5e-16, "{x2}");
        }
        assert!(ln_x_over_sinh_sq(-10.0).is_none());
        assert!((ln_x_over_sinh_sq(400.0).unwrap() - (20.0 / 20f64.sinh()).ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_2cosh_is_stable() {
        assert!((ln_2cosh(1000.0) - 1000.0).abs() < 1e-12);
        assert!((ln_2cosh(0.3) - (2.0 * 0.3f64.cosh()).ln()).abs() < 1e-15);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
