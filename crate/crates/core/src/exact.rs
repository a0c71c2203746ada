//! Exact thermodynamics from the sector decomposition.
//!
//! Every eigenstate of a parity block carries its collective moments
//! ⟨S_z⟩, ⟨S_z²⟩ and ⟨S_x² - S_y²⟩; thermal averages of these, weighted by
//! Y(S) e^{-βE}, give the pair correlators without any numerical derivative.

use serde::{Deserialize, Serialize};

use crate::concurrence::{concurrence_of, ConcurrenceReport, Correlators};
use crate::error::{Error, Result};
use crate::parallel;
use crate::params::ModelParams;
use crate::spin_algebra::{build_block, ln_biguint, parity_split, sectors, Parity, ParityBlock, TwoS};
use crate::tridiag::EigenDecomposition;
use crate::util::bisect;

/// States within this fraction of the energy scale of the minimum form the
/// T = 0 mixture.
pub const GROUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub spin2: TwoS,
    pub parity: Parity,
    /// Index within its parity block, ascending in energy.
    pub k: usize,
    pub energy: f64,
    pub m1z: f64,
    pub m2x: f64,
    pub m2y: f64,
    pub m2z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinBlockSpectrum {
    pub spin2: TwoS,
    pub ln_multiplicity: f64,
    /// Sorted by energy.
    pub levels: Vec<Level>,
}

/// All sectors of one Hamiltonian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub params: ModelParams,
    pub sectors: Vec<SpinBlockSpectrum>,
    ground: f64,
}

/// Thermal averages of the collective moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub sx2: f64,
    pub sy2: f64,
    pub sz2: f64,
    pub sz: f64,
}

fn block_levels(pb: &ParityBlock, spin2: TwoS, eig: &EigenDecomposition) -> Vec<Level> {
    let casimir = spin2.casimir();
    eig.values
        .iter()
        .zip(&eig.vectors)
        .enumerate()
        .map(|(k, (&energy, c))| {
            let mut m1z = 0.0;
            let mut m2z = 0.0;
            for (ci, &m2) in c.iter().zip(&pb.m2) {
                let m = m2 as f64 / 2.0;
                let w = ci * ci;
                m1z += w * m;
                m2z += w * m * m;
            }
            let d: f64 = pb.ladder.iter().enumerate().map(|(i, l)| c[i] * c[i + 1] * l).sum();
            let perp = casimir - m2z;
            Level { spin2, parity: pb.parity, k, energy, m1z, m2x: 0.5 * (perp + d), m2y: 0.5 * (perp - d), m2z }
        })
        .collect()
}

fn diagonalize_sector(params: &ModelParams, s: TwoS) -> Result<SpinBlockSpectrum> {
    let block = build_block(params, s)?;
    let ln_multiplicity = ln_biguint(&block.multiplicity);
    let split = parity_split(&block);
    let mut levels = Vec::with_capacity(block.dim());
    for pb in split.blocks() {
        if pb.dim() == 0 {
            continue;
        }
        let eig = pb.matrix.eigen().map_err(|_| Error::EigenNonConvergence { spin2: s.0 })?;
        levels.extend(block_levels(pb, s, &eig));
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(SpinBlockSpectrum { spin2: s, ln_multiplicity, levels })
}

/// Diagonalizes every sector (in parallel with the `parallel` feature).
pub fn diagonalize(params: &ModelParams) -> Result<Spectrum> {
    diagonalize_sectors(params, &sectors(params.n))
}

/// Diagonalizes the listed sectors only. Thermal quantities of the result
/// then refer to the truncated space.
pub fn diagonalize_sectors(params: &ModelParams, which: &[TwoS]) -> Result<Spectrum> {
    let sectors =
        parallel::map_collect(which, |&s| diagonalize_sector(params, s)).into_iter().collect::<Result<Vec<_>>>()?;
    let ground = sectors.iter().flat_map(|s| s.levels.first()).map(|l| l.energy).fold(f64::INFINITY, f64::min);
    Ok(Spectrum { params: *params, sectors, ground })
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("temperature must be finite and >= 0, got {t}")));
    }
    Ok(())
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground
    }

    pub fn levels(&self) -> impl Iterator<Item = (&SpinBlockSpectrum, &Level)> {
        self.sectors.iter().flat_map(|s| s.levels.iter().map(move |l| (s, l)))
    }

    pub fn level(&self, spin2: TwoS, k: usize, parity: Parity) -> Option<&Level> {
        self.sectors.iter().find(|s| s.spin2 == spin2)?.levels.iter().find(|l| l.k == k && l.parity == parity)
    }

    /// Log weight of each level relative to the ground state, ln Y - β(E - E₀),
    /// or the T = 0 indicator of the ground manifold.
    fn log_weights(&self, t: f64) -> impl Iterator<Item = (f64, &Level)> + '_ {
        let e0 = self.ground;
        let tol = GROUND_TOL * self.params.energy_scale();
        self.levels().map(move |(s, l)| {
            let de = l.energy - e0;
            let lw = if t > 0.0 {
                s.ln_multiplicity - de / t
            } else if de <= tol {
                s.ln_multiplicity
            } else {
                f64::NEG_INFINITY
            };
            (lw, l)
        })
    }

    /// ln Σ_S Y(S) Σ e^{-βE}. At `T = 0` this is the log of the
    /// Y-weighted ground-state degeneracy, i.e. `ln Z + βE₀` in the limit.
    pub fn log_partition(&self, t: f64) -> Result<f64> {
        check_temperature(t)?;
        let (ln_sum, _) = self.weighted_moments(t);
        Ok(if t > 0.0 { ln_sum - self.ground / t } else { ln_sum })
    }

    fn weighted_moments(&self, t: f64) -> (f64, Moments) {
        let lws: Vec<(f64, &Level)> = self.log_weights(t).collect();
        let lmax = lws.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut m = Moments { sx2: 0.0, sy2: 0.0, sz2: 0.0, sz: 0.0 };
        for (lw, l) in &lws {
            let w = (lw - lmax).exp();
            z += w;
            m.sx2 += w * l.m2x;
            m.sy2 += w * l.m2y;
            m.sz2 += w * l.m2z;
            m.sz += w * l.m1z;
        }
        m.sx2 /= z;
        m.sy2 /= z;
        m.sz2 /= z;
        m.sz /= z;
        (lmax + z.ln(), m)
    }

    pub fn thermal_moments(&self, t: f64) -> Result<Moments> {
        check_temperature(t)?;
        Ok(self.weighted_moments(t).1)
    }

    pub fn thermal_observables(&self, t: f64) -> Result<Correlators> {
        self.params.require_pairs()?;
        let m = self.thermal_moments(t)?;
        Ok(Correlators::from_moments(self.n(), m.sx2, m.sy2, m.sz2, m.sz))
    }

    pub fn thermal_concurrence(&self, t: f64) -> Result<ConcurrenceReport> {
        concurrence_of(self.thermal_observables(t)?)
    }

    /// Concurrence of the permutation-invariant mixture of the Y(S) copies
    /// of level `(S, k, ν)`.
    pub fn level_concurrence(&self, spin2: TwoS, k: usize, parity: Parity) -> Result<ConcurrenceReport> {
        self.params.require_pairs()?;
        let l = self
            .level(spin2, k, parity)
            .ok_or_else(|| Error::Domain(format!("no level k = {k}, parity {parity:?} in sector 2S = {}", spin2.0)))?;
        concurrence_of(level_correlators(self.n(), l))
    }
}

pub fn level_correlators(n: usize, l: &Level) -> Correlators {
    Correlators::from_moments(n, l.m2x, l.m2y, l.m2z, l.m1z)
}

/// Temperature intervals of positive parallel and antiparallel concurrence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LimitTemperatures {
    pub plus: Vec<(f64, f64)>,
    pub minus: Vec<(f64, f64)>,
}

impl LimitTemperatures {
    /// T_L^+: the largest upper endpoint of a parallel interval.
    pub fn t_plus(&self) -> Option<f64> {
        self.plus.last().map(|iv| iv.1)
    }

    pub fn t_minus(&self) -> Option<f64> {
        self.minus.last().map(|iv| iv.1)
    }
}

/// Number of points of the geometric temperature grid.
pub const TL_GRID_POINTS: usize = 400;

/// Positive-concurrence temperature intervals at field `b`, from a geometric
/// scan of `[1e-4, 2] v_x` refined by bisection (absolute tolerance
/// `1e-5 v_x`). Bumps narrower than the grid are caught by maximizing C
/// around interior local maxima of the sampled curve.
pub fn limit_temperatures(params: &ModelParams, b: f64) -> Result<LimitTemperatures> {
    params.require_pairs()?;
    let p = params.with_field(b);
    let spec = diagonalize(&p)?;
    limit_temperatures_of(&spec)
}

pub fn limit_temperatures_of(spec: &Spectrum) -> Result<LimitTemperatures> {
    let unit = if spec.params.vx > 0.0 { spec.params.vx } else { spec.params.energy_scale() };
    let (t_lo, t_hi) = (1e-4 * unit, 2.0 * unit);
    let ratio = (t_hi / t_lo).powf(1.0 / (TL_GRID_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..TL_GRID_POINTS).map(|i| t_lo * ratio.powi(i as i32)).collect();
    let values = parallel::map_collect(&grid, |&t| spec.thermal_concurrence(t).map(|r| (r.c_plus, r.c_minus)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let xtol = 1e-5 * unit;
    let eval = |t: f64, plus: bool| -> f64 {
        match spec.thermal_concurrence(t) {
            Ok(r) if plus => r.c_plus,
            Ok(r) => r.c_minus,
            Err(_) => f64::NAN,
        }
    };
    let mut out = LimitTemperatures::default();
    for plus in [true, false] {
        let f = |t: f64| eval(t, plus);
        let c: Vec<f64> = values.iter().map(|v| if plus { v.0 } else { v.1 }).collect();
        let intervals = positive_intervals(&grid, &c, &f, xtol);
        if plus {
            out.plus = intervals;
        } else {
            out.minus = intervals;
        }
    }
    Ok(out)
}

fn positive_intervals(grid: &[f64], c: &[f64], f: &dyn Fn(f64) -> f64, xtol: f64) -> Vec<(f64, f64)> {
    // Sample set augmented with the maxima of interior bumps that stay
    // non-positive on the grid.
    let mut ts: Vec<f64> = grid.to_vec();
    let mut cs: Vec<f64> = c.to_vec();
    let mut extra = Vec::new();
    for k in 1..grid.len() - 1 {
        if c[k] <= 0.0 && c[k] >= c[k - 1] && c[k] >= c[k + 1] {
            let (tm, cm) = golden_max(f, grid[k - 1], grid[k + 1], xtol);
            if cm > 0.0 {
                extra.push((tm, cm));
            }
        }
    }
    for (t, v) in extra {
        let pos = ts.partition_point(|&x| x < t);
        ts.insert(pos, t);
        cs.insert(pos, v);
    }
    let mut intervals = Vec::new();
    let mut start: Option<f64> = if cs[0] > 0.0 { Some(0.0) } else { None };
    for k in 1..ts.len() {
        let (a, b) = (cs[k - 1] > 0.0, cs[k] > 0.0);
        if a == b {
            continue;
        }
        let edge = bisect(f, ts[k - 1], ts[k], xtol).unwrap_or(0.5 * (ts[k - 1] + ts[k]));
        if b {
            start = Some(edge);
        } else if let Some(s) = start.take() {
            intervals.push((s, edge));
        }
    }
    if let Some(s) = start {
        intervals.push((s, *ts.last().unwrap()));
    }
    intervals
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > xtol {
        if f1 > 0.0 || f2 > 0.0 {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// One excitation above the global ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub spin2: TwoS,
    pub k: usize,
    pub parity: Parity,
    pub delta_e: f64,
}

/// The `count` lowest levels (ground state included, ΔE = 0) with labels.
pub fn spectrum_low(params: &ModelParams, count: usize) -> Result<Vec<Excitation>> {
    Ok(diagonalize(params)?.low_levels(count))
}

impl Spectrum {
    pub fn low_levels(&self, count: usize) -> Vec<Excitation> {
        let mut all: Vec<Excitation> = self
            .levels()
            .map(|(_, l)| Excitation { spin2: l.spin2, k: l.k, parity: l.parity, delta_e: l.energy - self.ground })
            .collect();
        all.sort_by(|a, b| a.delta_e.total_cmp(&b.delta_e));
        all.truncate(count);
        all
    }
}

/// Lowest even-parity and odd-parity energies over all sectors.
pub fn lowest_by_parity(params: &ModelParams) -> Result<(f64, f64)> {
    let per_sector = parallel::map_collect(&sectors(params.n), |&s| -> Result<(f64, f64)> {
        let split = parity_split(&build_block(params, s)?);
        let low = |pb: &ParityBlock| -> Result<f64> {
            if pb.dim() == 0 {
                return Ok(f64::INFINITY);
            }
            let ev = pb.matrix.eigenvalues().map_err(|_| Error::EigenNonConvergence { spin2: s.0 })?;
            Ok(ev[0])
        };
        Ok((low(&split.even)?, low(&split.odd)?))
    });
    let mut best = (f64::INFINITY, f64::INFINITY);
    for r in per_sector {
        let (e, o) = r?;
        best.0 = best.0.min(e);
        best.1 = best.1.min(o);
    }
    Ok(best)
}

/// Fields in `(b_lo, b_hi)` where the ground-state parity flips, from the
/// sign of `E_even - E_odd` on a uniform grid refined by bisection.
pub fn parity_transitions(params: &ModelParams, b_lo: f64, b_hi: f64) -> Result<Vec<f64>> {
    if !(b_hi > b_lo) || b_lo < 0.0 {
        return Err(Error::Domain(format!("field range ({b_lo}, {b_hi}) must be increasing and non-negative")));
    }
    let points = (40 * params.n).max(400);
    let gap = |b: f64| -> f64 { lowest_by_parity(&params.with_field(b)).map(|(e, o)| e - o).unwrap_or(f64::NAN) };
    let grid: Vec<f64> = (0..points).map(|i| b_lo + (b_hi - b_lo) * (i as f64 + 0.5) / points as f64).collect();
    let gaps = parallel::map_collect(&grid, |&b| gap(b));
    if gaps.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("parity gap evaluation failed".into()));
    }
    let xtol = 1e-14 * b_hi.max(1.0);
    let mut out = Vec::new();
    for k in 1..points {
        if gaps[k - 1].signum() != gaps[k].signum() {
            out.push(bisect(gap, grid[k - 1], grid[k], xtol).unwrap_or(0.5 * (grid[k - 1] + grid[k])));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concurrence::ConcurrenceType;
    use crate::util::ln_2cosh;
    use proptest::prelude::*;

    fn params(n: usize, b: f64, vx: f64, vy: f64, vz: f64) -> ModelParams {
        ModelParams::new(n, b, vx, vy, vz).unwrap()
    }

    #[test]
    fn single_spin() {
        let spec = diagonalize(&params(1, 0.8, 1.0, 0.3, 0.2)).unwrap();
        let e: Vec<f64> = spec.levels().map(|(_, l)| l.energy).collect();
        assert_eq!(e.len(), 2);
        assert!((e[0] + 0.4).abs() < 1e-15 && (e[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn free_spins_partition_function() {
        let p = params(9, 0.6, 0.0, 0.0, 0.0);
        let spec = diagonalize(&p).unwrap();
        for t in [0.05, 0.3, 2.0] {
            let expected = 9.0 * ln_2cosh(0.6 / (2.0 * t));
            assert!((spec.log_partition(t).unwrap() - expected).abs() < 1e-11);
            let c = spec.thermal_observables(t).unwrap();
            let th = (0.6 / (2.0 * t)).tanh();
            assert!(c.alpha_x.abs() < 1e-13 && c.alpha_y.abs() < 1e-13);
            assert!((c.alpha_z - th * th / 4.0).abs() < 1e-12);
            assert!((c.sz + th / 2.0).abs() < 1e-12);
        }
        assert!(spec.log_partition(-1.0).is_err());
    }

    #[test]
    fn high_temperature_limit() {
        let spec = diagonalize(&params(12, 0.4, 1.0, 0.5, 0.1)).unwrap();
        let t = 1e6;
        assert!((spec.log_partition(t).unwrap() - 12.0 * 2f64.ln()).abs() < 1e-5);
        let c = spec.thermal_observables(t).unwrap();
        assert!(c.alphas().iter().all(|a| a.abs() < 1e-6) && c.sz.abs() < 1e-6);
    }

    #[test]
    fn xxz_energies_are_diagonal_formula() {
        let n = 4;
        let spec = diagonalize(&params(n, 0.0, 1.0, 1.0, 0.0)).unwrap();
        let top = &spec.sectors[0];
        assert_eq!(top.spin2, TwoS(4));
        let mut expected: Vec<f64> = (-2..=2)
            .map(|m: i32| {
                let m = m as f64;
                -((6.0 - m * m) - n as f64 / 2.0) / n as f64
            })
            .collect();
        expected.sort_by(f64::total_cmp);
        for (l, e) in top.levels.iter().zip(&expected) {
            assert!((l.energy - e).abs() < 1e-14);
        }
    }

    #[test]
    fn moment_invariants() {
        let spec = diagonalize(&params(30, 0.7, 1.0, 0.3, -0.2)).unwrap();
        for (s, l) in spec.levels() {
            let sum = l.m2x + l.m2y + l.m2z;
            assert!((sum - s.spin2.casimir()).abs() < 1e-10);
            assert!(l.m2x >= -1e-10 && l.m2y >= -1e-10 && l.m2z >= -1e-10);
            assert!(l.m1z.abs() <= s.spin2.spin() + 1e-12);
        }
    }

    #[test]
    fn w_state_level() {
        for n in [4usize, 10, 50] {
            let p = params(n, 1.0, 0.0, 0.0, 0.0);
            let spec = diagonalize(&p).unwrap();
            // |n/2, n/2 - 1⟩ is the highest-but-one level of the top sector
            let parity = Parity::of(n, n as i64 - 2);
            let top = &spec.sectors[0];
            let l = top.levels.iter().rev().nth(1).unwrap();
            assert_eq!(l.parity, parity);
            let r = spec.level_concurrence(TwoS(n as u32), l.k, parity).unwrap();
            assert!((r.c - 2.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_types_at_high_field() {
        // b ≫ b_c: parallel in the ground state, antiparallel in the first
        // excited maximum-spin state.
        let p = ModelParams::with_chi(100, 3.0, 1.0, 0.5, 0.0).unwrap();
        let spec = diagonalize(&p).unwrap();
        let top = &spec.sectors[0];
        let g = top.levels[0];
        let r0 = spec.level_concurrence(g.spin2, g.k, g.parity).unwrap();
        assert_eq!(r0.kind, ConcurrenceType::Parallel);
        let e1 = top.levels[1];
        let r1 = spec.level_concurrence(e1.spin2, e1.k, e1.parity).unwrap();
        assert_eq!(r1.kind, ConcurrenceType::Antiparallel);
    }

    #[test]
    fn derivative_identity() {
        let p = params(8, 0.37, 1.0, 0.41, -0.23);
        let t = 0.3;
        let c = diagonalize(&p).unwrap().thermal_observables(t).unwrap();
        let h = 1e-4;
        let lnz = |q: ModelParams| diagonalize(&q).unwrap().log_partition(t).unwrap();
        let nf = 8.0;
        let fd = |dp: ModelParams, dm: ModelParams| (lnz(dp) - lnz(dm)) / (2.0 * h);
        let ax = fd(params(8, 0.37, 1.0 + h, 0.41, -0.23), params(8, 0.37, 1.0 - h, 0.41, -0.23));
        let ay = fd(params(8, 0.37, 1.0, 0.41 + h, -0.23), params(8, 0.37, 1.0, 0.41 - h, -0.23));
        let az = fd(params(8, 0.37, 1.0, 0.41, -0.23 + h), params(8, 0.37, 1.0, 0.41, -0.23 - h));
        let db = fd(params(8, 0.37 + h, 1.0, 0.41, -0.23), params(8, 0.37 - h, 1.0, 0.41, -0.23));
        let to_alpha = |d: f64| (nf * t * d) / (nf * (nf - 1.0));
        assert!((to_alpha(ax) - c.alpha_x).abs() < 1e-6);
        assert!((to_alpha(ay) - c.alpha_y).abs() < 1e-6);
        assert!((to_alpha(az) - c.alpha_z).abs() < 1e-6);
        assert!((-t * db / nf - c.sz).abs() < 1e-6);
    }

    #[test]
    fn zero_temperature_mixes_degenerate_ground_states() {
        // XXZ at b = 0 with v_z = 0: the top sector has degenerate ±M pairs.
        let spec = diagonalize(&params(6, 0.0, 1.0, 1.0, 0.0)).unwrap();
        let m = spec.thermal_moments(0.0).unwrap();
        assert!(m.sz.abs() < 1e-14);
        let tiny = spec.thermal_moments(1e-9).unwrap();
        assert!((m.sz2 - tiny.sz2).abs() < 1e-10);
    }

    #[test]
    fn parity_transitions_n10() {
        let p = ModelParams::with_chi(10, 0.0, 1.0, 0.5, 0.0).unwrap();
        let xs = parity_transitions(&p, 0.0, 1.0).unwrap();
        assert_eq!(xs.len(), 5);
        let bs = 0.5f64.sqrt();
        assert!((xs[4] - 0.9 * bs).abs() < 1e-6);
    }

    #[test]
    fn monotone_tail_above_002() {
        let p = ModelParams::with_chi(100, 0.5, 1.0, 0.5, 0.0).unwrap();
        let spec = diagonalize(&p).unwrap();
        let ts: Vec<f64> = (0..60).map(|i| 0.02 * 1.05f64.powi(i)).collect();
        let cs: Vec<f64> = ts.iter().map(|&t| spec.thermal_concurrence(t).unwrap().c).collect();
        for w in cs.windows(2) {
            assert!(w[1] < w[0] || w[0] == 0.0, "{} -> {}", w[0], w[1]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scale_invariance(
            n in 2usize..=14, s in 0.2..5.0f64, t in 0.05..2.0f64,
            b in 0.0..2.0f64, vx in 0.1..2.0f64, r in -1.0..1.0f64, vz in -1.0..1.0f64,
        ) {
            let p = params(n, b, vx, r * vx, vz);
            let a = diagonalize(&p).unwrap().thermal_concurrence(t).unwrap();
            let c = diagonalize(&p.scaled(s)).unwrap().thermal_concurrence(s * t).unwrap();
            prop_assert!((a.c_plus - c.c_plus).abs() < 1e-10);
            prop_assert!((a.c_minus - c.c_minus).abs() < 1e-10);
        }

        #[test]
        fn pair_density_is_physical(
            n in 2usize..=20, t in 0.0..2.0f64,
            b in 0.0..2.0f64, vx in 0.1..2.0f64, r in -1.0..1.0f64, vz in -1.0..1.0f64,
        ) {
            let p = params(n, b, vx, r * vx, vz);
            let c = diagonalize(&p).unwrap().thermal_observables(t).unwrap();
            let pd = crate::concurrence::PairDensity::new(c).unwrap();
            prop_assert!((pd.trace() - 1.0).abs() < 1e-10);
            prop_assert!(pd.eigenvalues().iter().all(|&e| e >= -1e-10));
            pd.check_symmetric_bounds(n).unwrap();
            let rep = crate::concurrence::concurrence(&pd);
            prop_assert!(rep.c <= 2.0 / n as f64 + 1e-12);
        }
    }
}
