//! Dense brute-force reference on the full 2^n space.
//!
//! Basis index bit `i` set means spin `i` is down. Everything here is real:
//! H is real symmetric in the S_z product basis.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};

use crate::concurrence::{concurrence, ConcurrenceReport, PairDensity};
use crate::error::{Error, Result};
use crate::exact::GROUND_TOL;
use crate::params::ModelParams;
use crate::util::log_sum_exp;

pub const MAX_N: usize = 12;

const ENTRY_TOL: f64 = 1e-10;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_N {
        return Err(Error::SizeLimit { n, max: MAX_N });
    }
    Ok(())
}

fn site_m(state: usize, i: usize) -> f64 {
    if state >> i & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// H from the pairwise form `b Σ s_z^i - (1/n) Σ_{i≠j} v_μ s_μ^i s_μ^j`.
pub fn full_hamiltonian(params: &ModelParams) -> Result<DMatrix<f64>> {
    let n = params.n;
    check_size(n)?;
    let dim = 1usize << n;
    let nf = n as f64;
    let mut h = DMatrix::zeros(dim, dim);
    for state in 0..dim {
        let mut diag = 0.0;
        for i in 0..n {
            let mi = site_m(state, i);
            diag += params.b * mi;
            for j in i + 1..n {
                let mj = site_m(state, j);
                // ordered pairs count each unordered pair twice
                diag -= 2.0 / nf * params.vz * mi * mj;
                let same = (mi > 0.0) == (mj > 0.0);
                // s_x s_x flips both with 1/4; s_y s_y gives -1/4 on equal
                // spins and +1/4 on opposite ones
                let amp = if same { params.vx - params.vy } else { params.vx + params.vy };
                let flipped = state ^ (1 << i) ^ (1 << j);
                h[(flipped, state)] -= 2.0 / nf * amp / 4.0;
            }
        }
        h[(state, state)] = diag;
    }
    Ok(h)
}

/// H from the collective form `b S_z - (1/n) Σ_μ v_μ (S_μ² - n/4)`, with
/// `S_y² = -A²` for the real antisymmetric `A = (S_+ - S_-)/2`.
pub fn collective_hamiltonian(params: &ModelParams) -> Result<DMatrix<f64>> {
    let n = params.n;
    check_size(n)?;
    let dim = 1usize << n;
    let nf = n as f64;
    let mut sz = DMatrix::zeros(dim, dim);
    let mut sp = DMatrix::zeros(dim, dim);
    for state in 0..dim {
        for i in 0..n {
            sz[(state, state)] += site_m(state, i);
            if state >> i & 1 == 1 {
                sp[(state ^ (1 << i), state)] += 1.0;
            }
        }
    }
    let sm = sp.transpose();
    let sx = (&sp + &sm) * 0.5;
    let a = (&sp - &sm) * 0.5;
    let id = DMatrix::<f64>::identity(dim, dim);
    let quarter = &id * (nf / 4.0);
    let sx2 = &sx * &sx - &quarter;
    let sy2 = -(&a * &a) - &quarter;
    let sz2 = &sz * &sz - &quarter;
    Ok(&sz * params.b - (sx2 * params.vx + sy2 * params.vy + sz2 * params.vz) / nf)
}

/// Eigendecomposition of the dense Hamiltonian, reusable at many T.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub params: ModelParams,
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl DenseSpectrum {
    /// Diagonalizes the two halves of fixed down-spin parity separately;
    /// every term of H flips zero or two spins. Cross-parity entries are
    /// checked to vanish rather than assumed.
    pub fn new(params: &ModelParams) -> Result<Self> {
        let h = full_hamiltonian(params)?;
        let dim = h.nrows();
        let halves: [Vec<usize>; 2] = [0, 1].map(|p| (0..dim).filter(|s| s.count_ones() as usize % 2 == p).collect());
        for &r in &halves[0] {
            for &c in &halves[1] {
                if h[(r, c)] != 0.0 {
                    return Err(Error::SymmetryViolation(format!("H couples parities at ({r}, {c})")));
                }
            }
        }
        let mut values = DVector::zeros(dim);
        let mut vectors = DMatrix::zeros(dim, dim);
        let mut col = 0;
        for idx in &halves {
            if idx.is_empty() {
                continue;
            }
            let eig = SymmetricEigen::new(h.select_rows(idx).select_columns(idx));
            for k in 0..idx.len() {
                values[col] = eig.eigenvalues[k];
                for (row, &s) in idx.iter().enumerate() {
                    vectors[(s, col)] = eig.eigenvectors[(row, k)];
                }
                col += 1;
            }
        }
        Ok(Self { params: *params, values, vectors })
    }

    fn ground(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn log_weights(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("temperature must be finite and >= 0, got {t}")));
        }
        let e0 = self.ground();
        let tol = GROUND_TOL * self.params.energy_scale();
        Ok(self
            .values
            .iter()
            .map(|&e| {
                if t > 0.0 {
                    -(e - e0) / t
                } else if e - e0 <= tol {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect())
    }

    /// ln Tr e^{-βH}; at T = 0 the log of the ground degeneracy.
    pub fn log_partition(&self, t: f64) -> Result<f64> {
        let lse = log_sum_exp(&self.log_weights(t)?);
        Ok(if t > 0.0 { lse - self.ground() / t } else { lse })
    }

    pub fn thermal_state(&self, t: f64) -> Result<DenseThermalState> {
        let lw = self.log_weights(t)?;
        let lse = log_sum_exp(&lw);
        let mut weights = Vec::new();
        let mut cols = Vec::new();
        for (k, l) in lw.iter().enumerate() {
            let w = (l - lse).exp();
            if w > 0.0 {
                weights.push(w);
                cols.push(self.vectors.column(k).into_owned());
            }
        }
        Ok(DenseThermalState { n: self.params.n, weights, states: cols })
    }
}

/// A density matrix stored as an ensemble of orthonormal pure states.
#[derive(Debug, Clone)]
pub struct DenseThermalState {
    pub n: usize,
    pub weights: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl DenseThermalState {
    pub fn from_pure(n: usize, psi: DVector<f64>) -> Result<Self> {
        check_size(n)?;
        let norm = psi.norm();
        if psi.len() != 1 << n || !(norm > 0.0) {
            return Err(Error::Domain("state vector has wrong length or zero norm".into()));
        }
        Ok(Self { n, weights: vec![1.0], states: vec![psi / norm] })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1 << n;
        let states = (0..dim).map(|k| DVector::from_fn(dim, |i, _| if i == k { 1.0 } else { 0.0 })).collect();
        Ok(Self { n, weights: vec![1.0 / dim as f64; dim], states })
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let dim = 1 << self.n;
        let mut rho = DMatrix::zeros(dim, dim);
        for (w, v) in self.weights.iter().zip(&self.states) {
            rho.ger(*w, v, v, 1.0);
        }
        rho
    }

    /// The 4×4 reduced matrix of sites `i`, `j` in the basis ↑↑, ↑↓, ↓↑, ↓↓.
    pub fn pair_matrix(&self, i: usize, j: usize) -> Result<Matrix4<f64>> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::Domain(format!("invalid site pair ({i}, {j}) for n = {}", self.n)));
        }
        let dim = 1usize << self.n;
        let mut r = Matrix4::zeros();
        let mask = (1 << i) | (1 << j);
        let index = |rest: usize, a: usize, b: usize| rest | (a << i) | (b << j);
        for (w, v) in self.weights.iter().zip(&self.states) {
            for rest in (0..dim).filter(|s| s & mask == 0) {
                let amp = [index(rest, 0, 0), index(rest, 0, 1), index(rest, 1, 0), index(rest, 1, 1)].map(|k| v[k]);
                for a in 0..4 {
                    for b in 0..4 {
                        r[(a, b)] += w * amp[a] * amp[b];
                    }
                }
            }
        }
        Ok(r)
    }
}

/// Partial trace to sites `i`, `j`, checked to have the X form of a
/// permutation-symmetric parity-definite state.
pub fn reduced_pair(state: &DenseThermalState, i: usize, j: usize) -> Result<PairDensity> {
    let r = state.pair_matrix(i, j)?;
    for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        if r[(a, b)].abs() > ENTRY_TOL {
            return Err(Error::SymmetryViolation(format!("parity-forbidden entry ρ[{a},{b}] = {:e}", r[(a, b)])));
        }
    }
    if (r[(1, 1)] - r[(2, 2)]).abs() > ENTRY_TOL {
        return Err(Error::SymmetryViolation("ρ[↑↓] != ρ[↓↑]".into()));
    }
    PairDensity::from_entries(r[(0, 0)], r[(3, 3)], 0.5 * (r[(1, 1)] + r[(2, 2)]), r[(0, 3)], r[(1, 2)])
}

/// Wootters concurrence of a real two-qubit density matrix: with
/// `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`, `C = max(0, l₁ - l₂ - l₃ - l₄)` over the
/// decreasing square roots of the eigenvalues of `√ρ ρ̃ √ρ`.
pub fn wootters_concurrence(rho: &Matrix4<f64>) -> f64 {
    let yy = Matrix4::new(
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0,
    );
    let tilde = yy * rho * yy;
    let eig = SymmetricEigen::new(*rho);
    let sqrt_vals = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    let sqrt_rho = eig.eigenvectors * Matrix4::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let m = sqrt_rho * tilde * sqrt_rho;
    let m = (m + m.transpose()) * 0.5;
    let mut l: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Concurrence of sites `i`, `j` in the thermal state, by the X-form closed
/// expressions and by Wootters' formula, which must agree.
pub fn oracle_concurrence(params: &ModelParams, t: f64, i: usize, j: usize) -> Result<ConcurrenceReport> {
    params.require_pairs()?;
    let state = DenseSpectrum::new(params)?.thermal_state(t)?;
    state_concurrence(&state, i, j)
}

pub fn state_concurrence(state: &DenseThermalState, i: usize, j: usize) -> Result<ConcurrenceReport> {
    let pd = reduced_pair(state, i, j)?;
    let report = concurrence(&pd);
    let w = wootters_concurrence(&state.pair_matrix(i, j)?);
    if (w - report.c).abs() > 1e-8 {
        return Err(Error::SymmetryViolation(format!("Wootters C = {w} but X-form C = {}", report.c)));
    }
    Ok(report)
}
