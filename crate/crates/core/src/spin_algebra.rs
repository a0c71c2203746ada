//! Total-spin sectors of `n` spins-1/2 and the Hamiltonian restricted to
//! them.
//!
//! H commutes with S² and with the S_z-parity `exp[iπ(S_z + n/2)]`, so each
//! sector S (multiplicity Y(S)) carries a real symmetric block in the Dicke
//! basis |S,M⟩ that only couples M to M ± 2. Restricting to M of fixed
//! parity turns it into two tridiagonal blocks.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::tridiag::SymTridiagonal;

/// Twice a (possibly half-integer) spin or magnetic quantum number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TwoS(pub u32);

impl TwoS {
    pub fn spin(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// S(S+1).
    pub fn casimir(self) -> f64 {
        let s = self.spin();
        s * (s + 1.0)
    }

    /// Maximal spin n/2.
    pub fn max_for(n: usize) -> Self {
        TwoS(n as u32)
    }

    pub fn is_valid_for(self, n: usize) -> bool {
        (self.0 as usize) <= n && (n - self.0 as usize).is_multiple_of(2)
    }
}

/// All sectors of `n` spins, from S = n/2 downwards.
pub fn sectors(n: usize) -> Vec<TwoS> {
    (0..=n / 2).map(|k| TwoS((n - 2 * k) as u32)).collect()
}

fn check_sector(n: usize, s: TwoS) -> Result<()> {
    if n == 0 || !s.is_valid_for(n) {
        return Err(Error::Domain(format!("no sector 2S = {} for n = {n} spins", s.0)));
    }
    Ok(())
}

/// Y(S) = C(n, n/2 - S) - C(n, n/2 - S - 1), exactly.
pub fn multiplicity(n: usize, s: TwoS) -> Result<BigUint> {
    check_sector(n, s)?;
    let k = (n - s.0 as usize) / 2;
    let mut binom = BigUint::one();
    let mut prev = BigUint::zero();
    for i in 0..k {
        prev = binom.clone();
        binom = binom * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    Ok(binom - prev)
}

/// Y(S) for every sector, in the order of [`sectors`].
pub fn multiplicities(n: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n / 2 + 1);
    let mut binom = BigUint::one();
    let mut prev = BigUint::zero();
    for k in 0..=n / 2 {
        out.push(&binom - &prev);
        prev = binom.clone();
        binom = binom * BigUint::from(n - k) / BigUint::from(k + 1);
    }
    out
}

/// Natural log of a positive big integer, accurate to f64 precision.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map_or(f64::NAN, f64::ln);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_multiplicity(n: usize, s: TwoS) -> Result<f64> {
    multiplicity(n, s).map(|y| ln_biguint(&y))
}

/// ⟨S, M+2| S_+² |S, M⟩ with spin and M doubled.
pub fn ladder2(s: TwoS, m2: i64) -> f64 {
    let s2 = s.0 as i64;
    let a = (s2 - m2) as f64 / 2.0;
    let b = (s2 + m2) as f64 / 2.0;
    ((a * (b + 1.0) * (a - 1.0) * (b + 2.0)).max(0.0)).sqrt()
}

/// The Hamiltonian in sector S, banded storage in the basis M = -S, …, S.
#[derive(Debug, Clone)]
pub struct SpinBlock {
    pub n: usize,
    pub spin2: TwoS,
    /// `diag[i]` is ⟨M|H|M⟩ with M = -S + i.
    pub diag: Vec<f64>,
    /// `off2[i]` is ⟨M+2|H|M⟩ with M = -S + i.
    pub off2: Vec<f64>,
    pub multiplicity: BigUint,
}

impl SpinBlock {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Doubled magnetic quantum number of basis index `i`.
    pub fn m2(&self, i: usize) -> i64 {
        2 * i as i64 - self.spin2.0 as i64
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for (i, &x) in self.off2.iter().enumerate() {
            h[(i + 2, i)] = x;
            h[(i, i + 2)] = x;
        }
        debug_assert_eq!(h.nrows(), d);
        h
    }
}

pub fn build_block(params: &ModelParams, s: TwoS) -> Result<SpinBlock> {
    let n = params.n;
    check_sector(n, s)?;
    let nf = n as f64;
    let (b, vx, vy, vz) = (params.b, params.vx, params.vy, params.vz);
    let casimir = s.casimir();
    let d = s.dim();
    let m2 = |i: usize| 2 * i as i64 - s.0 as i64;
    let diag = (0..d)
        .map(|i| {
            let m = m2(i) as f64 / 2.0;
            b * m - ((vx + vy) / 2.0 * (casimir - m * m) + vz * m * m - nf / 4.0 * (vx + vy + vz)) / nf
        })
        .collect();
    let coef = -(vx - vy) / (4.0 * nf);
    let off2 = (0..d.saturating_sub(2)).map(|i| coef * ladder2(s, m2(i))).collect();
    Ok(SpinBlock { n, spin2: s, diag, off2, multiplicity: multiplicity(n, s)? })
}

/// S_z-parity `(-1)^{M + n/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize, m2: i64) -> Self {
        // M + n/2 = (m2 + n) / 2
        if ((m2 + n as i64) / 2).rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// One parity half of a sector, reindexed with stride 2 in M.
#[derive(Debug, Clone)]
pub struct ParityBlock {
    pub parity: Parity,
    /// Doubled M of each basis vector, ascending.
    pub m2: Vec<i64>,
    /// ⟨M_{i+1}|S_+²|M_i⟩ between consecutive basis vectors.
    pub ladder: Vec<f64>,
    pub matrix: SymTridiagonal,
}

impl ParityBlock {
    pub fn dim(&self) -> usize {
        self.m2.len()
    }
}

#[derive(Debug, Clone)]
pub struct ParityBlocks {
    pub spin2: TwoS,
    pub even: ParityBlock,
    pub odd: ParityBlock,
}

impl ParityBlocks {
    pub fn blocks(&self) -> [&ParityBlock; 2] {
        [&self.even, &self.odd]
    }
}

pub fn parity_split(block: &SpinBlock) -> ParityBlocks {
    let n = block.n;
    let s = block.spin2;
    let half = |start: usize| {
        let idx: Vec<usize> = (start..block.dim()).step_by(2).collect();
        let m2: Vec<i64> = idx.iter().map(|&i| block.m2(i)).collect();
        let parity = Parity::of(n, block.m2(start.min(block.dim().saturating_sub(1))));
        let ladder: Vec<f64> = idx.iter().take(idx.len().saturating_sub(1)).map(|&i| ladder2(s, block.m2(i))).collect();
        let off = idx.iter().take(idx.len().saturating_sub(1)).map(|&i| block.off2[i]).collect();
        let diag = idx.iter().map(|&i| block.diag[i]).collect();
        ParityBlock { parity, m2, ladder, matrix: SymTridiagonal::new(diag, off) }
    };
    let first = half(0);
    let mut second = half(1);
    if second.m2.is_empty() {
        second.parity = first.parity.flip();
    }
    let (even, odd) = if first.parity == Parity::Even { (first, second) } else { (second, first) };
    ParityBlocks { spin2: s, even, odd }
}
