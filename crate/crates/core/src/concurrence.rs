//! Two-spin reduced state of a permutation-symmetric, parity-definite state
//! and its concurrence.
//!
//! Such a state has the X form
//!
//! ```text
//!        ↑↑    ↑↓    ↓↑    ↓↓
//! ρ = [ p_+    0     0    α_+ ]
//!     [  0    p_0   α_-    0  ]
//!     [  0    α_-   p_0    0  ]
//!     [ α_+    0     0    p_- ]
//! ```
//!
//! with `α_± = α_x ∓ α_y`, `p_± = 1/4 + α_z ± s_z`, `p_0 = 1/4 - α_z`, where
//! `α_μ = ⟨s_μ^i s_μ^j⟩` and `s_z = ⟨s_z^i⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STATE_TOL: f64 = 1e-10;

/// Pair correlators `α_μ = ⟨s_μ^i s_μ^j⟩` (i ≠ j) and `s_z = ⟨s_z^i⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub alpha_z: f64,
    pub sz: f64,
}

impl Correlators {
    /// From collective moments: `⟨S_μ²⟩ = n/4 + n(n-1) α_μ`, `⟨S_z⟩ = n s_z`.
    pub fn from_moments(n: usize, sx2: f64, sy2: f64, sz2: f64, sz1: f64) -> Self {
        let nf = n as f64;
        let pairs = nf * (nf - 1.0);
        Self {
            alpha_x: (sx2 - nf / 4.0) / pairs,
            alpha_y: (sy2 - nf / 4.0) / pairs,
            alpha_z: (sz2 - nf / 4.0) / pairs,
            sz: sz1 / nf,
        }
    }

    pub fn alphas(&self) -> [f64; 3] {
        [self.alpha_x, self.alpha_y, self.alpha_z]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [self.alpha_x - other.alpha_x, self.alpha_y - other.alpha_y, self.alpha_z - other.alpha_z, self.sz - other.sz]
            .iter()
            .fold(0.0, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDensity {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p0: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub correlators: Correlators,
}

impl PairDensity {
    /// Builds the reduced state. Rejects only `p_+ p_- < 0` beyond rounding,
    /// where `C_-` is undefined; approximate methods may leave other
    /// eigenvalues marginally negative, see [`Self::eigenvalues`].
    pub fn new(c: Correlators) -> Result<Self> {
        let pd = Self::unchecked(c);
        let prod = pd.p_plus * pd.p_minus;
        if prod < -STATE_TOL {
            return Err(Error::InvalidState(format!("p+ p- = {prod:e} < 0 (correlators {c:?})")));
        }
        Ok(pd)
    }

    pub fn unchecked(c: Correlators) -> Self {
        Self {
            p_plus: 0.25 + c.alpha_z + c.sz,
            p_minus: 0.25 + c.alpha_z - c.sz,
            p0: 0.25 - c.alpha_z,
            alpha_plus: c.alpha_x - c.alpha_y,
            alpha_minus: c.alpha_x + c.alpha_y,
            correlators: c,
        }
    }

    /// Inverse of [`PairDensity::unchecked`] from the X-form entries.
    pub fn from_entries(p_plus: f64, p_minus: f64, p0: f64, alpha_plus: f64, alpha_minus: f64) -> Result<Self> {
        let c = Correlators {
            alpha_x: 0.5 * (alpha_plus + alpha_minus),
            alpha_y: 0.5 * (alpha_minus - alpha_plus),
            alpha_z: 0.25 - p0,
            sz: 0.5 * (p_plus - p_minus),
        };
        let pd = Self::new(c)?;
        let trace = p_plus + p_minus + 2.0 * p0;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} != 1")));
        }
        Ok(pd)
    }

    pub fn trace(&self) -> f64 {
        self.p_plus + self.p_minus + 2.0 * self.p0
    }

    /// The 4×4 matrix in the basis ↑↑, ↑↓, ↓↑, ↓↓.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let (pp, pm, p0, ap, am) = (self.p_plus, self.p_minus, self.p0, self.alpha_plus, self.alpha_minus);
        [[pp, 0.0, 0.0, ap], [0.0, p0, am, 0.0], [0.0, am, p0, 0.0], [ap, 0.0, 0.0, pm]]
    }

    /// Eigenvalues of the X matrix in closed form.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mean = 0.5 * (self.p_plus + self.p_minus);
        let r = (0.5 * (self.p_plus - self.p_minus)).hypot(self.alpha_plus);
        [mean - r, mean + r, self.p0 - self.alpha_minus.abs(), self.p0 + self.alpha_minus.abs()]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Checks the correlator range `-1/(4(n-1)) ≤ α_μ ≤ 1/4` valid for
    /// permutation-symmetric states of `n` spins.
    pub fn check_symmetric_bounds(&self, n: usize) -> Result<()> {
        let lo = -1.0 / (4.0 * (n as f64 - 1.0)) - 1e-12;
        for a in self.correlators.alphas() {
            if !(lo..=0.25 + 1e-12).contains(&a) {
                return Err(Error::InvalidState(format!("correlator {a} outside [{lo}, 1/4]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcurrenceType {
    Parallel,
    Antiparallel,
    Separable,
}

impl ConcurrenceType {
    pub fn as_str(self) -> &'static str {
        match self {
            ConcurrenceType::Parallel => "parallel",
            ConcurrenceType::Antiparallel => "antiparallel",
            ConcurrenceType::Separable => "separable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceReport {
    pub c_plus: f64,
    pub c_minus: f64,
    pub c: f64,
    pub kind: ConcurrenceType,
    pub formation: Option<f64>,
}

impl ConcurrenceReport {
    pub fn from_signed(c_plus: f64, c_minus: f64) -> Self {
        let c = c_plus.max(c_minus).max(0.0);
        let kind = if c <= 0.0 {
            ConcurrenceType::Separable
        } else if c_plus >= c_minus {
            ConcurrenceType::Parallel
        } else {
            ConcurrenceType::Antiparallel
        };
        let formation = formation_entanglement(c.min(1.0)).ok();
        Self { c_plus, c_minus, c, kind, formation }
    }
}

/// `C_+ = 2(|α_+| - p_0)`, `C_- = 2(|α_-| - √(p_+ p_-))`; under `v_x ≥ |v_y|`
/// the coherences are non-negative and these reduce to
/// `2(α_x - α_y + α_z - 1/4)` and `2(α_x + α_y - √((1/4+α_z)² - s_z²))`.
pub fn concurrence(pd: &PairDensity) -> ConcurrenceReport {
    let c_plus = 2.0 * (pd.alpha_plus.abs() - pd.p0);
    let c_minus = 2.0 * (pd.alpha_minus.abs() - (pd.p_plus * pd.p_minus).max(0.0).sqrt());
    ConcurrenceReport::from_signed(c_plus, c_minus)
}

/// Concurrence straight from correlators, failing on an invalid state.
pub fn concurrence_of(c: Correlators) -> Result<ConcurrenceReport> {
    PairDensity::new(c).map(|pd| concurrence(&pd))
}

/// `E = -Σ q log₂ q` with `q_± = (1 ± √(1 - C²))/2`.
pub fn formation_entanglement(c: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&c) {
        return Err(Error::Domain(format!("concurrence {c} outside [0, 1]")));
    }
    let c = c.clamp(0.0, 1.0);
    let root = (1.0 - c * c).sqrt();
    let h = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    Ok(h(0.5 * (1.0 + root)) + h(0.5 * (1.0 - root)))
}
