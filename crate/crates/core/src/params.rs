use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters: spin count, transverse field and couplings, in units
/// with ħ = k_B = 1.
///
/// Constructors canonicalize `b < 0` to `b > 0` (the map S_z → -S_z leaves
/// every concurrence unchanged) and reject `v_x < |v_y|`: the closed forms
/// for the concurrence assume the attractive convention `v_x ≥ |v_y|`.
/// The only admissible `v_x = 0` point is the free model `v_x = v_y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub b: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl ModelParams {
    pub fn new(n: usize, b: f64, vx: f64, vy: f64, vz: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        for (name, v) in [("b", b), ("vx", vx), ("vy", vy), ("vz", vz)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        if vx < 0.0 || vy.abs() > vx {
            return Err(Error::InvalidParams(format!(
                "couplings must satisfy vx >= |vy| with vx > 0 (attractive convention); \
                 got vx = {vx}, vy = {vy}; relabel the axes so that x carries the largest coupling"
            )));
        }
        Ok(Self { n, b: b.abs(), vx, vy, vz })
    }

    /// Parameterize by the anisotropy `χ = (v_y - v_z)/(v_x - v_z)`.
    pub fn with_chi(n: usize, b: f64, vx: f64, chi: f64, vz: f64) -> Result<Self> {
        Self::new(n, b, vx, vz + chi * (vx - vz), vz)
    }

    pub fn with_field(&self, b: f64) -> Self {
        Self { b: b.abs(), ..*self }
    }

    /// `(b, v)` → `(s b, s v)`, `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, b: s * self.b, vx: s * self.vx, vy: s * self.vy, vz: s * self.vz }
    }

    pub fn couplings(&self) -> [f64; 3] {
        [self.vx, self.vy, self.vz]
    }

    /// Largest energy in the problem, used to turn relative tolerances into
    /// absolute ones.
    pub fn energy_scale(&self) -> f64 {
        let s = self.vx.abs().max(self.vy.abs()).max(self.vz.abs()).max(self.b.abs());
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn require_pairs(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Domain(format!("pair quantities need n >= 2, got n = {}", self.n)));
        }
        Ok(())
    }
}
