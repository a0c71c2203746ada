//! Symmetric tridiagonal eigensolver.
//!
//! Eigenvalues come from the implicit QL algorithm with Wilkinson shifts.
//! Eigenvectors come either from accumulating the QL rotations (O(d³), used
//! for small blocks) or from inverse iteration on the computed eigenvalues
//! (O(d²) overall), with Gram-Schmidt inside clusters of close eigenvalues.
//! The matrix is first split at negligible off-diagonal entries so exactly
//! degenerate eigenvalues of decoupled pieces never share an iteration.

/// Dimension up to which eigenvectors are obtained by accumulating QL
/// rotations.
pub const DENSE_VECTOR_LIMIT: usize = 48;

/// A real symmetric tridiagonal matrix: `diag[i]` on the diagonal and
/// `off[i]` coupling rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Eigenpairs in ascending order; `vectors[j]` is the unit eigenvector of
/// `values[j]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoConvergence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorMethod {
    /// QL rotations for small blocks, inverse iteration above
    /// [`DENSE_VECTOR_LIMIT`].
    Auto,
    QlRotations,
    InverseIteration,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            diag.is_empty() && off.is_empty() || off.len() + 1 == diag.len(),
            "off-diagonal length must be dim - 1"
        );
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Infinity norm.
    pub fn norm(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < d {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < d {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, NoConvergence> {
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        ql_implicit(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    pub fn eigen(&self) -> Result<EigenDecomposition, NoConvergence> {
        self.eigen_with(VectorMethod::Auto)
    }

    pub fn eigen_with(&self, method: VectorMethod) -> Result<EigenDecomposition, NoConvergence> {
        let dim = self.dim();
        let mut values = Vec::with_capacity(dim);
        let mut vectors = Vec::with_capacity(dim);
        for (start, end) in self.unreduced_ranges() {
            let sub = SymTridiagonal::new(self.diag[start..end].to_vec(), self.off[start..end - 1].to_vec());
            let use_ql = match method {
                VectorMethod::Auto => sub.dim() <= DENSE_VECTOR_LIMIT,
                VectorMethod::QlRotations => true,
                VectorMethod::InverseIteration => false,
            };
            let part = if use_ql { sub.eigen_ql()? } else { sub.eigen_inverse_iteration()? };
            for (v, vec) in part.values.into_iter().zip(part.vectors) {
                let mut full = vec![0.0; dim];
                full[start..end].copy_from_slice(&vec);
                values.push(v);
                vectors.push(full);
            }
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        Ok(EigenDecomposition {
            values: order.iter().map(|&i| values[i]).collect(),
            vectors: order.iter().map(|&i| std::mem::take(&mut vectors[i])).collect(),
        })
    }

    /// Index ranges of the unreduced diagonal pieces.
    fn unreduced_ranges(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        let mut ranges = Vec::new();
        let mut start = 0;
        for i in 0..d.saturating_sub(1) {
            let scale = self.diag[i].abs() + self.diag[i + 1].abs();
            if self.off[i].abs() <= f64::EPSILON * scale || self.off[i] == 0.0 {
                ranges.push((start, i + 1));
                start = i + 1;
            }
        }
        if d > 0 {
            ranges.push((start, d));
        }
        ranges
    }

    fn eigen_ql(&self) -> Result<EigenDecomposition, NoConvergence> {
        let d = self.dim();
        let mut vals = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        let mut z = vec![0.0; d * d];
        for i in 0..d {
            z[i * d + i] = 1.0;
        }
        ql_implicit(&mut vals, &mut e, Some(&mut z))?;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        Ok(EigenDecomposition {
            values: order.iter().map(|&j| vals[j]).collect(),
            vectors: order.iter().map(|&j| (0..d).map(|k| z[k * d + j]).collect()).collect(),
        })
    }

    fn eigen_inverse_iteration(&self) -> Result<EigenDecomposition, NoConvergence> {
        let values = self.eigenvalues()?;
        let d = self.dim();
        let norm = self.norm().max(f64::MIN_POSITIVE);
        let cluster_gap = 1e-7 * norm;
        let min_sep = 8.0 * f64::EPSILON * norm;
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut cluster_start = 0;
        let mut prev_shift = f64::NEG_INFINITY;
        for j in 0..d {
            if j > 0 && values[j] - values[j - 1] > cluster_gap {
                cluster_start = j;
            }
            let shift = if j > cluster_start { values[j].max(prev_shift + min_sep) } else { values[j] };
            prev_shift = shift;
            let lu = TridiagLu::factor(self, shift, norm);
            let mut x: Vec<f64> = (0..d).map(|i| start_component(i, j)).collect();
            normalize(&mut x);
            for _ in 0..3 {
                lu.solve(&mut x);
                for prev in &vectors[cluster_start..j] {
                    let p = dot(&x, prev);
                    for (xi, pi) in x.iter_mut().zip(prev) {
                        *xi -= p * pi;
                    }
                }
                if !normalize(&mut x) {
                    return Err(NoConvergence);
                }
            }
            vectors.push(x);
        }
        Ok(EigenDecomposition { values, vectors })
    }
}

fn start_component(i: usize, j: usize) -> f64 {
    // deterministic, non-degenerate start vector
    let h = (i as u64).wrapping_mul(2654435761).wrapping_add((j as u64).wrapping_mul(40503)) % 1009;
    1.0 + h as f64 / 1009.0
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> bool {
    let n = dot(x, x).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return false;
    }
    for v in x.iter_mut() {
        *v /= n;
    }
    true
}

/// LU factorization with partial pivoting of `T - σ I`; `U` has two
/// superdiagonals.
struct TridiagLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, shift: f64, norm: f64) -> Self {
        let d = t.dim();
        let tiny = f64::EPSILON * norm;
        let mut u0 = vec![0.0; d];
        let mut u1 = vec![0.0; d];
        let mut u2 = vec![0.0; d];
        let mut mult = vec![0.0; d];
        let mut swapped = vec![false; d];
        let mut cur_d = t.diag[0] - shift;
        let mut cur_u1 = if d > 1 { t.off[0] } else { 0.0 };
        let mut cur_u2 = 0.0;
        for i in 0..d.saturating_sub(1) {
            let sub = t.off[i];
            let next_d = t.diag[i + 1] - shift;
            let next_u1 = if i + 2 < d { t.off[i + 1] } else { 0.0 };
            if sub.abs() > cur_d.abs() {
                swapped[i] = true;
                let m = cur_d / sub;
                mult[i] = m;
                u0[i] = sub;
                u1[i] = next_d;
                u2[i] = next_u1;
                let nd = cur_u1 - m * next_d;
                let nu1 = cur_u2 - m * next_u1;
                cur_d = nd;
                cur_u1 = nu1;
            } else {
                if cur_d == 0.0 {
                    cur_d = tiny;
                }
                let m = sub / cur_d;
                mult[i] = m;
                u0[i] = cur_d;
                u1[i] = cur_u1;
                u2[i] = cur_u2;
                cur_d = next_d - m * cur_u1;
                cur_u1 = next_u1 - m * cur_u2;
            }
            cur_u2 = 0.0;
        }
        u0[d - 1] = if cur_d == 0.0 { tiny } else { cur_d };
        for v in u0.iter_mut() {
            if v.abs() < tiny {
                *v = tiny.copysign(*v);
            }
        }
        Self { u0, u1, u2, mult, swapped }
    }

    fn solve(&self, x: &mut [f64]) {
        let d = x.len();
        for i in 0..d.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..d).rev() {
            let mut s = x[i];
            if i + 1 < d {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < d {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
            if !x[i].is_finite() {
                x[i] = f64::MAX.sqrt().copysign(x[i]);
            }
        }
    }
}

/// Implicit QL with Wilkinson shift. `e[i]` couples `i` and `i + 1`, with
/// `e[d - 1]` as workspace. Rotations are applied to the columns of the
/// row-major `d × d` matrix `z` when given.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<(), NoConvergence> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zk = &mut z[k * n..(k + 1) * n];
                        let f = zk[i + 1];
                        zk[i + 1] = s * zk[i] + c * f;
                        zk[i] = c * zk[i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tridiag(d: usize, seed: u64) -> SymTridiagonal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymTridiagonal::new(
            (0..d).map(|_| rng.random_range(-5.0..5.0)).collect(),
            (0..d - 1).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
    }

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let d = t.dim();
        DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                t.diag[i]
            } else if i + 1 == j {
                t.off[i]
            } else if j + 1 == i {
                t.off[j]
            } else {
                0.0
            }
        })
    }

    fn check_decomposition(t: &SymTridiagonal, eig: &EigenDecomposition, tol: f64) {
        let d = t.dim();
        let norm = t.norm();
        for (j, (val, vec)) in eig.values.iter().zip(&eig.vectors).enumerate() {
            let tv = t.mul_vec(vec);
            let res: f64 = tv.iter().zip(vec).map(|(a, b)| (a - val * b).powi(2)).sum::<f64>().sqrt();
            assert!(res < tol * norm, "residual {res} for eigenpair {j}");
            for k in 0..j {
                let o = dot(vec, &eig.vectors[k]).abs();
                assert!(o < tol, "overlap {o} between {j} and {k} (d = {d})");
            }
        }
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        for (d, seed) in [(1, 1), (2, 2), (7, 3), (60, 4), (150, 5)] {
            if d == 1 {
                let t = SymTridiagonal::new(vec![2.5], vec![]);
                assert_eq!(t.eigenvalues().unwrap(), vec![2.5]);
                continue;
            }
            let t = random_tridiag(d, seed);
            let mut reference: Vec<f64> = dense(&t).symmetric_eigenvalues().iter().cloned().collect();
            reference.sort_by(f64::total_cmp);
            let ours = t.eigenvalues().unwrap();
            for (a, b) in ours.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn both_vector_routes_are_orthonormal_eigenbases() {
        for (d, seed) in [(5, 11), (40, 12), (120, 13)] {
            let t = random_tridiag(d, seed);
            let ql = t.eigen_with(VectorMethod::QlRotations).unwrap();
            let inv = t.eigen_with(VectorMethod::InverseIteration).unwrap();
            check_decomposition(&t, &ql, 1e-10);
            check_decomposition(&t, &inv, 1e-10);
            for (a, b) in ql.values.iter().zip(&inv.values) {
                assert!((a - b).abs() < 1e-12);
            }
            // same projector onto each eigenvector
            for (u, v) in ql.vectors.iter().zip(&inv.vectors) {
                assert!((dot(u, v).abs() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn near_degenerate_pairs_stay_orthogonal() {
        // Wilkinson W21+: pairs of eigenvalues agree to ~1e-14.
        let d = 21;
        let diag: Vec<f64> = (0..d).map(|i| (10i64 - i as i64).abs() as f64).collect();
        let t = SymTridiagonal::new(diag, vec![1.0; d - 1]);
        let inv = t.eigen_with(VectorMethod::InverseIteration).unwrap();
        check_decomposition(&t, &inv, 1e-9);
    }

    #[test]
    fn decoupled_blocks_with_equal_eigenvalues() {
        let t = SymTridiagonal::new(vec![1.0, 2.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 0.0, 0.5]);
        for method in [VectorMethod::QlRotations, VectorMethod::InverseIteration] {
            let eig = t.eigen_with(method).unwrap();
            check_decomposition(&t, &eig, 1e-12);
        }
    }
}
