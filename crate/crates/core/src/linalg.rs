//! Small dense helpers and a banded LU solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Ratio of extreme singular values; infinite for singular matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Symmetric square root and inverse square root of an SPD matrix.
pub fn spd_sqrt(s: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(symmetrize(s));
    let min_eig = eig.eigenvalues.min();
    if min_eig <= 0.0 {
        return Err(Error::SymmetrizerNotSpd { min_eig });
    }
    let q = &eig.eigenvectors;
    let root = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|v| v.sqrt()));
    let half = q * DMatrix::from_diagonal(&root) * q.transpose();
    let inv_half = q * DMatrix::from_diagonal(&root.map(|v| 1.0 / v)) * q.transpose();
    Ok((symmetrize(&half), symmetrize(&inv_half)))
}

/// Columns of `m` picked by index.
pub fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Square banded matrix with `lower` sub- and `upper` super-diagonals,
/// factorised by Gaussian elimination with partial pivoting.
///
/// Row `i` stores columns `i - lower ..= i + lower + upper`; the extra
/// `lower` slots hold fill-in created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        BandedMatrix {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.lower as isize;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` at `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.lower >= i && j <= i + self.upper,
            "entry ({i},{j}) outside band"
        );
        let k = self.slot(i, j).expect("in band");
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b`, consuming the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut x = b.to_vec();
        let reach = self.lower + self.upper;
        for k in 0..n {
            let last_row = (k + self.lower).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem { pivot: k });
            }
            let last_col = (k + reach).min(n - 1);
            if piv != k {
                for j in k..=last_col {
                    let a = self.slot(k, j).expect("pivot row window");
                    let b = self.slot(piv, j).expect("candidate row window");
                    self.data.swap(a, b);
                }
                x.swap(k, piv);
            }
            let pivot = self.get(k, k);
            let base_k = self.slot(k, k).expect("diag");
            for i in k + 1..=last_row {
                let sik = self.slot(i, k).expect("sub-diagonal");
                let f = self.data[sik] / pivot;
                if f == 0.0 {
                    continue;
                }
                self.data[sik] = 0.0;
                let base_i = self.slot(i, k).expect("row window");
                let len = last_col - k;
                for d in 1..=len {
                    self.data[base_i + d] -= f * self.data[base_k + d];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = x[k];
            for (j, xj) in x.iter().enumerate().take(last_col + 1).skip(k + 1) {
                acc -= self.get(k, j) * xj;
            }
            x[k] = acc / self.get(k, k);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn banded_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, kl, ku) = (40, 5, 3);
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal so that pivoting is exercised
                let v: f64 = rng.random_range(-1.0..1.0) + if i == j { 0.05 } else { 0.0 };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = band.clone().solve(&b).unwrap();
        let xd = dense.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-9 * xd.amax().max(1.0));
        }
        let r = band.mul_vec(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let mut band = BandedMatrix::zeros(3, 1, 1);
        band.add(0, 0, 1.0);
        band.add(1, 0, 1.0);
        assert!(matches!(
            band.solve(&[1.0, 1.0, 1.0]),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn spd_sqrt_roundtrip() {
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.5, 1.0]);
        let (h, hi) = spd_sqrt(&s).unwrap();
        assert!((&h * &h - &s).amax() < 1e-14);
        assert!((&h * &hi - DMatrix::identity(3, 3)).amax() < 1e-14);
    }
}
