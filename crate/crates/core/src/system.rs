//! Moment theories, flux matrices, the symmetrizer and the characteristic
//! structure of the normal flux.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis_set, BasisSet, Domain};
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, min_sym_eigenvalue, spd_sqrt, symmetrize};
use crate::tensor::{Axis, Reduction};

/// Velocity-space resolution: tensor ranks `0..=max_rank`, with
/// `radial_counts[n]` radial indices for rank `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentTheory {
    pub name: String,
    pub max_rank: usize,
    pub radial_counts: Vec<usize>,
    pub reduction: Reduction,
}

impl MomentTheory {
    pub fn custom(max_rank: usize, radial_counts: Vec<usize>, reduction: Reduction) -> Result<Self> {
        let full: usize = radial_counts.iter().enumerate().map(|(n, m)| (2 * n + 1) * m).sum();
        let t = MomentTheory {
            name: format!("N{}M{}", max_rank, join(&radial_counts)),
            max_rank,
            radial_counts,
            reduction,
        };
        t.validate()?;
        let _ = full;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radial_counts.len() != self.max_rank + 1 {
            return Err(Error::InvalidTheory(format!(
                "expected {} radial counts for max rank {}, got {}",
                self.max_rank + 1,
                self.max_rank,
                self.radial_counts.len()
            )));
        }
        if let Some(n) = self.radial_counts.iter().position(|&m| m == 0) {
            return Err(Error::InvalidTheory(format!("rank {n} has no radial index")));
        }
        if self.max_rank > 9 {
            return Err(Error::InvalidTheory(format!(
                "max rank {} exceeds the supported limit of 9",
                self.max_rank
            )));
        }
        if let Some(&m) = self.radial_counts.iter().find(|&&m| m > 8) {
            return Err(Error::InvalidTheory(format!(
                "{m} radial indices exceed the supported limit of 8"
            )));
        }
        Ok(())
    }

    pub fn moment_count(&self) -> usize {
        self.radial_counts
            .iter()
            .enumerate()
            .map(|(n, m)| self.reduction.components(n) * m)
            .sum()
    }

    /// Moment count with the full three-dimensional reduction.
    pub fn full3d_count(&self) -> usize {
        self.radial_counts
            .iter()
            .enumerate()
            .map(|(n, m)| (2 * n + 1) * m)
            .sum()
    }

    pub fn with_reduction(&self, reduction: Reduction) -> Self {
        MomentTheory {
            reduction,
            ..self.clone()
        }
    }
}

impl fmt::Display for MomentTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.reduction)
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
}

/// Grad theory with every Hermite function of total degree `<= degree`.
pub fn grad_theory(degree: usize, reduction: Reduction) -> MomentTheory {
    assert!(degree >= 1, "Grad theories start at degree 1");
    let radial_counts: Vec<usize> = (0..=degree).map(|n| (degree - n) / 2 + 1).collect();
    let count = (degree + 1) * (degree + 2) * (degree + 3) / 6;
    MomentTheory {
        name: format!("G{count}"),
        max_rank: degree,
        radial_counts,
        reduction,
    }
}

/// Looks up a Grad theory by its moment-count name, e.g. `"G20"`.
pub fn grad_theory_by_name(name: &str, reduction: Reduction) -> Result<MomentTheory> {
    let count: usize = name
        .trim()
        .strip_prefix(['G', 'g'])
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::InvalidTheory(format!("`{name}` is not of the form G<count>")))?;
    (1..=9)
        .map(|d| grad_theory(d, reduction))
        .find(|t| t.full3d_count() == count)
        .ok_or_else(|| {
            Error::InvalidTheory(format!(
                "G{count} is not a Grad theory (valid: G4, G10, G20, G35, G56, G84, G120, G165, G220); \
                 use an explicit rank and radial-count list instead"
            ))
        })
}

/// Wall orientation: the axis of the outward normal and its sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    pub axis: Axis,
    pub positive: bool,
}

impl Orientation {
    pub fn plus(axis: Axis) -> Self {
        Orientation { axis, positive: true }
    }

    pub fn minus(axis: Axis) -> Self {
        Orientation { axis, positive: false }
    }

    pub fn sign(&self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.positive { '+' } else { '-' }, self.axis)
    }
}

/// Assembled linear moment system.
#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub basis: BasisSet,
    /// Flux matrices indexed by axis.
    pub flux: [DMatrix<f64>; 3],
    pub symmetrizer: DMatrix<f64>,
    pub bgk: DMatrix<f64>,
}

impl MomentSystem {
    pub fn assemble(theory: &MomentTheory, normal_axis: Axis) -> Result<Self> {
        let basis = build_basis_set(theory, normal_axis)?;
        let flux = Axis::ALL.map(|k| assemble_flux(&basis, k));
        let symmetrizer = assemble_symmetrizer(&basis)?;
        let bgk = bgk_projector(&basis);
        Ok(MomentSystem {
            basis,
            flux,
            symmetrizer,
            bgk,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn n_odd(&self) -> usize {
        self.basis.n_odd
    }

    pub fn n_even(&self) -> usize {
        self.basis.n_even
    }

    pub fn flux(&self, axis: Axis) -> &DMatrix<f64> {
        &self.flux[axis.index()]
    }

    /// Normal flux for an outward normal `-axis`, written as the
    /// reflection-conjugated `R A R`.
    pub fn oriented_flux(&self, orientation: Orientation) -> DMatrix<f64> {
        let a = self.flux(orientation.axis);
        if orientation.positive {
            a.clone()
        } else {
            let r = self.basis.reflection(orientation.axis);
            DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| r[i] * a[(i, j)] * r[j])
        }
    }

    /// Largest `|S A^(k) - (S A^(k))^T|` entry over the three axes.
    pub fn symmetric_hyperbolicity_defect(&self) -> f64 {
        Axis::ALL
            .iter()
            .map(|&k| asymmetry(&(&self.symmetrizer * self.flux(k))))
            .fold(0.0, f64::max)
    }

    /// Checks that the normal flux has zero diagonal parity blocks.
    pub fn normal_block_defect(&self) -> f64 {
        let a = self.flux(self.basis.normal_axis);
        let no = self.n_odd();
        let m = self.len();
        let oo = a.view((0, 0), (no, no)).amax();
        let ee = if m > no {
            a.view((no, no), (m - no, m - no)).amax()
        } else {
            0.0
        };
        oo.max(ee)
    }
}

/// `A_ab = sum_t E_tb <psi_a, xi_k psi_t>` over full tuples `t`.
pub fn assemble_flux(bs: &BasisSet, axis: Axis) -> DMatrix<f64> {
    let mut shift = [0; 3];
    shift[axis.index()] = 1;
    bs.row_products(shift, Domain::Full) * &bs.expansion
}

/// `S = E^T E / 2`, the Hessian of the quadratic entropy over full tuples.
pub fn assemble_symmetrizer(bs: &BasisSet) -> Result<DMatrix<f64>> {
    let weights = DVector::from_iterator(bs.rows.len(), bs.rows.iter().map(|r| r.multiplicity as f64));
    let weighted = DMatrix::from_diagonal(&weights) * &bs.expansion;
    let s = bs.expansion.transpose() * weighted * 0.5;
    let min_eig = min_sym_eigenvalue(&s);
    if min_eig <= 0.0 {
        return Err(Error::SymmetrizerNotSpd { min_eig });
    }
    Ok(s)
}

/// Diagonal projector onto the non-equilibrium moments: zero on density,
/// velocity and temperature, one elsewhere.
pub fn bgk_projector(bs: &BasisSet) -> DMatrix<f64> {
    let diag = DVector::from_iterator(
        bs.len(),
        bs.entries.iter().map(|e| {
            let conserved = (e.rank == 0 && e.radial <= 1) || (e.rank == 1 && e.radial == 0);
            if conserved {
                0.0
            } else {
                1.0
            }
        }),
    );
    DMatrix::from_diagonal(&diag)
}

#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub max_asymmetry: f64,
    pub pairs: usize,
}

/// Checks `<psi_a, xi_k psi_b> = <psi_b, xi_k psi_a>` over every pair of
/// expansion rows.
pub fn verify_full_symmetry(bs: &BasisSet, axis: Axis) -> SymmetryReport {
    use crate::basis::GaussianMoments;
    let g = GaussianMoments::new();
    let mut shift = [0; 3];
    shift[axis.index()] = 1;
    let mut max_asymmetry: f64 = 0.0;
    let mut pairs = 0;
    for (i, a) in bs.rows.iter().enumerate() {
        for b in &bs.rows[i..] {
            let ab = g.inner(&a.poly, &b.poly, shift, Domain::Full);
            let ba = g.inner(&b.poly, &a.poly, shift, Domain::Full);
            max_asymmetry = max_asymmetry.max((ab - ba).abs());
            pairs += 1;
        }
    }
    SymmetryReport { max_asymmetry, pairs }
}

/// Eigen-structure of `S^{1/2} A S^{-1/2}` for an oriented normal flux.
#[derive(Debug, Clone)]
pub struct CharacteristicDecomposition {
    pub orientation: Orientation,
    pub x_minus: DMatrix<f64>,
    pub x_zero: DMatrix<f64>,
    pub x_plus: DMatrix<f64>,
    /// Ascending (most negative first).
    pub lambda_minus: DVector<f64>,
    /// Ascending.
    pub lambda_plus: DVector<f64>,
    pub s_half: DMatrix<f64>,
    pub s_half_inv: DMatrix<f64>,
    pub spectral_radius: f64,
    /// Eigenvalues treated as zero.
    pub zero_eigenvalues: DVector<f64>,
}

impl CharacteristicDecomposition {
    pub fn n_minus(&self) -> usize {
        self.lambda_minus.len()
    }

    pub fn n_plus(&self) -> usize {
        self.lambda_plus.len()
    }

    pub fn n_zero(&self) -> usize {
        self.x_zero.ncols()
    }

    /// `X = [X- X0 X+]`.
    pub fn eigenvectors(&self) -> DMatrix<f64> {
        let m = self.s_half.nrows();
        let mut x = DMatrix::zeros(m, m);
        let mut c = 0;
        for block in [&self.x_minus, &self.x_zero, &self.x_plus] {
            x.view_mut((0, c), (m, block.ncols())).copy_from(block);
            c += block.ncols();
        }
        x
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        let mut v: Vec<f64> = self.lambda_minus.iter().copied().collect();
        v.extend(std::iter::repeat_n(0.0, self.n_zero()));
        v.extend(self.lambda_plus.iter().copied());
        DVector::from_vec(v)
    }

    /// `W = X^T S^{1/2} alpha`.
    pub fn characteristic_variables(&self, alpha: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors().transpose() * (&self.s_half * alpha)
    }

    /// `H = W-^T L- W- + W+^T L+ W+`.
    pub fn quadratic_form(&self, alpha: &DVector<f64>) -> f64 {
        let w = self.characteristic_variables(alpha);
        let lam = self.eigenvalues();
        w.iter().zip(lam.iter()).map(|(w, l)| l * w * w).sum()
    }

    /// `S^{-1/2} X_block`: maps characteristic variables back to moments.
    pub fn moment_modes(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        &self.s_half_inv * block
    }

    /// Upwind split `A = A+ + A-` of the oriented flux.
    pub fn flux_split(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let plus = self.moment_modes(&self.x_plus)
            * DMatrix::from_diagonal(&self.lambda_plus)
            * self.x_plus.transpose()
            * &self.s_half;
        let minus = self.moment_modes(&self.x_minus)
            * DMatrix::from_diagonal(&self.lambda_minus)
            * self.x_minus.transpose()
            * &self.s_half;
        (plus, minus)
    }
}

/// Relative tolerance below which eigenvalues count as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

pub fn characteristic_decomposition(
    sys: &MomentSystem,
    orientation: Orientation,
) -> Result<CharacteristicDecomposition> {
    let (s_half, s_half_inv) = spd_sqrt(&sys.symmetrizer)?;
    let a = sys.oriented_flux(orientation);
    let k = &s_half * &a * &s_half_inv;
    let scale = k.amax().max(1.0);
    let asym = asymmetry(&k);
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let eig = SymmetricEigen::new(symmetrize(&k));
    let spectral_radius = eig.eigenvalues.amax();
    let tol = ZERO_EIGENVALUE_TOL * spectral_radius.max(f64::MIN_POSITIVE);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let pick = |pred: &dyn Fn(f64) -> bool| -> Vec<usize> {
        order.iter().copied().filter(|&i| pred(eig.eigenvalues[i])).collect()
    };
    let neg = pick(&|v| v < -tol);
    let zero = pick(&|v| v.abs() <= tol);
    let pos = pick(&|v| v > tol);
    let cols = |idx: &[usize]| crate::linalg::select_columns(&eig.eigenvectors, idx);
    let vals = |idx: &[usize]| DVector::from_iterator(idx.len(), idx.iter().map(|&i| eig.eigenvalues[i]));

    Ok(CharacteristicDecomposition {
        orientation,
        x_minus: cols(&neg),
        x_zero: cols(&zero),
        x_plus: cols(&pos),
        lambda_minus: vals(&neg),
        lambda_plus: vals(&pos),
        s_half,
        s_half_inv,
        spectral_radius,
        zero_eigenvalues: vals(&zero),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Reduction;

    #[test]
    fn grad_theory_counts() {
        let g20 = grad_theory(3, Reduction::Full3d);
        assert_eq!(g20.radial_counts, [2, 2, 1, 1]);
        assert_eq!(g20.moment_count(), 20);
        assert_eq!(g20.name, "G20");
        assert_eq!(grad_theory(2, Reduction::Full3d).moment_count(), 10);
        assert_eq!(grad_theory(5, Reduction::Full3d).moment_count(), 56);
        assert_eq!(grad_theory(3, Reduction::Planar).moment_count(), 13);
    }

    #[test]
    fn theory_names_resolve() {
        assert_eq!(grad_theory_by_name("G20", Reduction::Planar).unwrap().max_rank, 3);
        assert_eq!(grad_theory_by_name("g56", Reduction::Planar).unwrap().max_rank, 5);
        assert!(grad_theory_by_name("G148", Reduction::Planar).is_err());
        assert!(grad_theory_by_name("twenty", Reduction::Planar).is_err());
    }

    #[test]
    fn custom_theory_validation() {
        assert!(MomentTheory::custom(3, vec![2, 2, 1], Reduction::Planar).is_err());
        assert!(MomentTheory::custom(1, vec![1, 0], Reduction::Planar).is_err());
        let t = MomentTheory::custom(3, vec![2, 2, 1, 1], Reduction::Full3d).unwrap();
        assert_eq!(t.radial_counts, grad_theory(3, Reduction::Full3d).radial_counts);
    }

    #[test]
    fn flux_entry_normal_velocity_density() {
        let sys = MomentSystem::assemble(&grad_theory(3, Reduction::Planar), Axis::X).unwrap();
        let bs = &sys.basis;
        let a = sys.flux(Axis::X);
        let vx = bs.vector_index(0, Axis::X).unwrap();
        let rho = bs.scalar_index(0).unwrap();
        let theta = bs.scalar_index(1).unwrap();
        assert!((a[(vx, rho)] - 1.0).abs() < 1e-14);
        // <xi_x, xi_x psi^(1)> = sqrt(2/3) E[xi_x^2 (3/2 - xi^2/2)] = -sqrt(2/3)
        assert!((a[(vx, theta)] + (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bgk_zeros_collision_invariants() {
        let sys = MomentSystem::assemble(&grad_theory(3, Reduction::Planar), Axis::X).unwrap();
        let zeros = sys.bgk.diagonal().iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeros, 4);
        assert_eq!(&sys.bgk * &sys.bgk, sys.bgk);

        let g10 = MomentSystem::assemble(&grad_theory(2, Reduction::Full3d), Axis::X).unwrap();
        assert_eq!(g10.bgk.diagonal().iter().filter(|&&v| v == 0.0).count(), 5);
    }

    #[test]
    fn symmetrizer_rank_two_block() {
        let t = MomentTheory::custom(2, vec![1, 1, 1], Reduction::Planar).unwrap();
        let sys = MomentSystem::assemble(&t, Axis::X).unwrap();
        let bs = &sys.basis;
        let idx: Vec<usize> = ["xy", "xx", "yy"]
            .iter()
            .map(|c| bs.index_of(2, 0, c).unwrap())
            .collect();
        let s = &sys.symmetrizer;
        let expect = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.5], [0.0, 0.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s[(idx[i], idx[j])], expect[i][j]);
            }
        }
        assert_eq!(s[(bs.scalar_index(0).unwrap(), bs.scalar_index(0).unwrap())], 0.5);
    }

    #[test]
    fn full_symmetry_of_velocity_products() {
        let bs = build_basis_set(&grad_theory(3, Reduction::Full3d), Axis::X).unwrap();
        for axis in Axis::ALL {
            assert!(verify_full_symmetry(&bs, axis).max_asymmetry < 1e-12);
        }
        let g = crate::basis::GaussianMoments::new();
        let vx = &bs.entries[bs.vector_index(0, Axis::X).unwrap()].poly;
        let one = &bs.entries[bs.scalar_index(0).unwrap()].poly;
        assert_eq!(g.inner(vx, one, [1, 0, 0], Domain::Full), 1.0);
        assert_eq!(g.inner(one, vx, [1, 0, 0], Domain::Full), 1.0);
        // odd-odd pair along the normal
        let vxy = &bs.entries[bs.index_of(2, 0, "xy").unwrap()].poly;
        assert_eq!(g.inner(vx, vxy, [1, 0, 0], Domain::Full), 0.0);
        assert_eq!(g.inner(vxy, vx, [1, 0, 0], Domain::Full), 0.0);
    }

    #[test]
    fn oriented_flux_is_negated_normal_flux() {
        let sys = MomentSystem::assemble(&grad_theory(3, Reduction::Planar), Axis::Y).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let minus = sys.oriented_flux(Orientation::minus(axis));
            assert!((minus + sys.flux(axis)).amax() < 1e-15);
        }
    }

    #[test]
    fn characteristic_counts_g20() {
        let sys = MomentSystem::assemble(&grad_theory(3, Reduction::Planar), Axis::X).unwrap();
        let dec = characteristic_decomposition(&sys, Orientation::plus(Axis::X)).unwrap();
        assert_eq!(dec.n_minus(), sys.n_odd());
        assert_eq!(dec.n_plus(), sys.n_odd());
        assert_eq!(dec.n_zero(), sys.n_even() - sys.n_odd());
        let x = dec.eigenvectors();
        assert!((x.transpose() * &x - DMatrix::identity(13, 13)).amax() < 1e-10);
    }
}
