//! Hermite-Laguerre basis functions and their Gaussian inner products.

mod functions;
mod poly;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use functions::{basis_polynomial, harmonic_tensor, laguerre_radial, RadialPolynomial};
pub use poly::{inner_full, inner_half, Domain, GaussianMoments, Polynomial3};

use crate::error::{Error, Result};
use crate::system::MomentTheory;
use crate::tensor::{expansion_matrix, multisets, parity, Axis, ComponentBasis, MultiIndex, Parity};

/// One independent moment `alpha^(s)_t` and its basis function.
#[derive(Debug, Clone)]
pub struct BasisFunction {
    pub rank: usize,
    pub radial: usize,
    pub component: MultiIndex,
    pub poly: Polynomial3,
    pub parity: [Parity; 3],
}

impl BasisFunction {
    pub fn degree(&self) -> usize {
        self.rank + 2 * self.radial
    }

    pub fn parity_in(&self, axis: Axis) -> Parity {
        self.parity[axis.index()]
    }

    pub fn label(&self) -> String {
        if self.rank == 0 {
            format!("a{}", self.radial)
        } else {
            format!("a{}_{}", self.radial, self.component.label())
        }
    }
}

/// The tensor of a fixed `(rank, radial)` pair.
#[derive(Debug, Clone)]
pub struct Block {
    pub rank: usize,
    pub radial: usize,
    pub components: ComponentBasis,
    /// Global state index of each independent component.
    pub columns: Vec<usize>,
}

/// A multiset row of the global expansion matrix. It stands for
/// `multiplicity` identical rows of the full-tuple matrix.
#[derive(Debug, Clone)]
pub struct ExpansionRow {
    pub block: usize,
    pub multiset: MultiIndex,
    pub multiplicity: usize,
    pub poly: Polynomial3,
}

#[derive(Debug, Clone)]
pub struct BasisSet {
    pub theory: MomentTheory,
    pub normal_axis: Axis,
    pub entries: Vec<BasisFunction>,
    pub n_odd: usize,
    pub n_even: usize,
    pub blocks: Vec<Block>,
    pub rows: Vec<ExpansionRow>,
    /// `rows.len() x entries.len()`.
    pub expansion: DMatrix<f64>,
}

/// Outcome of the reconstruction identity check.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    pub gram: DMatrix<f64>,
    pub max_deviation: f64,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, rank: usize, radial: usize, component: &str) -> Option<usize> {
        let t = MultiIndex::parse(component)?;
        if t.rank() != rank {
            return None;
        }
        self.entries
            .iter()
            .position(|e| e.rank == rank && e.radial == radial && e.component == t)
    }

    /// Index of `alpha^(s)_{axis}` for rank-one moments.
    pub fn vector_index(&self, radial: usize, axis: Axis) -> Option<usize> {
        self.index_of(1, radial, &axis.label().to_string())
    }

    pub fn scalar_index(&self, radial: usize) -> Option<usize> {
        self.index_of(0, radial, "")
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(BasisFunction::label).collect()
    }

    /// `diag(+-1)` sign of each moment under `xi_axis -> -xi_axis`.
    pub fn reflection(&self, axis: Axis) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.entries.iter().map(|e| match e.parity_in(axis) {
                Parity::Odd => -1.0,
                Parity::Even => 1.0,
            }),
        )
    }

    /// Expansion matrix over every ordered index tuple of every block.
    pub fn expansion_full(&self) -> DMatrix<f64> {
        let mut out: Vec<DMatrix<f64>> = Vec::new();
        let mut total = 0;
        for block in &self.blocks {
            let e = block.components.expansion();
            let mut g = DMatrix::zeros(e.nrows(), self.len());
            for (j, &col) in block.columns.iter().enumerate() {
                g.set_column(col, &e.column(j));
            }
            total += g.nrows();
            out.push(g);
        }
        let mut full = DMatrix::zeros(total, self.len());
        let mut r = 0;
        for g in out {
            full.view_mut((r, 0), (g.nrows(), g.ncols())).copy_from(&g);
            r += g.nrows();
        }
        full
    }

    /// `G[a][row] = multiplicity * <psi_a, xi^shift psi_row>` over `domain`.
    pub fn row_products(&self, shift: [u32; 3], domain: Domain) -> DMatrix<f64> {
        let g = GaussianMoments::new();
        let cols: Vec<Vec<f64>> = self
            .entries
            .par_iter()
            .map(|a| {
                self.rows
                    .iter()
                    .map(|row| row.multiplicity as f64 * g.inner(&a.poly, &row.poly, shift, domain))
                    .collect()
            })
            .collect();
        DMatrix::from_fn(self.len(), self.rows.len(), |i, j| cols[i][j])
    }

    /// `M_ab = sum_t E_tb <psi_a, psi_t>`; equals the identity when the
    /// basis is correctly normalised.
    pub fn verify_orthogonality(&self) -> OrthogonalityReport {
        let gram = self.row_products([0; 3], Domain::Full) * &self.expansion;
        let max_deviation = (&gram - DMatrix::identity(self.len(), self.len())).amax();
        OrthogonalityReport { gram, max_deviation }
    }

    /// Coefficients of `f_h / f0 = sum_t alpha_t psi_t` as a polynomial.
    pub fn reconstruct(&self, alpha: &DVector<f64>) -> Polynomial3 {
        let full = &self.expansion * alpha;
        let mut out = Polynomial3::zero();
        for (row, v) in self.rows.iter().zip(full.iter()) {
            out = out.add(&row.poly.scaled(v * row.multiplicity as f64));
        }
        out
    }
}

/// Builds the ordered basis: odd moments (with respect to `normal_axis`)
/// first, each block sorted by degree `n+2s`, then rank, then component.
pub fn build_basis_set(theory: &MomentTheory, normal_axis: Axis) -> Result<BasisSet> {
    theory.validate()?;
    if normal_axis == Axis::Z {
        return Err(Error::InvalidTheory("normal axis must be x or y".into()));
    }

    let mut keyed = Vec::new();
    let mut block_defs = Vec::new();
    for (rank, &count) in theory.radial_counts.iter().enumerate() {
        let components = expansion_matrix(rank, theory.reduction)?;
        for radial in 0..count {
            let b = block_defs.len();
            for (ci, t) in components.independent.iter().enumerate() {
                let p = parity(t, radial, normal_axis);
                let key = (p == Parity::Even, rank + 2 * radial, rank, ci, radial);
                keyed.push((key, b, ci, *t));
            }
            block_defs.push((rank, radial, components.clone()));
        }
    }
    keyed.sort_by_key(|k| k.0);

    let mut blocks: Vec<Block> = block_defs
        .into_iter()
        .map(|(rank, radial, components)| Block {
            rank,
            radial,
            columns: vec![0; components.independent.len()],
            components,
        })
        .collect();

    let mut entries = Vec::with_capacity(keyed.len());
    for (idx, (_, b, ci, t)) in keyed.iter().enumerate() {
        let block = &mut blocks[*b];
        block.columns[*ci] = idx;
        entries.push(BasisFunction {
            rank: block.rank,
            radial: block.radial,
            component: *t,
            poly: basis_polynomial(t, block.radial),
            parity: Axis::ALL.map(|a| parity(t, block.radial, a)),
        });
    }
    let n_odd = entries
        .iter()
        .filter(|e| e.parity_in(normal_axis) == Parity::Odd)
        .count();
    let n_even = entries.len() - n_odd;

    let mut rows = Vec::new();
    for (bi, block) in blocks.iter().enumerate() {
        for m in multisets(block.rank) {
            rows.push(ExpansionRow {
                block: bi,
                multiset: m,
                multiplicity: m.multiplicity(),
                poly: basis_polynomial(&m, block.radial),
            });
        }
    }
    let mut expansion = DMatrix::zeros(rows.len(), entries.len());
    for (r, row) in rows.iter().enumerate() {
        let block = &blocks[row.block];
        let local = block.components.row_of(&row.multiset).expect("multiset row");
        for (j, &col) in block.columns.iter().enumerate() {
            expansion[(r, col)] = block.components.compact[(local, j)];
        }
    }

    Ok(BasisSet {
        theory: theory.clone(),
        normal_axis,
        entries,
        n_odd,
        n_even,
        blocks,
        rows,
        expansion,
    })
}
