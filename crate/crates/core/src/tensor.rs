//! Symmetric trace-free tensor combinatorics.
//!
//! A rank-`n` symmetric tensor in three dimensions is fully described by its
//! values on multisets of axes. Trace-freeness removes `n(n-1)/2` of them,
//! leaving `2n+1` independent components. We pick as independent the
//! multisets with at most one `z`; every other component follows from the
//! trace relations `T_{m xx} + T_{m yy} + T_{m zz} = 0`.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    pub fn label(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }

    pub fn parse(c: char) -> Option<Axis> {
        match c.to_ascii_lowercase() {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Which components of a tensor are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// All `2n+1` trace-free components.
    Full3d,
    /// Flows invariant in `z`: components odd in `z` vanish, `n+1` remain.
    Planar,
}

impl Reduction {
    pub fn components(self, rank: usize) -> usize {
        match self {
            Reduction::Full3d => 2 * rank + 1,
            Reduction::Planar => rank + 1,
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reduction::Full3d => write!(f, "full3d"),
            Reduction::Planar => write!(f, "planar"),
        }
    }
}

/// A multiset of axis labels, the canonical representative of a tensor index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    counts: [u8; 3],
}

impl MultiIndex {
    pub const SCALAR: MultiIndex = MultiIndex { counts: [0; 3] };

    pub fn from_counts(counts: [u8; 3]) -> Self {
        MultiIndex { counts }
    }

    pub fn from_axes(axes: &[Axis]) -> Self {
        let mut counts = [0u8; 3];
        for a in axes {
            counts[a.index()] += 1;
        }
        MultiIndex { counts }
    }

    /// Parses labels such as `"xxy"`; the empty string is the scalar index.
    pub fn parse(s: &str) -> Option<Self> {
        let mut axes = Vec::with_capacity(s.len());
        for c in s.chars() {
            axes.push(Axis::parse(c)?);
        }
        Some(Self::from_axes(&axes))
    }

    pub fn counts(&self) -> [u8; 3] {
        self.counts
    }

    pub fn count(&self, axis: Axis) -> usize {
        self.counts[axis.index()] as usize
    }

    pub fn rank(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// Sorted axis sequence, `x < y < z`.
    pub fn axes(&self) -> Vec<Axis> {
        let mut out = Vec::with_capacity(self.rank());
        for axis in Axis::ALL {
            out.extend(std::iter::repeat_n(axis, self.count(axis)));
        }
        out
    }

    pub fn label(&self) -> String {
        self.axes().iter().map(|a| a.label()).collect()
    }

    pub fn with(&self, axis: Axis, extra: u8) -> Self {
        let mut counts = self.counts;
        counts[axis.index()] += extra;
        MultiIndex { counts }
    }

    /// Number of distinct orderings of the multiset.
    pub fn multiplicity(&self) -> usize {
        let n = self.rank();
        let mut m = factorial(n);
        for c in self.counts {
            m /= factorial(c as usize);
        }
        m as usize
    }

    /// Parity of the count of `axis`. `true` means odd.
    pub fn is_odd_in(&self, axis: Axis) -> bool {
        self.count(axis) % 2 == 1
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rank() == 0 {
            write!(f, "-")
        } else {
            write!(f, "{}", self.label())
        }
    }
}

impl Ord for MultiIndex {
    /// Rank, then `z`-count, then lexicographic order of the sorted labels.
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank()
            .cmp(&other.rank())
            .then(self.count(Axis::Z).cmp(&other.count(Axis::Z)))
            .then_with(|| self.label().cmp(&other.label()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// Parity of a basis function with tensor index `t` under `xi_axis -> -xi_axis`.
///
/// The radial factor depends on `|xi|` only, so the radial index never matters.
pub fn parity(t: &MultiIndex, _radial: usize, axis: Axis) -> Parity {
    if t.is_odd_in(axis) {
        Parity::Odd
    } else {
        Parity::Even
    }
}

pub fn multiplicity(t: &MultiIndex) -> usize {
    t.multiplicity()
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// All multisets of the given rank in canonical order.
pub fn multisets(rank: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity((rank + 1) * (rank + 2) / 2);
    for z in 0..=rank {
        for y in 0..=(rank - z) {
            let x = rank - z - y;
            out.push(MultiIndex::from_counts([x as u8, y as u8, z as u8]));
        }
    }
    out.sort();
    out
}

/// Independent components: multisets with at most one `z` (full3d) or none
/// (planar), sorted by `z`-count then lexicographically.
pub fn independent_components(rank: usize, reduction: Reduction) -> Vec<MultiIndex> {
    let max_z = match reduction {
        Reduction::Full3d => 1,
        Reduction::Planar => 0,
    };
    multisets(rank)
        .into_iter()
        .filter(|m| m.count(Axis::Z) <= max_z)
        .collect()
}

/// Every ordered index tuple of the given rank, in base-3 order with `x` slowest.
pub fn full_tuples(rank: usize) -> Vec<Vec<Axis>> {
    let total = 3usize.pow(rank as u32);
    (0..total)
        .map(|mut code| {
            let mut t = vec![Axis::X; rank];
            for slot in (0..rank).rev() {
                t[slot] = Axis::from_index(code % 3);
                code /= 3;
            }
            t
        })
        .collect()
}

/// Expansion of all components of a rank-`n` trace-free tensor in terms of
/// its independent components.
#[derive(Debug, Clone)]
pub struct ComponentBasis {
    pub rank: usize,
    pub reduction: Reduction,
    pub independent: Vec<MultiIndex>,
    /// Every multiset of this rank; one row of `compact` each.
    pub multisets: Vec<MultiIndex>,
    /// `multisets.len() x independent.len()`; identical rows of the full
    /// `3^n`-row matrix are stored once.
    pub compact: DMatrix<f64>,
}

impl ComponentBasis {
    /// Row of the compact matrix for a multiset.
    pub fn row_of(&self, m: &MultiIndex) -> Option<usize> {
        self.multisets.iter().position(|x| x == m)
    }

    pub fn column_of(&self, m: &MultiIndex) -> Option<usize> {
        self.independent.iter().position(|x| x == m)
    }

    /// The full `3^n x |independent|` expansion matrix, rows in [`full_tuples`] order.
    pub fn expansion(&self) -> DMatrix<f64> {
        let tuples = full_tuples(self.rank);
        let mut e = DMatrix::zeros(tuples.len(), self.independent.len());
        for (r, t) in tuples.iter().enumerate() {
            let row = self.row_of(&MultiIndex::from_axes(t)).expect("multiset present");
            e.row_mut(r).copy_from(&self.compact.row(row));
        }
        e
    }
}

/// Builds the expansion matrix by solving the trace constraints exactly.
pub fn expansion_matrix(rank: usize, reduction: Reduction) -> Result<ComponentBasis> {
    let all = multisets(rank);
    let full_indep = independent_components(rank, Reduction::Full3d);
    let dependent: Vec<MultiIndex> = all.iter().copied().filter(|m| !full_indep.contains(m)).collect();

    // Values of the dependent components in terms of the independent ones.
    let dep_values = if dependent.is_empty() {
        Vec::new()
    } else {
        solve_trace_constraints(rank, &all, &full_indep, &dependent)?
    };

    let independent = independent_components(rank, reduction);
    let mut compact = DMatrix::zeros(all.len(), independent.len());
    for (r, m) in all.iter().enumerate() {
        if reduction == Reduction::Planar && m.is_odd_in(Axis::Z) {
            continue;
        }
        if let Some(j) = independent.iter().position(|x| x == m) {
            compact[(r, j)] = 1.0;
            continue;
        }
        if full_indep.contains(m) {
            // z-odd independent component, dropped by the planar reduction.
            continue;
        }
        let d = dependent.iter().position(|x| x == m).expect("dependent");
        for (j, ind) in independent.iter().enumerate() {
            let k = full_indep.iter().position(|x| x == ind).expect("independent");
            let v = dep_values[d][k];
            compact[(r, j)] = *v.numer() as f64 / *v.denom() as f64;
        }
    }

    Ok(ComponentBasis {
        rank,
        reduction,
        independent,
        multisets: all,
        compact,
    })
}

type Q = Ratio<i64>;

/// Solves `C_D T_D = -C_I` with exact rational elimination. Returns one row
/// per dependent multiset holding its coefficients on the independent set.
fn solve_trace_constraints(
    rank: usize,
    all: &[MultiIndex],
    indep: &[MultiIndex],
    dependent: &[MultiIndex],
) -> Result<Vec<Vec<Q>>> {
    let constraints = multisets(rank - 2);
    let nd = dependent.len();
    let ni = indep.len();
    debug_assert_eq!(constraints.len(), nd);
    debug_assert_eq!(all.len(), nd + ni);

    // Augmented system [C_D | -C_I].
    let mut aug = vec![vec![Q::from_integer(0); nd + ni]; constraints.len()];
    for (r, m) in constraints.iter().enumerate() {
        for axis in Axis::ALL {
            let target = m.with(axis, 2);
            if let Some(c) = dependent.iter().position(|x| *x == target) {
                aug[r][c] += Q::from_integer(1);
            } else if let Some(c) = indep.iter().position(|x| *x == target) {
                aug[r][nd + c] -= Q::from_integer(1);
            }
        }
    }

    for col in 0..nd {
        let pivot = (col..nd)
            .find(|&r| aug[r][col] != Q::from_integer(0))
            .ok_or(Error::SingularSelection { rank })?;
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..nd {
            if r != col && aug[r][col] != Q::from_integer(0) {
                let f = aug[r][col];
                let pivot_row = aug[col].clone();
                for (v, pv) in aug[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }

    Ok(aug.into_iter().map(|row| row[nd..].to_vec()).collect())
}

/// Contraction of the first index pair, as a matrix from full tuples of rank
/// `n` to full tuples of rank `n-2`.
pub fn trace_contraction(rank: usize) -> DMatrix<f64> {
    assert!(rank >= 2);
    let rows = full_tuples(rank - 2);
    let cols = full_tuples(rank);
    let mut c = DMatrix::zeros(rows.len(), cols.len());
    for (r, t) in rows.iter().enumerate() {
        for axis in Axis::ALL {
            let mut full = vec![axis, axis];
            full.extend_from_slice(t);
            let col = cols.iter().position(|x| *x == full).expect("tuple");
            c[(r, col)] += 1.0;
        }
    }
    c
}
