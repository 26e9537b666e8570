//! Staggered solver for the steady channel.
//!
//! `A_y` only couples odd and even moments, so odd moments live on the
//! nodes `y_i = -1/2 + i/N` (walls included) and even moments at the cell
//! centres. Odd rows are central differences of the even unknowns at
//! interior nodes and the boundary relation `B alpha = 2 beta g` at the two
//! walls, where the even moments are extrapolated to third order. Even rows
//! are central differences of the odd unknowns at the centres.
//!
//! Density only appears differentiated and the walls never see it, so it is
//! fixed up to a constant: the last density row is traded for `rho = 0`
//! (the dropped row is implied by the others) and the result is shifted to
//! zero mean density.

use nalgebra::{DMatrix, DVector};

use super::{grid_nodes, ChannelConfig, ChannelSolution, Diagnostics, Fields};
use crate::boundary::{boundary_operator, BoundaryOperator};
use crate::error::{Error, Result};
use crate::linalg::BandedMatrix;
use crate::stability::boundary_stability;
use crate::system::{MomentSystem, Orientation};
use crate::tensor::{Axis, Parity};

/// Relative tolerance for the residual after the direct solve.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Weights extrapolating centre values `(1/2, 3/2, 5/2) h` to the wall.
pub const WALL_EXTRAPOLATION: [f64; 3] = [15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0];

/// Assembled discrete system, exposed for inspection and tests.
///
/// Unknowns are stored per position: block `i` holds the odd moments at
/// node `i` followed by the even moments at centre `i + 1/2`; the last
/// block only has the odd moments at the upper wall.
pub struct SteadySystem {
    pub sys: MomentSystem,
    pub lower: BoundaryOperator,
    pub upper: BoundaryOperator,
    pub matrix: BandedMatrix,
    pub rhs: Vec<f64>,
    pub cells: usize,
}

impl SteadySystem {
    /// Unknown index of moment `k` in block `i`.
    pub fn index(&self, i: usize, k: usize) -> usize {
        i * self.sys.len() + k
    }

    /// Moments at the nodes: odd ones directly, even ones averaged from the
    /// neighbouring centres and extrapolated at the walls.
    pub fn nodal(&self, x: &[f64]) -> Vec<DVector<f64>> {
        let m = self.sys.len();
        let no = self.sys.n_odd();
        let n = self.cells;
        let at = |i: usize, k: usize| x[self.index(i, k)];
        (0..=n)
            .map(|i| {
                DVector::from_fn(m, |k, _| {
                    if k < no {
                        at(i, k)
                    } else if i == 0 {
                        (0..3).map(|c| WALL_EXTRAPOLATION[c] * at(c, k)).sum()
                    } else if i == n {
                        (0..3).map(|c| WALL_EXTRAPOLATION[c] * at(n - 1 - c, k)).sum()
                    } else {
                        0.5 * (at(i - 1, k) + at(i, k))
                    }
                })
            })
            .collect()
    }
}

pub fn steady_system(cfg: &ChannelConfig) -> Result<SteadySystem> {
    cfg.validate()?;
    let sys = cfg.assemble()?;
    let m = sys.len();
    let no = sys.n_odd();
    let n = cfg.grid;
    let h = 1.0 / n as f64;

    let lo_o = Orientation::minus(Axis::Y);
    let hi_o = Orientation::plus(Axis::Y);
    let lower = boundary_operator(&sys, cfg.bc, lo_o, cfg.chi)?;
    let upper = boundary_operator(&sys, cfg.bc, hi_o, cfg.chi)?;
    let lo_rhs = lower.rhs(&cfg.wall(lo_o));
    let hi_rhs = upper.rhs(&cfg.wall(hi_o));

    let bs = &sys.basis;
    let rho = bs.scalar_index(0).ok_or(Error::MissingMoment("alpha^(0)"))?;
    let theta = bs.scalar_index(1).ok_or(Error::MissingMoment("alpha^(1)"))?;
    // without a heat flux nothing can carry the source to the walls
    bs.vector_index(1, Axis::Y).ok_or(Error::MissingMoment("alpha_y^(1)"))?;
    let a = sys.flux(Axis::Y);
    let relax: Vec<f64> = sys.bgk.diagonal().iter().map(|p| p / cfg.kn).collect();
    let f_theta = -(2.0f64 / 3.0).sqrt();
    let amp = cfg.source_amplitude;

    let dim = n * m + no;
    let band = 3 * m;
    let mut mat = BandedMatrix::zeros(dim, band, band);
    let mut rhs = vec![0.0; dim];
    let idx = |i: usize, k: usize| i * m + k;

    // odd rows on the nodes
    for i in 0..=n {
        let wall = match i {
            0 => Some((&lower, &lo_rhs, [0usize, 1, 2])),
            _ if i == n => Some((&upper, &hi_rhs, [n - 1, n - 2, n - 3])),
            _ => None,
        };
        for k in 0..no {
            let row = idx(i, k);
            match wall {
                Some((op, g, centres)) => {
                    for j in 0..m {
                        let v = op.b[(k, j)];
                        if v == 0.0 {
                            continue;
                        }
                        if j < no {
                            mat.add(row, idx(i, j), v);
                        } else {
                            for (c, w) in centres.iter().zip(WALL_EXTRAPOLATION) {
                                mat.add(row, idx(*c, j), v * w);
                            }
                        }
                    }
                    rhs[row] = g[k];
                }
                None => {
                    for j in no..m {
                        let v = a[(k, j)];
                        if v != 0.0 {
                            mat.add(row, idx(i, j), v / h);
                            mat.add(row, idx(i - 1, j), -v / h);
                        }
                    }
                    if relax[k] != 0.0 {
                        mat.add(row, row, relax[k]);
                    }
                }
            }
        }
    }

    // even rows at the centres
    for i in 0..n {
        for k in no..m {
            let row = idx(i, k);
            if i == n - 1 && k == rho {
                mat.add(row, row, 1.0);
                continue;
            }
            for j in 0..no {
                let v = a[(k, j)];
                if v != 0.0 {
                    mat.add(row, idx(i + 1, j), v / h);
                    mat.add(row, idx(i, j), -v / h);
                }
            }
            if relax[k] != 0.0 {
                mat.add(row, row, relax[k]);
            }
            if k == theta {
                let (y0, y1) = (-0.5 + i as f64 * h, -0.5 + (i + 1) as f64 * h);
                rhs[row] = f_theta * amp * (y1.powi(3) - y0.powi(3)) / (3.0 * h);
            }
        }
    }

    Ok(SteadySystem {
        sys,
        lower,
        upper,
        matrix: mat,
        rhs,
        cells: n,
    })
}

/// Solves the steady channel problem.
pub fn solve_steady(cfg: &ChannelConfig) -> Result<ChannelSolution> {
    let st = steady_system(cfg)?;
    let sys = &st.sys;
    let n = cfg.grid;
    let wall_stable =
        boundary_stability(sys, &st.lower)?.is_stable() && boundary_stability(sys, &st.upper)?.is_stable();

    let mut x = st.matrix.clone().solve(&st.rhs)?;
    let ax = st.matrix.mul_vec(&x);
    let scale = st.rhs.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let residual = ax.iter().zip(&st.rhs).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max) / scale;
    if residual > RESIDUAL_TOL {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: RESIDUAL_TOL,
        });
    }

    // zero-mean density gauge (midpoint rule on the centres)
    let rho = sys.basis.scalar_index(0).expect("density");
    let mean = (0..n).map(|i| x[st.index(i, rho)]).sum::<f64>() / n as f64;
    for i in 0..n {
        x[st.index(i, rho)] -= mean;
    }

    let alpha = st.nodal(&x);
    let fields = Fields::from_moments(&sys.basis, &alpha)?;
    let flux_balance = fields.q_y[n] - fields.q_y[0];
    let max_abs_x_odd = sys
        .basis
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.parity_in(Axis::X) == Parity::Odd)
        .flat_map(|(k, _)| alpha.iter().map(move |a| a[k].abs()))
        .fold(0.0, f64::max);

    Ok(ChannelSolution {
        theory: cfg.theory.name.clone(),
        bc: cfg.bc,
        y: grid_nodes(n),
        labels: sys.basis.labels(),
        alpha: alpha.iter().map(|a| a.iter().copied().collect()).collect(),
        diagnostics: Diagnostics {
            flux_balance,
            flux_balance_error: (flux_balance - cfg.source_amplitude / 12.0).abs(),
            max_abs_v_y: fields.v_y.iter().fold(0.0, |s, v| s.max(v.abs())),
            residual,
            max_abs_x_odd,
            wall_stable,
        },
        fields,
    })
}

/// Residual of the continuous equations with nodal values and second-order
/// central differences, at nodes whose stencil avoids the wall
/// extrapolation. Independent of the staggered assembly; `O(h^2)`.
pub fn interior_residual(sys: &MomentSystem, cfg: &ChannelConfig, sol: &ChannelSolution) -> f64 {
    let a: &DMatrix<f64> = sys.flux(Axis::Y);
    let n = sol.y.len();
    let h = sol.y[1] - sol.y[0];
    let theta = sys.basis.scalar_index(1).unwrap();
    let al = |i: usize| DVector::from_column_slice(&sol.alpha[i]);
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let d = (al(i + 1) - al(i - 1)) / (2.0 * h);
        let mut r = a * d + &sys.bgk * al(i) / cfg.kn;
        r[theta] += (2.0f64 / 3.0).sqrt() * super::heat_source(cfg.source_amplitude, sol.y[i]);
        worst = worst.max(r.amax());
    }
    worst
}
