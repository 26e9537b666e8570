//! Energy stability of a boundary operator in characteristic variables.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryOperator;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, condition_number, symmetrize};
use crate::system::{characteristic_decomposition, CharacteristicDecomposition, MomentSystem, Orientation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Degenerate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub kernel_ok: bool,
    /// `max |B S^{-1/2} X0|`.
    pub kernel_residual: f64,
    pub bx_minus_cond: f64,
    pub r_plus: Option<DMatrix<f64>>,
    pub r_zero: Option<DMatrix<f64>>,
    /// `R+^T L- R+ + L+`.
    pub schur: Option<DMatrix<f64>>,
    pub schur_asymmetry: f64,
    pub min_schur_eig: f64,
    /// Eigen-directions of the Schur matrix with eigenvalue within the margin.
    pub neutral_modes: usize,
    /// Largest relative coupling between the admissible boundary data and
    /// the neutral directions.
    pub neutral_forcing: f64,
    pub verdict: Verdict,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

/// Kernel residual tolerance.
pub const KERNEL_TOL: f64 = 1e-9;
/// Margin for strict positivity of the Schur matrix, relative to `max L+`.
pub const SCHUR_MARGIN: f64 = 1e-10;
/// `B X-` with a larger condition number cannot fix the incoming waves.
pub const BX_MINUS_COND_LIMIT: f64 = 1e12;

/// Relative tolerance on the coupling of boundary data into neutral directions.
pub const FORCING_TOL: f64 = 1e-9;

/// Stability of `B alpha = D w` at a wall.
///
/// With `data = None` the right-hand side is arbitrary and the Schur matrix
/// must be strictly positive. With a data map `D`, directions on which the
/// Schur matrix vanishes are admissible as long as `D` cannot drive them:
/// the energy flux is then bounded by the data alone.
pub fn check_stability(
    dec: &CharacteristicDecomposition,
    b: &DMatrix<f64>,
    data: Option<&DMatrix<f64>>,
) -> Result<StabilityReport> {
    if b.nrows() != dec.n_minus() {
        return Err(Error::BoundaryRowCount {
            rows: b.nrows(),
            expected: dec.n_minus(),
        });
    }
    let to_char = |x: &DMatrix<f64>| b * dec.moment_modes(x);
    let b_minus = to_char(&dec.x_minus);
    let b_zero = to_char(&dec.x_zero);
    let b_plus = to_char(&dec.x_plus);

    // Row scaling of B must not change anything below, so measure the
    // kernel residual relative to the size of B.
    let scale = b.amax().max(f64::MIN_POSITIVE);
    let kernel_residual = if b_zero.is_empty() { 0.0 } else { b_zero.amax() / scale };
    let kernel_ok = kernel_residual < KERNEL_TOL;
    let bx_minus_cond = condition_number(&b_minus);

    let inverse = if bx_minus_cond < BX_MINUS_COND_LIMIT {
        b_minus.clone().try_inverse()
    } else {
        None
    };
    let Some(inv) = inverse else {
        return Ok(StabilityReport {
            kernel_ok,
            kernel_residual,
            bx_minus_cond,
            r_plus: None,
            r_zero: None,
            schur: None,
            schur_asymmetry: 0.0,
            min_schur_eig: f64::NAN,
            neutral_modes: 0,
            neutral_forcing: f64::NAN,
            verdict: Verdict::Degenerate,
        });
    };

    let r_plus = -(&inv * b_plus);
    let r_zero = -(&inv * b_zero);
    let schur_raw = r_plus.transpose() * DMatrix::from_diagonal(&dec.lambda_minus) * &r_plus
        + DMatrix::from_diagonal(&dec.lambda_plus);
    let schur_asymmetry = asymmetry(&schur_raw);
    let schur = symmetrize(&schur_raw);
    let eig = SymmetricEigen::new(schur.clone());
    let min_schur_eig = if eig.eigenvalues.is_empty() {
        f64::INFINITY
    } else {
        eig.eigenvalues.min()
    };
    let margin = SCHUR_MARGIN * dec.lambda_plus.amax();
    let neutral: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] <= margin)
        .collect();

    // W- = R+ W+ + (B X-)^{-1} D w puts 2 W+^T R+^T L- (B X-)^{-1} D w
    // into the energy flux.
    let neutral_forcing = if neutral.is_empty() {
        0.0
    } else {
        match data {
            None => f64::INFINITY,
            Some(d) => {
                let coupling = r_plus.transpose() * DMatrix::from_diagonal(&dec.lambda_minus) * &inv * d;
                let z = crate::linalg::select_columns(&eig.eigenvectors, &neutral);
                let size = coupling.amax();
                if size == 0.0 {
                    0.0
                } else {
                    (z.transpose() * &coupling).amax() / size
                }
            }
        }
    };
    let semi_definite = min_schur_eig >= -margin;
    let verdict = if kernel_ok && semi_definite && neutral_forcing < FORCING_TOL {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    Ok(StabilityReport {
        kernel_ok,
        kernel_residual,
        bx_minus_cond,
        r_plus: Some(r_plus),
        r_zero: Some(r_zero),
        schur: Some(schur),
        schur_asymmetry,
        min_schur_eig,
        neutral_modes: neutral.len(),
        neutral_forcing,
        verdict,
    })
}

/// Verdict for a wall operator with its own wall-data map.
pub fn boundary_stability(sys: &MomentSystem, op: &BoundaryOperator) -> Result<StabilityReport> {
    let dec = characteristic_decomposition(sys, op.orientation)?;
    check_stability(&dec, &op.b, Some(&op.data_map()))
}

/// `H = alpha^T S A_n alpha` for the oriented normal flux.
pub fn quadratic_form_h(sys: &MomentSystem, alpha: &DVector<f64>, orientation: Orientation) -> f64 {
    let sa = &sys.symmetrizer * sys.oriented_flux(orientation);
    (alpha.transpose() * sa * alpha)[(0, 0)]
}
