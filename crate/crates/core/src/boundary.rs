//! Wall boundary operators: Maxwell accommodation and the Onsager
//! construction built on top of it.
//!
//! Both are written as `B alpha = rhs` with `B` of shape `n_o x m`, in the
//! odd-first state ordering and in global coordinates. A wall with outward
//! normal `-axis` is handled by integrating over the half space on that side.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::Domain;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, condition_number, min_sym_eigenvalue, symmetrize};
use crate::system::{MomentSystem, Orientation};
use crate::tensor::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Mbc,
    Obc,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryKind::Mbc => "mbc",
            BoundaryKind::Obc => "obc",
        })
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mbc" | "maxwell" => Ok(BoundaryKind::Mbc),
            "obc" | "onsager" => Ok(BoundaryKind::Obc),
            other => Err(Error::InvalidConfig(format!(
                "unknown boundary kind `{other}` (expected mbc or obc)"
            ))),
        }
    }
}

/// Wall attributes. The wall never moves along its own normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallData {
    /// Temperature coefficient `alpha_w^(1)`; the wall temperature
    /// deviation is `-sqrt(2/3) alpha_w^(1)`.
    pub temperature: f64,
    /// Wall velocity coefficients in global axes.
    pub velocity: [f64; 3],
    pub chi: f64,
    pub orientation: Orientation,
}

impl WallData {
    pub fn at_rest(orientation: Orientation, chi: f64) -> Self {
        WallData {
            temperature: 0.0,
            velocity: [0.0; 3],
            chi,
            orientation,
        }
    }

    /// Wall with temperature deviation `theta_w` (unit reference temperature).
    pub fn with_temperature(orientation: Orientation, chi: f64, theta_w: f64) -> Self {
        WallData {
            temperature: -(1.5f64).sqrt() * theta_w,
            ..Self::at_rest(orientation, chi)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0 && self.chi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "accommodation coefficient must lie in (0, 1], got {}",
                self.chi
            )));
        }
        if self.velocity[self.orientation.axis.index()] != 0.0 {
            return Err(Error::InvalidConfig("wall velocity must be tangential".into()));
        }
        Ok(())
    }
}

pub fn beta(chi: f64) -> f64 {
    chi / (2.0 - chi)
}

/// Maxwell accommodation operator after elimination of the wall density.
#[derive(Debug, Clone)]
pub struct MaxwellOperator {
    pub orientation: Orientation,
    /// `n_o x n_e`.
    pub m: DMatrix<f64>,
    /// `n_o x 4`: maps `(alpha_w^(1), u_x, u_y, u_z)` to `g`.
    pub g_map: DMatrix<f64>,
    /// `<psi_n^(0), psi^(0)>` over the outgoing half space.
    pub density_pivot: f64,
}

impl MaxwellOperator {
    pub fn inhomogeneity(&self, wall: &WallData) -> DVector<f64> {
        wall_inhomogeneity(&self.g_map, wall)
    }
}

fn check_axis(sys: &MomentSystem, orientation: Orientation) -> Result<()> {
    if orientation.axis != sys.basis.normal_axis {
        return Err(Error::AxisMismatch {
            requested: orientation.axis.label(),
            basis: sys.basis.normal_axis.label(),
        });
    }
    Ok(())
}

/// Builds `M^(mbc)` and the wall-data map from half-space fluxes of the
/// odd test functions.
pub fn assemble_mbc(sys: &MomentSystem, orientation: Orientation) -> Result<MaxwellOperator> {
    check_axis(sys, orientation)?;
    let bs = &sys.basis;
    let no = bs.n_odd;
    let normal = orientation.axis;
    let domain = Domain::Half {
        axis: normal,
        sign: orientation.sign(),
    };

    // h[a][b] = <psi_a, sum_t E_tb psi_t> over the outgoing half space
    let half = bs.row_products([0; 3], domain) * &bs.expansion;
    let h = half.view((0, no), (no, bs.n_even)).into_owned();

    let rho = bs.scalar_index(0).ok_or(Error::MissingMoment("alpha^(0)"))?;
    let theta = bs.scalar_index(1).ok_or(Error::MissingMoment("alpha^(1)"))?;
    let vn = bs.vector_index(0, normal).ok_or(Error::MissingMoment("alpha_n^(0)"))?;
    if vn >= no || rho < no || theta < no {
        return Err(Error::InvalidTheory(
            "unexpected parity of the equilibrium moments".into(),
        ));
    }
    let col = |i: usize| i - no;

    let pivot = h[(vn, col(rho))];
    if pivot.abs() < 1e-14 {
        return Err(Error::DegenerateWallDensity);
    }

    // The wall Maxwellian spans density, temperature and tangential velocity,
    // so its half-space moments are columns of `h`. Eliminating the wall
    // density through the no-penetration row makes those columns of `m`
    // the wall coefficients as well.
    let mut m = h.clone();
    for a in 0..no {
        let f = h[(a, col(rho))] / pivot;
        for b in 0..bs.n_even {
            m[(a, b)] -= f * h[(vn, b)];
        }
    }
    m.row_mut(vn).fill(0.0);
    m.column_mut(col(rho)).fill(0.0);

    let mut g_map = DMatrix::zeros(no, 4);
    g_map.set_column(0, &(-m.column(col(theta))));
    for axis in Axis::ALL {
        if axis == normal {
            continue;
        }
        if let Some(v) = bs.vector_index(0, axis) {
            g_map.set_column(1 + axis.index(), &(-m.column(col(v))));
        }
    }

    Ok(MaxwellOperator {
        orientation,
        m,
        g_map,
        density_pivot: pivot,
    })
}

/// `g = -(alpha_w^(1) m_theta + sum_t u_t m_t)`.
pub fn wall_inhomogeneity(g_map: &DMatrix<f64>, wall: &WallData) -> DVector<f64> {
    let w = DVector::from_vec(vec![
        wall.temperature,
        wall.velocity[0],
        wall.velocity[1],
        wall.velocity[2],
    ]);
    g_map * w
}

/// Onsager matrix `L = 2 beta M_hat A_hat^-1` with its diagnostics.
#[derive(Debug, Clone)]
pub struct OnsagerMatrix {
    /// Symmetrized `L`.
    pub l: DMatrix<f64>,
    pub raw: DMatrix<f64>,
    pub asymmetry: f64,
    pub min_eig: f64,
    pub norm: f64,
    pub cond_aoe_hat: f64,
}

impl OnsagerMatrix {
    pub fn is_spsd(&self) -> bool {
        self.min_eig >= -ONSAGER_TOL * self.norm
    }
}

/// Relative tolerance on negative eigenvalues of `L`.
pub const ONSAGER_TOL: f64 = 1e-9;
/// Condition number above which the leading block of `A_oe` counts as singular.
pub const AOE_HAT_COND_LIMIT: f64 = 1e12;

/// Top-right `n_o x n_e` block of `S A` for the oriented normal flux.
pub fn coupling_block(sys: &MomentSystem, orientation: Orientation) -> DMatrix<f64> {
    let sa = &sys.symmetrizer * sys.oriented_flux(orientation);
    let no = sys.n_odd();
    sa.view((0, no), (no, sys.n_even())).into_owned()
}

pub fn onsager_matrix(sys: &MomentSystem, mbc: &MaxwellOperator, chi: f64) -> Result<OnsagerMatrix> {
    let no = sys.n_odd();
    let a_oe = coupling_block(sys, mbc.orientation);
    let a_hat = a_oe.columns(0, no).into_owned();
    let cond_aoe_hat = condition_number(&a_hat);
    if cond_aoe_hat.is_nan() || cond_aoe_hat >= AOE_HAT_COND_LIMIT {
        return Err(Error::SingularAoeHat { cond: cond_aoe_hat });
    }
    let m_hat = mbc.m.columns(0, no).into_owned();
    let inv = a_hat
        .try_inverse()
        .ok_or(Error::SingularAoeHat { cond: cond_aoe_hat })?;
    let raw = m_hat * inv * (2.0 * beta(chi));
    let l = symmetrize(&raw);
    Ok(OnsagerMatrix {
        asymmetry: asymmetry(&raw),
        min_eig: min_sym_eigenvalue(&l),
        norm: l.norm(),
        raw,
        l,
        cond_aoe_hat,
    })
}

#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    pub kind: BoundaryKind,
    pub orientation: Orientation,
    pub chi: f64,
    pub beta: f64,
    pub mbc: MaxwellOperator,
    pub onsager: Option<OnsagerMatrix>,
    /// `S A` coupling block for this orientation.
    pub a_oe: DMatrix<f64>,
    /// `n_o x m`.
    pub b: DMatrix<f64>,
}

impl BoundaryOperator {
    pub fn n_rows(&self) -> usize {
        self.b.nrows()
    }

    /// Right-hand side `2 beta g` for the given wall.
    pub fn rhs(&self, wall: &WallData) -> DVector<f64> {
        self.mbc.inhomogeneity(wall) * (2.0 * self.beta)
    }

    /// `n_o x 4` map from wall data to the right-hand side.
    pub fn data_map(&self) -> DMatrix<f64> {
        &self.mbc.g_map * (2.0 * self.beta)
    }

    /// Odd block of the state prescribed by the boundary relation.
    pub fn odd_part(&self, even: &DVector<f64>, wall: &WallData) -> DVector<f64> {
        let no = self.b.nrows();
        let ne = self.b.ncols() - no;
        -(self.b.view((0, no), (no, ne)) * even) + self.rhs(wall)
    }
}

fn stack_identity(coupling: DMatrix<f64>) -> DMatrix<f64> {
    let no = coupling.nrows();
    let mut b = DMatrix::zeros(no, no + coupling.ncols());
    b.view_mut((0, 0), (no, no)).fill_with_identity();
    b.view_mut((0, no), (no, coupling.ncols())).copy_from(&coupling);
    b
}

/// `B = [I | -2 beta M]`.
pub fn mbc_operator(sys: &MomentSystem, orientation: Orientation, chi: f64) -> Result<BoundaryOperator> {
    validate_chi(chi)?;
    let mbc = assemble_mbc(sys, orientation)?;
    let beta = beta(chi);
    let b = stack_identity(&mbc.m * (-2.0 * beta));
    Ok(BoundaryOperator {
        kind: BoundaryKind::Mbc,
        orientation,
        chi,
        beta,
        a_oe: coupling_block(sys, orientation),
        mbc,
        onsager: None,
        b,
    })
}

/// `B = [I | -L A_oe]`; rejects an `L` that is not positive semi-definite.
pub fn assemble_obc(sys: &MomentSystem, mbc: MaxwellOperator, chi: f64) -> Result<BoundaryOperator> {
    validate_chi(chi)?;
    let onsager = onsager_matrix(sys, &mbc, chi)?;
    if !onsager.is_spsd() {
        return Err(Error::NonOnsager {
            min_eig: onsager.min_eig,
            norm: onsager.norm,
        });
    }
    let a_oe = coupling_block(sys, mbc.orientation);
    let b = stack_identity(-(&onsager.l * &a_oe));
    Ok(BoundaryOperator {
        kind: BoundaryKind::Obc,
        orientation: mbc.orientation,
        chi,
        beta: beta(chi),
        mbc,
        onsager: Some(onsager),
        a_oe,
        b,
    })
}

pub fn boundary_operator(
    sys: &MomentSystem,
    kind: BoundaryKind,
    orientation: Orientation,
    chi: f64,
) -> Result<BoundaryOperator> {
    match kind {
        BoundaryKind::Mbc => mbc_operator(sys, orientation, chi),
        BoundaryKind::Obc => assemble_obc(sys, assemble_mbc(sys, orientation)?, chi),
    }
}

fn validate_chi(chi: f64) -> Result<()> {
    if chi > 0.0 && chi <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "accommodation coefficient must lie in (0, 1], got {chi}"
        )))
    }
}
