//! Steady heat conduction between two resting walls with a volumetric heat
//! source `r(y) = a y^2`, BGK relaxation and Maxwell or Onsager walls.
//!
//! Code units: `rho0 = theta0 = L = 1`, so the relaxation rate is `1/Kn`
//! and the channel is `y in [-1/2, 1/2]` with wall normals along `y`.

mod io;
mod march;
mod steady;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use io::{read_profile_csv, write_profile_csv, write_solution_csv, ProfileTable};
pub use march::{time_march, MarchConfig, MarchOrder, MarchResult};
pub use steady::{interior_residual, solve_steady, steady_system, SteadySystem, WALL_EXTRAPOLATION};

use crate::basis::BasisSet;
use crate::boundary::{BoundaryKind, WallData};
use crate::error::{Error, Result};
use crate::system::{grad_theory_by_name, MomentSystem, MomentTheory, Orientation};
use crate::tensor::{Axis, Reduction};

/// Wall temperature coefficient of the heated-wall setup: `theta_w = 1`.
pub fn poisson_wall_temperature() -> f64 {
    -(1.5f64).sqrt()
}

/// Source amplitude used throughout: `a = sqrt(2/3)`.
pub fn default_source_amplitude() -> f64 {
    (2.0f64 / 3.0).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub theory: MomentTheory,
    pub kn: f64,
    pub chi: f64,
    pub bc: BoundaryKind,
    /// Number of cells; the nodes are `y_i = -1/2 + i/grid`.
    pub grid: usize,
    pub source_amplitude: f64,
    /// `alpha_w^(1)` on both walls.
    pub wall_temperature: f64,
}

impl ChannelConfig {
    pub fn new(theory: MomentTheory, bc: BoundaryKind) -> Self {
        ChannelConfig {
            theory,
            kn: 0.3,
            chi: 1.0,
            bc,
            grid: 512,
            source_amplitude: default_source_amplitude(),
            wall_temperature: poisson_wall_temperature(),
        }
    }

    pub fn named(theory: &str, bc: BoundaryKind) -> Result<Self> {
        Ok(Self::new(grad_theory_by_name(theory, Reduction::Planar)?, bc))
    }

    pub fn validate(&self) -> Result<()> {
        self.theory.validate()?;
        if !(self.kn > 0.0 && self.kn.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Knudsen number must be positive, got {}",
                self.kn
            )));
        }
        if !(self.chi > 0.0 && self.chi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "accommodation coefficient must lie in (0, 1], got {}",
                self.chi
            )));
        }
        if self.grid < 16 {
            return Err(Error::InvalidConfig(format!(
                "grid must have at least 16 cells, got {}",
                self.grid
            )));
        }
        if !self.source_amplitude.is_finite() || !self.wall_temperature.is_finite() {
            return Err(Error::InvalidConfig(
                "source amplitude and wall data must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn wall(&self, orientation: Orientation) -> WallData {
        WallData {
            temperature: self.wall_temperature,
            ..WallData::at_rest(orientation, self.chi)
        }
    }

    pub fn assemble(&self) -> Result<MomentSystem> {
        MomentSystem::assemble(&self.theory, Axis::Y)
    }
}

/// Nodes `y_i = -1/2 + i/N` for `N` cells, walls included.
pub fn grid_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|i| -0.5 + i as f64 / n as f64).collect()
}

/// Heat source `r(y) = a y^2`.
pub fn heat_source(a: f64, y: f64) -> f64 {
    a * y * y
}

/// Projection of the forcing onto the basis: only the temperature slot.
pub fn source_vector(bs: &BasisSet, a: f64, y: f64) -> DVector<f64> {
    let mut f = DVector::zeros(bs.len());
    if let Some(k) = bs.scalar_index(1) {
        f[k] = -(2.0f64 / 3.0).sqrt() * heat_source(a, y);
    }
    f
}

/// Macroscopic fields in code units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fields {
    pub rho: Vec<f64>,
    pub v_y: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma_yy: Vec<f64>,
    pub q_y: Vec<f64>,
}

impl Fields {
    pub const NAMES: [&'static str; 5] = ["rho", "v_y", "theta", "sigma_yy", "q_y"];

    pub fn from_moments(bs: &BasisSet, alpha: &[DVector<f64>]) -> Result<Self> {
        let idx = |i: Option<usize>, name: &'static str| i.ok_or(Error::MissingMoment(name));
        let rho = idx(bs.scalar_index(0), "alpha^(0)")?;
        let vy = idx(bs.vector_index(0, Axis::Y), "alpha_y^(0)")?;
        let th = idx(bs.scalar_index(1), "alpha^(1)")?;
        let col = |k: usize, s: f64| alpha.iter().map(|a| s * a[k]).collect();
        // theories below degree 3 carry no heat flux
        let opt = |k: Option<usize>, s: f64| k.map_or_else(|| vec![0.0; alpha.len()], |k| col(k, s));
        Ok(Fields {
            rho: col(rho, 1.0),
            v_y: col(vy, 1.0),
            theta: col(th, -(2.0f64 / 3.0).sqrt()),
            sigma_yy: opt(bs.index_of(2, 0, "yy"), 2f64.sqrt()),
            q_y: opt(bs.vector_index(1, Axis::Y), -(2.5f64).sqrt()),
        })
    }

    pub fn columns(&self) -> [&Vec<f64>; 5] {
        [&self.rho, &self.v_y, &self.theta, &self.sigma_yy, &self.q_y]
    }

    pub fn columns_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.rho,
            &mut self.v_y,
            &mut self.theta,
            &mut self.sigma_yy,
            &mut self.q_y,
        ]
    }

    /// Pointwise mean of several field sets on the same grid.
    pub fn mean(all: &[&Fields]) -> Fields {
        let mut out = all[0].clone();
        let k = all.len() as f64;
        for (c, col) in out.columns_mut().into_iter().enumerate() {
            for (i, v) in col.iter_mut().enumerate() {
                *v = all.iter().map(|f| f.columns()[c][i]).sum::<f64>() / k;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `q_y(1/2) - q_y(-1/2)`.
    pub flux_balance: f64,
    /// Difference between the flux balance and the integrated source `a/12`.
    pub flux_balance_error: f64,
    pub max_abs_v_y: f64,
    /// Max interior residual relative to the largest source entry.
    pub residual: f64,
    /// Largest moment that is odd in `x` (must vanish without tangential driving).
    pub max_abs_x_odd: f64,
    pub wall_stable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSolution {
    pub theory: String,
    pub bc: BoundaryKind,
    pub y: Vec<f64>,
    pub labels: Vec<String>,
    /// Per-node moments; empty for averaged profiles.
    pub alpha: Vec<Vec<f64>>,
    pub fields: Fields,
    pub diagnostics: Diagnostics,
}

impl ChannelSolution {
    pub fn wall_temperature_jump(&self, wall_theta: f64) -> (f64, f64) {
        let t = &self.fields.theta;
        (t[0] - wall_theta, t[t.len() - 1] - wall_theta)
    }
}

/// Reference profile: pointwise mean over several theories solved on the
/// same grid with the same walls.
pub fn reference_solution(base: &ChannelConfig, theories: &[MomentTheory]) -> Result<ChannelSolution> {
    if theories.is_empty() {
        return Err(Error::InvalidConfig("reference needs at least one theory".into()));
    }
    let runs: Vec<ChannelSolution> = theories
        .iter()
        .map(|t| {
            let cfg = ChannelConfig {
                theory: t.clone(),
                ..base.clone()
            };
            solve_steady(&cfg)
        })
        .collect::<Result<_>>()?;
    Ok(average_solutions(&runs))
}

pub fn average_solutions(runs: &[ChannelSolution]) -> ChannelSolution {
    let fields = Fields::mean(&runs.iter().map(|r| &r.fields).collect::<Vec<_>>());
    let name = runs.iter().map(|r| r.theory.as_str()).collect::<Vec<_>>().join("+");
    let mut diagnostics = Diagnostics {
        wall_stable: runs.iter().all(|r| r.diagnostics.wall_stable),
        ..Default::default()
    };
    let n = fields.q_y.len();
    diagnostics.flux_balance = fields.q_y[n - 1] - fields.q_y[0];
    diagnostics.max_abs_v_y = fields.v_y.iter().fold(0.0, |m, v| m.max(v.abs()));
    ChannelSolution {
        theory: name,
        bc: runs[0].bc,
        y: runs[0].y.clone(),
        labels: Vec::new(),
        alpha: Vec::new(),
        fields,
        diagnostics,
    }
}

/// Pointwise deviation from a reference profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub y: Vec<f64>,
    pub e_theta: Vec<f64>,
    pub e_sigma: Vec<f64>,
}

impl ErrorProfile {
    pub fn between(run: &Fields, reference: &Fields, y: &[f64]) -> Result<Self> {
        if run.theta.len() != reference.theta.len() || run.theta.len() != y.len() {
            return Err(Error::InvalidConfig("profiles are on different grids".into()));
        }
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs()).collect();
        Ok(ErrorProfile {
            y: y.to_vec(),
            e_theta: diff(&run.theta, &reference.theta),
            e_sigma: diff(&run.sigma_yy, &reference.sigma_yy),
        })
    }

    pub fn max_theta(&self) -> f64 {
        self.e_theta.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_sigma(&self) -> f64 {
        self.e_sigma.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Cubic Lagrange interpolation of nodal data at `x`.
pub fn interpolate(y: &[f64], v: &[f64], x: f64) -> f64 {
    let n = y.len();
    let h = (y[n - 1] - y[0]) / (n - 1) as f64;
    let k = (((x - y[0]) / h).floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = 0.0;
    for i in k..k + 4 {
        let mut w = 1.0;
        for j in k..k + 4 {
            if j != i {
                w *= (x - y[j]) / (y[i] - y[j]);
            }
        }
        acc += w * v[i];
    }
    acc
}

/// Observed order `log2(|u_N - u_2N| / |u_2N - u_4N|)` in the max norm,
/// comparing the three profiles on `samples` common points.
pub fn observed_order(coarse: (&[f64], &[f64]), mid: (&[f64], &[f64]), fine: (&[f64], &[f64]), samples: usize) -> f64 {
    let xs: Vec<f64> = (0..samples).map(|i| -0.5 + i as f64 / (samples - 1) as f64).collect();
    let at = |p: (&[f64], &[f64]), x: f64| interpolate(p.0, p.1, x);
    let e1 = xs
        .iter()
        .map(|&x| (at(coarse, x) - at(mid, x)).abs())
        .fold(0.0, f64::max);
    let e2 = xs.iter().map(|&x| (at(mid, x) - at(fine, x)).abs()).fold(0.0, f64::max);
    (e1 / e2).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis_set;
    use crate::system::grad_theory;

    #[test]
    fn source_vector_examples() {
        let bs = build_basis_set(&grad_theory(3, Reduction::Planar), Axis::Y).unwrap();
        let a = default_source_amplitude();
        assert_eq!(source_vector(&bs, a, 0.0).amax(), 0.0);
        let f = source_vector(&bs, a, 0.5);
        let k = bs.scalar_index(1).unwrap();
        assert!((f[k] + 1.0 / 6.0).abs() < 1e-15);
        for (i, v) in f.iter().enumerate() {
            if i != k {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn forcing_projects_only_on_temperature() {
        // F = -sqrt(2/3) r psi^(1) f0: its projection on psi_a is
        // -sqrt(2/3) r <psi_a, psi^(1)>.
        use crate::basis::inner_full;
        let bs = build_basis_set(&grad_theory(4, Reduction::Planar), Axis::Y).unwrap();
        let p1 = &bs.entries[bs.scalar_index(1).unwrap()].poly;
        let f = source_vector(&bs, 1.3, 0.4);
        for (i, e) in bs.entries.iter().enumerate() {
            let expect = -(2.0f64 / 3.0).sqrt() * heat_source(1.3, 0.4) * inner_full(&e.poly, p1);
            assert!((f[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn macroscopic_links_from_reconstruction() {
        // theta = -sqrt(2/3) alpha^(1) follows from the energy moment
        // int (xi^2/3 - 1) f = theta with f = f0 sum alpha psi.
        use crate::basis::{inner_full, Polynomial3};
        let bs = build_basis_set(&grad_theory(3, Reduction::Planar), Axis::Y).unwrap();
        let alpha = DVector::from_fn(bs.len(), |i, _| 0.1 * (i as f64 + 1.0));
        let f = bs.reconstruct(&alpha);
        let fields = Fields::from_moments(&bs, std::slice::from_ref(&alpha)).unwrap();
        let one = Polynomial3::constant(1.0);
        assert!((inner_full(&f, &one) - fields.rho[0]).abs() < 1e-12);
        let vy = Polynomial3::monomial([0, 1, 0], 1.0);
        assert!((inner_full(&f, &vy) - fields.v_y[0]).abs() < 1e-12);
        let energy = Polynomial3::norm_squared()
            .scaled(1.0 / 3.0)
            .add(&Polynomial3::constant(-1.0));
        assert!((inner_full(&f, &energy) - fields.theta[0]).abs() < 1e-12);
        // sigma_yy = int (xi_y^2 - xi^2/3) f, q_y = int xi_y (xi^2/2 - 5/2) f
        let s = Polynomial3::monomial([0, 2, 0], 1.0).add(&Polynomial3::norm_squared().scaled(-1.0 / 3.0));
        assert!((inner_full(&f, &s) - fields.sigma_yy[0]).abs() < 1e-12);
        let q = vy.mul(
            &Polynomial3::norm_squared()
                .scaled(0.5)
                .add(&Polynomial3::constant(-2.5)),
        );
        assert!((inner_full(&f, &q) - fields.q_y[0]).abs() < 1e-12);
    }

    #[test]
    fn averaging_identical_runs_is_identity() {
        let f = Fields {
            rho: vec![0.1, 0.2],
            v_y: vec![0.0, 0.0],
            theta: vec![1.0, 2.0],
            sigma_yy: vec![-0.5, 0.5],
            q_y: vec![0.3, 0.4],
        };
        let m = Fields::mean(&[&f, &f, &f]);
        for (a, b) in m.columns().iter().zip(f.columns()) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15));
        }
    }

    #[test]
    fn mean_lies_in_envelope() {
        let mk = |s: f64| Fields {
            rho: vec![s, -s],
            v_y: vec![0.0; 2],
            theta: vec![1.0 + s, 2.0 * s],
            sigma_yy: vec![s * s, -s],
            q_y: vec![s, s],
        };
        let (a, b, c) = (mk(0.1), mk(-0.4), mk(0.7));
        let m = Fields::mean(&[&a, &b, &c]);
        for k in 0..5 {
            for i in 0..2 {
                let vals = [a.columns()[k][i], b.columns()[k][i], c.columns()[k][i]];
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(m.columns()[k][i] >= lo - 1e-15 && m.columns()[k][i] <= hi + 1e-15);
            }
        }
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let y = grid_nodes(19);
        let v: Vec<f64> = y.iter().map(|x| 1.0 - 2.0 * x + 3.0 * x.powi(3)).collect();
        for x in [-0.5, -0.31, 0.0, 0.27, 0.5] {
            assert!((interpolate(&y, &v, x) - (1.0 - 2.0 * x + 3.0 * x.powi(3))).abs() < 1e-13);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ChannelConfig::named("G20", BoundaryKind::Obc).unwrap();
        assert!(cfg.validate().is_ok());
        cfg.kn = -1.0;
        assert!(cfg.validate().is_err());
        cfg.kn = 0.3;
        cfg.grid = 8;
        assert!(cfg.validate().is_err());
    }
}
