//! Finite-volume time integration of the channel problem.
//!
//! Upwind fluxes from the characteristic split of `A_y`, Godunov boundary
//! states that keep the outgoing characteristics and fix the incoming ones
//! through `B alpha = 2 beta g`, BGK relaxation and SSP-RK3 in time.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ChannelConfig, Fields};
use crate::boundary::{boundary_operator, BoundaryOperator};
use crate::error::{Error, Result};
use crate::system::{characteristic_decomposition, MomentSystem, Orientation};
use crate::tensor::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarchOrder {
    /// Piecewise constant states.
    First,
    /// Unlimited linear reconstruction.
    Second,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarchConfig {
    pub cells: usize,
    pub cfl: f64,
    /// Final time in units of the crossing time `1 / lambda_max`.
    pub crossing_times: f64,
    pub order: MarchOrder,
    /// Stop early once `max |d alpha/dt|` drops below this.
    pub steady_tol: Option<f64>,
    /// Seed for a random smooth initial state; `None` starts from rest.
    pub initial_seed: Option<u64>,
}

impl Default for MarchConfig {
    fn default() -> Self {
        MarchConfig {
            cells: 128,
            cfl: 0.4,
            crossing_times: 10.0,
            order: MarchOrder::First,
            steady_tol: None,
            initial_seed: None,
        }
    }
}

impl MarchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells < 8 {
            return Err(Error::InvalidConfig(format!(
                "need at least 8 cells, got {}",
                self.cells
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "CFL must lie in (0, 0.5], got {}",
                self.cfl
            )));
        }
        if !(self.crossing_times > 0.0 && self.crossing_times.is_finite()) {
            return Err(Error::InvalidConfig("final time must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarchResult {
    pub centers: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub fields: Fields,
    pub times: Vec<f64>,
    /// `sum_j h alpha_j^T S alpha_j` after every step.
    pub energies: Vec<f64>,
    pub crossing_time: f64,
    pub dt: f64,
    pub steps: usize,
    /// Largest single-step energy increase relative to the initial energy.
    pub max_relative_increase: f64,
    /// `max |d alpha/dt|` at the final state.
    pub final_rate: f64,
}

/// Row-major dense matrix for the inner loops.
struct Mat {
    n: usize,
    c: usize,
    v: Vec<f64>,
}

impl Mat {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut v = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                v.push(m[(i, j)]);
            }
        }
        Mat {
            n: m.nrows(),
            c: m.ncols(),
            v,
        }
    }

    /// `out += self * x`
    fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.v.chunks_exact(self.c)) {
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Boundary state map `alpha_b = G alpha_in + c`.
struct WallMap {
    g: Mat,
    c: Vec<f64>,
}

fn wall_map(sys: &MomentSystem, op: &BoundaryOperator, rhs: &DVector<f64>, o: Orientation) -> Result<WallMap> {
    let dec = characteristic_decomposition(sys, o)?;
    let modes = dec.moment_modes(&dec.x_minus);
    if modes.ncols() != op.b.nrows() {
        return Err(Error::BoundaryRowCount {
            rows: op.b.nrows(),
            expected: modes.ncols(),
        });
    }
    let k = (&op.b * &modes)
        .try_inverse()
        .ok_or(Error::SingularSystem { pivot: 0 })?;
    let mk = &modes * k;
    let g = DMatrix::identity(sys.len(), sys.len()) - &mk * &op.b;
    let c = &mk * rhs;
    Ok(WallMap {
        g: Mat::from(&g),
        c: c.iter().copied().collect(),
    })
}

struct Scheme {
    m: usize,
    cells: usize,
    h: f64,
    a: Mat,
    a_plus: Mat,
    a_minus: Mat,
    relax: Vec<f64>,
    source: Vec<Vec<f64>>,
    lower: WallMap,
    upper: WallMap,
    order: MarchOrder,
}

impl Scheme {
    fn face_states(&self, u: &[Vec<f64>], j: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.cells;
        match self.order {
            MarchOrder::First => (u[j].clone(), u[j].clone()),
            MarchOrder::Second => {
                let slope: Vec<f64> = (0..self.m)
                    .map(|k| {
                        if j == 0 {
                            u[1][k] - u[0][k]
                        } else if j == n - 1 {
                            u[n - 1][k] - u[n - 2][k]
                        } else {
                            0.5 * (u[j + 1][k] - u[j - 1][k])
                        }
                    })
                    .collect();
                let lo = (0..self.m).map(|k| u[j][k] - 0.5 * slope[k]).collect();
                let hi = (0..self.m).map(|k| u[j][k] + 0.5 * slope[k]).collect();
                (lo, hi)
            }
        }
    }

    fn rate(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (m, n) = (self.m, self.cells);
        let faces: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|j| self.face_states(u, j)).collect();
        let wall_flux = |w: &WallMap, inner: &[f64]| {
            let mut b = w.c.clone();
            w.g.mul_add(inner, &mut b);
            let mut f = vec![0.0; m];
            self.a.mul_add(&b, &mut f);
            f
        };
        let mut flux = Vec::with_capacity(n + 1);
        flux.push(wall_flux(&self.lower, &faces[0].0));
        for j in 0..n - 1 {
            let mut f = vec![0.0; m];
            self.a_plus.mul_add(&faces[j].1, &mut f);
            self.a_minus.mul_add(&faces[j + 1].0, &mut f);
            flux.push(f);
        }
        flux.push(wall_flux(&self.upper, &faces[n - 1].1));
        (0..n)
            .map(|j| {
                (0..m)
                    .map(|k| -(flux[j + 1][k] - flux[j][k]) / self.h - self.relax[k] * u[j][k] + self.source[j][k])
                    .collect()
            })
            .collect()
    }
}

fn energy(s: &Mat, u: &[Vec<f64>], h: f64) -> f64 {
    let mut tmp = vec![0.0; s.n];
    let mut e = 0.0;
    for a in u {
        tmp.iter_mut().for_each(|t| *t = 0.0);
        s.mul_add(a, &mut tmp);
        e += tmp.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
    }
    h * e
}

fn axpy(out: &mut [Vec<f64>], a: f64, x: &[Vec<f64>], b: f64, y: &[Vec<f64>], c: f64, r: &[Vec<f64>]) {
    for j in 0..out.len() {
        for k in 0..out[j].len() {
            out[j][k] = a * x[j][k] + b * y[j][k] + c * r[j][k];
        }
    }
}

/// Integrates from the initial state to `crossing_times / lambda_max`.
pub fn time_march(cfg: &ChannelConfig, march: &MarchConfig) -> Result<MarchResult> {
    cfg.validate()?;
    march.validate()?;
    let sys = cfg.assemble()?;
    let m = sys.len();
    let n = march.cells;
    let h = 1.0 / n as f64;
    let centers: Vec<f64> = (0..n).map(|j| -0.5 + (j as f64 + 0.5) * h).collect();

    let up = Orientation::plus(Axis::Y);
    let down = Orientation::minus(Axis::Y);
    let dec = characteristic_decomposition(&sys, up)?;
    let (a_plus, a_minus) = dec.flux_split();
    let lower_op = boundary_operator(&sys, cfg.bc, down, cfg.chi)?;
    let upper_op = boundary_operator(&sys, cfg.bc, up, cfg.chi)?;
    let lower = wall_map(&sys, &lower_op, &lower_op.rhs(&cfg.wall(down)), down)?;
    let upper = wall_map(&sys, &upper_op, &upper_op.rhs(&cfg.wall(up)), up)?;

    let theta = sys.basis.scalar_index(1);
    let a_src = cfg.source_amplitude;
    let source = centers
        .iter()
        .map(|&y| {
            let mut f = vec![0.0; m];
            if let Some(k) = theta {
                let avg = a_src * ((y + 0.5 * h).powi(3) - (y - 0.5 * h).powi(3)) / (3.0 * h);
                f[k] = -(2.0f64 / 3.0).sqrt() * avg;
            }
            f
        })
        .collect();

    let scheme = Scheme {
        m,
        cells: n,
        h,
        a: Mat::from(sys.flux(Axis::Y)),
        a_plus: Mat::from(&a_plus),
        a_minus: Mat::from(&a_minus),
        relax: sys.bgk.diagonal().iter().map(|p| p / cfg.kn).collect(),
        source,
        lower,
        upper,
        order: march.order,
    };
    let s = Mat::from(&sys.symmetrizer);

    let lambda_max = dec.spectral_radius;
    let crossing_time = 1.0 / lambda_max;
    let t_end = march.crossing_times * crossing_time;
    let dt_nominal = march.cfl * (h / lambda_max).min(cfg.kn);
    let steps = (t_end / dt_nominal).ceil() as usize;
    let dt = t_end / steps as f64;

    let mut u: Vec<Vec<f64>> = match march.initial_seed {
        None => vec![vec![0.0; m]; n],
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amp: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shift: Vec<f64> = (0..m).map(|_| rng.random_range(-0.2..0.2)).collect();
            centers
                .iter()
                .map(|&y| {
                    (0..m)
                        .map(|k| amp[k] * (-((y - shift[k]) / 0.15).powi(2)).exp())
                        .collect()
                })
                .collect()
        }
    };

    let e0 = energy(&s, &u, h);
    let mut energies = vec![e0];
    let mut times = vec![0.0];
    let mut max_inc: f64 = 0.0;
    let mut u1 = u.clone();
    let mut u2 = u.clone();
    let mut final_rate = f64::INFINITY;
    let mut taken = 0;
    for step in 0..steps {
        let r0 = scheme.rate(&u);
        if let Some(tol) = march.steady_tol {
            final_rate = r0.iter().flatten().fold(0.0, |a, v| a.max(v.abs()));
            if final_rate < tol {
                break;
            }
        }
        axpy(&mut u1, 1.0, &u, 0.0, &u, dt, &r0);
        let r1 = scheme.rate(&u1);
        axpy(&mut u2, 0.75, &u, 0.25, &u1, 0.25 * dt, &r1);
        let r2 = scheme.rate(&u2);
        let un = u.clone();
        axpy(&mut u, 1.0 / 3.0, &un, 2.0 / 3.0, &u2, 2.0 / 3.0 * dt, &r2);

        let e = energy(&s, &u, h);
        if !e.is_finite() {
            return Err(Error::EnergyBlowUp {
                initial: e0,
                observed: e,
            });
        }
        let prev = *energies.last().unwrap();
        if e0 > 0.0 {
            max_inc = max_inc.max((e - prev) / e0);
        }
        energies.push(e);
        times.push((step + 1) as f64 * dt);
        taken = step + 1;
    }
    if march.steady_tol.is_none() || final_rate.is_infinite() {
        final_rate = scheme.rate(&u).iter().flatten().fold(0.0, |a, v| a.max(v.abs()));
    }

    let alpha_vec: Vec<DVector<f64>> = u.iter().map(|a| DVector::from_column_slice(a)).collect();
    let fields = Fields::from_moments(&sys.basis, &alpha_vec)?;
    Ok(MarchResult {
        centers,
        alpha: u,
        fields,
        times,
        energies,
        crossing_time,
        dt,
        steps: taken,
        max_relative_increase: max_inc,
        final_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryKind;

    fn quiet(theory: &str, bc: BoundaryKind) -> ChannelConfig {
        let mut cfg = ChannelConfig::named(theory, bc).unwrap();
        cfg.source_amplitude = 0.0;
        cfg.wall_temperature = 0.0;
        cfg
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let cfg = quiet("G20", BoundaryKind::Obc);
        let r = time_march(
            &cfg,
            &MarchConfig {
                cells: 16,
                crossing_times: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.energies.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn obc_energy_decays() {
        let cfg = quiet("G20", BoundaryKind::Obc);
        let r = time_march(
            &cfg,
            &MarchConfig {
                cells: 32,
                crossing_times: 3.0,
                initial_seed: Some(7),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.max_relative_increase <= 1e-12, "{}", r.max_relative_increase);
        assert!(r.energies.last().unwrap() < &r.energies[0]);
    }

    #[test]
    fn invalid_march_config() {
        let cfg = quiet("G20", BoundaryKind::Obc);
        let bad = MarchConfig {
            cfl: 2.0,
            ..Default::default()
        };
        assert!(time_march(&cfg, &bad).is_err());
    }
}
