use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::tensor::Axis;

/// Sparse polynomial in the three velocity components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial3 {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Polynomial3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(exp: [u32; 3], c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, c);
        p
    }

    /// `|xi|^2 = x^2 + y^2 + z^2`.
    pub fn norm_squared() -> Self {
        let mut p = Self::zero();
        p.add_term([2, 0, 0], 1.0);
        p.add_term([0, 2, 0], 1.0);
        p.add_term([0, 0, 2], 1.0);
        p
    }

    pub fn add_term(&mut self, exp: [u32; 3], c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(exp).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&exp);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; 3], &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn coefficient(&self, exp: [u32; 3]) -> f64 {
        self.terms.get(&exp).copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut p = Self::zero();
        for (e, v) in &self.terms {
            p.add_term(*e, v * c);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (e, v) in &other.terms {
            p.add_term(*e, *v);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                p.add_term([a[0] + b[0], a[1] + b[1], a[2] + b[2]], u * v);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut p = Self::constant(1.0);
        for _ in 0..k {
            p = p.mul(self);
        }
        p
    }

    /// The polynomial with `xi_axis` replaced by `-xi_axis`.
    pub fn reflect(&self, axis: Axis) -> Self {
        let mut p = Self::zero();
        let i = axis.index();
        for (e, v) in &self.terms {
            let s = if e[i] % 2 == 1 { -1.0 } else { 1.0 };
            p.add_term(*e, s * v);
        }
        p
    }

    pub fn eval(&self, xi: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * xi[0].powi(e[0] as i32) * xi[1].powi(e[1] as i32) * xi[2].powi(e[2] as i32))
            .sum()
    }

    /// Largest absolute coefficient.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bitmask of axes along which every exponent is odd, if the polynomial
    /// has a definite parity in each axis.
    pub fn parity_mask(&self) -> Option<u8> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let mask = mask_of(first);
        it.all(|e| mask_of(e) == mask).then_some(mask)
    }
}

fn mask_of(e: &[u32; 3]) -> u8 {
    (e[0] % 2) as u8 | (((e[1] % 2) as u8) << 1) | (((e[2] % 2) as u8) << 2)
}

/// Which part of velocity space an integral runs over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Full,
    /// `sign * xi_axis > 0`.
    Half {
        axis: Axis,
        sign: f64,
    },
}

const MAX_MOMENT: usize = 48;

/// Moments of the standard normal distribution, per axis.
///
/// Full moments are `(k-1)!!` for even `k`; half-line moments obey
/// `h_0 = 1/2`, `h_1 = 1/sqrt(2 pi)`, `h_k = (k-1) h_{k-2}`.
#[derive(Debug, Clone)]
pub struct GaussianMoments {
    full: [f64; MAX_MOMENT],
    half: [f64; MAX_MOMENT],
}

impl Default for GaussianMoments {
    fn default() -> Self {
        Self::new()
    }
}

impl GaussianMoments {
    pub fn new() -> Self {
        let mut full = [0.0; MAX_MOMENT];
        let mut half = [0.0; MAX_MOMENT];
        full[0] = 1.0;
        half[0] = 0.5;
        half[1] = 1.0 / (2.0 * PI).sqrt();
        for k in 2..MAX_MOMENT {
            full[k] = (k - 1) as f64 * full[k - 2];
            half[k] = (k - 1) as f64 * half[k - 2];
        }
        GaussianMoments { full, half }
    }

    pub fn full(&self, k: u32) -> f64 {
        self.full[k as usize]
    }

    /// `int_{sign*x > 0} x^k N(x) dx`.
    pub fn half(&self, k: u32, sign: f64) -> f64 {
        let h = self.half[k as usize];
        if sign < 0.0 && k % 2 == 1 {
            -h
        } else {
            h
        }
    }

    fn monomial(&self, e: [u32; 3], domain: Domain) -> f64 {
        match domain {
            Domain::Full => self.full(e[0]) * self.full(e[1]) * self.full(e[2]),
            Domain::Half { axis, sign } => {
                let n = axis.index();
                (0..3)
                    .map(|i| if i == n { self.half(e[i], sign) } else { self.full(e[i]) })
                    .product()
            }
        }
    }

    /// `<p, xi^shift q>` against the unit-mass Maxwellian weight.
    pub fn inner(&self, p: &Polynomial3, q: &Polynomial3, shift: [u32; 3], domain: Domain) -> f64 {
        if domain == Domain::Full {
            if let (Some(a), Some(b)) = (p.parity_mask(), q.parity_mask()) {
                if a ^ b ^ mask_of(&shift) != 0 {
                    return 0.0;
                }
            }
        }
        let mut acc = 0.0;
        for (a, u) in p.terms() {
            for (b, v) in q.terms() {
                let e = [a[0] + b[0] + shift[0], a[1] + b[1] + shift[1], a[2] + b[2] + shift[2]];
                acc += u * v * self.monomial(e, domain);
            }
        }
        acc
    }
}

/// `<p, q>` over all of velocity space with weight `f0 / rho0`.
pub fn inner_full(p: &Polynomial3, q: &Polynomial3) -> f64 {
    GaussianMoments::new().inner(p, q, [0; 3], Domain::Full)
}

/// `<p, q>` over the half space `xi_axis > 0`.
pub fn inner_half(p: &Polynomial3, q: &Polynomial3, axis: Axis) -> f64 {
    GaussianMoments::new().inner(p, q, [0; 3], Domain::Half { axis, sign: 1.0 })
}
