use std::collections::BTreeMap;

use super::poly::Polynomial3;
use crate::tensor::MultiIndex;

/// Radial factor `L_s^(n)(x)` written as `2^{n/2} x^{n/2} * sum_p c_p x^p`.
///
/// The normalisation constant is folded into `coefficients`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPolynomial {
    pub rank: usize,
    pub radial: usize,
    pub coefficients: Vec<f64>,
}

impl RadialPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        let poly: f64 = self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
        (2.0 * x).powf(self.rank as f64 / 2.0) * poly
    }

    /// `sum_p c_p (|xi|^2 / 2)^p` as a polynomial in velocity.
    pub fn reduced_in_velocity(&self) -> Polynomial3 {
        let half_r2 = Polynomial3::norm_squared().scaled(0.5);
        let mut out = Polynomial3::zero();
        let mut power = Polynomial3::constant(1.0);
        for c in &self.coefficients {
            out = out.add(&power.scaled(*c));
            power = power.mul(&half_r2);
        }
        out
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Associated Laguerre radial factor with its orthonormalising constant
/// `sqrt(G(n+3/2) / (n! s! G(n+s+3/2)))`.
pub fn laguerre_radial(rank: usize, radial: usize) -> RadialPolynomial {
    let n = rank as f64;
    // G(n+s+3/2) / G(n+p+3/2) = prod_{j=p}^{s-1} (n + j + 3/2)
    let gamma_ratio = |p: usize| -> f64 { (p..radial).map(|j| n + j as f64 + 1.5).product() };
    let norm = (1.0 / (factorial(rank) * factorial(radial) * gamma_ratio(0))).sqrt();
    let coefficients = (0..=radial)
        .map(|p| {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            norm * sign * gamma_ratio(p) * binomial(radial, p)
        })
        .collect();
    RadialPolynomial {
        rank,
        radial,
        coefficients,
    }
}

/// Term `c * x^a y^b z^c * r^{-k}` keyed by `(exponents, k)`.
type RationalTerms = BTreeMap<([u32; 3], u32), f64>;

fn differentiate(terms: &RationalTerms, axis: usize) -> RationalTerms {
    let mut out = RationalTerms::new();
    for (&(e, k), &c) in terms {
        if e[axis] > 0 {
            let mut e1 = e;
            e1[axis] -= 1;
            *out.entry((e1, k)).or_insert(0.0) += c * e[axis] as f64;
        }
        let mut e2 = e;
        e2[axis] += 1;
        *out.entry((e2, k + 2)).or_insert(0.0) -= c * k as f64;
    }
    out.retain(|_, c| *c != 0.0);
    out
}

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `|xi|^n nu_t(xi)`: the trace-free tensor `nu_t` made polynomial.
///
/// Computed from `(-1)^n/(2n-1)!! |x|^{n+1} d^n(1/|x|)` by symbolic
/// differentiation on terms `c x^a y^b z^c |x|^{-k}`.
pub fn harmonic_tensor(t: &MultiIndex) -> Polynomial3 {
    let n = t.rank();
    let mut terms = RationalTerms::new();
    terms.insert(([0, 0, 0], 1), 1.0);
    for axis in t.axes() {
        terms = differentiate(&terms, axis.index());
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let scale = sign / double_factorial(2 * n as i64 - 1);

    let r2 = Polynomial3::norm_squared();
    let mut out = Polynomial3::zero();
    for ((e, k), c) in terms {
        // monomial degree - k = -(n+1); multiply by r^{2n+1}
        let power = 2 * n as i64 + 1 - k as i64;
        debug_assert!(power >= 0 && power % 2 == 0);
        let p = Polynomial3::monomial(e, c * scale).mul(&r2.pow((power / 2) as u32));
        out = out.add(&p);
    }
    // drop round-off cancellations
    let tol = 1e-13 * out.max_coefficient().max(1.0);
    let mut clean = Polynomial3::zero();
    for (e, c) in out.terms() {
        if c.abs() > tol {
            clean.add_term(*e, *c);
        }
    }
    clean
}

/// `psi^(s)_t` as a polynomial in the nondimensional velocity.
pub fn basis_polynomial(t: &MultiIndex, radial: usize) -> Polynomial3 {
    laguerre_radial(t.rank(), radial)
        .reduced_in_velocity()
        .mul(&harmonic_tensor(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::poly::inner_full;

    #[test]
    fn radial_examples() {
        let l00 = laguerre_radial(0, 0);
        assert_eq!(l00.coefficients, [1.0]);

        // sqrt(2/3) (3/2 - x)
        let l01 = laguerre_radial(0, 1);
        let c = (2.0f64 / 3.0).sqrt();
        assert!((l01.coefficients[0] - 1.5 * c).abs() < 1e-15);
        assert!((l01.coefficients[1] + c).abs() < 1e-15);

        // sqrt(2) x
        let l20 = laguerre_radial(2, 0);
        for x in [0.3, 1.0, 2.5] {
            assert!((l20.eval(x) - 2f64.sqrt() * x).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_matches_direct_gamma_formula() {
        // Oracle: the textbook formula with explicit Gamma values.
        fn gamma_half(k2: usize) -> f64 {
            // Gamma(k2 / 2) for odd k2 via recursion from Gamma(1/2)
            let mut g = std::f64::consts::PI.sqrt();
            let mut a = 0.5;
            while (2.0 * a) < k2 as f64 - 0.5 {
                g *= a;
                a += 1.0;
            }
            g
        }
        for n in 0..5usize {
            for s in 0..4usize {
                let l = laguerre_radial(n, s);
                let norm =
                    (gamma_half(2 * n + 3) / (factorial(n) * factorial(s) * gamma_half(2 * n + 2 * s + 3))).sqrt();
                for x in [0.2f64, 0.9, 1.7] {
                    let sum: f64 = (0..=s)
                        .map(|p| {
                            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                            sign * gamma_half(2 * n + 2 * s + 3) / gamma_half(2 * n + 2 * p + 3)
                                * binomial(s, p)
                                * x.powi(p as i32)
                        })
                        .sum();
                    let direct = (2.0 * x).powf(n as f64 / 2.0) * norm * sum;
                    assert!((l.eval(x) - direct).abs() < 1e-12 * direct.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn harmonic_examples() {
        let x = harmonic_tensor(&MultiIndex::parse("x").unwrap());
        assert_eq!(x, Polynomial3::monomial([1, 0, 0], 1.0));

        let xx = harmonic_tensor(&MultiIndex::parse("xx").unwrap());
        let expect = Polynomial3::monomial([2, 0, 0], 1.0).add(&Polynomial3::norm_squared().scaled(-1.0 / 3.0));
        for (e, c) in expect.terms() {
            assert!((xx.coefficient(*e) - c).abs() < 1e-15);
        }
        assert_eq!(harmonic_tensor(&MultiIndex::SCALAR), Polynomial3::constant(1.0));
    }

    #[test]
    fn harmonic_is_trace_free() {
        for n in 2..=6 {
            for m in crate::tensor::multisets(n - 2) {
                let mut sum = Polynomial3::zero();
                for axis in crate::tensor::Axis::ALL {
                    sum = sum.add(&harmonic_tensor(&m.with(axis, 2)));
                }
                assert!(sum.max_coefficient() < 1e-12, "rank {n} m={m}");
            }
        }
    }

    #[test]
    fn harmonic_is_homogeneous_degree_n() {
        for n in 0..=6 {
            for m in crate::tensor::multisets(n) {
                let h = harmonic_tensor(&m);
                assert!(h.terms().all(|(e, _)| e.iter().sum::<u32>() == n as u32));
            }
        }
    }

    #[test]
    fn normalised_scalar_radials() {
        for s in 0..5 {
            let p = basis_polynomial(&MultiIndex::SCALAR, s);
            assert!((inner_full(&p, &p) - 1.0).abs() < 1e-12);
        }
    }
}
