//! Integer-parameter incomplete beta functions.
//!
//! `β(w; a, b) = ∫_0^w t^(a-1) (1-t)^(b-1) dt` for integers `a ≥ 1` and `b`,
//! the shifted `β₀ = β - C_{a,b}` whose `w → 1⁻` behaviour is purely a
//! power/log singularity, and the rational constants `C_{a,b}`.
//!
//! Evaluation never integrates numerically. Near `w = 0` the positive power
//! series in `w` is summed; near `w = 1` the finite closed form in `1 - w`
//! is used, so neither branch suffers cancellation.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Exact rationals used for `C_{a,b}`.
pub type Rational = Ratio<i128>;

/// Below this the power series in `w` is used, above it the closed form in
/// `1 - w`.
const SERIES_SWITCH: f64 = 0.5;
const SERIES_MAX_TERMS: usize = 4000;

/// Parameters of `β(w; a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    w: f64,
    a: u32,
    b: i32,
}

impl BetaParams {
    /// Accepts `0 ≤ w < 1`, and also `w = 1` when `b > 0` where the
    /// integral is finite.
    pub fn new(w: f64, a: u32, b: i32) -> Result<Self> {
        if a == 0 {
            return Err(Error::Domain("incomplete beta requires a >= 1".into()));
        }
        if !(w >= 0.0) || w > 1.0 || (w == 1.0 && b <= 0) {
            return Err(Error::Domain(format!(
                "incomplete beta argument w = {w} outside [0, 1) for b = {b}"
            )));
        }
        Ok(Self { w, a, b })
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn a(&self) -> u32 {
        self.a
    }
    pub fn b(&self) -> i32 {
        self.b
    }
}

/// Binomial coefficient, zero when `j` is outside `[0, n]`.
pub fn binomial(n: u32, j: i64) -> i128 {
    if j < 0 || j > n as i64 {
        return 0;
    }
    let j = j.min(n as i64 - j) as i128;
    let n = n as i128;
    let mut acc: i128 = 1;
    for i in 0..j {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `C_{a,b} = Σ_{0≤j≤a-1, j≠-b} binom(a-1, j) (-1)^j / (j + b)`, exact.
/// Equals the complete beta value `B(a, b)` whenever `b > 0`.
pub fn c_const(a: u32, b: i32) -> Rational {
    assert!(a >= 1, "c_const requires a >= 1");
    let mut sum = Rational::from_integer(0);
    for j in 0..a as i64 {
        let den = j + b as i64;
        if den == 0 {
            continue;
        }
        let sign = if j % 2 == 0 { 1 } else { -1 };
        sum += Rational::new(sign * binomial(a - 1, j), den as i128);
    }
    sum
}

pub fn c_const_f64(a: u32, b: i32) -> f64 {
    rational_to_f64(c_const(a, b))
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `β(w; a, b)`.
pub fn incomplete_beta(p: BetaParams) -> f64 {
    let BetaParams { w, a, b } = p;
    if w <= SERIES_SWITCH {
        beta_series(w, a, b)
    } else {
        beta0_tail(1.0 - w, a, b) + c_const_f64(a, b)
    }
}

/// `β₀(w; a, b) = β(w; a, b) - C_{a,b}`.
pub fn beta0(p: BetaParams) -> f64 {
    let BetaParams { w, a, b } = p;
    if w <= SERIES_SWITCH {
        beta_series(w, a, b) - c_const_f64(a, b)
    } else {
        beta0_tail(1.0 - w, a, b)
    }
}

/// Convenience wrapper validating the parameters.
pub fn beta0_at(w: f64, a: u32, b: i32) -> Result<f64> {
    Ok(beta0(BetaParams::new(w, a, b)?))
}

/// Convenience wrapper validating the parameters.
pub fn incomplete_beta_at(w: f64, a: u32, b: i32) -> Result<f64> {
    Ok(incomplete_beta(BetaParams::new(w, a, b)?))
}

/// `β(·; a, b)` with `C_{a,b}` precomputed, for repeated evaluation at many
/// arguments. Arguments are `w` and an independently computed `r = 1 - w`.
#[derive(Debug, Clone, Copy)]
pub struct BetaKernel {
    a: u32,
    b: i32,
    c: f64,
}

impl BetaKernel {
    pub fn new(a: u32, b: i32) -> Result<Self> {
        if a == 0 {
            return Err(Error::Domain("incomplete beta requires a >= 1".into()));
        }
        Ok(Self { a, b, c: c_const_f64(a, b) })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    fn check(&self, w: f64, r: f64) -> Result<()> {
        if !(w >= 0.0) || !(r >= 0.0) || (r == 0.0 && self.b <= 0) {
            return Err(Error::Domain(format!(
                "incomplete beta argument w = {w} (1 - w = {r}) outside the domain for b = {}",
                self.b
            )));
        }
        Ok(())
    }

    pub fn beta(&self, w: f64, r: f64) -> Result<f64> {
        self.check(w, r)?;
        Ok(if w <= SERIES_SWITCH {
            beta_series(w, self.a, self.b)
        } else {
            beta0_tail(r, self.a, self.b) + self.c
        })
    }

    pub fn beta0(&self, w: f64, r: f64) -> Result<f64> {
        self.check(w, r)?;
        Ok(if w <= SERIES_SWITCH {
            beta_series(w, self.a, self.b) - self.c
        } else {
            beta0_tail(r, self.a, self.b)
        })
    }
}

/// Power series in `w`, all terms of one sign.
///
/// For `b ≤ 0`, `(1-t)^(b-1) = Σ binom(i-b, i) t^i` and
/// `β = Σ binom(i-b, i) w^(a+i)/(a+i)`. For `b > 0` the hypergeometric form
/// `β = w^a (1-w)^b / a · Σ (a+b)_n/(a+1)_n w^n` is used.
fn beta_series(w: f64, a: u32, b: i32) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let af = a as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    if b <= 0 {
        // term_i = binom(i-b, i) w^(a+i)/(a+i), relative to term_0
        let nb = -(b as f64);
        for i in 0..SERIES_MAX_TERMS {
            let i = i as f64;
            term *= (i + 1.0 + nb) / (i + 1.0) * w * (af + i) / (af + i + 1.0);
            sum += term;
            if term <= f64::EPSILON * 0.25 * sum {
                break;
            }
        }
        w.powi(a as i32) / af * sum
    } else {
        let bf = b as f64;
        for n in 0..SERIES_MAX_TERMS {
            let n = n as f64;
            term *= (af + bf + n) / (af + 1.0 + n) * w;
            sum += term;
            if term <= f64::EPSILON * 0.25 * sum {
                break;
            }
        }
        w.powi(a as i32) * (1.0 - w).powi(b) / af * sum
    }
}

/// Closed form of `β₀` in `r = 1 - w`:
/// `-Σ_{j≠-b} binom(a-1,j)(-1)^j r^(j+b)/(j+b) - [0≤-b≤a-1] binom(a-1,-b)(-1)^b ln r`.
///
/// For `b > 0` this is `-β(r; b, a)`, which is summed by the positive
/// series instead to avoid alternating cancellation.
fn beta0_tail(r: f64, a: u32, b: i32) -> f64 {
    if b > 0 {
        return -beta_series(r, b as u32, a as i32);
    }
    let mut sum = 0.0;
    for j in 0..a as i64 {
        let e = j + b as i64;
        let coeff = binomial(a - 1, j) as f64 * if j % 2 == 0 { 1.0 } else { -1.0 };
        if e == 0 {
            sum -= coeff * r.ln();
        } else {
            sum -= coeff * r.powi(e as i32) / e as f64;
        }
    }
    sum
}

/// `n!/m!` as a product of the integers between them.
pub fn factorial_ratio(n: i64, m: i64) -> Result<f64> {
    if n < 0 || m < 0 {
        return Err(Error::Domain(format!("factorial of negative integer in {n}!/{m}!")));
    }
    let (hi, lo, invert) = if n >= m { (n, m, false) } else { (m, n, true) };
    let mut acc = 1.0;
    for i in lo + 1..=hi {
        acc *= i as f64;
    }
    Ok(if invert { 1.0 / acc } else { acc })
}

/// `n!` as a float.
pub fn factorial(n: i64) -> Result<f64> {
    factorial_ratio(n, 0)
}

/// Falling factorial `n (n-1) ... (n-len+1)` for any integer `n`.
pub fn falling_factorial(n: i64, len: u32) -> f64 {
    (0..len as i64).map(|i| (n - i) as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    /// Recursive bisection with a 20-point Gauss-Legendre rule on each
    /// panel, accepted when the two halves agree with the whole.
    fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let rule = gauss_quad::GaussLegendre::new(std::num::NonZeroUsize::new(20).unwrap());
        let whole = rule.integrate(a, b, f);
        let m = 0.5 * (a + b);
        let halves = rule.integrate(a, m, f) + rule.integrate(m, b, f);
        if depth == 0 || (halves - whole).abs() <= tol * halves.abs().max(1e-300) {
            halves
        } else {
            adaptive_gauss(f, a, m, tol, depth - 1) + adaptive_gauss(f, m, b, tol, depth - 1)
        }
    }

    fn beta_by_quadrature(w: f64, a: u32, b: i32) -> f64 {
        let f = move |t: f64| t.powi(a as i32 - 1) * (1.0 - t).powi(b - 1);
        adaptive_gauss(&f, 0.0, w, 1e-14, 30)
    }

    fn c_const_direct(a: u32, b: i32) -> f64 {
        (0..a as i32)
            .filter(|j| j + b != 0)
            .map(|j| binomial(a - 1, j as i64) as f64 * (-1f64).powi(j) / (j + b) as f64)
            .sum()
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(3, -1), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }

    #[test]
    fn c_const_examples() {
        assert_eq!(c_const(1, 1), Rational::from_integer(1));
        assert_eq!(c_const(3, 1), Rational::new(1, 3));
        assert_eq!(c_const(2, -1), Rational::from_integer(-1));
        for a in 1..8 {
            for b in -7..8 {
                assert!((c_const_f64(a, b) - c_const_direct(a, b)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn c_const_is_complete_beta_for_positive_b() {
        // B(a,b) = (a-1)!(b-1)!/(a+b-1)!
        for a in 1..9u32 {
            for b in 1..9i32 {
                let exact = Rational::new(
                    (1..a as i128).product::<i128>() * (1..b as i128).product::<i128>(),
                    (1..(a as i128 + b as i128)).product::<i128>(),
                );
                assert_eq!(c_const(a, b), exact, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn beta_examples() {
        assert!((incomplete_beta_at(0.5, 1, 1).unwrap() - 0.5).abs() < 1e-15);
        let expected = 0.25 / 0.75 + 0.75f64.ln();
        assert!((incomplete_beta_at(0.25, 2, -1).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.04565).abs() < 1e-5);
        assert!((beta0_at(0.5, 1, 1).unwrap() + 0.5).abs() < 1e-15);
        assert!((beta0_at(0.0, 3, 1).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!((beta0_at(0.0, 2, -1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_divergent_endpoint() {
        assert!(BetaParams::new(1.0, 3, 0).is_err());
        assert!(BetaParams::new(1.0, 3, -2).is_err());
        assert!(BetaParams::new(-0.1, 3, 2).is_err());
        assert!(BetaParams::new(0.5, 0, 2).is_err());
        assert_eq!(beta0_at(1.0, 3, 2).unwrap(), 0.0);
    }

    #[test]
    fn matches_quadrature_on_random_parameters() {
        // fixed pseudo-random draws so the test is reproducible
        let mut state: u64 = 0x2545F4914F6CDD1D;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..20 {
            let w = 0.02 + 0.93 * (next() % 10_000) as f64 / 10_000.0;
            let a = 1 + (next() % 7) as u32;
            let b = (next() % 15) as i32 - 7;
            let got = incomplete_beta_at(w, a, b).unwrap();
            let want = beta_by_quadrature(w, a, b);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-300), "w={w} a={a} b={b}: {got} vs {want}");
        }
    }

    #[test]
    fn branches_agree_at_switch() {
        for a in 1..8 {
            for b in -7..8 {
                let w = SERIES_SWITCH;
                let s = beta_series(w, a, b) - c_const_f64(a, b);
                let t = beta0_tail(1.0 - w, a, b);
                assert!((s - t).abs() < 1e-12 * s.abs().max(1.0), "a={a} b={b}: {s} vs {t}");
            }
        }
    }

    #[test]
    fn complete_beta_limit() {
        for a in 1..7u32 {
            for b in 1..7i32 {
                let v = incomplete_beta_at(1.0 - 1e-8, a, b).unwrap();
                assert!((v - c_const_f64(a, b)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn monotone_on_grid() {
        for a in 1..6 {
            for b in -5..6 {
                let vals: Vec<f64> =
                    (1..200).map(|i| incomplete_beta_at(i as f64 / 200.0, a, b).unwrap()).collect();
                assert!(vals.windows(2).all(|v| v[1] > v[0]), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn factorial_ratio_examples() {
        assert_eq!(factorial_ratio(5, 3).unwrap(), 20.0);
        assert_eq!(factorial_ratio(7, 7).unwrap(), 1.0);
        assert!(factorial_ratio(-1, 3).is_err());
        let big: BigInt = (12..=30).map(BigInt::from).product();
        let want: f64 = big.to_string().parse().unwrap();
        assert!((factorial_ratio(30, 11).unwrap() - want).abs() <= 1e-15 * want);
        assert!((factorial_ratio(3, 5).unwrap() - 1.0 / 20.0).abs() < 1e-17);
    }

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial(5, 3), 60.0);
        assert_eq!(falling_factorial(2, 3), 0.0);
        // negative argument: -1 * -2 * -3
        assert_eq!(falling_factorial(-1, 3), -6.0);
    }

    #[test]
    fn kernel_matches_free_functions() {
        for a in 1..6 {
            for b in -5..6 {
                let k = BetaKernel::new(a, b).unwrap();
                for w in [0.0, 0.1, 0.5, 0.77, 0.999] {
                    let p = BetaParams::new(w, a, b).unwrap();
                    assert_eq!(k.beta(w, 1.0 - w).unwrap(), incomplete_beta(p));
                    assert_eq!(k.beta0(w, 1.0 - w).unwrap(), beta0(p));
                }
            }
        }
        // r supplied exactly where 1 - w would round
        let k = BetaKernel::new(3, -1).unwrap();
        let r = 1e-9;
        let v = k.beta0(1.0, r).unwrap();
        assert!((v - (1.0 / r + 2.0 * r.ln() - r)).abs() < 1e-15 * v);
        assert!(k.beta(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn derivative_is_integrand(w in 0.01f64..0.97, a in 1u32..8, b in -7i32..8) {
            let h = 1e-6;
            let d = (incomplete_beta_at(w + h, a, b).unwrap() - incomplete_beta_at(w - h, a, b).unwrap()) / (2.0 * h);
            let f = w.powi(a as i32 - 1) * (1.0 - w).powi(b - 1);
            prop_assert!((d - f).abs() <= 1e-6 * f.abs().max(1.0));
        }

        #[test]
        fn beta0_plus_constant_is_beta(w in 0.0f64..0.999, a in 1u32..8, b in -7i32..8) {
            let p = BetaParams::new(w, a, b).unwrap();
            let lhs = beta0(p) + c_const_f64(a, b);
            let rhs = incomplete_beta(p);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1.0));
        }
    }
}
