//! Upper half-plane geometry for the full modular group.
//!
//! Points, determinant-one integer matrices and their Möbius action, the
//! elliptic coordinate `X_c(z) = (z - c)/(z - conj(c))` used for expansions
//! around a center `c`, enumeration of SL2(Z) by L∞ shells, and reduction to
//! the standard fundamental domain.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point `x + iy` with `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UHPoint {
    x: f64,
    y: f64,
}

impl UHPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidPoint(y));
        }
        Ok(Self { x, y })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    /// `i`, the fixed point of `S`.
    pub fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    /// `rho = -1/2 + i sqrt(3)/2`, the order-3 elliptic point.
    pub fn rho() -> Self {
        Self { x: -0.5, y: 3f64.sqrt() / 2.0 }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    #[inline]
    pub fn conj(&self) -> Complex64 {
        Complex64::new(self.x, -self.y)
    }

    /// Translate by a complex offset, checking that the result stays in the
    /// half-plane.
    pub fn offset(&self, dz: Complex64) -> Result<Self> {
        Self::new(self.x + dz.re, self.y + dz.im)
    }
}

impl fmt::Display for UHPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.x == 0.0 {
            write!(f, "{}i", self.y)
        } else {
            write!(f, "{}+{}i", self.x, self.y)
        }
    }
}

/// An integer matrix `(a b; c d)` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModMatrix {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl ModMatrix {
    pub const IDENTITY: ModMatrix = ModMatrix { a: 1, b: 0, c: 0, d: 1 };
    pub const S: ModMatrix = ModMatrix { a: 0, b: -1, c: 1, d: 0 };
    pub const T: ModMatrix = ModMatrix { a: 1, b: 1, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a * d - b * c != 1 {
            return Err(Error::InvalidMatrix { a, b, c, d });
        }
        Ok(Self { a, b, c, d })
    }

    /// `T^n`.
    pub fn translation(n: i64) -> Self {
        Self { a: 1, b: n, c: 0, d: 1 }
    }

    #[inline]
    pub fn entries(&self) -> (i64, i64, i64, i64) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn neg(&self) -> Self {
        Self { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    /// L∞ norm of the entries.
    pub fn max_entry(&self) -> i64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Sort key matching the documented enumeration order.
    fn order_key(&self) -> (i64, i64, i64, i64) {
        (self.c, self.d, self.a, self.b)
    }
}

impl Mul for ModMatrix {
    type Output = ModMatrix;

    fn mul(self, o: ModMatrix) -> ModMatrix {
        ModMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

impl fmt::Display for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

/// `(az + b)/(cz + d)` on raw complex numbers. Used on hot paths where the
/// argument is already known to lie in the half-plane.
#[inline]
pub(crate) fn mobius_raw(m: &ModMatrix, z: Complex64) -> Complex64 {
    let (a, b, c, d) = (m.a as f64, m.b as f64, m.c as f64, m.d as f64);
    (z * a + b) / (z * c + d)
}

pub fn mobius_apply(m: &ModMatrix, z: UHPoint) -> UHPoint {
    let w = mobius_raw(m, z.z());
    // determinant one keeps Im > 0; clamp only guards the last ulp
    UHPoint { x: w.re, y: w.im.max(f64::MIN_POSITIVE) }
}

/// The automorphy factor `cz + d`.
#[inline]
pub fn automorphy(m: &ModMatrix, z: UHPoint) -> Complex64 {
    Complex64::new(m.c as f64 * z.x + m.d as f64, m.c as f64 * z.y)
}

/// Elliptic coordinate `X_center(z) = (z - center)/(z - conj(center))`.
#[inline]
pub fn x_coord(center: UHPoint, z: UHPoint) -> Complex64 {
    (z.z() - center.z()) / (z.z() - center.conj())
}

/// Inverse of [`x_coord`]: the point `z` with `X_center(z) = xval`.
pub fn x_inverse(center: UHPoint, xval: Complex64) -> Result<UHPoint> {
    if !(xval.norm() < 1.0) {
        return Err(Error::Domain(format!("|X| = {} must be < 1", xval.norm())));
    }
    let z = (center.z() - center.conj() * xval) / (1.0 - xval);
    // y = Im(center) (1 - |X|^2) / |1 - X|^2, computed directly for accuracy
    let y = center.y * (1.0 - xval.norm_sqr()) / (1.0 - xval).norm_sqr();
    UHPoint::new(z.re, y)
}

/// One L∞ shell: all of SL2(Z) with `max(|a|,|b|,|c|,|d|) = max_entry`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShellSpec {
    pub max_entry: u32,
}

/// Shell size at which [`enumerate_shell`] switches from brute force to the
/// coprime-column parametrization.
pub const BRUTE_FORCE_MAX_SHELL: u32 = 6;

/// Enumerates a shell in lexicographic `(c, d, a, b)` order.
pub fn enumerate_shell(spec: ShellSpec) -> Vec<ModMatrix> {
    if spec.max_entry <= BRUTE_FORCE_MAX_SHELL {
        enumerate_shell_brute_force(spec)
    } else {
        enumerate_shell_parametric(spec)
    }
}

/// Exhaustive filter over `[-N, N]^4`.
pub fn enumerate_shell_brute_force(spec: ShellSpec) -> Vec<ModMatrix> {
    let n = spec.max_entry as i64;
    let mut out = Vec::new();
    for c in -n..=n {
        for d in -n..=n {
            for a in -n..=n {
                for b in -n..=n {
                    if a * d - b * c == 1 {
                        let m = ModMatrix { a, b, c, d };
                        if m.max_entry() == n {
                            out.push(m);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Parametrizes by the bottom row: for coprime `(c, d)` every completion is
/// `(a0 + tc, b0 + td)` for one particular solution `(a0, b0)`.
pub fn enumerate_shell_parametric(spec: ShellSpec) -> Vec<ModMatrix> {
    let n = spec.max_entry as i64;
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for c in -n..=n {
        for d in -n..=n {
            let (g, u, v) = ext_gcd(c, d);
            if g.abs() != 1 {
                continue;
            }
            // u c + v d = g  =>  a0 = v g, b0 = -u g gives a0 d - b0 c = 1
            let (a0, b0) = (v * g, -u * g);
            let row_max = c.abs().max(d.abs());
            let mut push = |a: i64, b: i64| {
                if a.abs() <= n && b.abs() <= n && row_max.max(a.abs()).max(b.abs()) == n {
                    out.push(ModMatrix { a, b, c, d });
                }
            };
            if c == 0 {
                // d = ±1, a = d, b free
                for b in -n..=n {
                    push(a0, b);
                }
            } else if d == 0 {
                for a in -n..=n {
                    push(a, b0);
                }
            } else {
                let (lo_a, hi_a) = t_range(a0, c, n);
                let (lo_b, hi_b) = t_range(b0, d, n);
                let (lo, hi) = (lo_a.max(lo_b), hi_a.min(hi_b));
                for t in lo..=hi {
                    push(a0 + t * c, b0 + t * d);
                }
            }
        }
    }
    out.sort_by_key(|m| m.order_key());
    out
}

/// Integer range of `t` with `|base + t * step| <= n`, `step != 0`.
fn t_range(base: i64, step: i64, n: i64) -> (i64, i64) {
    let s = step.abs();
    let sign = step.signum();
    // |base + t*step| <= n  <=>  -n - base*sign <= t*s <= n - base*sign
    let lo = div_ceil(-n - base * sign, s);
    let hi = div_floor(n - base * sign, s);
    (lo, hi)
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

/// Returns `(g, u, v)` with `u a + v b = g = ±gcd(a, b)`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a, 1, 0);
    }
    let (g, u, v) = ext_gcd(b, a % b);
    (g, v, u - (a / b) * v)
}

/// Reduces `z` into the standard fundamental domain `|x| <= 1/2, |z| >= 1`
/// with boundary ties resolved to `x ∈ [-1/2, 1/2)` and `x <= 0` on the arc.
/// Returns the reduced point and a matrix `g` with `g z` equal to it.
pub fn reduce_to_fd(z: UHPoint) -> (UHPoint, ModMatrix) {
    let mut g = ModMatrix::IDENTITY;
    let mut w = z.z();
    for _ in 0..10_000 {
        let n = w.re.round();
        if n != 0.0 {
            let t = ModMatrix::translation(-(n as i64));
            g = t * g;
            w -= n;
        }
        if w.norm_sqr() < 1.0 {
            g = ModMatrix::S * g;
            w = -1.0 / w;
        } else {
            break;
        }
    }
    if w.re >= 0.5 {
        g = ModMatrix::translation(-1) * g;
        w -= 1.0;
    }
    if w.norm_sqr() == 1.0 && w.re > 0.0 {
        g = ModMatrix::S * g;
        w = -1.0 / w;
    }
    (UHPoint { x: w.re, y: w.im }, g)
}

/// Order of the stabilizer of `z` in PSL2(Z): 2 on the orbit of `i`, 3 on
/// the orbit of `rho`, 1 elsewhere. `tol` is the distance used to decide
/// whether the reduced point coincides with an elliptic point.
pub fn stabilizer_order(z: UHPoint, tol: f64) -> u32 {
    let (w, _) = reduce_to_fd(z);
    if (w.z() - UHPoint::i().z()).norm() <= tol {
        2
    } else if (w.z() - UHPoint::rho().z()).norm() <= tol
        || (w.z() - UHPoint::rho().z() - 1.0).norm() <= tol
    {
        3
    } else {
        1
    }
}

/// Whether two points lie in the same SL2(Z) orbit, up to `tol` after
/// reduction. Boundary identifications of the fundamental domain are
/// checked explicitly.
pub fn sl2z_equivalent(z1: UHPoint, z2: UHPoint, tol: f64) -> bool {
    let (w1, _) = reduce_to_fd(z1);
    let (w2, _) = reduce_to_fd(z2);
    boundary_images(w1, tol)
        .iter()
        .any(|c| (c - w2.z()).norm() <= tol)
}

/// The reduced point together with its images under the side and arc
/// identifications when it lies within `tol` of those edges.
fn boundary_images(w: UHPoint, tol: f64) -> Vec<Complex64> {
    let mut out = vec![w.z()];
    if (w.x.abs() - 0.5).abs() <= tol {
        out.push(w.z() - w.x.signum());
    }
    if (w.z().norm() - 1.0).abs() <= tol {
        let s = -1.0 / w.z();
        out.push(s);
        if (s.re.abs() - 0.5).abs() <= tol {
            out.push(s - s.re.signum());
        }
    }
    out
}

/// Matrices `g` (up to sign) with `g z = z`, searched among entries bounded
/// by `bound`. Test helper for stabilizer computations.
#[doc(hidden)]
pub fn stabilizer_brute_force(z: UHPoint, bound: i64, tol: f64) -> usize {
    let mut count = 0;
    for c in -bound..=bound {
        for d in -bound..=bound {
            for a in -bound..=bound {
                for b in -bound..=bound {
                    if a * d - b * c != 1 {
                        continue;
                    }
                    let m = ModMatrix { a, b, c, d };
                    if (mobius_raw(&m, z.z()) - z.z()).norm() <= tol {
                        count += 1;
                    }
                }
            }
        }
    }
    count / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn p(x: f64, y: f64) -> UHPoint {
        UHPoint::new(x, y).unwrap()
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(UHPoint::new(0.0, 0.0).is_err());
        assert!(UHPoint::new(1.0, -2.0).is_err());
        assert!(ModMatrix::new(1, 1, 1, 1).is_err());
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius_apply(&ModMatrix::T, UHPoint::i()).z(), Complex64::new(1.0, 1.0));
        let w = mobius_apply(&ModMatrix::S, UHPoint::i());
        assert!((w.z() - Complex64::i()).norm() < 1e-15);
        let w = mobius_apply(&ModMatrix::S, p(0.0, 2.0));
        assert!((w.z() - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn automorphy_examples() {
        let z = p(0.3, 0.7);
        assert_eq!(automorphy(&ModMatrix::IDENTITY, z), Complex64::new(1.0, 0.0));
        assert_eq!(automorphy(&ModMatrix::S, UHPoint::i()), Complex64::i());
        let m = ModMatrix::new(2, 1, 1, 1).unwrap();
        assert_eq!(automorphy(&m, UHPoint::i()), Complex64::new(1.0, 1.0));
    }

    #[test]
    fn imaginary_part_transforms() {
        let z = p(0.17, 0.61);
        for m in enumerate_shell(ShellSpec { max_entry: 4 }) {
            let w = mobius_apply(&m, z);
            let j = automorphy(&m, z);
            assert!((w.y() - z.y() / j.norm_sqr()).abs() < 1e-13 * w.y().max(1.0));
        }
    }

    #[test]
    fn x_coord_examples() {
        assert_eq!(x_coord(UHPoint::i(), UHPoint::i()), Complex64::new(0.0, 0.0));
        let x = x_coord(UHPoint::i(), p(0.0, 2.0));
        assert!((x - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let x = x_coord(p(0.0, 2.0), p(1.0, 2.0));
        let expected = Complex64::new(1.0, 0.0) / Complex64::new(1.0, 4.0);
        assert!((x - expected).norm() < 1e-15);
    }

    #[test]
    fn x_inverse_examples() {
        let z = x_inverse(UHPoint::i(), Complex64::new(0.0, 0.0)).unwrap();
        assert!((z.z() - Complex64::i()).norm() < 1e-15);
        let z = x_inverse(UHPoint::i(), Complex64::new(1.0 / 3.0, 0.0)).unwrap();
        assert!((z.z() - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        assert!(x_inverse(UHPoint::i(), Complex64::new(1.0, 0.0)).is_err());
    }

    fn brute_upto(n: u32) -> BTreeSet<ModMatrix> {
        let n = n as i64;
        let mut s = BTreeSet::new();
        for a in -n..=n {
            for b in -n..=n {
                for c in -n..=n {
                    for d in -n..=n {
                        if a * d - b * c == 1 {
                            s.insert(ModMatrix { a, b, c, d });
                        }
                    }
                }
            }
        }
        s
    }

    #[test]
    fn shell_one_and_two_counts() {
        for n in 1..=2u32 {
            let shell = enumerate_shell(ShellSpec { max_entry: n });
            let lower = if n > 1 { brute_upto(n - 1) } else { BTreeSet::new() };
            let expected: BTreeSet<_> = brute_upto(n).difference(&lower).copied().collect();
            assert_eq!(shell.len(), expected.len());
            assert_eq!(shell.iter().copied().collect::<BTreeSet<_>>(), expected);
        }
    }

    #[test]
    fn parametric_matches_brute_force() {
        for n in 1..=BRUTE_FORCE_MAX_SHELL {
            let spec = ShellSpec { max_entry: n };
            assert_eq!(enumerate_shell_brute_force(spec), enumerate_shell_parametric(spec), "N = {n}");
        }
    }

    #[test]
    fn shells_are_sorted_by_c_d_a_b() {
        let shell = enumerate_shell(ShellSpec { max_entry: 9 });
        assert!(shell.windows(2).all(|w| w[0].order_key() < w[1].order_key()));
        assert!(shell.iter().all(|m| m.max_entry() == 9));
    }

    #[test]
    fn reduce_examples() {
        let (w, g) = reduce_to_fd(p(7.0, 1.0));
        assert!((w.z() - Complex64::i()).norm() < 1e-14);
        assert_eq!(g, ModMatrix::translation(-7));

        let (w, g) = reduce_to_fd(p(0.0, 0.5));
        assert!((w.z() - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        assert_eq!(g, ModMatrix::S);

        let z = p(0.5, 0.5);
        let (w, g) = reduce_to_fd(z);
        assert!((w.z() - Complex64::i()).norm() < 1e-14);
        assert!((mobius_apply(&g, z).z() - w.z()).norm() < 1e-14);
    }

    #[test]
    fn stabilizer_examples_match_brute_force() {
        let rho = UHPoint::rho();
        for (z, expected) in [(UHPoint::i(), 2), (rho, 3), (p(0.0, 2.0), 1)] {
            assert_eq!(stabilizer_brute_force(z, 2, 1e-12), expected);
            assert_eq!(stabilizer_order(z, 1e-9), expected as u32);
        }
        assert_eq!(stabilizer_order(p(3.0, 1.0), 1e-9), 2);
    }

    #[test]
    fn equivalence_examples() {
        assert!(sl2z_equivalent(UHPoint::i(), p(3.0, 1.0), 1e-10));
        assert!(sl2z_equivalent(p(0.0, 2.0), p(0.0, 0.5), 1e-10));
        assert!(!sl2z_equivalent(p(0.0, 2.0), p(0.0, 3.0), 1e-10));
        // boundary identifications
        assert!(sl2z_equivalent(p(0.5, 1.3), p(-0.5, 1.3), 1e-10));
        let a = Complex64::from_polar(1.0, 1.3);
        let b = -1.0 / a;
        assert!(sl2z_equivalent(UHPoint::from_complex(a).unwrap(), UHPoint::from_complex(b).unwrap(), 1e-10));
    }
}
