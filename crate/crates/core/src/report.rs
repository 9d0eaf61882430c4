//! Comparison rows shared by the consistency checks and the CLI.

use num_complex::Complex64;

/// One left-hand/right-hand comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `|lhs - rhs| ≤ abs_tol` or the relative difference is at
    /// most `rel_tol`.
    pub fn compare(name: impl Into<String>, lhs: Complex64, rhs: Complex64, abs_tol: f64, rel_tol: f64) -> Self {
        let abs_diff = (lhs - rhs).norm();
        let rel_diff = relative_difference(lhs, rhs);
        Self { name: name.into(), lhs, rhs, abs_diff, rel_diff, pass: abs_diff <= abs_tol || rel_diff <= rel_tol }
    }

    /// A row whose verdict was decided by the caller.
    pub fn with_verdict(name: impl Into<String>, lhs: Complex64, rhs: Complex64, pass: bool) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            abs_diff: (lhs - rhs).norm(),
            rel_diff: relative_difference(lhs, rhs),
            pass,
        }
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_difference(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Whether every row passed.
pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_difference_handles_zero() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(relative_difference(z, z), 0.0);
        assert_eq!(relative_difference(Complex64::new(1.0, 0.0), z), 1.0);
    }

    #[test]
    fn compare_uses_either_tolerance() {
        let a = Complex64::new(1e-9, 0.0);
        let b = Complex64::new(0.0, 0.0);
        assert!(CheckRow::compare("x", a, b, 1e-8, 0.0).pass);
        assert!(!CheckRow::compare("x", a, b, 1e-10, 0.5).pass);
        let c = Complex64::new(1.0 + 1e-7, 0.0);
        assert!(CheckRow::compare("x", c, Complex64::new(1.0, 0.0), 0.0, 1e-6).pass);
    }
}
