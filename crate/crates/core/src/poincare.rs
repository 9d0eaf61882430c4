//! Elliptic Poincare series on SL2(Z).
//!
//! The meromorphic family `Ψ_{2k,m}^c = Σ_M ψ_{2k,m}^c |_{2k} M` with seed
//! `ψ = (z - conj c)^(-2k) X_c(z)^m`, and the harmonic family
//! `P_{2-2k,m}^c = Σ_M φ_{2-2k,m}^c |_{2-2k} M` with seed
//! `φ = (z - conj c)^(2k-2) β(1 - |X_c|²; 2k-1, -m) X_c(z)^m`.
//!
//! Sums run over all of SL2(Z), so `M` and `-M` both contribute. They are
//! truncated by L∞ shells of the matrix entries and summed shell by shell
//! in increasing order, each shell in a fixed lexicographic order, which
//! makes results independent of the number of worker threads.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::halfplane::{
    automorphy, enumerate_shell, mobius_apply, x_coord, ModMatrix, ShellSpec, UHPoint,
};
use crate::special::BetaKernel;

/// Any single summand larger than this, relative to the seed's own size at
/// `X = 1/2` (or to one, if that is smaller), signals that `z` sits on or
/// next to the orbit of a pole.
pub const TERM_MAGNITUDE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// `Ψ_{2k,m}`, weight `2k`.
    Meromorphic,
    /// `P_{2-2k,m}`, weight `2 - 2k`.
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSpec {
    pub kind: SeriesKind,
    pub k: u32,
    pub m: i64,
    pub center: UHPoint,
}

impl SeriesSpec {
    pub fn new(kind: SeriesKind, k: u32, m: i64, center: UHPoint) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("k = {k}: the series converge only for k >= 2")));
        }
        Ok(Self { kind, k, m, center })
    }

    pub fn meromorphic(k: u32, m: i64, center: UHPoint) -> Result<Self> {
        Self::new(SeriesKind::Meromorphic, k, m, center)
    }

    pub fn harmonic(k: u32, m: i64, center: UHPoint) -> Result<Self> {
        Self::new(SeriesKind::Harmonic, k, m, center)
    }

    pub fn weight(&self) -> i32 {
        match self.kind {
            SeriesKind::Meromorphic => 2 * self.k as i32,
            SeriesKind::Harmonic => 2 - 2 * self.k as i32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationParams {
    pub max_shell: u32,
    pub tail_window: u32,
}

impl TruncationParams {
    pub fn new(max_shell: u32, tail_window: u32) -> Result<Self> {
        if max_shell == 0 || tail_window == 0 || tail_window >= max_shell {
            return Err(Error::Domain(format!(
                "truncation needs 0 < tail_window < max_shell, got W = {tail_window}, N = {max_shell}"
            )));
        }
        Ok(Self { max_shell, tail_window })
    }

    /// `N` shells with a tail window of `max(1, N/5)`.
    pub fn with_shells(max_shell: u32) -> Self {
        let w = (max_shell / 5).max(1).min(max_shell.saturating_sub(1)).max(1);
        Self { max_shell: max_shell.max(2), tail_window: w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    /// Sum of `|term|` over the final `tail_window` shells.
    pub last_shells_magnitude: f64,
    pub shells_used: u32,
    /// Sum of `|term|` over all shells; the scale of rounding error in
    /// `value`.
    pub term_magnitude: f64,
}

/// Space a series is known to span or lie in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTag {
    /// `m ≥ 0`: spans the cusp forms `S_{2k}`.
    CuspSpan,
    /// `1 - 2k ≤ m ≤ -1`: basis of the space of forms with a principal part
    /// at the center orbit of order at most `2k - 1`.
    ESpace,
    /// `m ≤ -2k`: higher-order poles.
    DSpace,
    /// Harmonic with index `k - 1 - m`, `m ≥ k`.
    HCusp,
    /// Harmonic with index `k - 1 - m`, `|m| < k`.
    HE,
    /// Remaining harmonic indices.
    HOther,
}

pub fn space_tag(spec: &SeriesSpec) -> SpaceTag {
    let k = spec.k as i64;
    match spec.kind {
        SeriesKind::Meromorphic => {
            if spec.m >= 0 {
                SpaceTag::CuspSpan
            } else if spec.m >= 1 - 2 * k {
                SpaceTag::ESpace
            } else {
                SpaceTag::DSpace
            }
        }
        SeriesKind::Harmonic => {
            let m = k - 1 - spec.m;
            if m >= k {
                SpaceTag::HCusp
            } else if m.abs() < k {
                SpaceTag::HE
            } else {
                SpaceTag::HOther
            }
        }
    }
}

/// `ψ_{2k,m}^c(z) = (z - conj c)^(-2k) X_c(z)^m`.
pub fn psi_seed(k: u32, m: i64, center: UHPoint, z: UHPoint) -> Result<Complex64> {
    let x = x_coord(center, z);
    if m < 0 && x.norm() == 0.0 {
        return Err(Error::Pole(format!("ψ with m = {m} at its center {center}")));
    }
    Ok((z.z() - center.conj()).powi(-2 * k as i32) * x.powi(m as i32))
}

/// `φ_{2-2k,m}^c(z) = (z - conj c)^(2k-2) β(1 - r²; 2k-1, -m) X_c(z)^m`
/// with `r = |X_c(z)|`.
///
/// At the center itself the seed is singular for every `m`: a pole from
/// `X^m` when `m < 0`, a logarithm when `m = 0`, and `r^(-m)` growth of
/// `β X^m` when `m > 0`. All three cases signal.
pub fn phi_seed(k: u32, m: i64, center: UHPoint, z: UHPoint) -> Result<Complex64> {
    let kernel = BetaKernel::new(2 * k - 1, -(m as i32))?;
    let x = x_coord(center, z);
    if x.norm() == 0.0 {
        return Err(Error::Pole(format!("φ with m = {m} at its center {center}")));
    }
    let zc = z.z() - center.conj();
    let w = 4.0 * z.y() * center.y() / zc.norm_sqr();
    let beta = kernel.beta(w, x.norm_sqr())?;
    Ok(zc.powi(2 * k as i32 - 2) * beta * x.powi(m as i32))
}

/// Evaluates `seed |_weight M` at `z` without dividing by `cz + d`, using
/// `(cz+d)(Mz - w) = (a - cw) z + (b - dw)`.
#[derive(Debug, Clone, Copy)]
struct TermEvaluator {
    kind: SeriesKind,
    k: u32,
    m: i32,
    center: UHPoint,
    kernel: Option<BetaKernel>,
    /// Drop the terms of matrices fixing the center.
    regular: bool,
    guard: f64,
}

impl TermEvaluator {
    fn new(spec: &SeriesSpec) -> Result<Self> {
        let kernel = match spec.kind {
            SeriesKind::Meromorphic => None,
            SeriesKind::Harmonic => Some(BetaKernel::new(2 * spec.k - 1, -(spec.m as i32))?),
        };
        let probe = crate::halfplane::x_inverse(spec.center, Complex64::new(0.5, 0.0))?;
        let scale = match spec.kind {
            SeriesKind::Meromorphic => psi_seed(spec.k, spec.m, spec.center, probe)?,
            SeriesKind::Harmonic => phi_seed(spec.k, spec.m, spec.center, probe)?,
        }
        .norm();
        let guard = TERM_MAGNITUDE_GUARD * scale.max(1.0);
        Ok(Self { kind: spec.kind, k: spec.k, m: spec.m as i32, center: spec.center, kernel, regular: false, guard })
    }

    fn fixes_center(&self, mat: &ModMatrix) -> bool {
        (crate::halfplane::mobius_raw(mat, self.center.z()) - self.center.z()).norm() <= 1e-9 * self.center.y()
    }

    #[inline]
    fn term(&self, mat: &ModMatrix, z: Complex64, y: f64) -> Result<Complex64> {
        let (a, b, c, d) = mat.entries();
        let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
        let cz = self.center.z();
        let cb = self.center.conj();
        let num = (a - c * cz) * z + (b - d * cz);
        let den = (a - c * cb) * z + (b - d * cb);
        let x = num / den;
        let value = match self.kind {
            SeriesKind::Meromorphic => {
                if self.m < 0 && num.norm() == 0.0 {
                    return Err(Error::Pole(format!("term for {mat} sits on the pole")));
                }
                den.powi(-2 * self.k as i32) * x.powi(self.m)
            }
            SeriesKind::Harmonic => {
                let den2 = den.norm_sqr();
                let w = 4.0 * y * self.center.y() / den2;
                let r2 = num.norm_sqr() / den2;
                if r2 == 0.0 {
                    return Err(Error::Pole(format!("term for {mat} sits on the center orbit")));
                }
                let beta = self.kernel.expect("harmonic kernel").beta(w, r2)?;
                den.powi(2 * self.k as i32 - 2) * beta * x.powi(self.m)
            }
        };
        let mag = value.norm();
        if !(mag <= self.guard) {
            return Err(Error::TermOverflow { magnitude: mag, guard: self.guard });
        }
        Ok(value)
    }
}

/// `(seed |_weight M)(z)` for one matrix.
pub fn series_term(spec: &SeriesSpec, mat: &ModMatrix, z: UHPoint) -> Result<Complex64> {
    TermEvaluator::new(spec)?.term(mat, z.z(), z.y())
}

/// `Σ_γ (seed |_weight γ)/seed` over the matrices `γ ∈ SL2(Z)` fixing the
/// center (both signs). The stabilizer rotates `X` and so multiplies the
/// seed by a root of unity; the sum is `2ω` when that character is
/// trivial and `0` when the seed's contributions cancel, as happens at `i`
/// for odd `k + m`.
pub fn stabilizer_character_sum(spec: &SeriesSpec) -> Result<Complex64> {
    let ev = TermEvaluator::new(spec)?;
    let probe = crate::halfplane::x_inverse(spec.center, Complex64::new(0.1, 0.05))?;
    let base = ev.term(&ModMatrix::IDENTITY, probe.z(), probe.y())?;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=2 {
        for mat in shell(n).iter() {
            if ev.fixes_center(mat) {
                sum += ev.term(mat, probe.z(), probe.y())? / base;
            }
        }
    }
    Ok(sum)
}

fn shell_cache() -> &'static Mutex<Vec<Arc<Vec<ModMatrix>>>> {
    static CACHE: OnceLock<Mutex<Vec<Arc<Vec<ModMatrix>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// The matrices of shell `n ≥ 1`, enumerated once and cached.
pub fn shell(n: u32) -> Arc<Vec<ModMatrix>> {
    assert!(n >= 1, "shells start at 1");
    let mut cache = shell_cache().lock().expect("shell cache poisoned");
    while cache.len() < n as usize {
        let next = cache.len() as u32 + 1;
        cache.push(Arc::new(enumerate_shell(ShellSpec { max_entry: next })));
    }
    Arc::clone(&cache[n as usize - 1])
}

/// Number of matrices in shells `1..=n`.
pub fn matrices_up_to(n: u32) -> usize {
    (1..=n).map(|s| shell(s).len()).sum()
}

/// Sum and absolute sum over one shell, in its stored order.
fn shell_sum(ev: &TermEvaluator, n: u32, z: Complex64, y: f64) -> Result<(Complex64, f64)> {
    let mats = shell(n);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    // every stabilizer element has entries of size at most one
    let skip = ev.regular && n == 1;
    for mat in mats.iter() {
        if skip && ev.fixes_center(mat) {
            continue;
        }
        let t = ev.term(mat, z, y)?;
        sum += t;
        abs += t.norm();
    }
    Ok((sum, abs))
}

fn combine(parts: Vec<(Complex64, f64)>, trunc: TruncationParams) -> SeriesValue {
    let mut value = Complex64::new(0.0, 0.0);
    for (s, _) in &parts {
        value += s;
    }
    let tail_from = (trunc.max_shell - trunc.tail_window) as usize;
    let last = parts[tail_from..].iter().map(|(_, a)| a).sum();
    let total = parts.iter().map(|(_, a)| a).sum();
    SeriesValue { value, last_shells_magnitude: last, shells_used: trunc.max_shell, term_magnitude: total }
}

/// Truncated series at one point; shells are farmed out to the rayon pool
/// and recombined in increasing shell order.
pub fn eval_series(spec: &SeriesSpec, z: UHPoint, trunc: TruncationParams) -> Result<SeriesValue> {
    let ev = TermEvaluator::new(spec)?;
    // fill the cache before going parallel so workers only read it
    shell(trunc.max_shell);
    let parts = (1..=trunc.max_shell)
        .into_par_iter()
        .map(|n| shell_sum(&ev, n, z.z(), z.y()))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(parts, trunc))
}

/// Truncated series at many points, parallel over points. Each value is
/// bit-identical to [`eval_series`] at the same point.
pub fn eval_series_batch(
    spec: &SeriesSpec,
    zs: &[UHPoint],
    trunc: TruncationParams,
) -> Result<Vec<SeriesValue>> {
    batch(TermEvaluator::new(spec)?, zs, trunc)
}

/// Like [`eval_series_batch`], leaving out the terms of the matrices that
/// fix the center: the series minus `stabilizer_character_sum · seed`. Near
/// the center this part is regular.
pub fn eval_regular_part_batch(
    spec: &SeriesSpec,
    zs: &[UHPoint],
    trunc: TruncationParams,
) -> Result<Vec<SeriesValue>> {
    let mut ev = TermEvaluator::new(spec)?;
    ev.regular = true;
    batch(ev, zs, trunc)
}

fn batch(ev: TermEvaluator, zs: &[UHPoint], trunc: TruncationParams) -> Result<Vec<SeriesValue>> {
    shell(trunc.max_shell);
    zs.par_iter()
        .map(|z| {
            let parts = (1..=trunc.max_shell)
                .map(|n| shell_sum(&ev, n, z.z(), z.y()))
                .collect::<Result<Vec<_>>>()?;
            Ok(combine(parts, trunc))
        })
        .collect()
}

/// `|(F|_weight M)(z) - F(z)|` for the truncated series `F`.
pub fn approx_invariance_defect(
    spec: &SeriesSpec,
    z: UHPoint,
    mat: &ModMatrix,
    trunc: TruncationParams,
) -> Result<f64> {
    if *mat == ModMatrix::IDENTITY {
        return Ok(0.0);
    }
    let at_z = eval_series(spec, z, trunc)?.value;
    let at_mz = eval_series(spec, mobius_apply(mat, z), trunc)?.value;
    let slashed = automorphy(mat, z).powi(-spec.weight()) * at_mz;
    Ok((slashed - at_z).norm())
}

/// `Δ(z) = q Π (1 - q^n)^24`, `q = e^(2πiz)`, for `y ≥ 0.5`.
pub fn delta_reference(z: UHPoint) -> Result<Complex64> {
    if z.y() < 0.5 {
        return Err(Error::Domain(format!(
            "q-expansion of Δ used only for Im z >= 0.5, got {}",
            z.y()
        )));
    }
    Ok(delta_product(z.z()))
}

fn delta_product(z: Complex64) -> Complex64 {
    let q = (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * z).exp();
    let aq = q.norm();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qn = q;
    let mut an = aq;
    // stop once 24|q|^n no longer moves the product at double precision
    while 24.0 * an > 1e-18 {
        prod *= 1.0 - qn;
        qn *= q;
        an *= aq;
    }
    q * prod.powi(24)
}

/// `Δ(z)` anywhere in the half-plane: reduce to the fundamental domain,
/// where `y ≥ √3/2`, and apply `Δ(gz) = (cz + d)^12 Δ(z)`.
pub fn delta(z: UHPoint) -> Complex64 {
    let (w, g) = crate::halfplane::reduce_to_fd(z);
    delta_product(w.z()) / automorphy(&g, z).powi(12)
}
