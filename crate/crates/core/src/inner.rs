//! Petersson inner products.
//!
//! Convergent pairings are integrated directly over the truncated
//! fundamental domain `{|x| ≤ 1/2, |z| ≥ 1, y ≤ y_max}`. A single pole of
//! order at most one is handled by polar quadrature centred on the pole with
//! a small excluded disk, extrapolated to zero radius. Pairings with higher
//! order poles go through the closed coefficient formulas only.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expansion::{
    extract_harmonic, extract_meromorphic, sampling_pair, CircleSampling, DEFAULT_RADII, ORBIT_TOL,
};
use crate::halfplane::{sl2z_equivalent, stabilizer_order, UHPoint};
use crate::operators::{xi, StencilParams};
use crate::poincare::{delta, stabilizer_character_sum, SeriesSpec, TruncationParams};
use crate::pointfn::{PointFunction, RegularPart, Scaled, TruncatedSeries};
use crate::report::{relative_difference, CheckRow};
use crate::special::{c_const_f64, factorial, falling_factorial};

/// Integrand magnitude above which a pairing is treated as divergent.
pub const NONINTEGRABLE_GUARD: f64 = 1e12;

/// Number of Gauss-Legendre panels across `|x| ≤ 1/2`.
const X_PANELS: usize = 4;

/// Angular panels spent on the arc in polar quadrature.
const ARC_PANELS: usize = 8;

/// First breakpoint of the geometric panels in `y` (above the arc) and in
/// the polar radius.
const FIRST_PANEL: f64 = 0.125;

/// Quadrature controls.
///
/// `grid_nx` is the number of Gauss-Legendre nodes per panel in `x` (or in
/// the polar angle), `grid_ny` per panel in `y` (or in the polar radius).
/// Panels in `y` and in the radius grow geometrically from the arc or the
/// pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDQuadParams {
    pub y_max: f64,
    pub grid_nx: usize,
    pub grid_ny: usize,
    /// Radius of the disk excluded around a pole; `0` integrates up to the
    /// pole in polar coordinates.
    pub puncture_radius: f64,
    /// Number of halvings of the puncture radius used for extrapolation.
    pub richardson_punctures: u32,
}

impl Default for FDQuadParams {
    fn default() -> Self {
        Self { y_max: 12.0, grid_nx: 24, grid_ny: 24, puncture_radius: 0.02, richardson_punctures: 2 }
    }
}

impl FDQuadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_max >= 2.0 && self.y_max.is_finite()) {
            return Err(Error::Domain(format!("y_max must be at least 2, got {}", self.y_max)));
        }
        if self.grid_nx < 2 || self.grid_ny < 2 {
            return Err(Error::Domain("quadrature grids need at least 2 nodes per panel".into()));
        }
        if !(self.puncture_radius >= 0.0 && self.puncture_radius < 0.25) {
            return Err(Error::Domain(format!("puncture radius {} outside [0, 0.25)", self.puncture_radius)));
        }
        Ok(())
    }
}

/// Result of comparing two routes to the same quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl InnerReport {
    pub fn new(lhs: Complex64, rhs: Complex64) -> Self {
        Self {
            lhs,
            rhs,
            abs_diff: (lhs - rhs).norm(),
            rel_diff: relative_difference(lhs, rhs),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }

    pub fn row(&self, name: impl Into<String>, abs_tol: f64, rel_tol: f64) -> CheckRow {
        CheckRow::compare(name, self.lhs, self.rhs, abs_tol, rel_tol)
    }

    /// Both sides below `tol` in absolute value.
    pub fn both_below(&self, tol: f64) -> bool {
        self.lhs.norm() < tol && self.rhs.norm() < tol
    }

    /// Both sides below `tol` times the diagnostic `scale_key`.
    pub fn both_vanish(&self, scale_key: &str, tol: f64) -> bool {
        self.diagnostic(scale_key).is_some_and(|s| self.both_below(tol * s))
    }
}

fn rule(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n).expect("validated node count"))
}

/// Maps the rule onto `[a, b]` and appends `(node, weight)` pairs.
fn push_panel(out: &mut Vec<(f64, f64)>, g: &GaussLegendre, a: f64, b: f64) {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    for &(t, w) in g.as_node_weight_pairs() {
        out.push((mid + half * t, half * w));
    }
}

/// Nodes on `[a, b]` over panels `a, a + h, a + 2h, a + 4h, …, b`.
fn geometric_nodes(g: &GaussLegendre, a: f64, b: f64, first: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut lo = a;
    let mut step = first;
    while lo < b {
        let hi = (a + step).min(b);
        // avoid a sliver panel at the end
        let hi = if b - hi < 0.25 * step { b } else { hi };
        push_panel(&mut out, g, lo, hi);
        lo = hi;
        step *= 2.0;
    }
    out
}

/// Nodes and area weights `dx dy` on the truncated fundamental domain.
pub fn fd_nodes(q: &FDQuadParams) -> Result<Vec<(UHPoint, f64)>> {
    q.validate()?;
    let gx = rule(q.grid_nx);
    let gy = rule(q.grid_ny);
    let mut xs = Vec::new();
    for j in 0..X_PANELS {
        let a = -0.5 + j as f64 / X_PANELS as f64;
        push_panel(&mut xs, &gx, a, a + 1.0 / X_PANELS as f64);
    }
    let mut nodes = Vec::new();
    for (x, wx) in xs {
        let y_low = (1.0 - x * x).sqrt();
        for (y, wy) in geometric_nodes(&gy, y_low, q.y_max, FIRST_PANEL) {
            nodes.push((UHPoint::new(x, y)?, wx * wy));
        }
    }
    Ok(nodes)
}

/// Distance from `p` (inside the truncated domain) to its boundary along
/// direction `theta`, for `p` from which the whole arc is visible.
fn boundary_distance(p: Complex64, theta: f64, y_max: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let mut best = f64::INFINITY;
    if c < 0.0 {
        best = best.min((-0.5 - p.re) / c);
    }
    if c > 0.0 {
        best = best.min((0.5 - p.re) / c);
    }
    if s > 0.0 {
        best = best.min((y_max - p.im) / s);
    }
    let pe = p.re * c + p.im * s;
    let disc = pe * pe - (p.norm_sqr() - 1.0);
    if disc >= 0.0 {
        let t = -pe - disc.sqrt();
        if t > 0.0 && (p.re + t * c).abs() <= 0.5 {
            best = best.min(t);
        }
    }
    best
}

fn inside_domain(p: UHPoint, y_max: f64) -> bool {
    p.x().abs() < 0.5 && p.z().norm() > 1.0 && p.y() < y_max
}

/// Whether the truncated domain is star-shaped about `p`: every point `b`
/// of the arc lies on the near side of its tangent line, `p·b ≥ 1`. The
/// minimum of `p·b` over the arc is attained at a corner.
fn arc_visible(p: UHPoint) -> bool {
    let h = 0.75f64.sqrt();
    [-0.5, 0.5].iter().all(|&bx| p.x() * bx + p.y() * h >= 1.0)
}

/// Directions from `p` to breakpoints walked counterclockwise along the
/// boundary, unwrapped to increase by `2π` in total. Breakpoints on the
/// vertical sides are spaced geometrically away from the height of `p`, so
/// that the distance to the boundary varies mildly on each angular panel.
fn boundary_angles(p: Complex64, y_max: f64) -> Vec<f64> {
    let h = 0.75f64.sqrt();
    let mut heights = vec![h, y_max];
    if p.im > h {
        heights.push(p.im);
    }
    let mut step = FIRST_PANEL;
    while step < y_max {
        for y in [p.im - step, p.im + step] {
            if y > h && y < y_max {
                heights.push(y);
            }
        }
        step *= 2.0;
    }
    heights.sort_by(f64::total_cmp);
    heights.dedup();
    let quarters = [-0.5, -0.25, 0.0, 0.25, 0.5];
    let mut pts: Vec<Complex64> =
        (0..=ARC_PANELS).map(|j| Complex64::new(-0.5 + j as f64 / ARC_PANELS as f64, 0.0)).collect();
    for b in &mut pts {
        b.im = (1.0 - b.re * b.re).sqrt();
    }
    pts.extend(heights.iter().skip(1).map(|&y| Complex64::new(0.5, y)));
    pts.extend(quarters.iter().rev().skip(1).map(|&x| Complex64::new(x, y_max)));
    pts.extend(heights.iter().rev().skip(1).map(|&y| Complex64::new(-0.5, y)));
    let mut angles: Vec<f64> = Vec::with_capacity(pts.len());
    for b in pts {
        let mut a = (b - p).arg();
        if let Some(&last) = angles.last() {
            while a < last {
                a += 2.0 * PI;
            }
        }
        angles.push(a);
    }
    angles
}

/// Polar nodes about `pole` on the truncated domain minus the disk of radius
/// `eps`, with area weights `r dr dθ`. Angular panels are split at the
/// directions returned by `boundary_angles`.
pub fn polar_nodes(pole: UHPoint, eps: f64, q: &FDQuadParams) -> Result<Vec<(UHPoint, f64)>> {
    q.validate()?;
    if !inside_domain(pole, q.y_max) {
        return Err(Error::Domain(format!("pole {} is not interior to the fundamental domain", pole.z())));
    }
    if !arc_visible(pole) {
        return Err(Error::Domain(format!("the domain is not star-shaped about {}", pole.z())));
    }
    let p = pole.z();
    let gt = rule(q.grid_nx);
    let gr = rule(q.grid_ny);
    let angles = boundary_angles(p, q.y_max);
    let mut thetas = Vec::new();
    for w in angles.windows(2) {
        push_panel(&mut thetas, &gt, w[0], w[1]);
    }
    let mut nodes = Vec::new();
    for (theta, wt) in thetas {
        let reach = boundary_distance(p, theta, q.y_max);
        if reach <= eps {
            return Err(Error::Domain(format!("puncture radius {eps} reaches the domain boundary")));
        }
        let dir = Complex64::from_polar(1.0, theta);
        for (r, wr) in geometric_nodes(&gr, eps, reach, FIRST_PANEL) {
            let z = p + r * dir;
            nodes.push((UHPoint::from_complex(z)?, wt * wr * r));
        }
    }
    Ok(nodes)
}

/// `Σ w f conj(g) y^(2k-2)` over the nodes, accumulated in node order.
fn integrate<F, G>(f: &F, g: &G, k: u32, nodes: &[(UHPoint, f64)]) -> Result<Complex64>
where
    F: PointFunction + ?Sized,
    G: PointFunction + ?Sized,
{
    let zs: Vec<UHPoint> = nodes.iter().map(|n| n.0).collect();
    let fv = f.eval_many(&zs)?;
    let gv = g.eval_many(&zs)?;
    let mut total = Complex64::new(0.0, 0.0);
    for ((&(z, w), a), b) in nodes.iter().zip(fv).zip(gv) {
        let v = a * b.conj() * z.y().powi(2 * k as i32 - 2);
        if !(v.norm() <= NONINTEGRABLE_GUARD) {
            return Err(Error::NonIntegrable { magnitude: v.norm() });
        }
        total += w * v;
    }
    Ok(total)
}

/// `∫ f conj(g) y^{2k} dx dy / y²` over the truncated fundamental domain.
pub fn petersson_quadrature<F, G>(f: &F, g: &G, k: u32, q: &FDQuadParams) -> Result<Complex64>
where
    F: PointFunction + ?Sized,
    G: PointFunction + ?Sized,
{
    integrate(f, g, k, &fd_nodes(q)?)
}

/// The same integral for an integrand with a single pole of order at most
/// one at `pole`, together with an error estimate.
///
/// With `puncture_radius > 0` the disk of radius `ε` about the pole is
/// excluded for `ε = ε₀, ε₀/2, …` and the values are extrapolated in `ε²`
/// (the odd angular modes of a simple pole integrate to zero, so the
/// excluded mass is even in `ε`). With `puncture_radius = 0` the polar
/// rule integrates straight up to the pole, where `r dr` cancels the pole.
pub fn petersson_quadrature_punctured<F, G>(
    f: &F,
    g: &G,
    k: u32,
    pole: UHPoint,
    q: &FDQuadParams,
) -> Result<(Complex64, f64)>
where
    F: PointFunction + ?Sized,
    G: PointFunction + ?Sized,
{
    if q.puncture_radius == 0.0 {
        return Ok((integrate(f, g, k, &polar_nodes(pole, 0.0, q)?)?, 0.0));
    }
    let levels = q.richardson_punctures as usize;
    let mut table: Vec<Vec<Complex64>> = Vec::with_capacity(levels + 1);
    for j in 0..=levels {
        let eps = q.puncture_radius / 2f64.powi(j as i32);
        let mut row = vec![integrate(f, g, k, &polar_nodes(pole, eps, q)?)?];
        for l in 1..=j {
            let factor = 4f64.powi(l as i32) - 1.0;
            let v = row[l - 1] + (row[l - 1] - table[j - 1][l - 1]) / factor;
            row.push(v);
        }
        table.push(row);
    }
    let best = table[levels][levels];
    let estimate = if levels == 0 { f64::NAN } else { (best - table[levels - 1][levels - 1]).norm() };
    Ok((best, estimate))
}

/// `⟨f, Ψ_{2k,n}^c⟩ = 8π (2k-2)! n! / ((4 y_c)^{2k} (2k-1+n)!) · c_f(n)` for
/// a cusp form `f` with full coefficient `c_f(n)` at `c`.
pub fn inner_coeff_formula(c_f_at_n: Complex64, k: u32, n: u32, center_y: f64) -> Result<Complex64> {
    let ki = k as i64;
    let n = n as i64;
    // n!/(2k-1+n)! as a product to stay finite for large n
    let ratio: f64 = (n + 1..=2 * ki - 1 + n).map(|j| 1.0 / j as f64).product();
    let scale = 8.0 * PI * factorial(2 * ki - 2)? * ratio / (4.0 * center_y).powi(2 * k as i32);
    Ok(scale * c_f_at_n)
}

/// `⟨Ψ_{2k,ℓ}^c, f⟩ = (2π/y_c) c⁺_F(-ℓ-1)` for `ℓ ≤ -1` and zero
/// otherwise, where `ξ F = f` lies in the complement of the cusp forms.
pub fn inner_via_cplus(cplus_f_at: Complex64, _k: u32, ell: i64, center_y: f64) -> Complex64 {
    if ell <= -1 {
        2.0 * PI / center_y * cplus_f_at
    } else {
        Complex64::new(0.0, 0.0)
    }
}

fn delta_fn(z: UHPoint) -> Result<Complex64> {
    Ok(delta(z))
}

/// Sampling circle for expanding the entire form `Δ`.
fn delta_sampling(samples: usize) -> Result<CircleSampling> {
    CircleSampling::new(DEFAULT_RADII.1, samples)
}

/// Quadrature of `⟨Δ, Ψ_{2k,n}^z⟩` against the coefficient formula with the
/// coefficient of `Δ` (leading q-coefficient one) extracted at `z`.
pub fn check_petersson_formula(
    k: u32,
    n: u32,
    z: UHPoint,
    trunc: TruncationParams,
    samples: usize,
    q: &FDQuadParams,
) -> Result<InnerReport> {
    if k != 6 {
        return Err(Error::Domain(format!("the coefficient check uses Δ and needs k = 6, got {k}")));
    }
    let psi = TruncatedSeries::new(SeriesSpec::meromorphic(k, n as i64, z)?, trunc);
    let lhs = petersson_quadrature(&delta_fn, &psi, k, q)?;
    let e = extract_meromorphic(&delta_fn, z, k, &delta_sampling(samples)?, (0, n as i64))?;
    let rhs = inner_coeff_formula(e.plus(n as i64), k, n, z.y())?;
    Ok(InnerReport::new(lhs, rhs).with("omega", stabilizer_order(z, ORBIT_TOL) as f64))
}

/// `sqrt(⟨Ψ,Ψ⟩₀(m, y₂) ⟨Ψ,Ψ⟩₀(n, y₁))`, where `⟨Ψ,Ψ⟩₀(n, y)` is the
/// coefficient formula with coefficient one: the unfolded pairing of a seed
/// with itself. It bounds the identity-term part of
/// `⟨Ψ_{2k,m}^{z2}, Ψ_{2k,n}^{z1}⟩` and is the scale against which
/// vanishing pairings are judged.
pub fn pairing_scale(k: u32, m: u32, n: u32, z1: UHPoint, z2: UHPoint) -> Result<f64> {
    let a = inner_coeff_formula(Complex64::new(1.0, 0.0), k, m, z2.y())?.re;
    let b = inner_coeff_formula(Complex64::new(1.0, 0.0), k, n, z1.y())?.re;
    Ok((a * b).sqrt())
}

/// How a series is sampled around `z`: whole when `z` is off the center
/// orbit, and without the stabilizer terms when `z` is the center, in which
/// case those terms (`S · seed`, `S` the stabilizer character sum) are
/// expanded exactly. Returns `S` in the second case.
fn split_at(spec: &SeriesSpec, z: UHPoint) -> Result<Option<Complex64>> {
    if !sl2z_equivalent(spec.center, z, ORBIT_TOL) {
        return Ok(None);
    }
    if (spec.center.z() - z.z()).norm() > ORBIT_TOL * z.y() {
        return Err(Error::Domain(format!(
            "expansion point {} is an orbit image of the center {}; expand around the center itself",
            z.z(),
            spec.center.z()
        )));
    }
    Ok(Some(stabilizer_character_sum(spec)?))
}

/// Full coefficients `(c⁺(index), c⁻(index))` of a truncated harmonic series
/// around `z`. The seed `(z - conj c)^{2k-2} β(1-r²; 2k-1, -m) X^m`
/// contributes `C_{2k-1,-m}` to `c⁺(m)` and `1` to `c⁻(m)`.
pub fn harmonic_coeffs(
    spec: &SeriesSpec,
    z: UHPoint,
    index: i64,
    trunc: TruncationParams,
    samples: usize,
) -> Result<(Complex64, Complex64)> {
    let (s1, s2) = sampling_pair(z, Some(spec.center), samples)?;
    let window = (index, index);
    match split_at(spec, z)? {
        None => {
            let e = extract_harmonic(&TruncatedSeries::new(*spec, trunc), z, spec.k, &s1, &s2, window)?;
            Ok((e.plus(index), e.minus(index)))
        }
        Some(chi) => {
            let rest = RegularPart { spec: *spec, trunc };
            let e = extract_harmonic(&rest, z, spec.k, &s1, &s2, window)?;
            let (mut plus, mut minus) = (e.plus(index), e.minus(index));
            if index == spec.m {
                plus += chi * c_const_f64(2 * spec.k - 1, -(spec.m as i32));
                minus += chi;
            }
            Ok((plus, minus))
        }
    }
}

/// Full coefficient `c(index)` of a truncated meromorphic series around `z`.
pub fn meromorphic_coeff(spec: &SeriesSpec, z: UHPoint, index: i64, trunc: TruncationParams, samples: usize) -> Result<Complex64> {
    let (_, s) = sampling_pair(z, Some(spec.center), samples)?;
    let window = (index, index);
    match split_at(spec, z)? {
        None => Ok(extract_meromorphic(&TruncatedSeries::new(*spec, trunc), z, spec.k, &s, window)?.plus(index)),
        Some(chi) => {
            let rest = RegularPart { spec: *spec, trunc };
            let c = extract_meromorphic(&rest, z, spec.k, &s, window)?.plus(index);
            Ok(if index == spec.m { c + chi } else { c })
        }
    }
}

/// `c⁺_{𝒫,z₁}(2k-1+n)` for `𝒫 = (4y₂)^{1-2k} P_{2-2k,2k-1+m}^{z2}`, `m ≥ 0`.
///
/// Sampling `𝒫` itself is hopeless in double precision: its principal
/// parts of order `2k-1+m` at the orbit points next to `z₁` dwarf
/// `c⁺(2k-1+n) ρ^{2k-1+n}` on any admissible circle. The coefficient is
/// instead carried over from the `ξ`-partner `P_{2-2k,-1-m}^{z2}`, whose
/// principal parts have order `m+1`: with `N = 2k-1+n`,
/// `c⁺_P(N) = -(2k-2)!/(N(N-1)⋯(N-2k+2)) · conj c⁻_{P'}(-n-1)`, where the
/// factor `(y₂/y₁)^{2k-1}` of the `ξ` relation cancels the one of the
/// `D^{2k-1}` relation.
pub fn cplus_of_p(k: u32, m: i64, n: u32, z1: UHPoint, z2: UHPoint, trunc: TruncationParams, samples: usize) -> Result<Complex64> {
    if m < 0 {
        return Err(Error::Domain(format!("the c⁺ route needs m >= 0, got {m}")));
    }
    let ki = k as i64;
    let partner = SeriesSpec::harmonic(k, -1 - m, z2)?;
    let (_, cminus) = harmonic_coeffs(&partner, z1, -(n as i64) - 1, trunc, samples)?;
    let big_n = 2 * ki - 1 + n as i64;
    let c_plus = -factorial(2 * ki - 2)? / falling_factorial(big_n, 2 * k - 1) * cminus.conj();
    Ok((4.0 * z2.y()).powi(1 - 2 * k as i32) * c_plus)
}

/// The `c⁺` route to `⟨Ψ_{2k,m}^{z2}, Ψ_{2k,n}^{z1}⟩`: `-(2π/y₁) c⁺_{𝒫,z₁}(2k-1+n)`,
/// the negated value of [`inner_via_cplus`] for the pairing
/// `⟨Ψ_{2k,-n-2k}^{z1}, Ψ_{2k,-m-2k}^{z2}⟩`.
pub fn cplus_route(
    k: u32,
    m: i64,
    n: u32,
    z1: UHPoint,
    z2: UHPoint,
    trunc: TruncationParams,
    samples: usize,
) -> Result<Complex64> {
    let c = cplus_of_p(k, m, n, z1, z2, trunc, samples)?;
    Ok(-inner_via_cplus(c, k, -(n as i64) - 2 * k as i64, z1.y()))
}

/// Both sides of `⟨Ψ_{2k,m}^{z2}, Ψ_{2k,n}^{z1}⟩ = -(2π/y₁) c⁺_{𝒫,z₁}(2k-1+n)`:
/// the left by quadrature of the two truncated series, the right by
/// extracting the harmonic coefficient.
///
/// Diagnostics: `pairing_scale` (see [`pairing_scale`]) for judging
/// vanishing cases, and `opposite_sign`, which is `1` when the right side before its
/// minus sign points against the left side.
pub fn check_theorem_1_1(
    k: u32,
    m: u32,
    n: u32,
    z1: UHPoint,
    z2: UHPoint,
    trunc: TruncationParams,
    samples: usize,
    q: &FDQuadParams,
) -> Result<InnerReport> {
    if !(2..=7).contains(&k) {
        return Err(Error::Domain(format!("k must lie in 2..=7, got {k}")));
    }
    let f = TruncatedSeries::new(SeriesSpec::meromorphic(k, m as i64, z2)?, trunc);
    let g = TruncatedSeries::new(SeriesSpec::meromorphic(k, n as i64, z1)?, trunc);
    let lhs = petersson_quadrature(&f, &g, k, q)?;
    let rhs = cplus_route(k, m as i64, n, z1, z2, trunc, samples)?;
    let unnegated = -rhs;
    let opposite = (unnegated * lhs.conj()).re < 0.0;
    Ok(InnerReport::new(lhs, rhs)
        .with("pairing_scale", pairing_scale(k, m, n, z1, z2)?)
        .with("opposite_sign", if opposite { 1.0 } else { 0.0 }))
}

/// The pairing `⟨Ψ_{2k,m}^{z2}, Ψ_{2k,n}^{z1}⟩` for `m ≥ 0` two ways through
/// the pole side: the left is `inner_via_cplus` applied to
/// `⟨Ψ_{2k,-n-2k}^{z1}, Ψ_{2k,-m-2k}^{z2}⟩` (the form on the right lies in
/// the complement of the cusp forms), negated; the right is the coefficient
/// formula with the meromorphic coefficient of `Ψ_{2k,m}^{z2}` at `z1`.
pub fn check_inner_mero(
    k: u32,
    m: u32,
    n: u32,
    z1: UHPoint,
    z2: UHPoint,
    trunc: TruncationParams,
    samples: usize,
) -> Result<InnerReport> {
    let lhs = cplus_route(k, m as i64, n, z1, z2, trunc, samples)?;
    let c = meromorphic_coeff(&SeriesSpec::meromorphic(k, m as i64, z2)?, z1, n as i64, trunc, samples)?;
    let rhs = inner_coeff_formula(c, k, n, z1.y())?;
    Ok(InnerReport::new(lhs, rhs))
}

/// Punctured quadrature of `⟨Ψ_{2k,m}^c, Δ⟩` for `m = -1`, whose only pole
/// in the domain is the simple pole at the reduced center. Diagnostics:
/// `delta_norm` (`⟨Δ, Δ⟩`), `extrapolation_error`, and `ratio`
/// (`|⟨Ψ, Δ⟩| / ⟨Δ, Δ⟩`).
pub fn check_orthogonality(center: UHPoint, trunc: TruncationParams, q: &FDQuadParams) -> Result<InnerReport> {
    let psi = TruncatedSeries::new(SeriesSpec::meromorphic(6, -1, center)?, trunc);
    let (value, err) = petersson_quadrature_punctured(&psi, &delta_fn, 6, center, q)?;
    let norm = petersson_quadrature(&delta_fn, &delta_fn, 6, q)?.re;
    Ok(InnerReport::new(value, Complex64::new(0.0, 0.0))
        .with("delta_norm", norm)
        .with("extrapolation_error", err)
        .with("ratio", value.norm() / norm))
}

/// Outcome of the weight-12 degeneracy demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    /// `⟨𝕗, 𝕗⟩` by quadrature, `𝕗 = ξ F = Ψ_{12,0}^{2i}`.
    pub xi_norm: f64,
    /// `⟨f, f⟩` for `f = D^{11} F`, from the pairing identity and the `c⁺`
    /// route.
    pub d_norm: f64,
    /// `⟨f, f⟩ / ⟨𝕗, 𝕗⟩`.
    pub ratio: f64,
    /// The ratio divided by the operator constant it is predicted to equal,
    /// `-((2k-2)!)² / (4π)^{4k-2}`.
    pub normalized_ratio: f64,
    /// Largest relative defect of `ξ F` against `Ψ_{12,0}^{2i}` at the
    /// probe points.
    pub xi_defect: f64,
    /// `⟨Ψ_{12,-1}^{2i}, 𝕗⟩` by punctured quadrature (lhs) against zero: the
    /// orthogonality of the pole-carrying series to cusp forms, which makes
    /// both sides of the pairing identity vanish once an index is at most
    /// `-2k`. Diagnostic `scale` is `⟨𝕗, 𝕗⟩`.
    pub orthogonal_branch: InnerReport,
}

/// Weight-12 degeneracy demonstration at the center `2i`.
///
/// `F = (4y)^{-11} P_{-10,-1}^{2i}` has `ξ F = Ψ_{12,0}^{2i}` and
/// `D^{11} F = -10! (4π)^{-11} Ψ_{12,-12}^{2i}`. The norm of the latter is
/// obtained from `⟨Ψ_{12,-12}, Ψ_{12,-12}⟩ = -⟨Ψ_{12,0}, Ψ_{12,0}⟩` with the
/// right side evaluated by the `c⁺` route.
pub fn weight12_degeneracy_demo(trunc: TruncationParams, samples: usize, q: &FDQuadParams) -> Result<DegeneracyReport> {
    let k = 6u32;
    let c = UHPoint::new(0.0, 2.0)?;
    let fact = factorial(10)?;
    let xi_f = TruncatedSeries::new(SeriesSpec::meromorphic(k, 0, c)?, trunc);
    let xi_norm = petersson_quadrature(&xi_f, &xi_f, k, q)?.re;

    let big_f = TruncatedSeries::new(SeriesSpec::harmonic(k, -1, c)?, trunc);
    let big_f = Scaled { scale: Complex64::from((4.0 * c.y()).powi(-11)), inner: &big_f };
    let sp = StencilParams::default();
    let mut xi_defect: f64 = 0.0;
    for z in [UHPoint::new(0.1, 1.2)?, UHPoint::new(-0.3, 0.98)?, UHPoint::new(0.25, 1.7)?] {
        let a = xi(&big_f, 2 - 2 * k as i32, z, &sp)?;
        let b = xi_f.eval(z)?;
        xi_defect = xi_defect.max(relative_difference(a, b));
    }

    let psi_psi = cplus_route(k, 0, 0, c, c, trunc, samples)?;
    let d_const = fact / (4.0 * PI).powi(11);
    let d_norm = d_const * d_const * (-psi_psi.re);
    let ratio = d_norm / xi_norm;
    let normalized_ratio = ratio / (-d_const * d_const);

    let polar = TruncatedSeries::new(SeriesSpec::meromorphic(k, -1, c)?, trunc);
    let (value, err) = petersson_quadrature_punctured(&polar, &xi_f, k, c, q)?;
    let orthogonal_branch = InnerReport::new(value, Complex64::new(0.0, 0.0))
        .with("scale", xi_norm)
        .with("extrapolation_error", err);

    Ok(DegeneracyReport { xi_norm, d_norm, ratio, normalized_ratio, xi_defect, orthogonal_branch })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> UHPoint {
        UHPoint::new(x, y).unwrap()
    }

    fn small() -> FDQuadParams {
        FDQuadParams { grid_nx: 12, grid_ny: 12, ..FDQuadParams::default() }
    }

    #[test]
    fn fd_area() {
        // Euclidean area of the truncated domain
        let q = small();
        let one = |_: UHPoint| Ok(Complex64::new(1.0, 0.0));
        let area = petersson_quadrature(&one, &one, 1, &q).unwrap();
        assert!((area.re - (q.y_max - PI / 6.0 - 0.75f64.sqrt() / 2.0)).abs() < 1e-12, "{area}");
    }

    #[test]
    fn polar_area() {
        let q = small();
        let want = q.y_max - PI / 6.0 - 0.75f64.sqrt() / 2.0;
        for pole in [p(0.0, 2.0), p(0.25, 1.5), p(-0.3, 1.4)] {
            let nodes = polar_nodes(pole, 0.0, &q).unwrap();
            let area: f64 = nodes.iter().map(|n| n.1).sum();
            assert!((area - want).abs() < 1e-10, "{pole:?}: {area}");
            let nodes = polar_nodes(pole, 0.01, &q).unwrap();
            let area: f64 = nodes.iter().map(|n| n.1).sum();
            assert!((area - (want - PI * 1e-4)).abs() < 1e-10);
        }
        assert!(polar_nodes(p(-0.4, 1.05), 0.0, &q).is_err());
    }

    #[test]
    fn zero_pairing() {
        let zero = |_: UHPoint| Ok(Complex64::new(0.0, 0.0));
        assert_eq!(petersson_quadrature(&zero, &delta_fn, 6, &small()).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn delta_norm_converges() {
        let a = petersson_quadrature(&delta_fn, &delta_fn, 6, &small()).unwrap();
        let b = petersson_quadrature(&delta_fn, &delta_fn, 6, &FDQuadParams::default()).unwrap();
        assert!(a.re > 0.0 && a.im.abs() < 1e-12 * a.re);
        assert!(relative_difference(a, b) < 1e-6, "{a} {b}");
        assert!((b.re - 1.035362056804e-6).abs() < 1e-12 * 1e3, "{b}");
    }

    #[test]
    fn simple_pole_integral() {
        // integrating through the pole and extrapolating punctured values
        // agree
        let pole = p(0.1, 1.6);
        let f = move |z: UHPoint| Ok(1.0 / (z.z() - pole.z()));
        let one = |_: UHPoint| Ok(Complex64::new(1.0, 0.0));
        let q = FDQuadParams { puncture_radius: 0.0, ..small() };
        let (direct, _) = petersson_quadrature_punctured(&f, &one, 1, pole, &q).unwrap();
        let (rich, err) = petersson_quadrature_punctured(&f, &one, 1, pole, &small()).unwrap();
        assert!((direct - rich).norm() < 1e-9, "{direct} {rich}");
        assert!(err < 1e-8);
    }

    #[test]
    fn formulas() {
        assert_eq!(inner_coeff_formula(Complex64::new(0.0, 0.0), 6, 0, 1.0).unwrap(), Complex64::new(0.0, 0.0));
        let a = inner_coeff_formula(Complex64::new(1.0, 0.5), 6, 2, 1.5).unwrap();
        let b = inner_coeff_formula(Complex64::new(2.0, 1.0), 6, 2, 1.5).unwrap();
        assert!((2.0 * a - b).norm() < 1e-15 * b.norm());
        let want = 8.0 * PI * 3628800.0 / (4f64.powi(12) * 39916800.0);
        assert!((inner_coeff_formula(1.0.into(), 6, 0, 1.0).unwrap().re - want).abs() < 1e-15 * want);
        assert_eq!(inner_via_cplus(Complex64::new(5.0, 1.0), 6, 0, 2.0), Complex64::new(0.0, 0.0));
        assert!((inner_via_cplus(1.0.into(), 6, -1, 2.0) - PI).norm() < 1e-15);
    }

    #[test]
    fn conjugate_symmetry() {
        let q = small();
        let psi = TruncatedSeries::new(SeriesSpec::meromorphic(6, 1, p(0.0, 2.0)).unwrap(), TruncationParams::with_shells(8));
        let a = petersson_quadrature(&psi, &delta_fn, 6, &q).unwrap();
        let b = petersson_quadrature(&delta_fn, &psi, 6, &q).unwrap();
        assert!((a - b.conj()).norm() < 1e-14 * a.norm());
    }
}
