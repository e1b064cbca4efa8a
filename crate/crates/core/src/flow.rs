//! Principal directions as roots of the BDE, and their integral curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BdeCoefficients, FormBundle};
use crate::minkowski::LIGHT_CONE_TOL;
use crate::mobius_forms::bde_scale;
use crate::surface::SurfacePatch;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: usize = 10_000;
/// Tolerance on the normalized discriminant for a double root.
pub const ROOT_TOL: f64 = 1e-12;
/// Relative threshold below which all three coefficients count as zero.
pub const ZERO_TOL: f64 = 1e-12;
const MAX_HALVINGS: u32 = 8;
/// Slowdown starts where the normalized discriminant drops below
/// `LPL_SLOWDOWN_SCALE * step`. The discriminant vanishes linearly at the
/// LPL, so this keeps each step a fixed fraction of the distance to it.
pub const LPL_SLOWDOWN_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionPair {
    pub d1: Option<(f64, f64)>,
    pub d2: Option<(f64, f64)>,
    pub count: u8,
}

impl DirectionPair {
    pub fn get(&self, branch: u8) -> Option<(f64, f64)> {
        match branch {
            1 => self.d1,
            2 => self.d2,
            _ => None,
        }
    }

    pub fn directions(&self) -> Vec<(f64, f64)> {
        self.d1.into_iter().chain(self.d2).collect()
    }
}

fn unit(d: (f64, f64)) -> (f64, f64) {
    let n = d.0.hypot(d.1);
    let (u, v) = (d.0 / n, d.1 / n);
    // Line fields have no sign; point toward increasing u.
    if u < 0.0 || (u == 0.0 && v < 0.0) {
        (-u, -v)
    } else {
        (u, v)
    }
}

/// Branch order: the root closer to the u-axis first, then by angle.
fn branch_order(a: &(f64, f64), b: &(f64, f64)) -> std::cmp::Ordering {
    b.0.abs().total_cmp(&a.0.abs()).then(a.1.atan2(a.0).total_cmp(&b.1.atan2(b.0)))
}

/// Normalized discriminant `(B^2 - 4AC) / |(A,B,C)|^2`.
pub fn normalized_discriminant(c: &BdeCoefficients) -> f64 {
    let s = c.scaled(1.0 / c.norm());
    s.discriminant()
}

/// Roots of `A dv^2 + B du dv + C du^2 = 0` with `tol` on the normalized
/// discriminant; coefficients with `max |.| <= tol` are all zero.
pub fn bde_roots(c: &BdeCoefficients, tol: f64) -> Result<DirectionPair> {
    bde_roots_scaled(c, tol, tol)
}

/// As [`bde_roots`], with a separate absolute threshold `zero` for the
/// all-zero test.
///
/// Both roots come from one stable expression: with
/// `q = -(B + sgn(B) sqrt(D)) / 2` the directions `(A, q)` and `(q, C)`
/// solve the equation, including the cases `A = 0` or `C = 0`.
pub fn bde_roots_scaled(c: &BdeCoefficients, tol: f64, zero: f64) -> Result<DirectionPair> {
    if !(c.max_abs() > zero) {
        return Err(Error::AllZero);
    }
    let s = c.scaled(1.0 / c.norm());
    let d = s.discriminant();
    if d < -tol {
        return Ok(DirectionPair { d1: None, d2: None, count: 0 });
    }
    if d <= tol {
        let (x, y) = ((2.0 * s.a, -s.b), (-s.b, 2.0 * s.c));
        let pick = if x.0.hypot(x.1) >= y.0.hypot(y.1) { x } else { y };
        return Ok(DirectionPair { d1: Some(unit(pick)), d2: None, count: 1 });
    }
    let sq = d.sqrt();
    let q = -0.5 * (s.b + if s.b >= 0.0 { sq } else { -sq });
    let mut r = [unit((s.a, q)), unit((q, s.c))];
    if r[0].0.is_nan() || r[1].0.is_nan() {
        // Only reachable with A = q = 0 or C = q = 0, excluded by d > tol.
        return Ok(DirectionPair { d1: None, d2: None, count: 0 });
    }
    r.sort_by(branch_order);
    Ok(DirectionPair { d1: Some(r[0]), d2: Some(r[1]), count: 2 })
}

/// Unsigned angle between two line directions, in `[0, pi/2]`.
pub fn line_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let cross = (a.0 * b.1 - a.1 * b.0).abs();
    let dot = (a.0 * b.0 + a.1 * b.1).abs();
    cross.atan2(dot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// All requested steps were taken.
    Completed,
    /// Left the parameter domain.
    Boundary,
    /// Reached a masked point.
    Masked,
    /// The two principal directions merged or became complex.
    Lpl,
    /// All BDE coefficients vanish.
    Umbilic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalLine {
    pub samples: Vec<(f64, f64)>,
    /// Unit tangents from finite differences of the samples.
    pub tangents: Vec<(f64, f64)>,
    pub branch: u8,
    pub step: f64,
    /// Largest normalized BDE residual of `tangents` on the source patch.
    pub residual_max: f64,
    pub stop: StopReason,
    /// Smallest inner product between consecutive chosen directions.
    pub min_continuation: f64,
}

enum Probe {
    Ok { roots: DirectionPair, disc: f64 },
    Stop(StopReason),
}

fn probe(patch: &SurfacePatch, u: f64, v: f64) -> Probe {
    if !patch.domain().contains(u, v) {
        return Probe::Stop(StopReason::Boundary);
    }
    let j = match patch.jet2(u, v) {
        Ok(j) if j.is_finite() => j,
        Ok(_) | Err(Error::Masked { .. }) => return Probe::Stop(StopReason::Masked),
        Err(_) => return Probe::Stop(StopReason::Boundary),
    };
    let c = FormBundle::from_jet(&j).bde();
    match bde_roots_scaled(&c, ROOT_TOL, ZERO_TOL * bde_scale(&j)) {
        Ok(roots) if roots.count == 2 => Probe::Ok { roots, disc: normalized_discriminant(&c) },
        Ok(_) => Probe::Stop(StopReason::Lpl),
        Err(_) => Probe::Stop(StopReason::Umbilic),
    }
}

/// The root closest to `prev`, signed to agree with it.
fn follow(roots: &DirectionPair, prev: (f64, f64)) -> (f64, f64) {
    let dot = |d: (f64, f64)| d.0 * prev.0 + d.1 * prev.1;
    let best = roots
        .directions()
        .into_iter()
        .max_by(|a, b| dot(*a).abs().total_cmp(&dot(*b).abs()))
        .expect("two roots");
    if dot(best) < 0.0 {
        (-best.0, -best.1)
    } else {
        best
    }
}

fn field(patch: &SurfacePatch, p: (f64, f64), prev: (f64, f64)) -> std::result::Result<((f64, f64), f64), StopReason> {
    match probe(patch, p.0, p.1) {
        Probe::Ok { roots, disc } => Ok((follow(&roots, prev), disc)),
        Probe::Stop(r) => Err(r),
    }
}

fn rk4(
    patch: &SurfacePatch,
    p: (f64, f64),
    prev: (f64, f64),
    h: f64,
) -> std::result::Result<((f64, f64), (f64, f64), f64), StopReason> {
    let add = |p: (f64, f64), k: (f64, f64), s: f64| (p.0 + s * k.0, p.1 + s * k.1);
    let (k1, _) = field(patch, p, prev)?;
    let (k2, _) = field(patch, add(p, k1, 0.5 * h), k1)?;
    let (k3, _) = field(patch, add(p, k2, 0.5 * h), k2)?;
    let (k4, _) = field(patch, add(p, k3, h), k3)?;
    let dir = (
        (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) / 6.0,
        (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) / 6.0,
    );
    let next = add(p, dir, h);
    let n = dir.0.hypot(dir.1);
    let min_dot = [k1, k2, k3, k4]
        .windows(2)
        .map(|w| w[0].0 * w[1].0 + w[0].1 * w[1].1)
        .fold(prev.0 * k1.0 + prev.1 * k1.1, f64::min);
    Ok((next, (dir.0 / n, dir.1 / n), min_dot))
}

/// Tangents of a sampled curve: derivative of the Lagrange interpolant
/// through five neighbouring samples, parametrized by chord length, so
/// uneven spacing keeps fourth-order accuracy.
pub fn sample_tangents(s: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = s.len();
    let mut t = vec![0.0; n];
    for k in 1..n {
        t[k] = t[k - 1] + (s[k].0 - s[k - 1].0).hypot(s[k].1 - s[k - 1].1);
    }
    let width = n.min(5);
    (0..n)
        .map(|i| {
            if n < 2 {
                return (0.0, 0.0);
            }
            let lo = i.saturating_sub(width / 2).min(n - width);
            let nodes: Vec<usize> = (lo..lo + width).collect();
            let mut d = (0.0, 0.0);
            for &j in &nodes {
                let w = if j == i {
                    nodes.iter().filter(|&&m| m != i).map(|&m| 1.0 / (t[i] - t[m])).sum()
                } else {
                    let num: f64 = nodes.iter().filter(|&&m| m != i && m != j).map(|&m| t[i] - t[m]).product();
                    let den: f64 = nodes.iter().filter(|&&m| m != j).map(|&m| t[j] - t[m]).product();
                    num / den
                };
                d.0 += w * s[j].0;
                d.1 += w * s[j].1;
            }
            let m = d.0.hypot(d.1);
            if m > 0.0 && m.is_finite() {
                (d.0 / m, d.1 / m)
            } else {
                (0.0, 0.0)
            }
        })
        .collect()
}

/// Largest normalized BDE residual of the sampled curve on `patch`.
pub fn curve_residual(patch: &SurfacePatch, samples: &[(f64, f64)]) -> Result<f64> {
    let t = sample_tangents(samples);
    let mut worst = 0.0f64;
    for (k, (&(u, v), &(du, dv))) in samples.iter().zip(&t).enumerate() {
        if !patch.is_defined(u, v) {
            return Err(Error::MaskedSample { index: k, u, v });
        }
        let j = patch.jet2(u, v)?;
        if !j.is_finite() {
            return Err(Error::MaskedSample { index: k, u, v });
        }
        worst = worst.max(FormBundle::from_jet(&j).bde().residual(du, dv));
    }
    Ok(worst)
}

/// Integrate branch `branch` (1 or 2) of the principal line field from
/// `start` with RK4 steps of parameter length `step`.
///
/// Where the normalized discriminant drops below `LPL_SLOWDOWN_SCALE * step`
/// each step is shortened to `step / 2^k`, `k <= 8`, and samples are recorded at the
/// shortened spacing.
pub fn integrate_line(
    patch: &SurfacePatch,
    start: (f64, f64),
    branch: u8,
    step: f64,
    n_steps: usize,
) -> Result<PrincipalLine> {
    if !(branch == 1 || branch == 2) {
        return Err(Error::InvalidArgument(format!("branch must be 1 or 2, got {branch}")));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let (u0, v0) = start;
    let bad = |reason: &str| Error::BadStart { u: u0, v: v0, reason: reason.to_string() };
    let mut dir = match probe(patch, u0, v0) {
        Probe::Ok { roots, .. } => roots.get(branch).expect("two roots"),
        Probe::Stop(StopReason::Lpl) => return Err(bad("fewer than two principal directions")),
        Probe::Stop(StopReason::Umbilic) => return Err(bad("all BDE coefficients vanish")),
        Probe::Stop(_) => return Err(bad("start point is outside the patch")),
    };
    let mut samples = vec![start];
    let mut p = start;
    let mut stop = StopReason::Completed;
    let mut min_continuation = 1.0f64;
    'outer: for _ in 0..n_steps {
        let disc = match field(patch, p, dir) {
            Ok((_, d)) => d,
            Err(r) => {
                stop = r;
                break;
            }
        };
        let mut k = 0;
        while disc < LPL_SLOWDOWN_SCALE * step / f64::from(1u32 << k) {
            if k == MAX_HALVINGS {
                stop = StopReason::Lpl;
                break 'outer;
            }
            k += 1;
        }
        let h = step / f64::from(1u32 << k);
        match rk4(patch, p, dir, h) {
            Ok((q, d, md)) => {
                if !patch.is_defined(q.0, q.1) {
                    stop = if patch.domain().contains(q.0, q.1) { StopReason::Masked } else { StopReason::Boundary };
                    break;
                }
                min_continuation = min_continuation.min(md);
                p = q;
                dir = d;
                samples.push(p);
            }
            Err(r) => {
                stop = r;
                break;
            }
        }
    }
    let tangents = sample_tangents(&samples);
    let residual_max = curve_residual(patch, &samples)?;
    Ok(PrincipalLine { samples, tangents, branch, step, residual_max, stop, min_continuation })
}

/// Lines from several seeds, integrated in parallel, in seed order.
pub fn integrate_lines(
    patch: &SurfacePatch,
    seeds: &[(f64, f64)],
    branch: u8,
    step: f64,
    n_steps: usize,
) -> Vec<Result<PrincipalLine>> {
    seeds.par_iter().map(|&s| integrate_line(patch, s, branch, step, n_steps)).collect()
}

/// Largest normalized residual of `line` against the BDE of the inverted
/// patch. Inversion acts on the image, so the parameters are unchanged.
pub fn verify_line_preserved(patch: &SurfacePatch, line: &PrincipalLine) -> Result<f64> {
    curve_residual(&patch.invert(LIGHT_CONE_TOL), &line.samples)
}
