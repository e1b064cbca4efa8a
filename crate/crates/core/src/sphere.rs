//! Inverted Euclidean spheres: closedness, the parabolic functions `f` and
//! `g`, the ovaloid predicate, and the translation search for ovaloids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{euclidean_gauss_curvature, gauss_kbar, second_forms_bar};
use crate::loci::{extract_zero_set, ScalarGrid};
use crate::minkowski::{Vec3, LIGHT_CONE_TOL};
use crate::surface::{builtin_sphere, builtin_sphere_second_chart, SurfacePatch};
/// A curvature sample has a sign only when `|kbar|` exceeds this times the
/// size of the products it is formed from.
pub const CENSUS_REL_FLOOR: f64 = 1e-9;
/// Largest multiple of the surface scale tried by [`translation_search`].
pub const MAX_DOUBLINGS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
}

impl SphereSpec {
    pub fn new(a: f64, b: f64, c: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::NonpositiveRadius(r));
        }
        Ok(Self { a, b, c, r })
    }

    pub fn from_center(center: Vec3, r: f64) -> Result<Self> {
        Self::new(center.x0, center.x1, center.x2, r)
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(self.a, self.b, self.c)
    }

    /// `sqrt(a^2 + b^2)`, the distance of the center from the time axis.
    pub fn rho_ab(&self) -> f64 {
        self.a.hypot(self.b)
    }

    /// Both charts of the sphere; together they cover every point.
    pub fn charts(&self) -> [SurfacePatch; 2] {
        [
            builtin_sphere(self.center(), self.r).expect("radius checked"),
            builtin_sphere_second_chart(self.center(), self.r).expect("radius checked"),
        ]
    }
}

/// Euclidean distance from `p0` to the light cone.
pub fn dist_to_lightcone(p0: Vec3) -> f64 {
    (p0.x0.hypot(p0.x1) - p0.x2.abs()).abs() / std::f64::consts::SQRT_2
}

/// The inverted sphere is closed exactly when the sphere misses the cone.
pub fn is_closed_after_inversion(s: &SphereSpec) -> bool {
    // Same as (sqrt(a^2+b^2) - |c|)^2 > 2 r^2, without squaring the boundary.
    (s.rho_ab() - s.c.abs()).abs() > std::f64::consts::SQRT_2 * s.r
}

pub fn parabolic_f(uv: (f64, f64), s: &SphereSpec) -> f64 {
    let cv = uv.1.cos();
    let (a, b, c, r) = (s.a, s.b, s.c, s.r);
    -a * a - b * b + c * c + r * r + 4.0 * c * r * cv + 2.0 * r * r * cv * cv
}

pub fn parabolic_g(uv: (f64, f64), s: &SphereSpec) -> f64 {
    let (u, v) = uv;
    let (a, b, c, r) = (s.a, s.b, s.c, s.r);
    let h = a * u.cos() + b * u.sin();
    -a * a - b * b + c * c + 4.0 * c * r * v.cos().powi(3) + 3.0 * r * r * (2.0 * v).cos()
        - 4.0 * r * h * v.sin().powi(3)
}

/// `(g_min(v), g_max(v))`: `g` with `h(u)` at the ends of its range.
pub fn g_envelopes(v: f64, s: &SphereSpec) -> (f64, f64) {
    let (a, b, c, r) = (s.a, s.b, s.c, s.r);
    let base = -a * a - b * b + c * c + 4.0 * c * r * v.cos().powi(3) + 3.0 * r * r * (2.0 * v).cos();
    let w = 4.0 * r * s.rho_ab() * v.sin().powi(3);
    (base - w, base + w)
}

/// Roots of `f` as values of `cos v` in `[-1, 1]`, ascending.
pub fn f_cos_roots(s: &SphereSpec) -> Vec<f64> {
    let (a, b, c, r) = (s.a, s.b, s.c, s.r);
    let rad = a * a + b * b + c * c - r * r;
    if rad < 0.0 {
        return Vec::new();
    }
    let w = std::f64::consts::SQRT_2 * rad.sqrt();
    let mut out: Vec<f64> = [(-2.0 * c - w) / (2.0 * r), (-2.0 * c + w) / (2.0 * r)]
        .into_iter()
        .filter(|t| (-1.0..=1.0).contains(t))
        .collect();
    out.dedup();
    out
}

/// Minimum (`sign = 1`) or maximum (`sign = -1`) over `v in [0, pi]` of
/// `phi`, by dense sampling and golden-section polishing.
fn extremum_over_v(phi: impl Fn(f64) -> f64, sign: f64) -> f64 {
    let n = 10_000;
    let pi = std::f64::consts::PI;
    let at = |k: usize| pi * k as f64 / n as f64;
    let k = (0..=n).min_by(|&i, &j| (sign * phi(at(i))).total_cmp(&(sign * phi(at(j))))).unwrap();
    let (mut lo, mut hi) = (at(k.saturating_sub(1)), at((k + 1).min(n)));
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - gr * (hi - lo);
        let x2 = lo + gr * (hi - lo);
        if sign * phi(x1) < sign * phi(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let best = sign * phi(0.5 * (lo + hi));
    sign * best.min(sign * phi(at(k)))
}

pub fn min_g_min(s: &SphereSpec) -> f64 {
    extremum_over_v(|v| g_envelopes(v, s).0, 1.0)
}

pub fn max_g_max(s: &SphereSpec) -> f64 {
    extremum_over_v(|v| g_envelopes(v, s).1, -1.0)
}

pub fn is_ovaloid_inverted_sphere(s: &SphereSpec) -> bool {
    let r = s.r;
    s.rho_ab() > 2.0 * r + (s.c * s.c + r * r).sqrt()
        || s.c.abs() > 2.0 * r + (s.a * s.a + s.b * s.b + r * r).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index of the chart the parameters refer to.
    pub chart: usize,
    pub u: f64,
    pub v: f64,
}

/// Sign census of the Euclidean Gaussian curvature over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCensus {
    pub samples: usize,
    pub masked: usize,
    pub positive: usize,
    pub negative: usize,
    pub min_abs: f64,
    pub max_abs: f64,
    pub parabolic_empty: bool,
    pub witnesses: Vec<Witness>,
}

/// Census over every chart: empty when the curvature has one sign on all
/// unmasked samples. A sample only has a sign when `|kbar|` exceeds
/// `CENSUS_REL_FLOOR` times `|lbar nbar| + mbar^2`, the size of the terms it
/// is the difference of; below that it is rounding and counts as zero.
/// The reported extremes are of the Euclidean curvature, which does not
/// fade where a chart degenerates.
pub fn parabolic_census(charts: &[SurfacePatch], nu: usize, nv: usize) -> ParabolicCensus {
    let mut out = ParabolicCensus {
        samples: 0,
        masked: 0,
        positive: 0,
        negative: 0,
        min_abs: f64::INFINITY,
        max_abs: 0.0,
        parabolic_empty: false,
        witnesses: Vec::new(),
    };
    for patch in charts {
        let d = patch.domain();
        let values: Vec<Option<(f64, bool)>> = (0..nu * nv)
            .into_par_iter()
            .map(|k| {
                let (u, v) = d.cell_center(k % nu, k / nu, nu, nv);
                let j = patch.jet2(u, v).ok().filter(|j| j.is_finite())?;
                let k = euclidean_gauss_curvature(&j);
                let b = second_forms_bar(&j);
                let terms = (b.lbar * b.nbar).abs() + b.mbar * b.mbar;
                let reliable = gauss_kbar(&j).abs() > CENSUS_REL_FLOOR * terms;
                k.is_finite().then_some((k, reliable))
            })
            .collect();
        for v in &values {
            out.samples += 1;
            match v {
                None => out.masked += 1,
                Some((k, reliable)) => {
                    if *reliable && *k > 0.0 {
                        out.positive += 1;
                    } else if *reliable && *k < 0.0 {
                        out.negative += 1;
                    }
                    out.min_abs = out.min_abs.min(k.abs());
                    out.max_abs = out.max_abs.max(k.abs());
                }
            }
        }
    }
    let unmasked = out.samples - out.masked;
    let one_sign = out.positive == unmasked || out.negative == unmasked;
    out.parabolic_empty = unmasked > 0 && one_sign;
    if !out.parabolic_empty {
        for (chart, patch) in charts.iter().enumerate() {
            let p = patch.clone();
            let grid = ScalarGrid::from_fn(patch.domain(), nu, nv, move |u, v| {
                let j = p.jet2(u, v).ok()?;
                j.is_finite().then(|| euclidean_gauss_curvature(&j))
            });
            for c in extract_zero_set(&grid, 1e-9) {
                out.witnesses.extend(c.points.iter().map(|&(u, v)| Witness { chart, u, v }));
            }
        }
    }
    out
}

/// Grid census of a single patch.
pub fn parabolic_empty_bruteforce(patch: &SurfacePatch, nu: usize, nv: usize) -> bool {
    parabolic_census(std::slice::from_ref(patch), nu, nv).parabolic_empty
}

/// `n` nearly uniform unit vectors on a Fibonacci spiral.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let s = (1.0 - z * z).sqrt();
            let (sa, ca) = (golden * k as f64).sin_cos();
            Vec3::new(s * ca, s * sa, z)
        })
        .collect()
}

/// `true` when the sampled sphere stays on one side of the light cone.
///
/// The sphere is connected, so it misses the cone exactly when
/// `x^2 + y^2 - z^2` keeps one sign on it.
pub fn lc_census(s: &SphereSpec, dirs: &[Vec3]) -> bool {
    let c = s.center();
    let q = |d: &Vec3| {
        let p = c + *d * s.r;
        p.mdot(p)
    };
    let first = q(&dirs[0]);
    if first == 0.0 {
        return false;
    }
    dirs.iter().all(|d| q(d) * first > 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvaloidCheck {
    pub is_closed: bool,
    pub parabolic_empty: bool,
    pub is_ovaloid: bool,
    pub witnesses: Vec<Witness>,
}

/// Brute-force ovaloid test of the inverted sphere: a cone census with
/// `dirs` and a curvature census on both inverted charts at `n x n`.
pub fn ovaloid_check(s: &SphereSpec, n: usize, dirs: &[Vec3]) -> OvaloidCheck {
    let is_closed = lc_census(s, dirs);
    let charts = s.charts().map(|c| c.invert(LIGHT_CONE_TOL));
    let census = parabolic_census(&charts, n, n);
    OvaloidCheck {
        is_closed,
        parabolic_empty: census.parabolic_empty,
        is_ovaloid: is_closed && census.parabolic_empty,
        witnesses: census.witnesses,
    }
}

/// Point samples of a patch at the centers of an `n x n` grid, with the
/// inward Euclidean unit normal (toward the sample centroid).
fn oriented_samples(patch: &SurfacePatch, n: usize) -> Vec<(Vec3, Vec3)> {
    let mut pts = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (u, v) = patch.domain().cell_center(i, j, n, n);
            if let Ok(jet) = patch.jet2(u, v) {
                let nrm = jet.xu.ecross(jet.xv);
                let len = nrm.enorm();
                if jet.is_finite() && len > 0.0 {
                    pts.push((jet.x, nrm / len));
                }
            }
        }
    }
    let centroid = pts.iter().fold(Vec3::ZERO, |acc, p| acc + p.0) / pts.len().max(1) as f64;
    pts.into_iter()
        .map(|(x, nrm)| if nrm.edot(centroid - x) < 0.0 { (x, -nrm) } else { (x, nrm) })
        .collect()
}

/// Radius `R` such that every tangent sphere `S_p(R)` contains the rest of
/// the sampled surface: `sup_p d_max^2 / (2 min_q cos theta) + 1`, with
/// `theta` the angle between `q - p` and the inward normal at `p`.
pub fn enclosing_radius(patch: &SurfacePatch, sample_n: usize) -> Result<f64> {
    if sample_n < 16 {
        return Err(Error::InvalidArgument(format!("sample_n must be at least 16, got {sample_n}")));
    }
    let pts = oriented_samples(patch, sample_n);
    let per_p: Vec<Result<f64>> = pts
        .par_iter()
        .enumerate()
        .map(|(ip, &(p, nrm))| {
            let mut d_max = 0.0f64;
            let mut c_min = f64::INFINITY;
            for (iq, &(q, _)) in pts.iter().enumerate() {
                let d = (q - p).enorm();
                if iq == ip || d == 0.0 {
                    continue;
                }
                let cos = (q - p).edot(nrm) / d;
                if !(cos > 0.0) {
                    return Err(Error::NonconvexWitness { p_index: ip, cos_theta: cos });
                }
                d_max = d_max.max(d);
                c_min = c_min.min(cos);
            }
            Ok(d_max * d_max / (2.0 * c_min))
        })
        .collect();
    let mut sup = 0.0f64;
    for r in per_p {
        sup = sup.max(r?);
    }
    Ok(sup + 1.0)
}

/// Largest distance from a sampled `q` to the center `p + R N_E(p)`, minus
/// `R`, over every sampled `p` and `q != p`. Negative means contained.
pub fn containment_margin(patch: &SurfacePatch, sample_n: usize, radius: f64, p_stride: usize) -> f64 {
    let pts = oriented_samples(patch, sample_n);
    pts.par_iter()
        .enumerate()
        .step_by(p_stride.max(1))
        .map(|(ip, &(p, nrm))| {
            let center = p + nrm * radius;
            pts.iter()
                .enumerate()
                .filter(|(iq, q)| *iq != ip && q.0 != p)
                .map(|(_, q)| (q.0 - center).enorm() - radius)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationSearch {
    /// Enclosing radius of the sampled surface.
    pub radius: f64,
    pub translation: Vec3,
    /// Number of translations tried.
    pub probes: usize,
    /// Result of the curvature census on the inverted translated surface.
    pub verified: bool,
}

/// `true` when every tangent sphere `S_p(R)` moved by `t` inverts to an
/// ovaloid, which in turn keeps the translated surface off the cone.
fn tangent_spheres_ok(pts: &[(Vec3, Vec3)], radius: f64, t: Vec3) -> bool {
    pts.iter().all(|&(p, nrm)| {
        let q = p + nrm * radius + t;
        is_ovaloid_inverted_sphere(&SphereSpec { a: q.x0, b: q.x1, c: q.x2, r: radius })
    })
}

/// `true` when the translated surface misses the cone on the samples and
/// its inversion passes the curvature census on every chart.
pub fn probe_translation(charts: &[SurfacePatch], t: Vec3, census_n: usize) -> bool {
    let moved: Vec<SurfacePatch> = charts.iter().map(|c| c.translate(t)).collect();
    let mut sign = 0.0;
    for c in &moved {
        for j in 0..census_n {
            for i in 0..census_n {
                let (u, v) = c.domain().cell_center(i, j, census_n, census_n);
                if let Ok(x) = c.eval(u, v) {
                    let q = x.mdot(x);
                    if q.abs() <= LIGHT_CONE_TOL || q * sign < 0.0 {
                        return false;
                    }
                    sign = q.signum();
                }
            }
        }
    }
    let inverted: Vec<SurfacePatch> = moved.iter().map(|c| c.invert(LIGHT_CONE_TOL)).collect();
    parabolic_census(&inverted, census_n, census_n).parabolic_empty
}

/// Translation `(t0, 0, 0)` after which the inversion of an ovaloid is an
/// ovaloid. `t0` runs through `0, s, 2s, 4s, ...` with `s` the sampled
/// diameter, until every translated tangent sphere `S_p(R)` satisfies the
/// ovaloid predicate; the result is then checked by a census of all
/// `charts` at `census_n x census_n`.
pub fn translation_search(charts: &[SurfacePatch], sample_n: usize, census_n: usize) -> Result<TranslationSearch> {
    let first = charts.first().ok_or_else(|| Error::InvalidArgument("no charts".into()))?;
    let radius = enclosing_radius(first, sample_n)?;
    let pts = oriented_samples(first, sample_n);
    let scale = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| (a.0 - b.0).enorm()))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut probes = 0;
    let mut t0 = 0.0;
    for k in 0..=MAX_DOUBLINGS + 1 {
        probes += 1;
        let t = Vec3::new(t0, 0.0, 0.0);
        if tangent_spheres_ok(&pts, radius, t) {
            let verified = probe_translation(charts, t, census_n);
            return Ok(TranslationSearch { radius, translation: t, probes, verified });
        }
        t0 = scale * f64::from(1u32 << k.min(MAX_DOUBLINGS));
    }
    Err(Error::SearchExhausted(t0))
}
