//! Scalar fields sampled on parameter grids, and their zero sets.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forms::{euclidean_gauss_curvature, FormBundle};
use crate::surface::{Domain, SurfacePatch};

/// Relative tolerance used by the locus helpers.
pub const DEFAULT_REFINE_TOL: f64 = 1e-9;
const MAX_REFINE_ITERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    /// `F^2 - EG`
    Delta,
    /// Discriminant of the principal BDE.
    LplDisc,
    /// `lbar nbar - mbar^2`
    Kbar,
    /// Euclidean Gaussian curvature; same sign as `Kbar`, chart independent.
    EuclideanK,
}

impl Field {
    pub fn kind(self) -> LocusKind {
        match self {
            Field::Delta => LocusKind::LD,
            Field::LplDisc => LocusKind::LPL,
            Field::Kbar | Field::EuclideanK => LocusKind::Parabolic,
        }
    }
}

type Sampler = Arc<dyn Fn(f64, f64) -> Option<f64> + Send + Sync>;

/// Values at the cell centers of an `nu x nv` partition of `domain`,
/// stored row by row in `v` (`index = j * nu + i`). `None` is masked.
#[derive(Clone)]
pub struct ScalarGrid {
    pub nu: usize,
    pub nv: usize,
    pub domain: Domain,
    pub values: Vec<Option<f64>>,
    sampler: Option<Sampler>,
}

impl fmt::Debug for ScalarGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarGrid")
            .field("nu", &self.nu)
            .field("nv", &self.nv)
            .field("domain", &self.domain)
            .field("masked", &self.values.iter().filter(|v| v.is_none()).count())
            .finish()
    }
}

impl ScalarGrid {
    /// Sample `f` at cell centers and keep it for edge refinement.
    pub fn from_fn<F>(domain: Domain, nu: usize, nv: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> Option<f64> + Send + Sync + 'static,
    {
        assert!(nu >= 2 && nv >= 2, "grid needs at least 2x2 samples");
        let values = (0..nu * nv)
            .into_par_iter()
            .map(|k| {
                let (u, v) = domain.cell_center(k % nu, k / nu, nu, nv);
                f(u, v).filter(|x| x.is_finite())
            })
            .collect();
        Self { nu, nv, domain, values, sampler: Some(Arc::new(f)) }
    }

    /// A grid of fixed values; crossings are placed by linear interpolation.
    pub fn from_values(domain: Domain, nu: usize, nv: usize, values: Vec<Option<f64>>) -> Self {
        assert!(nu >= 2 && nv >= 2, "grid needs at least 2x2 samples");
        assert_eq!(values.len(), nu * nv, "value count does not match the grid");
        Self { nu, nv, domain, values, sampler: None }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[j * self.nu + i]
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        self.domain.cell_center(i, j, self.nu, self.nv)
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.domain.width() / self.nu as f64, self.domain.height() / self.nv as f64)
    }

    pub fn sample(&self, u: f64, v: f64) -> Option<f64> {
        self.sampler.as_ref().and_then(|s| s(u, v)).filter(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_fully_masked(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    /// `(min, max)` over unmasked values.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().flatten();
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x))))
    }
}

pub fn field_value(patch: &SurfacePatch, field: Field, u: f64, v: f64) -> Option<f64> {
    let j = patch.jet2(u, v).ok()?;
    if !j.is_finite() {
        return None;
    }
    let b = FormBundle::from_jet(&j);
    Some(match field {
        Field::Delta => b.delta,
        Field::LplDisc => b.lpl_disc,
        Field::Kbar => b.kbar,
        Field::EuclideanK => euclidean_gauss_curvature(&j),
    })
}

pub fn grid_sample(patch: &SurfacePatch, field: Field, nu: usize, nv: usize) -> ScalarGrid {
    let p = patch.clone();
    ScalarGrid::from_fn(patch.domain(), nu, nv, move |u, v| field_value(&p, field, u, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocusKind {
    LD,
    LPL,
    Parabolic,
    /// Zero set of a field that is none of the above.
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusCurve {
    pub points: Vec<(f64, f64)>,
    pub kind: LocusKind,
    pub closed: bool,
}

/// Grid edge carrying a crossing: horizontal edges join `(i,j)-(i+1,j)`,
/// vertical ones `(i,j)-(i,j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

impl Edge {
    fn ends(self) -> ((usize, usize), (usize, usize)) {
        match self {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        }
    }
}

/// Illinois false position on `s in [0, 1]` between two opposite-sign values.
fn refine_edge(grid: &ScalarGrid, edge: Edge, tol_abs: f64) -> (f64, f64) {
    let ((i0, j0), (i1, j1)) = edge.ends();
    let (p0, p1) = (grid.point(i0, j0), grid.point(i1, j1));
    let at = |s: f64| (p0.0 + s * (p1.0 - p0.0), p0.1 + s * (p1.1 - p0.1));
    let (mut fa, mut fb) = (grid.get(i0, j0).unwrap(), grid.get(i1, j1).unwrap());
    let linear = |fa: f64, fb: f64| if fa == fb { 0.5 } else { fa / (fa - fb) };
    if grid.sampler.is_none() || fa == 0.0 || fb == 0.0 {
        return at(linear(fa, fb).clamp(0.0, 1.0));
    }
    let (mut a, mut b) = (0.0, 1.0);
    let mut s = linear(fa, fb);
    let mut side = 0i8;
    for _ in 0..MAX_REFINE_ITERS {
        s = (a * fb - b * fa) / (fb - fa);
        let (u, v) = at(s);
        let Some(fs) = grid.sample(u, v) else { return at(linear(fa, fb)) };
        if fs.abs() <= tol_abs || b - a <= 1e-15 {
            break;
        }
        if (fs > 0.0) == (fb > 0.0) {
            b = s;
            fb = fs;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = s;
            fa = fs;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    at(s)
}

/// Marching-squares zero contour of `grid`. Squares with a masked corner
/// are skipped, ambiguous squares are resolved by the value at their
/// center, and every crossing is refined until `|f| <= refine_tol *
/// max|f|` when the grid can resample its field.
pub fn extract_zero_set(grid: &ScalarGrid, refine_tol: f64) -> Vec<LocusCurve> {
    extract_zero_set_as(grid, refine_tol, LocusKind::Scalar)
}

pub fn extract_zero_set_as(grid: &ScalarGrid, refine_tol: f64, kind: LocusKind) -> Vec<LocusCurve> {
    assert!(refine_tol > 0.0, "refine tolerance must be positive");
    let (nu, nv) = (grid.nu, grid.nv);
    let pos = |x: f64| x > 0.0;
    let mut adj: BTreeMap<Edge, Vec<Edge>> = BTreeMap::new();
    let mut link = |a: Edge, b: Edge| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for j in 0..nv - 1 {
        for i in 0..nu - 1 {
            let (Some(f00), Some(f10), Some(f11), Some(f01)) =
                (grid.get(i, j), grid.get(i + 1, j), grid.get(i + 1, j + 1), grid.get(i, j + 1))
            else {
                continue;
            };
            let (b, r, t, l) = (Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j));
            let (s00, s10, s11, s01) = (pos(f00), pos(f10), pos(f11), pos(f01));
            let mut cut = Vec::with_capacity(4);
            if s00 != s10 {
                cut.push(b);
            }
            if s10 != s11 {
                cut.push(r);
            }
            if s11 != s01 {
                cut.push(t);
            }
            if s01 != s00 {
                cut.push(l);
            }
            match cut.len() {
                0 => {}
                2 => link(cut[0], cut[1]),
                4 => {
                    let (p0, p1) = (grid.point(i, j), grid.point(i + 1, j + 1));
                    let (cu, cv) = (0.5 * (p0.0 + p1.0), 0.5 * (p0.1 + p1.1));
                    let center = grid.sample(cu, cv).unwrap_or(0.25 * (f00 + f10 + f11 + f01));
                    if pos(center) == s00 {
                        link(b, r);
                        link(t, l);
                    } else {
                        link(b, l);
                        link(r, t);
                    }
                }
                _ => unreachable!("a square has an even number of sign changes"),
            }
        }
    }

    let tol_abs = refine_tol * grid.max_abs();
    let edges: Vec<Edge> = adj.keys().copied().collect();
    let crossing: BTreeMap<Edge, (f64, f64)> = edges
        .par_iter()
        .map(|&e| (e, refine_edge(grid, e, tol_abs)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let mut visited: BTreeMap<Edge, bool> = edges.iter().map(|&e| (e, false)).collect();
    let walk = |start: Edge, visited: &mut BTreeMap<Edge, bool>| -> (Vec<Edge>, bool) {
        let mut path = vec![start];
        visited.insert(start, true);
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|n| !visited[n]);
            match next {
                Some(n) => {
                    visited.insert(n, true);
                    path.push(n);
                    cur = n;
                }
                None => {
                    let closed = path.len() > 2 && adj[&cur].contains(&start);
                    return (path, closed);
                }
            }
        }
    };
    let mut curves = Vec::new();
    for &e in &edges {
        if !visited[&e] && adj[&e].len() == 1 {
            let (path, _) = walk(e, &mut visited);
            curves.push((path, false));
        }
    }
    for &e in &edges {
        if !visited[&e] {
            curves.push(walk(e, &mut visited));
        }
    }
    curves
        .into_iter()
        .map(|(path, closed)| LocusCurve {
            points: path.iter().map(|e| crossing[e]).collect(),
            kind,
            closed,
        })
        .collect()
}

pub fn locus(patch: &SurfacePatch, field: Field, nu: usize, nv: usize, refine_tol: f64) -> Vec<LocusCurve> {
    extract_zero_set_as(&grid_sample(patch, field, nu, nv), refine_tol, field.kind())
}

pub fn ld_locus(patch: &SurfacePatch, nu: usize, nv: usize, refine_tol: f64) -> Vec<LocusCurve> {
    locus(patch, Field::Delta, nu, nv, refine_tol)
}

pub fn lpl_locus(patch: &SurfacePatch, nu: usize, nv: usize, refine_tol: f64) -> Vec<LocusCurve> {
    locus(patch, Field::LplDisc, nu, nv, refine_tol)
}

pub fn parabolic_locus(patch: &SurfacePatch, nu: usize, nv: usize, refine_tol: f64) -> Vec<LocusCurve> {
    locus(patch, Field::Kbar, nu, nv, refine_tol)
}

fn segments(curves: &[LocusCurve], su: f64, sv: f64) -> Vec<((f64, f64), (f64, f64))> {
    let mut out = Vec::new();
    for c in curves {
        let p: Vec<(f64, f64)> = c.points.iter().map(|&(u, v)| (u / su, v / sv)).collect();
        if p.len() == 1 {
            out.push((p[0], p[0]));
        }
        for w in p.windows(2) {
            out.push((w[0], w[1]));
        }
        if c.closed && p.len() > 2 {
            out.push((p[p.len() - 1], p[0]));
        }
    }
    out
}

fn point_segment_dist(p: (f64, f64), s: ((f64, f64), (f64, f64))) -> f64 {
    let (a, b) = s;
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

fn directed(from: &[LocusCurve], to: &[((f64, f64), (f64, f64))], su: f64, sv: f64) -> f64 {
    from.par_iter()
        .flat_map_iter(|c| c.points.iter())
        .map(|&(u, v)| {
            let p = (u / su, v / sv);
            to.iter().map(|&s| point_segment_dist(p, s)).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between two curve sets, in units of a
/// `cell = (du, dv)` grid cell. Points are compared against polylines.
/// Two empty sets are at distance 0, one empty set at infinity.
pub fn hausdorff_cells(a: &[LocusCurve], b: &[LocusCurve], cell: (f64, f64)) -> f64 {
    let na = a.iter().all(|c| c.points.is_empty());
    let nb = b.iter().all(|c| c.points.is_empty());
    match (na, nb) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let (su, sv) = cell;
    let sa = segments(a, su, sv);
    let sb = segments(b, su, sv);
    directed(a, &sb, su, sv).max(directed(b, &sa, su, sv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::Vec3;
    use crate::surface::{builtin_sphere, graph, heights, plane};
    use std::f64::consts::PI;

    fn unit() -> Domain {
        Domain::new(0.0, 1.0, 0.0, 1.0)
    }

    #[test]
    fn plane_delta_is_constant() {
        let p = plane(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), unit());
        let g = grid_sample(&p, Field::Delta, 8, 8);
        assert!(g.values.iter().all(|v| *v == Some(-1.0)));
        assert!(extract_zero_set(&g, 1e-9).is_empty());
    }

    #[test]
    fn sphere_delta_has_both_signs() {
        // Oracle: sign of -r^4 sin^2 v cos 2v counted directly.
        let s = builtin_sphere(Vec3::new(2.0, 0.0, 0.0), 1.0).unwrap();
        let g = grid_sample(&s, Field::Delta, 32, 32);
        let (mut pos, mut neg) = (0, 0);
        for j in 0..32 {
            for i in 0..32 {
                let (_, v) = g.point(i, j);
                let want = -(v.sin().powi(2)) * (2.0 * v).cos();
                let got = g.get(i, j).unwrap();
                assert_eq!(got > 0.0, want > 0.0);
                if got > 0.0 { pos += 1 } else { neg += 1 }
            }
        }
        assert!(pos > 0 && neg > 0);
    }

    #[test]
    fn fully_masked_grid() {
        let p = plane(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), unit())
            .with_mask(|_, _| false);
        let g = grid_sample(&p, Field::Kbar, 6, 5);
        assert!(g.is_fully_masked());
        assert!(extract_zero_set(&g, 1e-9).is_empty());
    }

    #[test]
    fn straight_line() {
        let g = ScalarGrid::from_fn(unit(), 17, 17, |u, _| Some(u - 0.5));
        let c = extract_zero_set(&g, 1e-9);
        assert_eq!(c.len(), 1);
        assert!(!c[0].closed);
        assert_eq!(c[0].points.len(), 17);
        for &(u, _) in &c[0].points {
            assert!((u - 0.5).abs() <= 1e-9);
        }
    }

    #[test]
    fn circle() {
        let d = Domain::new(-1.0, 1.0, -1.0, 1.0);
        let f = |u: f64, v: f64| u * u + v * v - 0.25;
        let g = ScalarGrid::from_fn(d, 64, 64, move |u, v| Some(f(u, v)));
        let c = extract_zero_set(&g, 1e-9);
        assert_eq!(c.len(), 1);
        assert!(c[0].closed);
        let tol = 1e-9 * g.max_abs();
        for &(u, v) in &c[0].points {
            assert!(f(u, v).abs() <= tol);
            assert!(((u * u + v * v).sqrt() - 0.5).abs() <= 2.0 * tol);
        }
        // Consecutive points sit on edges of one shared square.
        let (du, dv) = g.cell_size();
        for w in c[0].points.windows(2) {
            assert!((w[0].0 - w[1].0).abs() <= du + 1e-12 && (w[0].1 - w[1].1).abs() <= dv + 1e-12);
        }
    }

    #[test]
    fn fixed_values_interpolate_linearly() {
        let vals = vec![Some(-1.0), Some(1.0), Some(-1.0), Some(1.0)];
        let g = ScalarGrid::from_values(unit(), 2, 2, vals);
        let c = extract_zero_set(&g, 1e-9);
        assert_eq!(c.len(), 1);
        for &(u, _) in &c[0].points {
            assert!((u - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn saddle_cells_follow_the_center_value() {
        let d = Domain::new(-1.0, 1.0, -1.0, 1.0);
        // Corners of the single square are (+,-,+,-); center value decides.
        for (offset, joined) in [(0.1, true), (-0.1, false)] {
            let g = ScalarGrid::from_fn(d, 2, 2, move |u, v| Some(u * v + offset));
            let c = extract_zero_set(&g, 1e-9);
            assert_eq!(c.len(), 2);
            // Positive center: the positive corners (u v > 0) are joined, so
            // the curves separate the negative corners.
            for curve in &c {
                let (a, b) = (curve.points[0], curve.points[1]);
                let mid = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
                assert_eq!(mid.0 * mid.1 < 0.0, joined);
            }
        }
    }

    #[test]
    fn masked_squares_are_skipped() {
        let d = Domain::new(-1.0, 1.0, -1.0, 1.0);
        let g = ScalarGrid::from_fn(d, 40, 40, |u, v| if v > 0.0 { None } else { Some(u) });
        let c = extract_zero_set(&g, 1e-9);
        assert_eq!(c.len(), 1);
        assert!(c[0].points.iter().all(|p| p.1 < 0.0));
    }

    #[test]
    fn sphere_ld_is_two_parallels() {
        let s = builtin_sphere(Vec3::new(2.0, 0.0, 0.0), 1.0).unwrap();
        let c = ld_locus(&s, 64, 64, 1e-9);
        assert_eq!(c.len(), 2);
        for curve in &c {
            assert_eq!(curve.kind, LocusKind::LD);
            for &(_, v) in &curve.points {
                let d = (v - PI / 4.0).abs().min((v - 3.0 * PI / 4.0).abs());
                assert!(d < 1e-8, "{v}");
            }
        }
    }

    #[test]
    fn riemannian_graph_has_no_ld() {
        let g = graph("paraboloid", Domain::new(-0.3, 0.3, -0.3, 0.3), heights::paraboloid);
        assert!(ld_locus(&g, 32, 32, 1e-9).is_empty());
    }

    #[test]
    fn doubling_resolution_is_stable() {
        let g = graph("cubic", Domain::new(-1.0, 1.0, -1.0, 1.0), heights::cubic(-0.5, 0.6));
        for field in [Field::Delta, Field::LplDisc, Field::Kbar] {
            let a = locus(&g, field, 48, 48, 1e-9);
            let mut b = locus(&g, field, 96, 96, 1e-9);
            assert!(!a.is_empty(), "{field:?}");
            // The finer grid reaches closer to the boundary; compare only
            // over the rectangle the coarse samples span.
            let d = Domain::new(-1.0, 1.0, -1.0, 1.0);
            for c in &mut b {
                c.points.retain(|&(u, v)| d.margin(u, v) >= 1.0 / 48.0);
            }
            let cell = (2.0 / 48.0, 2.0 / 48.0);
            let h = hausdorff_cells(&a, &b, cell);
            assert!(h <= 1.0, "{field:?}: {h}");
        }
    }

    #[test]
    fn hausdorff_edge_cases() {
        assert_eq!(hausdorff_cells(&[], &[], (1.0, 1.0)), 0.0);
        let c = LocusCurve { points: vec![(0.0, 0.0), (1.0, 0.0)], kind: LocusKind::Scalar, closed: false };
        assert_eq!(hausdorff_cells(&[c.clone()], &[], (1.0, 1.0)), f64::INFINITY);
        let d = LocusCurve { points: vec![(0.0, 0.5), (1.0, 0.5)], ..c.clone() };
        assert!((hausdorff_cells(&[c], &[d], (1.0, 0.25)) - 2.0).abs() < 1e-15);
    }
}
