//! Triangulated node grids and Wavefront OBJ output.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use crate::fmt::sig12;
use crate::minkowski::Vec3;
use crate::surface::SurfacePatch;

/// Relative quantum for welding coincident vertices (seams, poles).
pub const WELD_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Edges used by exactly one triangle.
    pub fn boundary_edges(&self) -> usize {
        self.edge_uses().values().filter(|&&n| n == 1).count()
    }

    /// Edges used by more than two triangles.
    pub fn nonmanifold_edges(&self) -> usize {
        self.edge_uses().values().filter(|&&n| n > 2).count()
    }

    fn edge_uses(&self) -> BTreeMap<(usize, usize), usize> {
        let mut uses = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        uses
    }
}

/// Triangulate the `nu x nv` node lattice of `patch` (boundary included).
/// Quads with a masked or non-finite corner are left out, coincident nodes
/// are welded, and triangles that collapse under welding are dropped.
pub fn build_mesh(patch: &SurfacePatch, nu: usize, nv: usize) -> Mesh {
    assert!(nu >= 2 && nv >= 2, "mesh needs at least 2x2 nodes");
    let d = patch.domain();
    let nodes: Vec<Option<Vec3>> = (0..nu * nv)
        .map(|k| {
            let (u, v) = d.node(k % nu, k / nu, nu, nv);
            patch.eval(u, v).ok().filter(|x| x.is_finite())
        })
        .collect();
    let extent = nodes.iter().flatten().fold(0.0f64, |m, x| m.max(x.max_abs()));
    let quantum = WELD_REL_TOL * extent.max(f64::MIN_POSITIVE);
    let key = |x: &Vec3| {
        let q = |c: f64| (c / quantum).round() as i64;
        (q(x.x0), q(x.x1), q(x.x2))
    };

    let mut mesh = Mesh::default();
    let mut index: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut node_vertex = vec![None; nu * nv];
    let quad_used = |i: usize, j: usize| {
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
            .iter()
            .all(|&(a, b)| nodes[b * nu + a].is_some())
    };
    for j in 0..nv {
        for i in 0..nu {
            let touches = [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)]
                .iter()
                .any(|&(a, b)| a < nu - 1 && b < nv - 1 && quad_used(a, b));
            let Some(x) = nodes[j * nu + i] else { continue };
            if !touches {
                continue;
            }
            let id = *index.entry(key(&x)).or_insert_with(|| {
                mesh.vertices.push(x);
                mesh.vertices.len() - 1
            });
            node_vertex[j * nu + i] = Some(id);
        }
    }
    for j in 0..nv - 1 {
        for i in 0..nu - 1 {
            if !quad_used(i, j) {
                continue;
            }
            let at = |a: usize, b: usize| node_vertex[b * nu + a].expect("used node");
            let (p00, p10, p01, p11) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
            for t in [[p00, p10, p11], [p00, p11, p01]] {
                if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                    mesh.triangles.push(t);
                }
            }
        }
    }
    mesh
}

pub fn write_obj<W: Write>(mesh: &Mesh, name: &str, out: &mut W) -> io::Result<()> {
    writeln!(out, "# {name}")?;
    writeln!(out, "# {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len())?;
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", sig12(v.x0), sig12(v.x1), sig12(v.x2))?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::LIGHT_CONE_TOL;
    use crate::surface::{builtin_sphere, plane, Domain};

    fn unit_plane() -> SurfacePatch {
        plane(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Domain::new(0.0, 1.0, 0.0, 1.0))
    }

    #[test]
    fn plane_two_by_two() {
        let m = build_mesh(&unit_plane(), 2, 2);
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles.len(), 2);
        assert_eq!(m.boundary_edges(), 4);
        let mut buf = Vec::new();
        write_obj(&m, "plane", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("v 1 1 0\n"));
        assert!(text.contains("f 1 2 4\n"));
    }

    #[test]
    fn inverted_sphere_is_closed() {
        let s = builtin_sphere(Vec3::new(2.0, 0.0, 0.0), 1.0).unwrap().invert(LIGHT_CONE_TOL);
        let m = build_mesh(&s, 128, 128);
        assert_eq!(m.boundary_edges(), 0);
        assert_eq!(m.nonmanifold_edges(), 0);
        // Euler characteristic of a sphere.
        let edges = m.edge_uses().len() as i64;
        assert_eq!(m.vertices.len() as i64 - edges + m.triangles.len() as i64, 2);
    }

    #[test]
    fn masked_regions_leave_a_boundary() {
        let s = builtin_sphere(Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap().invert(1e-3);
        let m = build_mesh(&s, 64, 64);
        assert!(!m.is_empty());
        assert!(m.boundary_edges() > 0);
        assert_eq!(m.nonmanifold_edges(), 0);
    }

    #[test]
    fn fully_masked_patch_gives_an_empty_mesh() {
        let m = build_mesh(&unit_plane().with_mask(|_, _| false), 8, 8);
        assert!(m.is_empty() && m.vertices.is_empty());
    }
}
