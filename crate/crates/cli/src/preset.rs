//! Surface presets and small flag value parsers.

use lorentz_mobius::surface::{
    builtin_ellipsoid, builtin_ellipsoid_second_chart, builtin_sphere, builtin_sphere_second_chart, graph, heights,
    Domain, SurfacePatch,
};
use lorentz_mobius::Vec3;

/// A named surface: `sphere:a,b,c,r`, `ellipsoid:cx,cy,cz,a,b,c` or
/// `graph:{plane|paraboloid|saddle|cubic}` over `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Sphere { center: Vec3, r: f64 },
    Ellipsoid { center: Vec3, axes: (f64, f64, f64) },
    Graph(GraphKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Plane,
    Paraboloid,
    Saddle,
    Cubic,
}

pub fn parse_numbers(s: &str, want: usize) -> Result<Vec<f64>, String> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<Result<_, _>>()?;
    if xs.len() != want {
        return Err(format!("expected {want} comma-separated numbers, got {}", xs.len()));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(format!("{x} is not finite"));
    }
    Ok(xs)
}

pub fn parse_preset(s: &str) -> Result<Preset, String> {
    let (kind, args) = s.split_once(':').ok_or_else(|| format!("'{s}' should look like kind:params"))?;
    match kind {
        "sphere" => {
            let x = parse_numbers(args, 4)?;
            if x[3] <= 0.0 {
                return Err(format!("radius must be positive, got {}", x[3]));
            }
            Ok(Preset::Sphere { center: Vec3::new(x[0], x[1], x[2]), r: x[3] })
        }
        "ellipsoid" => {
            let x = parse_numbers(args, 6)?;
            if x[3..].iter().any(|&a| a <= 0.0) {
                return Err("semiaxes must be positive".into());
            }
            Ok(Preset::Ellipsoid { center: Vec3::new(x[0], x[1], x[2]), axes: (x[3], x[4], x[5]) })
        }
        "graph" => Ok(Preset::Graph(match args {
            "plane" => GraphKind::Plane,
            "paraboloid" => GraphKind::Paraboloid,
            "saddle" => GraphKind::Saddle,
            "cubic" => GraphKind::Cubic,
            other => return Err(format!("unknown graph '{other}' (plane, paraboloid, saddle, cubic)")),
        })),
        other => Err(format!("unknown surface kind '{other}' (sphere, ellipsoid, graph)")),
    }
}

pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let x = parse_numbers(s, 3)?;
    Ok(Vec3::new(x[0], x[1], x[2]))
}

/// `NxM`, both at least 2.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("'{s}' should look like NxM"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("'{t}' is not a count"));
    let (nu, nv) = (n(a)?, n(b)?);
    if nu < 2 || nv < 2 {
        return Err(format!("grid needs at least 2x2, got {nu}x{nv}"));
    }
    Ok((nu, nv))
}

pub fn parse_positive(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a positive number")),
    }
}

impl Preset {
    /// The main chart.
    pub fn patch(&self) -> SurfacePatch {
        self.charts().swap_remove(0)
    }

    /// Charts covering the surface; closed surfaces get a second chart
    /// whose poles lie on another axis.
    pub fn charts(&self) -> Vec<SurfacePatch> {
        match *self {
            Preset::Sphere { center, r } => {
                vec![builtin_sphere(center, r).expect("checked radius"), builtin_sphere_second_chart(center, r).expect("checked radius")]
            }
            Preset::Ellipsoid { center, axes } => vec![
                builtin_ellipsoid(center, axes).expect("checked semiaxes"),
                builtin_ellipsoid_second_chart(center, axes).expect("checked semiaxes"),
            ],
            Preset::Graph(kind) => {
                let d = Domain::new(-1.0, 1.0, -1.0, 1.0);
                vec![match kind {
                    GraphKind::Plane => graph("graph:plane", d, heights::plane),
                    GraphKind::Paraboloid => graph("graph:paraboloid", d, heights::paraboloid),
                    GraphKind::Saddle => graph("graph:saddle", d, heights::saddle),
                    GraphKind::Cubic => graph("graph:cubic", d, heights::cubic(-0.5, 0.6)),
                }]
            }
        }
    }
}
