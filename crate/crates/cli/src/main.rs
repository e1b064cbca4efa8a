use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lorentz_mobius::flow::{integrate_lines, DEFAULT_MAX_STEPS, DEFAULT_STEP};
use lorentz_mobius::fmt::sig12;
use lorentz_mobius::loci::{ld_locus, lpl_locus, parabolic_locus, DEFAULT_REFINE_TOL};
use lorentz_mobius::mesh::{build_mesh, write_obj};
use lorentz_mobius::minkowski::mobius_point;
use lorentz_mobius::mobius_forms::{bde_scaling_factor, verify_pushforward};
use lorentz_mobius::sphere::{
    dist_to_lightcone, f_cos_roots, fibonacci_sphere, is_closed_after_inversion, is_ovaloid_inverted_sphere,
    ovaloid_check, translation_search, SphereSpec, Witness,
};
use lorentz_mobius::{Error, FormBundle, SurfacePatch, Vec3, LIGHT_CONE_TOL};
use serde::Serialize;

mod preset;

use preset::{parse_grid, parse_positive, parse_preset, parse_vec3, Preset};

const THREADS_VAR: &str = "LORENTZ_MOBIUS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "lorentz-mobius", version, about = "Mobius inversion of surfaces in Minkowski 3-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a surface and its image under the inversion (CSV).
    Invert {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, value_parser = parse_grid, default_value = "64x64")]
        grid: (usize, usize),
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract LD, LPL or parabolic curves (CSV).
    Loci {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, value_enum)]
        field: LocusField,
        #[arg(long, value_parser = parse_grid, default_value = "256x256")]
        grid: (usize, usize),
        /// Refinement tolerance, relative to the largest sampled value.
        #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_REFINE_TOL)]
        refine_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate principal lines from seeds (CSV). With --invert the lines
    /// are mapped through the inversion and checked against the image.
    Lines {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// CSV file with columns u,v.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        branch: u8,
        #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Largest normalized BDE residual accepted.
        #[arg(long, value_parser = parse_positive, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare predicted and directly computed image forms on a grid (CSV).
    VerifyPushforward {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, value_parser = parse_grid, default_value = "16x16")]
        grid: (usize, usize),
        #[arg(long, value_parser = parse_positive, default_value_t = 1e-6)]
        tol: f64,
        /// Tolerance on the relative error of the rho^-5 scaling.
        #[arg(long, value_parser = parse_positive, default_value_t = 1e-9)]
        lambda_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closedness and ovaloid criteria for an inverted sphere (JSON).
    SphereCheck {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        center: Vec3,
        #[arg(long, value_parser = parse_positive)]
        radius: f64,
        /// Side of the curvature census grid, per chart.
        #[arg(long, default_value_t = 256)]
        census: usize,
        /// Sphere directions sampled for the light-cone census.
        #[arg(long, default_value_t = 100_000)]
        directions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a translation making the inverted surface an ovaloid (JSON).
    OvaloidSearch {
        #[arg(long, value_parser = parse_preset)]
        surface: Preset,
        /// Samples per chart side for the enclosing radius.
        #[arg(long, default_value_t = 24)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        census: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Triangulate a surface into a Wavefront OBJ file.
    Mesh {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, value_parser = parse_grid, default_value = "256x256")]
        grid: (usize, usize),
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    /// sphere:a,b,c,r | ellipsoid:cx,cy,cz,a,b,c | graph:{plane,paraboloid,saddle,cubic}
    #[arg(long, value_parser = parse_preset)]
    surface: Preset,
    /// Translate the surface before anything else.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    translate: Option<Vec3>,
    /// Work with the image under the inversion.
    #[arg(long)]
    invert: bool,
    /// Points with |<p,p>| at or below this are masked.
    #[arg(long, value_parser = parse_positive, default_value_t = LIGHT_CONE_TOL)]
    lc_tol: f64,
}

impl SurfaceArgs {
    fn source(&self) -> SurfacePatch {
        let p = self.surface.patch();
        match self.translate {
            Some(t) => p.translate(t),
            None => p,
        }
    }

    fn target(&self) -> SurfacePatch {
        let p = self.source();
        if self.invert {
            p.invert(self.lc_tol)
        } else {
            p
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LocusField {
    Ld,
    Lpl,
    Parabolic,
}

enum Status {
    Ok,
    Violated(String),
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(path: &Option<PathBuf>) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(output(path)?))
}

/// Round to 12 significant digits so JSON output is stable.
fn r12(x: f64) -> f64 {
    sig12(x).parse().unwrap_or(x)
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> anyhow::Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn xyz(x: Vec3) -> [String; 3] {
    [sig12(x.x0), sig12(x.x1), sig12(x.x2)]
}

fn invert(surface: &SurfaceArgs, (nu, nv): (usize, usize), out: &Option<PathBuf>) -> anyhow::Result<Status> {
    let p = surface.source();
    let d = p.domain();
    let mut w = csv_writer(out)?;
    w.write_record(["u", "v", "x0", "x1", "x2", "y0", "y1", "y2"])?;
    for j in 0..nv {
        for i in 0..nu {
            let (u, v) = d.node(i, j, nu, nv);
            let Ok(x) = p.eval(u, v) else { continue };
            let Ok(y) = mobius_point(x, surface.lc_tol) else { continue };
            let [x0, x1, x2] = xyz(x);
            let [y0, y1, y2] = xyz(y);
            w.write_record([sig12(u), sig12(v), x0, x1, x2, y0, y1, y2])?;
        }
    }
    w.flush()?;
    Ok(Status::Ok)
}

fn loci(
    surface: &SurfaceArgs,
    field: LocusField,
    (nu, nv): (usize, usize),
    refine_tol: f64,
    out: &Option<PathBuf>,
) -> anyhow::Result<Status> {
    let p = surface.target();
    let curves = match field {
        LocusField::Ld => ld_locus(&p, nu, nv, refine_tol),
        LocusField::Lpl => lpl_locus(&p, nu, nv, refine_tol),
        LocusField::Parabolic => parabolic_locus(&p, nu, nv, refine_tol),
    };
    let mut w = csv_writer(out)?;
    w.write_record(["curve_id", "u", "v", "x0", "x1", "x2"])?;
    for (id, c) in curves.iter().enumerate() {
        for &(u, v) in &c.points {
            let Ok(x) = p.eval(u, v) else { continue };
            let [x0, x1, x2] = xyz(x);
            w.write_record([id.to_string(), sig12(u), sig12(v), x0, x1, x2])?;
        }
    }
    w.flush()?;
    if curves.is_empty() {
        eprintln!("no curves found");
    }
    Ok(Status::Ok)
}

fn read_seeds(path: &Path) -> anyhow::Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut seeds = Vec::new();
    for (k, row) in r.deserialize::<(f64, f64)>().enumerate() {
        seeds.push(row.with_context(|| format!("{}: seed row {} is not a pair u,v", path.display(), k + 1))?);
    }
    Ok(seeds)
}

#[allow(clippy::too_many_arguments)]
fn lines(
    surface: &SurfaceArgs,
    seeds: &Path,
    branch: u8,
    step: f64,
    max_steps: usize,
    tol: f64,
    out: &Option<PathBuf>,
) -> anyhow::Result<Status> {
    let seeds = read_seeds(seeds)?;
    let source = surface.source();
    let check = if surface.invert { source.invert(surface.lc_tol) } else { source.clone() };
    let mut w = csv_writer(out)?;
    w.write_record(["line_id", "t_index", "u", "v", "x0", "x1", "x2", "residual"])?;
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for (id, line) in integrate_lines(&source, &seeds, branch, step, max_steps).into_iter().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                eprintln!("seed {id}: {e}");
                continue;
            }
        };
        for (t, (&(u, v), &(du, dv))) in line.samples.iter().zip(&line.tangents).enumerate() {
            let res = match check.jet2(u, v) {
                Ok(j) if j.is_finite() => FormBundle::from_jet(&j).bde().residual(du, dv),
                _ => {
                    problems.push(format!("line {id} sample {t} is masked on the checked patch"));
                    f64::NAN
                }
            };
            if res > tol {
                worst = worst.max(res);
            }
            let [x0, x1, x2] = match check.eval(u, v) {
                Ok(x) => xyz(x),
                Err(_) => ["nan".into(), "nan".into(), "nan".into()],
            };
            w.write_record([id.to_string(), t.to_string(), sig12(u), sig12(v), x0, x1, x2, sig12(res)])?;
        }
    }
    w.flush()?;
    if worst > 0.0 {
        problems.push(format!("residual {} exceeds tolerance {}", sig12(worst), sig12(tol)));
    }
    Ok(if problems.is_empty() { Status::Ok } else { Status::Violated(problems.join("; ")) })
}

fn verify_pushforward_grid(
    surface: &SurfaceArgs,
    (nu, nv): (usize, usize),
    tol: f64,
    lambda_tol: f64,
    out: &Option<PathBuf>,
) -> anyhow::Result<Status> {
    if surface.invert {
        bail!("--invert does not apply to verify-pushforward");
    }
    let p = surface.source();
    let d = p.domain();
    let mut w = csv_writer(out)?;
    w.write_record(["point", "rho", "max_rel_err", "lambda_err"])?;
    let (mut checked, mut worst, mut worst_lambda) = (0usize, 0.0f64, 0.0f64);
    for k in 0..nu * nv {
        let (u, v) = d.cell_center(k % nu, k / nu, nu, nv);
        let report = match verify_pushforward(&p, u, v) {
            Ok(r) => r,
            Err(Error::OnLD(_) | Error::NearLightCone { .. } | Error::Masked { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let lambda_err = match bde_scaling_factor(&p, u, v) {
            Ok(l) => Some((l * report.rho.powi(5) - 1.0).abs()),
            Err(Error::DegeneratePoint { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        checked += 1;
        worst = worst.max(report.max_rel_err);
        worst_lambda = worst_lambda.max(lambda_err.unwrap_or(0.0));
        w.write_record([
            k.to_string(),
            sig12(report.rho),
            sig12(report.max_rel_err),
            lambda_err.map(sig12).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(if checked == 0 {
        Status::Violated("no grid point could be checked".into())
    } else if worst > tol || worst_lambda > lambda_tol {
        Status::Violated(format!(
            "max_rel_err {} (tol {}), lambda_err {} (tol {})",
            sig12(worst),
            sig12(tol),
            sig12(worst_lambda),
            sig12(lambda_tol)
        ))
    } else {
        Status::Ok
    })
}

#[derive(Serialize)]
struct SphereReport {
    is_closed: bool,
    is_ovaloid: bool,
    dist_to_lc: f64,
    f_roots: Vec<f64>,
    witnesses: Vec<Witness>,
}

fn sphere_check(center: Vec3, radius: f64, census: usize, directions: usize, out: &Option<PathBuf>) -> anyhow::Result<Status> {
    if census < 2 || directions == 0 {
        bail!("--census must be at least 2 and --directions positive");
    }
    let s = SphereSpec::from_center(center, radius)?;
    let is_closed = is_closed_after_inversion(&s);
    let is_ovaloid = is_ovaloid_inverted_sphere(&s);
    let check = ovaloid_check(&s, census, &fibonacci_sphere(directions));
    let report = SphereReport {
        is_closed,
        is_ovaloid,
        dist_to_lc: r12(dist_to_lightcone(center)),
        f_roots: f_cos_roots(&s).into_iter().map(r12).collect(),
        witnesses: check.witnesses.iter().map(|w| Witness { chart: w.chart, u: r12(w.u), v: r12(w.v) }).collect(),
    };
    write_json(out, &report)?;
    let mut problems = Vec::new();
    if check.is_closed != is_closed {
        problems.push(format!("closedness criterion says {is_closed}, light-cone census says {}", check.is_closed));
    }
    if check.is_ovaloid != is_ovaloid {
        problems.push(format!("ovaloid criterion says {is_ovaloid}, curvature census says {}", check.is_ovaloid));
    }
    Ok(if problems.is_empty() { Status::Ok } else { Status::Violated(problems.join("; ")) })
}

#[derive(Serialize)]
struct SearchReport {
    #[serde(rename = "R")]
    radius: f64,
    translation: [f64; 3],
    verified: bool,
}

fn ovaloid_search(surface: &Preset, samples: usize, census: usize, out: &Option<PathBuf>) -> anyhow::Result<Status> {
    let found = match translation_search(&surface.charts(), samples, census) {
        Ok(f) => f,
        Err(e @ (Error::SearchExhausted(_) | Error::NonconvexWitness { .. })) => return Ok(Status::Violated(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let t = found.translation;
    write_json(
        out,
        &SearchReport { radius: r12(found.radius), translation: [r12(t.x0), r12(t.x1), r12(t.x2)], verified: found.verified },
    )?;
    Ok(if found.verified { Status::Ok } else { Status::Violated("census did not confirm the translation".into()) })
}

fn mesh(surface: &SurfaceArgs, (nu, nv): (usize, usize), out: &Option<PathBuf>) -> anyhow::Result<Status> {
    let p = surface.target();
    let m = build_mesh(&p, nu, nv);
    if m.is_empty() {
        eprintln!("warning: every cell of {} is masked; the mesh is empty", p.name());
    }
    let mut w = output(out)?;
    write_obj(&m, p.name(), &mut w)?;
    w.flush()?;
    Ok(Status::Ok)
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    match &cli.command {
        Command::Invert { surface, grid, out } => invert(surface, *grid, out),
        Command::Loci { surface, field, grid, refine_tol, out } => loci(surface, *field, *grid, *refine_tol, out),
        Command::Lines { surface, seeds, branch, step, max_steps, tol, out } => {
            lines(surface, seeds, *branch, *step, *max_steps, *tol, out)
        }
        Command::VerifyPushforward { surface, grid, tol, lambda_tol, out } => {
            verify_pushforward_grid(surface, *grid, *tol, *lambda_tol, out)
        }
        Command::SphereCheck { center, radius, census, directions, out } => {
            sphere_check(*center, *radius, *census, *directions, out)
        }
        Command::OvaloidSearch { surface, samples, census, out } => ovaloid_search(surface, *samples, *census, out),
        Command::Mesh { surface, grid, out } => mesh(surface, *grid, out),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("{THREADS_VAR}={v} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violated(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
