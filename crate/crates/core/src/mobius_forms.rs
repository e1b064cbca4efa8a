//! Closed-form pushforward of the fundamental forms under `i_M`.
//!
//! With `rho = <x,x>` the first form scales by `rho^-2`, and the bar
//! coefficients pick up a multiple of the first form:
//!
//! ```text
//! lbar_M = (lbar + alpha E) / rho^3     (same for m, F and n, G)
//! ```
//!
//! so the `alpha` terms cancel in the BDE coefficients, which scale by
//! `rho^-5`. How `alpha` is built from the normal, and which orientation the
//! image carries, is a [`PushforwardConvention`]; [`calibrate`] picks it by
//! comparing against jets of the inverted patch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BdeCoefficients, FormBundle, LD_TOL};
use crate::minkowski::LIGHT_CONE_TOL;
use crate::surface::{Jet2, SurfacePatch};

pub fn pushforward_first(e: f64, f: f64, g: f64, rho: f64) -> Result<(f64, f64, f64)> {
    if rho == 0.0 {
        return Err(Error::ZeroRho);
    }
    let s = 1.0 / (rho * rho);
    Ok((e * s, f * s, g * s))
}

#[allow(clippy::too_many_arguments)]
pub fn pushforward_second(
    lbar: f64,
    mbar: f64,
    nbar: f64,
    e: f64,
    f: f64,
    g: f64,
    alpha: f64,
    rho: f64,
) -> Result<(f64, f64, f64)> {
    if rho == 0.0 {
        return Err(Error::ZeroRho);
    }
    let s = 1.0 / (rho * rho * rho);
    Ok(((lbar + alpha * e) * s, (mbar + alpha * f) * s, (nbar + alpha * g) * s))
}

/// Closed-form bundle of the image point from source forms, `alpha`, `rho`.
pub fn pushforward_bundle(src: &FormBundle, alpha: f64, rho: f64) -> Result<FormBundle> {
    let (e, f, g) = pushforward_first(src.e, src.f, src.g, rho)?;
    let (l, m, n) = pushforward_second(src.lbar, src.mbar, src.nbar, src.e, src.f, src.g, alpha, rho)?;
    Ok(FormBundle::from_coefficients(e, f, g, l, m, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// The image keeps the parametric orientation `y_u x y_v`.
    Same,
    /// The image is oriented by `-(y_u x y_v)`, so its bar coefficients
    /// change sign.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalScaling {
    Unit,
    /// `N = x_u x x_v` without normalization; defined across the LD.
    Unnormalized,
}

/// How `alpha = -2 <N, x/rho>` is read: the sign and scaling of `N`
/// relative to `x_u x x_v`, and the orientation of the image surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushforwardConvention {
    pub target: Orientation,
    pub normal_sign: i8,
    pub scaling: NormalScaling,
}

impl PushforwardConvention {
    /// The convention that matches the jets of the inverted patch:
    /// `N = -(x_u x x_v)` and the image carries the reversed orientation.
    pub const CALIBRATED: PushforwardConvention = PushforwardConvention {
        target: Orientation::Reversed,
        normal_sign: -1,
        scaling: NormalScaling::Unnormalized,
    };

    pub fn all() -> Vec<PushforwardConvention> {
        let mut out = Vec::with_capacity(8);
        for target in [Orientation::Same, Orientation::Reversed] {
            for normal_sign in [1, -1] {
                for scaling in [NormalScaling::Unit, NormalScaling::Unnormalized] {
                    out.push(PushforwardConvention { target, normal_sign, scaling });
                }
            }
        }
        out
    }

    pub fn alpha(&self, j: &Jet2) -> Result<f64> {
        let rho = j.x.mdot(j.x);
        if rho == 0.0 {
            return Err(Error::ZeroRho);
        }
        let mut n = j.xu.lcross(j.xv) * f64::from(self.normal_sign);
        if self.scaling == NormalScaling::Unit {
            let b = FormBundle::from_jet(j);
            if b.is_on_ld(LD_TOL) {
                return Err(Error::OnLD(-b.delta));
            }
            n = n / n.mnorm();
        }
        Ok(-2.0 * n.mdot(j.x / rho))
    }

    /// Observed bundle of the image, in this convention's orientation.
    pub fn orient(&self, b: FormBundle) -> FormBundle {
        match self.target {
            Orientation::Same => b,
            Orientation::Reversed => b.reoriented(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub rho: f64,
    pub alpha: f64,
    pub predicted: FormBundle,
    pub observed: FormBundle,
    /// Largest discrepancy of the six coefficients, each relative to the
    /// largest observed coefficient of its own form.
    pub max_rel_err: f64,
    pub convention: PushforwardConvention,
}

/// Discrepancy between two bundles, relative per fundamental form.
pub fn bundle_rel_err(predicted: &FormBundle, observed: &FormBundle) -> f64 {
    let s1 = observed.first_scale().max(f64::MIN_POSITIVE);
    let s2 = observed.second_scale().max(f64::MIN_POSITIVE);
    let d1 = (predicted.e - observed.e)
        .abs()
        .max((predicted.f - observed.f).abs())
        .max((predicted.g - observed.g).abs());
    let d2 = (predicted.lbar - observed.lbar)
        .abs()
        .max((predicted.mbar - observed.mbar).abs())
        .max((predicted.nbar - observed.nbar).abs());
    let out = (d1 / s1).max(d2 / s2);
    if out.is_nan() {
        f64::INFINITY
    } else {
        out
    }
}

fn source_and_image(patch: &SurfacePatch, u: f64, v: f64) -> Result<(Jet2, Jet2)> {
    let src = patch.jet2(u, v)?;
    let rho = src.x.mdot(src.x);
    if rho.abs() <= LIGHT_CONE_TOL {
        return Err(Error::NearLightCone { pairing: rho, tol: LIGHT_CONE_TOL });
    }
    let img = patch.invert(LIGHT_CONE_TOL).jet2(u, v)?;
    Ok((src, img))
}

pub fn verify_pushforward_with(
    patch: &SurfacePatch,
    u: f64,
    v: f64,
    convention: PushforwardConvention,
) -> Result<PushforwardReport> {
    let (src, img) = source_and_image(patch, u, v)?;
    let rho = src.x.mdot(src.x);
    let alpha = convention.alpha(&src)?;
    let predicted = pushforward_bundle(&FormBundle::from_jet(&src), alpha, rho)?;
    let observed = convention.orient(FormBundle::from_jet(&img));
    Ok(PushforwardReport {
        rho,
        alpha,
        predicted,
        observed,
        max_rel_err: bundle_rel_err(&predicted, &observed),
        convention,
    })
}

/// Compare the closed forms with the jets of the inverted patch at `(u,v)`
/// in the calibrated convention.
pub fn verify_pushforward(patch: &SurfacePatch, u: f64, v: f64) -> Result<PushforwardReport> {
    let src = patch.jet2(u, v)?;
    if FormBundle::from_jet(&src).is_on_ld(LD_TOL) {
        return Err(Error::OnLD(-FormBundle::from_jet(&src).delta));
    }
    verify_pushforward_with(patch, u, v, PushforwardConvention::CALIBRATED)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub best: PushforwardConvention,
    /// Worst relative error over the sample, for every candidate.
    pub errors: Vec<(PushforwardConvention, f64)>,
    pub points_used: usize,
}

/// Try every convention on an `n x n` grid of usable points of `patch` and
/// keep the one with the smallest worst-case error.
pub fn calibrate(patch: &SurfacePatch, n: usize) -> Result<Calibration> {
    let mut points = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (u, v) = patch.domain().cell_center(i, j, n, n);
            if let Ok(src) = patch.jet2(u, v) {
                let b = FormBundle::from_jet(&src);
                let rho = src.x.mdot(src.x);
                if !b.is_on_ld(1e-6) && rho.abs() > 1e-6 && patch.invert(LIGHT_CONE_TOL).is_defined(u, v) {
                    points.push((u, v));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no usable calibration points".into()));
    }
    let mut errors = Vec::new();
    for c in PushforwardConvention::all() {
        let mut worst = 0.0f64;
        for &(u, v) in &points {
            let e = verify_pushforward_with(patch, u, v, c).map_or(f64::INFINITY, |r| r.max_rel_err);
            worst = worst.max(e);
        }
        errors.push((c, worst));
    }
    let best = errors
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|e| e.0)
        .expect("eight candidates");
    Ok(Calibration { best, errors, points_used: points.len() })
}

/// Natural magnitude of the BDE coefficients of a jet: `T^4 W` with `T` and
/// `W` the largest first and second partials.
pub fn bde_scale(j: &Jet2) -> f64 {
    let t = j.xu.enorm().max(j.xv.enorm());
    let w = j.xuu.enorm().max(j.xuv.enorm()).max(j.xvv.enorm());
    t.powi(4) * w
}

/// Least-squares `lambda` with `(A_M, B_M, C_M) = lambda (A, B, C)`.
pub fn scaling_ratio(src: &BdeCoefficients, img: &BdeCoefficients) -> f64 {
    let num = src.a * img.a + src.b * img.b + src.c * img.c;
    let den = src.a * src.a + src.b * src.b + src.c * src.c;
    num / den
}

/// `lambda` at `(u,v)`, with the image in the calibrated orientation; the
/// expected value is `rho^-5`.
pub fn bde_scaling_factor(patch: &SurfacePatch, u: f64, v: f64) -> Result<f64> {
    let (src, img) = source_and_image(patch, u, v)?;
    let s = FormBundle::from_jet(&src).bde();
    if s.max_abs() <= 1e-12 * bde_scale(&src) {
        return Err(Error::DegeneratePoint { u, v });
    }
    let m = PushforwardConvention::CALIBRATED.orient(FormBundle::from_jet(&img)).bde();
    Ok(scaling_ratio(&s, &m))
}
