//! Parametric surface patches with 2-jet evaluation.
//!
//! A [`SurfacePatch`] is an immutable, cheaply clonable bundle of closures:
//! a position map over a rectangular parameter domain, optional exact first
//! and second partials, and a mask marking where the patch is defined. Patches
//! without exact derivatives fall back to central finite differences.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{mobius_point, Vec3};

type PositionFn = dyn Fn(f64, f64) -> Vec3 + Send + Sync;
type JetFn = dyn Fn(f64, f64) -> Jet2 + Send + Sync;
type MaskFn = dyn Fn(f64, f64) -> bool + Send + Sync;

/// Relative finite-difference step, scaled by the domain extent.
pub const FD_REL_STEP: f64 = 1e-4;

/// Closed parameter rectangle `[u_min, u_max] x [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Domain {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Self {
        assert!(u_min < u_max && v_min < v_max, "empty parameter domain");
        Self { u_min, u_max, v_min, v_max }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min && u <= self.u_max && v >= self.v_min && v <= self.v_max
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn extent(&self) -> f64 {
        self.width().max(self.height())
    }

    /// Distance from `(u, v)` to the nearest edge (negative outside).
    pub fn margin(&self, u: f64, v: f64) -> f64 {
        (u - self.u_min)
            .min(self.u_max - u)
            .min(v - self.v_min)
            .min(self.v_max - v)
    }

    /// Center of cell `(i, j)` of an `nu x nv` partition.
    pub fn cell_center(&self, i: usize, j: usize, nu: usize, nv: usize) -> (f64, f64) {
        (
            self.u_min + (i as f64 + 0.5) * self.width() / nu as f64,
            self.v_min + (j as f64 + 0.5) * self.height() / nv as f64,
        )
    }

    /// Node `(i, j)` of an `nu x nv` lattice that includes the boundary.
    pub fn node(&self, i: usize, j: usize, nu: usize, nv: usize) -> (f64, f64) {
        let fu = if nu > 1 { i as f64 / (nu - 1) as f64 } else { 0.5 };
        let fv = if nv > 1 { j as f64 / (nv - 1) as f64 } else { 0.5 };
        (
            self.u_min + fu * self.width(),
            self.v_min + fv * self.height(),
        )
    }
}

/// Position and first/second partials at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet2 {
    pub x: Vec3,
    pub xu: Vec3,
    pub xv: Vec3,
    pub xuu: Vec3,
    pub xuv: Vec3,
    pub xvv: Vec3,
}

impl Jet2 {
    pub fn is_finite(&self) -> bool {
        [self.x, self.xu, self.xv, self.xuu, self.xuv, self.xvv]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn translated(mut self, t: Vec3) -> Jet2 {
        self.x += t;
        self
    }

    /// Scale the second partials, leaving position and tangents alone.
    pub fn with_scaled_second(mut self, s: f64) -> Jet2 {
        self.xuu = self.xuu * s;
        self.xuv = self.xuv * s;
        self.xvv = self.xvv * s;
        self
    }

    /// Jet of `i_M o x` by the chain rule, with `rho = <x,x>`:
    ///
    /// ```text
    /// y_i  = x_i / rho - rho_i x / rho^2
    /// y_ij = x_ij / rho - (rho_j x_i + rho_i x_j) / rho^2
    ///        - rho_ij x / rho^2 + 2 rho_i rho_j x / rho^3
    /// ```
    pub fn inverted(&self, tol: f64) -> Result<Jet2> {
        let x = self.x;
        let rho = x.mdot(x);
        if rho.abs() <= tol || !rho.is_finite() {
            return Err(Error::NearLightCone { pairing: rho, tol });
        }
        let ru = 2.0 * x.mdot(self.xu);
        let rv = 2.0 * x.mdot(self.xv);
        let ruu = 2.0 * (self.xu.mdot(self.xu) + x.mdot(self.xuu));
        let ruv = 2.0 * (self.xu.mdot(self.xv) + x.mdot(self.xuv));
        let rvv = 2.0 * (self.xv.mdot(self.xv) + x.mdot(self.xvv));
        let r1 = 1.0 / rho;
        let r2 = r1 * r1;
        let r3 = r2 * r1;
        let second = |xij: Vec3, xi: Vec3, xj: Vec3, ri: f64, rj: f64, rij: f64| {
            xij * r1 - (xi * rj + xj * ri) * r2 + x * (2.0 * ri * rj * r3 - rij * r2)
        };
        Ok(Jet2 {
            x: x * r1,
            xu: self.xu * r1 - x * (ru * r2),
            xv: self.xv * r1 - x * (rv * r2),
            xuu: second(self.xuu, self.xu, self.xu, ru, ru, ruu),
            xuv: second(self.xuv, self.xu, self.xv, ru, rv, ruv),
            xvv: second(self.xvv, self.xv, self.xv, rv, rv, rvv),
        })
    }
}

/// Height function of a graph `z = h(u, v)` with its partials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeightJet {
    pub h: f64,
    pub hu: f64,
    pub hv: f64,
    pub huu: f64,
    pub huv: f64,
    pub hvv: f64,
}

#[derive(Clone)]
pub struct SurfacePatch {
    name: String,
    domain: Domain,
    position: Arc<PositionFn>,
    exact_jet: Option<Arc<JetFn>>,
    mask: Option<Arc<MaskFn>>,
    fd_step: f64,
}

impl fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("exact_derivatives", &self.exact_jet.is_some())
            .field("masked", &self.mask.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl SurfacePatch {
    /// A patch given only by its position map; derivatives come from
    /// finite differences.
    pub fn from_position<P>(name: impl Into<String>, domain: Domain, position: P) -> Self
    where
        P: Fn(f64, f64) -> Vec3 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            domain,
            position: Arc::new(position),
            exact_jet: None,
            mask: None,
            fd_step: FD_REL_STEP * domain.extent().max(1.0),
        }
    }

    /// A patch with exact derivatives. `position` must agree with `jet(u,v).x`.
    pub fn from_jet<P, J>(name: impl Into<String>, domain: Domain, position: P, jet: J) -> Self
    where
        P: Fn(f64, f64) -> Vec3 + Send + Sync + 'static,
        J: Fn(f64, f64) -> Jet2 + Send + Sync + 'static,
    {
        let mut patch = Self::from_position(name, domain, position);
        patch.exact_jet = Some(Arc::new(jet));
        patch
    }

    /// Restrict the patch further; masks compose by conjunction.
    pub fn with_mask<M>(mut self, mask: M) -> Self
    where
        M: Fn(f64, f64) -> bool + Send + Sync + 'static,
    {
        self.mask = Some(match self.mask.take() {
            None => Arc::new(mask),
            Some(prev) => Arc::new(move |u, v| prev(u, v) && mask(u, v)),
        });
        self
    }

    /// Drop the exact derivatives, forcing finite differences.
    pub fn without_exact_derivatives(mut self) -> Self {
        self.exact_jet = None;
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        assert!(h > 0.0);
        self.fd_step = h;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn has_exact_derivatives(&self) -> bool {
        self.exact_jet.is_some()
    }

    /// Mask value alone, ignoring the domain.
    pub fn mask_at(&self, u: f64, v: f64) -> bool {
        self.mask.as_ref().map_or(true, |m| m(u, v))
    }

    pub fn is_defined(&self, u: f64, v: f64) -> bool {
        self.domain.contains(u, v) && self.mask_at(u, v)
    }

    fn check(&self, u: f64, v: f64) -> Result<()> {
        if !self.domain.contains(u, v) {
            return Err(Error::OutOfDomain { u, v });
        }
        if !self.mask_at(u, v) {
            return Err(Error::Masked { u, v });
        }
        Ok(())
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<Vec3> {
        self.check(u, v)?;
        Ok((self.position)(u, v))
    }

    pub fn jet2(&self, u: f64, v: f64) -> Result<Jet2> {
        self.check(u, v)?;
        match &self.exact_jet {
            Some(jet) => Ok(jet(u, v)),
            None => self.fd_jet(u, v),
        }
    }

    /// Second-order central differences of the position map.
    pub fn fd_jet(&self, u: f64, v: f64) -> Result<Jet2> {
        let h = self.fd_step;
        if self.domain.margin(u, v) < h {
            return Err(Error::OutOfDomain { u, v });
        }
        let p = &self.position;
        let x = p(u, v);
        let xp0 = p(u + h, v);
        let xm0 = p(u - h, v);
        let x0p = p(u, v + h);
        let x0m = p(u, v - h);
        let xpp = p(u + h, v + h);
        let xpm = p(u + h, v - h);
        let xmp = p(u - h, v + h);
        let xmm = p(u - h, v - h);
        Ok(Jet2 {
            x,
            xu: (xp0 - xm0) / (2.0 * h),
            xv: (x0p - x0m) / (2.0 * h),
            xuu: (xp0 - x * 2.0 + xm0) / (h * h),
            xuv: (xpp - xpm - xmp + xmm) / (4.0 * h * h),
            xvv: (x0p - x * 2.0 + x0m) / (h * h),
        })
    }

    /// Shift every point by `t`; partials are unchanged.
    pub fn translate(&self, t: Vec3) -> SurfacePatch {
        let position = self.position.clone();
        let mut out = SurfacePatch {
            name: format!("{}+({},{},{})", self.name, t.x0, t.x1, t.x2),
            domain: self.domain,
            position: Arc::new(move |u, v| position(u, v) + t),
            exact_jet: None,
            mask: self.mask.clone(),
            fd_step: self.fd_step,
        };
        if let Some(jet) = self.exact_jet.clone() {
            out.exact_jet = Some(Arc::new(move |u, v| jet(u, v).translated(t)));
        }
        out
    }

    /// The image `i_M o x`, masked to `|<x,x>| > tol`. Derivatives use the
    /// chain rule when the source has exact ones, finite differences of the
    /// composed map otherwise.
    pub fn invert(&self, tol: f64) -> SurfacePatch {
        let position = self.position.clone();
        let mask_pos = self.position.clone();
        let pos = move |u: f64, v: f64| {
            let x = position(u, v);
            mobius_point(x, 0.0).unwrap_or(Vec3::new(f64::NAN, f64::NAN, f64::NAN))
        };
        let mut out = SurfacePatch {
            name: format!("inv({})", self.name),
            domain: self.domain,
            position: Arc::new(pos),
            exact_jet: None,
            mask: self.mask.clone(),
            fd_step: self.fd_step,
        };
        if let Some(jet) = self.exact_jet.clone() {
            out.exact_jet = Some(Arc::new(move |u, v| {
                jet(u, v).inverted(0.0).unwrap_or_else(|_| Jet2::nan())
            }));
        }
        out.with_mask(move |u, v| {
            let x = mask_pos(u, v);
            x.mdot(x).abs() > tol
        })
    }
}

impl Jet2 {
    fn nan() -> Jet2 {
        let n = Vec3::new(f64::NAN, f64::NAN, f64::NAN);
        Jet2 { x: n, xu: n, xv: n, xuu: n, xuv: n, xvv: n }
    }
}

/// Domain of the spherical charts: `[0, 2pi] x [0, pi]`.
pub fn sphere_domain() -> Domain {
    Domain::new(0.0, TAU, 0.0, PI)
}

/// `center + (a cos u sin v, b sin u sin v, c cos v)`; the poles are at
/// `v = 0, pi`.
pub fn builtin_ellipsoid(center: Vec3, semiaxes: (f64, f64, f64)) -> Result<SurfacePatch> {
    let (a, b, c) = semiaxes;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::NonpositiveSemiaxis(a, b, c));
    }
    let jet = move |u: f64, v: f64| {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        Jet2 {
            x: center + Vec3::new(a * cu * sv, b * su * sv, c * cv),
            xu: Vec3::new(-a * su * sv, b * cu * sv, 0.0),
            xv: Vec3::new(a * cu * cv, b * su * cv, -c * sv),
            xuu: Vec3::new(-a * cu * sv, -b * su * sv, 0.0),
            xuv: Vec3::new(-a * su * cv, b * cu * cv, 0.0),
            xvv: Vec3::new(-a * cu * sv, -b * su * sv, -c * cv),
        }
    };
    let position = move |u: f64, v: f64| {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        center + Vec3::new(a * cu * sv, b * su * sv, c * cv)
    };
    let name = format!(
        "ellipsoid({},{},{};{},{},{})",
        center.x0, center.x1, center.x2, a, b, c
    );
    Ok(SurfacePatch::from_jet(name, sphere_domain(), position, jet))
}

/// Euclidean sphere `center + r (cos u sin v, sin u sin v, cos v)`.
pub fn builtin_sphere(center: Vec3, r: f64) -> Result<SurfacePatch> {
    if !(r > 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    Ok(builtin_ellipsoid(center, (r, r, r))?
        .with_name(format!("sphere({},{},{};{})", center.x0, center.x1, center.x2, r)))
}

/// Second chart of the ellipsoid,
/// `center + (a cos v, b cos u sin v, c sin u sin v)`. Its poles sit on the
/// equator of [`builtin_ellipsoid`], so the two charts cover every point.
pub fn builtin_ellipsoid_second_chart(center: Vec3, semiaxes: (f64, f64, f64)) -> Result<SurfacePatch> {
    let (a, b, c) = semiaxes;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::NonpositiveSemiaxis(a, b, c));
    }
    let jet = move |u: f64, v: f64| {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let map = |w: Vec3| Vec3::new(a * w.x2, b * w.x0, c * w.x1);
        Jet2 {
            x: center + map(Vec3::new(cu * sv, su * sv, cv)),
            xu: map(Vec3::new(-su * sv, cu * sv, 0.0)),
            xv: map(Vec3::new(cu * cv, su * cv, -sv)),
            xuu: map(Vec3::new(-cu * sv, -su * sv, 0.0)),
            xuv: map(Vec3::new(-su * cv, cu * cv, 0.0)),
            xvv: map(Vec3::new(-cu * sv, -su * sv, -cv)),
        }
    };
    let position = move |u: f64, v: f64| jet(u, v).x;
    Ok(SurfacePatch::from_jet(
        format!("ellipsoid2({},{},{};{},{},{})", center.x0, center.x1, center.x2, a, b, c),
        sphere_domain(),
        position,
        jet,
    ))
}

/// Second chart of the sphere, `center + r (cos v, cos u sin v, sin u sin v)`.
pub fn builtin_sphere_second_chart(center: Vec3, r: f64) -> Result<SurfacePatch> {
    if !(r > 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    Ok(builtin_ellipsoid_second_chart(center, (r, r, r))?
        .with_name(format!("sphere2({},{},{};{})", center.x0, center.x1, center.x2, r)))
}

/// Graph `(u, v, h(u, v))` over `domain`.
pub fn graph<H>(name: impl Into<String>, domain: Domain, height: H) -> SurfacePatch
where
    H: Fn(f64, f64) -> HeightJet + Send + Sync + 'static,
{
    let height = Arc::new(height);
    let hp = height.clone();
    let position = move |u: f64, v: f64| Vec3::new(u, v, hp(u, v).h);
    let jet = move |u: f64, v: f64| {
        let h = height(u, v);
        Jet2 {
            x: Vec3::new(u, v, h.h),
            xu: Vec3::new(1.0, 0.0, h.hu),
            xv: Vec3::new(0.0, 1.0, h.hv),
            xuu: Vec3::new(0.0, 0.0, h.huu),
            xuv: Vec3::new(0.0, 0.0, h.huv),
            xvv: Vec3::new(0.0, 0.0, h.hvv),
        }
    };
    SurfacePatch::from_jet(name, domain, position, jet)
}

/// Affine plane `origin + u eu + v ev`.
pub fn plane(origin: Vec3, eu: Vec3, ev: Vec3, domain: Domain) -> SurfacePatch {
    let position = move |u: f64, v: f64| origin + eu * u + ev * v;
    let jet = move |u: f64, v: f64| Jet2 {
        x: origin + eu * u + ev * v,
        xu: eu,
        xv: ev,
        xuu: Vec3::ZERO,
        xuv: Vec3::ZERO,
        xvv: Vec3::ZERO,
    };
    SurfacePatch::from_jet("plane", domain, position, jet)
}

/// Height functions used by the named graph presets.
pub mod heights {
    use super::HeightJet;

    pub fn plane(_u: f64, _v: f64) -> HeightJet {
        HeightJet::default()
    }

    /// `(u^2 + v^2) / 2`
    pub fn paraboloid(u: f64, v: f64) -> HeightJet {
        HeightJet { h: 0.5 * (u * u + v * v), hu: u, hv: v, huu: 1.0, huv: 0.0, hvv: 1.0 }
    }

    /// `(u^2 - v^2) / 2`
    pub fn saddle(u: f64, v: f64) -> HeightJet {
        HeightJet { h: 0.5 * (u * u - v * v), hu: u, hv: -v, huu: 1.0, huv: 0.0, hvv: -1.0 }
    }

    /// `(u^2 + k v^2) / 2 + e u v^2`; with the default `k = -0.5`,
    /// `e = 0.6` it has a Lorentzian region where principal directions
    /// turn complex, so its LPL is a genuine curve.
    pub fn cubic(k: f64, e: f64) -> impl Fn(f64, f64) -> HeightJet + Send + Sync + Clone {
        move |u, v| HeightJet {
            h: 0.5 * (u * u + k * v * v) + e * u * v * v,
            hu: u + e * v * v,
            hv: k * v + 2.0 * e * u * v,
            huu: 1.0,
            huv: 2.0 * e * v,
            hvv: k + 2.0 * e * u,
        }
    }
}
