//! Fundamental forms, the metric-scaled second-form coefficients and the
//! principal-direction BDE.
//!
//! All loci work with `lbar = det(x_u, x_v, x_uu)` and friends, which stay
//! defined across the locus of degeneracy; the normalized coefficients
//! `l, m, n` only appear inside [`gauss_k`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{det3, Vec3};
use crate::surface::Jet2;

/// Relative threshold on `|EG - F^2|` for points treated as on the LD.
pub const LD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    /// `F^2 - EG`: positive Lorentzian, negative Riemannian, zero on the LD.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondFormsBar {
    pub lbar: f64,
    pub mbar: f64,
    pub nbar: f64,
}

/// Coefficients of `A dv^2 + B du dv + C du^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdeCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BdeCoefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    pub fn norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }

    /// Value of the quadratic form on the direction `(du, dv)`.
    pub fn eval(&self, du: f64, dv: f64) -> f64 {
        self.a * dv * dv + self.b * du * dv + self.c * du * du
    }

    /// `|Q(d)| / (|(A,B,C)| |d|^2)`: zero exactly on solution directions,
    /// and invariant under rescaling of either the coefficients or `d`.
    pub fn residual(&self, du: f64, dv: f64) -> f64 {
        let n = self.norm() * (du * du + dv * dv);
        if n == 0.0 {
            return 0.0;
        }
        self.eval(du, dv).abs() / n
    }
}

/// Every form quantity at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBundle {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub lbar: f64,
    pub mbar: f64,
    pub nbar: f64,
    /// `F^2 - EG`
    pub delta: f64,
    /// `lbar nbar - mbar^2`
    pub kbar: f64,
    /// Discriminant of the principal BDE.
    pub lpl_disc: f64,
}

impl FormBundle {
    pub fn from_jet(j: &Jet2) -> Self {
        let I = first_forms(j);
        let II = second_forms_bar(j);
        Self::from_coefficients(I.e, I.f, I.g, II.lbar, II.mbar, II.nbar)
    }

    pub fn from_coefficients(e: f64, f: f64, g: f64, lbar: f64, mbar: f64, nbar: f64) -> Self {
        let mut out = Self { e, f, g, lbar, mbar, nbar, delta: 0.0, kbar: 0.0, lpl_disc: 0.0 };
        out.delta = f * f - e * g;
        out.kbar = lbar * nbar - mbar * mbar;
        out.lpl_disc = out.bde().discriminant();
        out
    }

    pub fn bde(&self) -> BdeCoefficients {
        BdeCoefficients::new(
            self.g * self.mbar - self.f * self.nbar,
            self.g * self.lbar - self.e * self.nbar,
            self.f * self.lbar - self.e * self.mbar,
        )
    }

    /// Same point seen with the opposite orientation: the bar coefficients
    /// change sign, `kbar` and the discriminant do not.
    pub fn reoriented(&self) -> Self {
        Self::from_coefficients(self.e, self.f, self.g, -self.lbar, -self.mbar, -self.nbar)
    }

    pub fn first_scale(&self) -> f64 {
        self.e.abs().max(self.f.abs()).max(self.g.abs())
    }

    pub fn second_scale(&self) -> f64 {
        self.lbar.abs().max(self.mbar.abs()).max(self.nbar.abs())
    }

    pub fn is_on_ld(&self, tol: f64) -> bool {
        let s = self.first_scale();
        self.delta.abs() <= tol * s * s
    }
}

pub fn first_forms(j: &Jet2) -> FirstForms {
    let e = j.xu.mdot(j.xu);
    let f = j.xu.mdot(j.xv);
    let g = j.xv.mdot(j.xv);
    FirstForms { e, f, g, delta: f * f - e * g }
}

pub fn second_forms_bar(j: &Jet2) -> SecondFormsBar {
    let n = j.xu.lcross(j.xv);
    SecondFormsBar {
        lbar: n.mdot(j.xuu),
        mbar: n.mdot(j.xuv),
        nbar: n.mdot(j.xvv),
    }
}

pub fn gauss_kbar(j: &Jet2) -> f64 {
    let s = second_forms_bar(j);
    s.lbar * s.nbar - s.mbar * s.mbar
}

/// Gaussian curvature `(ln - m^2) / (EG - F^2)` off the LD.
#[allow(non_snake_case)]
pub fn gauss_K(j: &Jet2, tol: f64) -> Result<f64> {
    let I = first_forms(j);
    let det = I.e * I.g - I.f * I.f;
    let s = I.e.abs().max(I.f.abs()).max(I.g.abs());
    if det.abs() <= tol * s * s {
        return Err(Error::OnLD(det));
    }
    let c = j.xu.lcross(j.xv);
    let cc = c.mdot(c).abs();
    Ok(gauss_kbar(j) / (det * cc))
}

/// Euclidean Gaussian curvature, `kbar / |x_u x_v|_E^4`.
///
/// It has the sign of `kbar` and does not depend on the chart, so it stays
/// meaningful where a chart degenerates (the poles of a spherical chart).
pub fn euclidean_gauss_curvature(j: &Jet2) -> f64 {
    let a = j.xu.ecross(j.xv).enorm();
    gauss_kbar(j) / (a * a * a * a)
}

pub fn unit_normal(j: &Jet2, tol: f64) -> Result<Vec3> {
    let c = j.xu.lcross(j.xv);
    let n = c.mnorm();
    if n <= tol {
        return Err(Error::OnLD(c.mdot(c)));
    }
    Ok(c / n)
}

pub fn bde_coeffs(j: &Jet2) -> BdeCoefficients {
    FormBundle::from_jet(j).bde()
}

pub fn lpl_discriminant(j: &Jet2) -> f64 {
    bde_coeffs(j).discriminant()
}

/// `det(x_u, x_v, w)`, the metric-free form of `<x_u x x_v, w>`.
pub fn bar_coefficient(j: &Jet2, w: Vec3) -> f64 {
    det3(j.xu, j.xv, w)
}
