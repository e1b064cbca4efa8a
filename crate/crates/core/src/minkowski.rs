//! Linear algebra of the Minkowski 3-space.
//!
//! The pairing is `<u, v> = u0 v0 + u1 v1 - u2 v2`; the last coordinate is
//! the timelike one. The Lorentzian cross product is fixed by
//! `<u x v, w> = det(u, v, w)`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold on `|<p,p>|` below which a point counts as lying on the
/// light cone.
pub const LIGHT_CONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x0: f64, x1: f64, x2: f64) -> Self {
        Self { x0, x1, x2 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x0, self.x1, self.x2]
    }

    pub fn is_finite(self) -> bool {
        self.x0.is_finite() && self.x1.is_finite() && self.x2.is_finite()
    }

    /// Minkowski pairing.
    #[inline]
    pub fn mdot(self, other: Vec3) -> f64 {
        self.x0 * other.x0 + self.x1 * other.x1 - self.x2 * other.x2
    }

    /// `<self, self>` with error-free products and compensated summation,
    /// accurate to about one ulp of the result even near the light cone.
    pub fn msquare(self) -> f64 {
        let two_prod = |a: f64| {
            let p = a * a;
            (p, a.mul_add(a, -p))
        };
        let two_sum = |a: f64, b: f64| {
            let s = a + b;
            let bb = s - a;
            (s, (a - (s - bb)) + (b - bb))
        };
        let (p0, e0) = two_prod(self.x0);
        let (p1, e1) = two_prod(self.x1);
        let (p2, e2) = two_prod(self.x2);
        let (s, f0) = two_sum(p0, p1);
        let (s, f1) = two_sum(s, -p2);
        s + (e0 + e1 - e2 + f0 + f1)
    }

    /// Euclidean inner product of the coordinate vectors.
    #[inline]
    pub fn edot(self, other: Vec3) -> f64 {
        self.x0 * other.x0 + self.x1 * other.x1 + self.x2 * other.x2
    }

    #[inline]
    pub fn ecross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.x1 * other.x2 - self.x2 * other.x1,
            self.x2 * other.x0 - self.x0 * other.x2,
            self.x0 * other.x1 - self.x1 * other.x0,
        )
    }

    /// Lorentzian cross product: the Euclidean one with the timelike
    /// component negated.
    #[inline]
    pub fn lcross(self, other: Vec3) -> Vec3 {
        let c = self.ecross(other);
        Vec3::new(c.x0, c.x1, -c.x2)
    }

    #[inline]
    pub fn enorm(self) -> f64 {
        self.edot(self).sqrt()
    }

    #[inline]
    pub fn mnorm(self) -> f64 {
        self.mdot(self).abs().sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.x0.abs().max(self.x1.abs()).max(self.x2.abs())
    }
}

/// `det(u, v, w)` with the vectors as rows.
#[inline]
pub fn det3(u: Vec3, v: Vec3, w: Vec3) -> f64 {
    u.edot(v.ecross(w))
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x0 + o.x0, self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x0 - o.x0, self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x0 * s, self.x1 * s, self.x2 * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x0 / s, self.x1 / s, self.x2 / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x0, -self.x1, -self.x2)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalType {
    Spacelike,
    Timelike,
    Lightlike,
}

/// The three open regions cut out by the light cone, plus the cone itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `x^2 + y^2 - z^2 > 0`
    R1,
    /// inside the cone, `z > 0`
    R2,
    /// inside the cone, `z < 0`
    R3,
    LightCone,
}

pub fn minkowski_dot(u: Vec3, v: Vec3) -> f64 {
    u.mdot(v)
}

pub fn minkowski_norm(u: Vec3) -> f64 {
    u.mnorm()
}

pub fn lorentz_cross(u: Vec3, v: Vec3) -> Vec3 {
    u.lcross(v)
}

pub fn causal_type(u: Vec3, tol: f64) -> CausalType {
    let q = u.mdot(u);
    if q > tol {
        CausalType::Spacelike
    } else if q < -tol {
        CausalType::Timelike
    } else {
        CausalType::Lightlike
    }
}

pub fn region_of(p: Vec3, tol: f64) -> Region {
    let q = p.mdot(p);
    if q.abs() <= tol {
        Region::LightCone
    } else if q > 0.0 {
        Region::R1
    } else if p.x2 > 0.0 {
        Region::R2
    } else {
        Region::R3
    }
}

/// The pointwise Möbius inversion `p / <p,p>`.
pub fn mobius_point(p: Vec3, tol: f64) -> Result<Vec3> {
    let q = p.msquare();
    if q.abs() <= tol || !q.is_finite() {
        return Err(Error::NearLightCone { pairing: q, tol });
    }
    Ok(p / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol * (1.0 + b.max_abs())
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(minkowski_dot(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)), 1.0);
        assert_eq!(minkowski_dot(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0)), -1.0);
        assert_eq!(minkowski_dot(Vec3::new(1.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(minkowski_norm(Vec3::new(0.0, 0.0, 2.0)), 2.0);
        assert_eq!(minkowski_norm(Vec3::new(3.0, 4.0, 0.0)), 5.0);
        assert!(minkowski_norm(Vec3::new(1.0, 1.0, 2f64.sqrt())) < 1e-7);
    }

    #[test]
    fn cross_examples() {
        let w = lorentz_cross(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(w, Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(w.mdot(Vec3::new(0.0, 0.0, 1.0)), 1.0);
        assert_eq!(
            lorentz_cross(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)),
            Vec3::ZERO
        );
    }

    #[test]
    fn causal_examples() {
        assert_eq!(causal_type(Vec3::new(2.0, 0.0, 0.0), 1e-12), CausalType::Spacelike);
        assert_eq!(causal_type(Vec3::new(0.0, 0.0, 2.0), 1e-12), CausalType::Timelike);
        assert_eq!(causal_type(Vec3::new(1.0, 0.0, 1.0), 1e-12), CausalType::Lightlike);
    }

    #[test]
    fn region_examples() {
        assert_eq!(region_of(Vec3::new(2.0, 0.0, 0.0), 1e-12), Region::R1);
        assert_eq!(region_of(Vec3::new(0.0, 0.0, 2.0), 1e-12), Region::R2);
        assert_eq!(region_of(Vec3::new(0.0, 0.0, -2.0), 1e-12), Region::R3);
        assert_eq!(region_of(Vec3::new(3.0, 4.0, 5.0), 1e-12), Region::LightCone);
    }

    #[test]
    fn msquare_is_exact_on_small_integers() {
        let p = Vec3::new(1.0 + f64::EPSILON, 1e8, 1e8);
        assert_eq!(p.msquare(), 1.0 + 2.0 * f64::EPSILON + f64::EPSILON * f64::EPSILON);
        assert_eq!(Vec3::new(3.0, 4.0, 5.0).msquare(), 0.0);
    }

    #[test]
    fn inversion_examples() {
        let t = LIGHT_CONE_TOL;
        assert_eq!(mobius_point(Vec3::new(2.0, 0.0, 0.0), t).unwrap(), Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(mobius_point(Vec3::new(1.0, 0.0, 0.0), t).unwrap(), Vec3::new(1.0, 0.0, 0.0));
        // H^2 is invariant as a set, but the point swaps sheets.
        let p = Vec3::new(0.0, 0.0, 1.0);
        let q = mobius_point(p, t).unwrap();
        assert_eq!(q, Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(mobius_point(q, t).unwrap(), p);
        assert!(matches!(
            mobius_point(Vec3::new(1.0, 0.0, 1.0), t),
            Err(Error::NearLightCone { .. })
        ));
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn inversion_is_an_involution(p in vec3()) {
            let q = p.msquare();
            prop_assume!(q.abs() > 1e-6);
            // Rounding of i_M(p) is amplified by |p|^2 / |<p,p>| on the way back.
            let cond = p.edot(p) / q.abs();
            let back = mobius_point(mobius_point(p, 1e-12).unwrap(), 1e-12).unwrap();
            prop_assert!((back - p).max_abs() <= 1e-12f64.max(4.0 * f64::EPSILON * cond) * p.max_abs());
        }

        #[test]
        fn pairing_is_reciprocal(p in vec3()) {
            let q = p.msquare();
            prop_assume!(q.abs() > 1e-6);
            let cond = p.edot(p) / q.abs();
            let ip = mobius_point(p, 1e-12).unwrap();
            prop_assert!((ip.msquare() * q - 1.0).abs() <= 1e-12f64.max(4.0 * f64::EPSILON * cond));
        }

        #[test]
        fn regions_map_as_expected(p in vec3()) {
            prop_assume!(p.mdot(p).abs() > 1e-3);
            let before = region_of(p, 1e-12);
            let after = region_of(mobius_point(p, 1e-12).unwrap(), 1e-12);
            let expected = match before {
                Region::R1 => Region::R1,
                Region::R2 => Region::R3,
                Region::R3 => Region::R2,
                Region::LightCone => unreachable!(),
            };
            prop_assert_eq!(after, expected);
        }

        #[test]
        fn de_sitter_points_are_fixed(s in 0.0..std::f64::consts::TAU, z in -3.0..3.0f64) {
            let rad = (1.0 + z * z).sqrt();
            let p = Vec3::new(rad * s.cos(), rad * s.sin(), z);
            let ip = mobius_point(p, 1e-12).unwrap();
            prop_assert!(close(ip, p, 1e-14));
        }

        #[test]
        fn cross_is_the_determinant(u in vec3(), v in vec3(), w in vec3()) {
            let lhs = u.lcross(v).mdot(w);
            let rhs = det3(u, v, w);
            let scale = u.enorm() * v.enorm() * w.enorm();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300));
            prop_assert!(u.lcross(v).mdot(u).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn pairing_is_symmetric(u in vec3(), v in vec3()) {
            prop_assert_eq!(u.mdot(v), v.mdot(u));
        }
    }
}
