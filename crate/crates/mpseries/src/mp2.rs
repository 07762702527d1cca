//! Arithmetic in the metaplectic double cover Mp₂ of SL₂(ℝ).
//!
//! An element is a unimodular 2×2 real matrix g together with a holomorphic
//! branch η of z ↦ √(cz + d) on the upper half-plane, represented by the
//! single complex number η(i). The two elements over the same matrix differ
//! exactly by the sign of η. Group multiplication composes the matrices and
//! multiplies the branches, (σ₁σ₂).η(z) = η₁(g₂.z)·η₂(z).

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Mp2Error {
    #[error("matrix is not unimodular: det = {0}")]
    NotUnimodular(f64),
    #[error("branch datum invalid: η(i)² = {got} but c·i + d = {want}")]
    BranchMismatch { got: Complex64, want: Complex64 },
    #[error("point not in the upper half-plane: {0}")]
    NotInUpperHalfPlane(Complex64),
    #[error("invalid half-integral weight: {0}")]
    InvalidWeight(String),
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),
}

/// Principal branch of the complex square root: arg(√z) ∈ (−π/2, π/2],
/// so a negative real argument maps to +i√|z| regardless of the sign of
/// the (zero) imaginary part.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    if y == 0.0 {
        return if x >= 0.0 {
            Complex64::new(x.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-x).sqrt())
        };
    }
    let r = x.hypot(y);
    let t = ((r + x.abs()) / 2.0).sqrt();
    if x >= 0.0 {
        Complex64::new(t, y / (2.0 * t))
    } else {
        Complex64::new(y.abs() / (2.0 * t), t.copysign(y))
    }
}

/// A half-integral weight m, stored as the exact integer 2m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HalfIntegerWeight {
    twice: i64,
}

impl HalfIntegerWeight {
    /// Build from the numerator of m = numerator/2; it must be odd and ≥ 1.
    pub fn from_twice(twice: i64) -> Result<Self, Mp2Error> {
        if twice < 1 || twice % 2 == 0 {
            return Err(Mp2Error::InvalidWeight(format!(
                "2m must be an odd positive integer, got {twice}"
            )));
        }
        Ok(Self { twice })
    }

    /// The integer 2m.
    pub fn twice(&self) -> i64 {
        self.twice
    }

    /// m as a float.
    pub fn value(&self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// m/2 as a float (the exponent of y in the lift).
    pub fn half(&self) -> f64 {
        self.twice as f64 / 4.0
    }

    /// The rotation character value e^{−imt}.
    pub fn rotation_character(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, -self.value() * t)
    }
}

impl std::str::FromStr for HalfIntegerWeight {
    type Err = Mp2Error;

    /// Parses weights written as fractions over 2, e.g. `13/2`.
    fn from_str(s: &str) -> Result<Self, Mp2Error> {
        let (num, den) = s
            .split_once('/')
            .ok_or_else(|| Mp2Error::InvalidWeight(format!("expected \"odd/2\", got {s:?}")))?;
        if den.trim() != "2" {
            return Err(Mp2Error::InvalidWeight(format!("denominator must be 2 in {s:?}")));
        }
        let twice: i64 = num
            .trim()
            .parse()
            .map_err(|_| Mp2Error::InvalidWeight(format!("bad numerator in {s:?}")))?;
        Self::from_twice(twice)
    }
}

impl std::fmt::Display for HalfIntegerWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/2", self.twice)
    }
}

/// Iwasawa coordinates (x, y, t) with y > 0 and t taken modulo 4π, the
/// period of the branch of the rotation subgroup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwasawaCoordinates {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

impl IwasawaCoordinates {
    pub fn new(x: f64, y: f64, t: f64) -> Result<Self, Mp2Error> {
        if !(y > 0.0) {
            return Err(Mp2Error::NonPositiveScale(y));
        }
        Ok(Self { x, y, t: t.rem_euclid(FOUR_PI) })
    }

    /// Reconstruct the group element n_x a_y κ_t.
    pub fn to_element(&self) -> MetaplecticElement {
        MetaplecticElement::translation(self.x)
            .multiply(&MetaplecticElement::dilation(self.y).unwrap())
            .multiply(&MetaplecticElement::rotation(self.t))
    }
}

/// Exact cosine/sine when t is bit-exactly an integer multiple of π/2.
fn cos_sin(t: f64) -> (f64, f64) {
    let k = (t / std::f64::consts::FRAC_PI_2).round();
    if k.abs() <= 1e15 && k * std::f64::consts::FRAC_PI_2 == t {
        let q = (k as i64).rem_euclid(4);
        return match q {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    (t.cos(), t.sin())
}

/// An element of the metaplectic double cover: a unimodular matrix plus the
/// branch value η(i) with η(i)² = c·i + d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaplecticElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub eta_at_i: Complex64,
}

const UNIMODULAR_TOL: f64 = 1e-12;

impl MetaplecticElement {
    /// Validating constructor.
    pub fn new(a: f64, b: f64, c: f64, d: f64, eta_at_i: Complex64) -> Result<Self, Mp2Error> {
        let det = a * d - b * c;
        let scale = (a.abs() + b.abs()) * (c.abs() + d.abs()) + 1.0;
        if (det - 1.0).abs() > UNIMODULAR_TOL * scale {
            return Err(Mp2Error::NotUnimodular(det));
        }
        let want = Complex64::new(d, c);
        let got = eta_at_i * eta_at_i;
        if (got - want).norm() > UNIMODULAR_TOL * want.norm().max(1.0) {
            return Err(Mp2Error::BranchMismatch { got, want });
        }
        Ok(Self { a, b, c, d, eta_at_i })
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0, eta_at_i: Complex64::new(1.0, 0.0) }
    }

    /// n_x: horizontal translation by x, trivial branch.
    pub fn translation(x: f64) -> Self {
        Self { a: 1.0, b: x, c: 0.0, d: 1.0, eta_at_i: Complex64::new(1.0, 0.0) }
    }

    /// a_y: dilation with a_y.i = iy, branch value y^{−1/4}.
    pub fn dilation(y: f64) -> Result<Self, Mp2Error> {
        if !(y > 0.0) {
            return Err(Mp2Error::NonPositiveScale(y));
        }
        let s = y.sqrt();
        Ok(Self {
            a: s,
            b: 0.0,
            c: 0.0,
            d: 1.0 / s,
            eta_at_i: Complex64::new(y.powf(-0.25), 0.0),
        })
    }

    /// κ_t: rotation with branch value e^{it/2}. Exact at multiples of π/2.
    pub fn rotation(t: f64) -> Self {
        let (ct, st) = cos_sin(t);
        let (ch, sh) = cos_sin(t / 2.0);
        Self { a: ct, b: -st, c: st, d: ct, eta_at_i: Complex64::new(ch, sh) }
    }

    /// The nontrivial element over the identity matrix, (I, −1).
    pub fn center_flip() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0, eta_at_i: Complex64::new(-1.0, 0.0) }
    }

    /// The sign relating the stored branch to the principal square root:
    /// η(z) = branch_sign · √(cz + d) for all z in the upper half-plane.
    pub fn branch_sign(&self) -> f64 {
        let principal = principal_sqrt(Complex64::new(self.d, self.c));
        let ratio = self.eta_at_i / principal;
        if ratio.re >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// η(z) evaluated anywhere on the upper half-plane.
    pub fn eta(&self, z: Complex64) -> Complex64 {
        self.branch_sign() * principal_sqrt(self.c * z + Complex64::new(self.d, 0.0))
    }

    /// η(z)^{−2m}, computed as an integer power of the square-root value so
    /// the cocycle is preserved exactly (no logarithm re-branching).
    pub fn automorphy_power(&self, z: Complex64, weight: HalfIntegerWeight) -> Complex64 {
        let exp = -(weight.twice() as i32);
        self.eta(z).powi(exp)
    }

    /// Möbius action (az + b)/(cz + d) without a domain check.
    pub fn moebius(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Action on the upper half-plane; rejects Im(z) ≤ 0.
    pub fn act(&self, z: Complex64) -> Result<Complex64, Mp2Error> {
        if !(z.im > 0.0) {
            return Err(Mp2Error::NotInUpperHalfPlane(z));
        }
        Ok(self.moebius(z))
    }

    /// Group law: matrix product, branches composed as η₁(g₂.z)·η₂(z).
    pub fn multiply(&self, other: &Self) -> Self {
        let a = self.a * other.a + self.b * other.c;
        let b = self.a * other.b + self.b * other.d;
        let c = self.c * other.a + self.d * other.c;
        let d = self.c * other.b + self.d * other.d;
        let w = other.moebius(Complex64::new(0.0, 1.0));
        let eta_at_i = self.eta(w) * other.eta_at_i;
        Self { a, b, c, d, eta_at_i }
    }

    /// Group inverse: multiply(σ, σ⁻¹) is the identity element.
    pub fn inverse(&self) -> Self {
        let inv = Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
            eta_at_i: Complex64::new(1.0, 0.0), // placeholder, fixed below
        };
        let w = inv.moebius(Complex64::new(0.0, 1.0));
        let eta_at_i = 1.0 / self.eta(w);
        Self { eta_at_i, ..inv }
    }

    /// Iwasawa decomposition σ = n_x a_y κ_t with t ∈ [0, 4π) chosen so that
    /// e^{it/2} matches the branch of the rotation factor.
    pub fn iwasawa(&self) -> IwasawaCoordinates {
        let z0 = self.moebius(Complex64::new(0.0, 1.0));
        let (x, y) = (z0.re, z0.im);
        let na = MetaplecticElement::translation(x)
            .multiply(&MetaplecticElement::dilation(y).expect("Im(σ.i) > 0"));
        let kappa = na.inverse().multiply(self);
        let t0 = kappa.c.atan2(kappa.d);
        let cand1 = t0.rem_euclid(FOUR_PI);
        let cand2 = (t0 + 2.0 * std::f64::consts::PI).rem_euclid(FOUR_PI);
        let pick = |t: f64| (Complex64::from_polar(1.0, t / 2.0) - kappa.eta_at_i).norm();
        let t = if pick(cand1) <= pick(cand2) { cand1 } else { cand2 };
        IwasawaCoordinates { x, y, t }
    }

    /// Largest componentwise deviation from `other`, relative to
    /// max(1, |component|); matrix entries and branch value both count.
    pub fn deviation(&self, other: &Self) -> f64 {
        let rel = |p: f64, q: f64| (p - q).abs() / p.abs().max(q.abs()).max(1.0);
        let mut dev: f64 = 0.0;
        dev = dev.max(rel(self.a, other.a));
        dev = dev.max(rel(self.b, other.b));
        dev = dev.max(rel(self.c, other.c));
        dev = dev.max(rel(self.d, other.d));
        dev.max(
            (self.eta_at_i - other.eta_at_i).norm()
                / self.eta_at_i.norm().max(other.eta_at_i.norm()).max(1.0),
        )
    }
}

impl std::ops::Mul for &MetaplecticElement {
    type Output = MetaplecticElement;
    fn mul(self, rhs: &MetaplecticElement) -> MetaplecticElement {
        self.multiply(rhs)
    }
}

/// The weight-m slash action (f|ₘσ)(z) = f(σ.z)·η_σ(z)^{−2m}, returned as a
/// new evaluator on the upper half-plane.
pub fn slash<F>(f: F, weight: HalfIntegerWeight, sigma: MetaplecticElement) -> impl Fn(Complex64) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    move |z| f(sigma.moebius(z)) * sigma.automorphy_power(z, weight)
}

/// The classical lift evaluated in Iwasawa coordinates:
/// F_f(n_x a_y κ_t) = f(x + iy) · y^{m/2} · e^{−imt}.
pub fn classical_lift<F>(f: F, weight: HalfIntegerWeight, coords: &IwasawaCoordinates) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    f(Complex64::new(coords.x, coords.y)) * coords.y.powf(weight.half())
        * weight.rotation_character(coords.t)
}
