//! The Heisenberg group, its polynomial sequences, and observables.
//!
//! Points carry coordinates (x, y, z) with the group law
//! (x, y, z)·(x′, y′, z′) = (x + x′, y + y′, z + z′ + x·y′), the basic
//! 2-step nilpotent group. The integer points form the lattice Γ, and a
//! point is identified with its coset representative in the fundamental
//! domain [0,1)³ obtained by right multiplication by lattice elements.
//!
//! A polynomial sequence g(h) = g₀ · g₁^h · g₂^{C(h,2)} · … · g_s^{C(h,s)}
//! requires the coefficients g_i for i ≥ 2 to be central (x = y = 0),
//! matching the lower-central-series filtration: the commutator subgroup is
//! exactly the center {(0, 0, z)}. Under that constraint powers obey the
//! closed form g^m = (m x, m y, m z + C(m,2) x y), valid for negative m as
//! well, and shifting h ↦ h₁ + h is again a polynomial sequence via the
//! Vandermonde identity C(h₁+h, i) = Σ_j C(h₁, i−j) C(h, j).

use num_complex::Complex64;

use super::e_phase;
use crate::error::{Error, Result};

/// A group element / nilmanifold point in coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HeisPoint {
    pub fn new(x: f64, y: f64, z: f64) -> HeisPoint {
        HeisPoint { x, y, z }
    }

    pub fn identity() -> HeisPoint {
        HeisPoint::new(0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Central elements commute with everything.
    pub fn is_central(&self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }

    pub fn mul(&self, rhs: &HeisPoint) -> HeisPoint {
        HeisPoint::new(
            self.x + rhs.x,
            self.y + rhs.y,
            self.z + rhs.z + self.x * rhs.y,
        )
    }

    pub fn inv(&self) -> HeisPoint {
        HeisPoint::new(-self.x, -self.y, -self.z + self.x * self.y)
    }

    /// g^m = (m x, m y, m z + C(m,2) x y); C(m,2) = m(m−1)/2 stays integer
    /// for negative m, which makes this the inverse-compatible power.
    /// C(m,2) is formed in i128 because m can itself be a binomial (a
    /// polynomial-sequence exponent) far outside the i64-squarable range.
    pub fn pow(&self, m: i64) -> HeisPoint {
        let mf = m as f64;
        let m128 = m as i128;
        let binom2 = (m128 * (m128 - 1) / 2) as f64;
        HeisPoint::new(
            mf * self.x,
            mf * self.y,
            mf * self.z + binom2 * self.x * self.y,
        )
    }

    /// Canonical representative of the coset g·Γ in [0,1)³. Reduction
    /// order matters: the y-step changes z (right multiplication by
    /// (0,b,0) adds x·b to z), the x-step leaves z alone, and the z-step
    /// is free, so reducing y, then x, then z lands every coordinate in
    /// [0,1).
    pub fn reduce(&self) -> HeisPoint {
        let b = self.y.floor();
        let y = norm01(self.y - b);
        let z_shifted = self.z - self.x * b;
        let x = norm01(self.x - self.x.floor());
        let z = norm01(z_shifted - z_shifted.floor());
        HeisPoint::new(x, y, z)
    }
}

/// Clamp the fractional part into [0,1); v − ⌊v⌋ can round up to exactly 1
/// for tiny negative v.
fn norm01(v: f64) -> f64 {
    if v >= 1.0 {
        v - 1.0
    } else {
        v
    }
}

/// C(h, k) for integer h of either sign, exact.
pub(crate) fn binomial(h: i64, k: u32) -> i64 {
    let mut num: i128 = 1;
    for i in 0..k as i128 {
        num *= h as i128 - i;
    }
    let mut den: i128 = 1;
    for i in 1..=k as i128 {
        den *= i;
    }
    let v = num / den;
    debug_assert!(num % den == 0, "binomial({h}, {k}) not integral");
    debug_assert!(v >= i64::MIN as i128 && v <= i64::MAX as i128);
    v as i64
}

/// g(h) = g₀ · g₁^h · g₂^{C(h,2)} · … · g_s^{C(h,s)} with g_i central for
/// i ≥ 2.
#[derive(Clone, Debug)]
pub struct PolySequence {
    coeffs: Vec<HeisPoint>,
}

impl PolySequence {
    pub fn new(coeffs: Vec<HeisPoint>) -> Result<PolySequence> {
        if coeffs.is_empty() {
            return Err(Error::Domain(
                "polynomial sequence needs at least the constant coefficient".into(),
            ));
        }
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::Domain(format!(
                    "coefficient {i} has non-finite coordinates"
                )));
            }
            if i >= 2 && !c.is_central() {
                return Err(Error::Domain(format!(
                    "coefficient {i} must be central (x = y = 0): filtration \
                     requires degree-2 and higher coefficients in the commutator \
                     subgroup"
                )));
            }
        }
        Ok(PolySequence { coeffs })
    }

    pub fn constant(g0: HeisPoint) -> Result<PolySequence> {
        PolySequence::new(vec![g0])
    }

    /// Degree s of the sequence.
    pub fn step(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[HeisPoint] {
        &self.coeffs
    }

    pub fn eval(&self, h: i64) -> HeisPoint {
        let mut acc = self.coeffs[0];
        for (i, c) in self.coeffs.iter().enumerate().skip(1) {
            acc = acc.mul(&c.pow(binomial(h, i as u32)));
        }
        acc
    }

    /// The sequence h ↦ g(h₁ + h), again polynomial: the new degree-j
    /// coefficient is Π_{i ≥ j} g_i^{C(h₁, i−j)} (times g₁ for j = 1),
    /// which stays central for j ≥ 2.
    pub fn shifted(&self, h1: i64) -> PolySequence {
        let s = self.coeffs.len();
        let mut coeffs = Vec::with_capacity(s);
        coeffs.push(self.eval(h1));
        for j in 1..s {
            let mut c = self.coeffs[j];
            for i in (j + 1)..s {
                c = c.mul(&self.coeffs[i].pow(binomial(h1, (i - j) as u32)));
            }
            coeffs.push(c);
        }
        PolySequence { coeffs }
    }
}

/// A frequency-space term c · e(k_x x + k_y y + k_z z) of an observable.
#[derive(Clone, Copy, Debug)]
pub struct FourierTerm {
    pub kx: i64,
    pub ky: i64,
    pub kz: i64,
    pub coef: Complex64,
}

/// The function F evaluated on fundamental-domain coordinates: either a
/// finite Fourier expansion or a real polynomial in (x, y, z).
#[derive(Clone, Debug)]
pub enum Observable {
    Fourier(Vec<FourierTerm>),
    /// Terms (i, j, k, c) standing for c · x^i y^j z^k.
    CoordPoly(Vec<(u32, u32, u32, f64)>),
}

impl Observable {
    /// e(x): the first-coordinate character, the workhorse observable.
    pub fn phase_x() -> Observable {
        Observable::Fourier(vec![FourierTerm {
            kx: 1,
            ky: 0,
            kz: 0,
            coef: Complex64::new(1.0, 0.0),
        }])
    }

    /// e(z): the central character, sensitive to the 2-step structure.
    pub fn phase_z() -> Observable {
        Observable::Fourier(vec![FourierTerm {
            kx: 0,
            ky: 0,
            kz: 1,
            coef: Complex64::new(1.0, 0.0),
        }])
    }

    pub fn eval(&self, p: &HeisPoint) -> Complex64 {
        match self {
            Observable::Fourier(terms) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in terms {
                    let phase =
                        t.kx as f64 * p.x + t.ky as f64 * p.y + t.kz as f64 * p.z;
                    acc += t.coef * e_phase(phase);
                }
                acc
            }
            Observable::CoordPoly(terms) => {
                let mut acc = 0.0;
                for &(i, j, k, c) in terms {
                    acc += c * p.x.powi(i as i32) * p.y.powi(j as i32) * p.z.powi(k as i32);
                }
                Complex64::new(acc, 0.0)
            }
        }
    }

    /// Sup bound of |F| over the fundamental domain (coordinates in [0,1)).
    pub fn bound(&self) -> f64 {
        match self {
            Observable::Fourier(terms) => terms.iter().map(|t| t.coef.norm()).sum(),
            Observable::CoordPoly(terms) => terms.iter().map(|&(_, _, _, c)| c.abs()).sum(),
        }
    }
}

/// F(g(h)·x₀) with the point reduced to the fundamental domain.
pub fn heisenberg_eval(
    g: &PolySequence,
    x0: &HeisPoint,
    f: &Observable,
    h: i64,
) -> Complex64 {
    f.eval(&g.eval(h).mul(x0).reduce())
}
