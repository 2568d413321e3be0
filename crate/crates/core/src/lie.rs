//! Arithmetic of the compact structure group K and its Lie algebra 𝔨.
//!
//! Supported groups are U(1) and SU(2). Elements of 𝔨 are stored as real
//! coefficient vectors over a fixed orthonormal anti-Hermitian basis:
//!
//! * U(1): e₁ = i, with ⟨X,Y⟩ = Re tr(X†Y);
//! * SU(2): e_a = −(i/2)σ_a, with ⟨X,Y⟩ = −2 tr(XY).
//!
//! Both choices make the basis orthonormal, so |X|² = Σ coeffs² and the
//! SU(2) structure constants are ε_abc. Brackets are evaluated by a
//! precomputed structure-constant contraction, never a matrix product.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximum Lie algebra dimension across supported groups.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GroupName {
    U1,
    Su2,
}

/// Element of 𝔨 as coefficients over the group's orthonormal basis.
///
/// The storage is padded to [`MAX_DIM`]; coefficients beyond the group
/// dimension are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieValue<T> {
    pub coeffs: [T; MAX_DIM],
}

impl<T: Scalar> LieValue<T> {
    pub fn zero() -> Self {
        LieValue {
            coeffs: [T::zero(); MAX_DIM],
        }
    }

    pub fn from_coeffs(coeffs: &[T]) -> Self {
        let mut c = [T::zero(); MAX_DIM];
        c[..coeffs.len()].copy_from_slice(coeffs);
        LieValue { coeffs: c }
    }

    /// |X|² under the Ad-invariant inner product (Parseval over the basis).
    pub fn norm_sq(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |s, &c| s + c * c)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        let mut s = T::zero();
        for a in 0..MAX_DIM {
            s += self.coeffs[a] * other.coeffs[a];
        }
        s
    }

    pub fn scale(&self, t: T) -> Self {
        let mut c = self.coeffs;
        for x in c.iter_mut() {
            *x *= t;
        }
        LieValue { coeffs: c }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut c = self.coeffs;
        for (x, y) in c.iter_mut().zip(other.coeffs.iter()) {
            *x += *y;
        }
        LieValue { coeffs: c }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut c = self.coeffs;
        for (x, y) in c.iter_mut().zip(other.coeffs.iter()) {
            *x -= *y;
        }
        LieValue { coeffs: c }
    }
}

/// Descriptor of the structure group: basis, structure constants, inner
/// product normalization and the measured commutator bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSpec<T> {
    pub name: GroupName,
    /// Dimension of 𝔨 (1 for U(1), 3 for SU(2)).
    pub dim: usize,
    /// Structure constants f\[a\]\[b\]\[c\] with [e_a, e_b] = Σ_c f_abc e_c.
    f: [[[T; MAX_DIM]; MAX_DIM]; MAX_DIM],
    /// Measured bound c with |[X,Y]| ≤ c|X||Y| (0 for U(1), 1 for SU(2)).
    pub commutator_bound: T,
    /// Normalization of ⟨·,·⟩ relative to Re tr(X†Y); recorded for
    /// provenance, every routine works in basis coefficients.
    pub ip_normalization: T,
}

impl<T: Scalar> GroupSpec<T> {
    pub fn new(name: GroupName) -> Self {
        let mut f = [[[T::zero(); MAX_DIM]; MAX_DIM]; MAX_DIM];
        match name {
            GroupName::U1 => GroupSpec {
                name,
                dim: 1,
                f,
                commutator_bound: T::zero(),
                ip_normalization: T::one(),
            },
            GroupName::Su2 => {
                // [e_a, e_b] = ε_abc e_c for e_a = −(i/2)σ_a.
                for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                    f[a][b][c] = T::one();
                    f[b][a][c] = -T::one();
                }
                GroupSpec {
                    name,
                    dim: 3,
                    f,
                    // sup |[X,Y]|/(|X||Y|) = 1 for the cross-product bracket;
                    // kept as the measured constant c of the Gaffney check.
                    commutator_bound: T::one(),
                    ip_normalization: T::two(),
                }
            }
        }
    }

    pub fn u1() -> Self {
        Self::new(GroupName::U1)
    }

    pub fn su2() -> Self {
        Self::new(GroupName::Su2)
    }

    pub fn is_abelian(&self) -> bool {
        self.name == GroupName::U1
    }

    /// Basis matrix e_a in the defining representation (2×2, U(1) embedded
    /// in the upper-left corner). Used by validation code only.
    pub fn basis_matrix(&self, a: usize) -> [[Complex<T>; 2]; 2] {
        let z = Complex::new(T::zero(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        let half = T::half();
        match self.name {
            GroupName::U1 => [[i, z], [z, z]],
            GroupName::Su2 => {
                // e_a = −(i/2) σ_a
                match a {
                    0 => [[z, -i * half], [-i * half, z]],
                    1 => [[z, -Complex::new(half, T::zero())], [Complex::new(half, T::zero()), z]],
                    2 => [[-i * half, z], [z, i * half]],
                    _ => panic!("basis index out of range"),
                }
            }
        }
    }

    /// Bracket [X, Y] via the structure-constant table.
    #[inline]
    pub fn bracket(&self, x: &LieValue<T>, y: &LieValue<T>) -> LieValue<T> {
        let mut out = [T::zero(); MAX_DIM];
        self.bracket_coeffs(&x.coeffs, &y.coeffs, &mut out);
        LieValue { coeffs: out }
    }

    /// Bracket on raw coefficient triples; the hot-loop entry point.
    #[inline(always)]
    pub fn bracket_coeffs(&self, x: &[T; MAX_DIM], y: &[T; MAX_DIM], out: &mut [T; MAX_DIM]) {
        match self.name {
            GroupName::U1 => {
                *out = [T::zero(); MAX_DIM];
            }
            GroupName::Su2 => {
                // ε_abc contraction = cross product of coefficient vectors
                out[0] = x[1] * y[2] - x[2] * y[1];
                out[1] = x[2] * y[0] - x[0] * y[2];
                out[2] = x[0] * y[1] - x[1] * y[0];
            }
        }
    }

    /// Structure constant f_abc.
    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> T {
        self.f[a][b][c]
    }
}

/// `|⟨[X,Y],Z⟩ + ⟨Y,[X,Z]⟩|`, the Ad-invariance residual of the inner
/// product. Zero to rounding for exact structure constants.
pub fn ad_invariance_check<T: Scalar>(
    x: &LieValue<T>,
    y: &LieValue<T>,
    z: &LieValue<T>,
    g: &GroupSpec<T>,
) -> T {
    let xy = g.bracket(x, y);
    let xz = g.bracket(x, z);
    (xy.dot(z) + y.dot(&xz)).abs()
}

/// `commutator(X, Y)` with an explicit group check at the API boundary.
pub fn commutator<T: Scalar>(
    x: &LieValue<T>,
    y: &LieValue<T>,
    g: &GroupSpec<T>,
) -> Result<LieValue<T>> {
    for a in g.dim..MAX_DIM {
        if x.coeffs[a] != T::zero() || y.coeffs[a] != T::zero() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient {} nonzero for a dim-{} group",
                a, g.dim
            )));
        }
    }
    Ok(g.bracket(x, y))
}

/// Group element in the defining representation.
///
/// SU(2) elements are stored as unit quaternions (w, v) ↔ w·I − i v·σ, so
/// products, inverses and logs have closed forms; U(1) elements are phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupElement<T> {
    U1(Complex<T>),
    Su2 { w: T, v: [T; 3] },
}

impl<T: Scalar> GroupElement<T> {
    pub fn identity(g: &GroupSpec<T>) -> Self {
        match g.name {
            GroupName::U1 => GroupElement::U1(Complex::new(T::one(), T::zero())),
            GroupName::Su2 => GroupElement::Su2 {
                w: T::one(),
                v: [T::zero(); 3],
            },
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (GroupElement::U1(a), GroupElement::U1(b)) => GroupElement::U1(a * b),
            (GroupElement::Su2 { w: w1, v: v1 }, GroupElement::Su2 { w: w2, v: v2 }) => {
                // quaternion product for q = w − i v·σ
                let w = *w1 * *w2 - v1[0] * v2[0] - v1[1] * v2[1] - v1[2] * v2[2];
                let v = [
                    *w1 * v2[0] + *w2 * v1[0] + v1[1] * v2[2] - v1[2] * v2[1],
                    *w1 * v2[1] + *w2 * v1[1] + v1[2] * v2[0] - v1[0] * v2[2],
                    *w1 * v2[2] + *w2 * v1[2] + v1[0] * v2[1] - v1[1] * v2[0],
                ];
                GroupElement::Su2 { w, v }
            }
            _ => panic!("mixed group elements"),
        }
    }

    pub fn inv(&self) -> Self {
        match self {
            GroupElement::U1(a) => GroupElement::U1(a.conj()),
            GroupElement::Su2 { w, v } => GroupElement::Su2 {
                w: *w,
                v: [-v[0], -v[1], -v[2]],
            },
        }
    }

    /// g⁻¹ X g in basis coefficients (Ad_{g⁻¹} X).
    pub fn adjoint_inv(&self, x: &LieValue<T>) -> LieValue<T> {
        match self {
            GroupElement::U1(_) => *x,
            GroupElement::Su2 { w, v } => {
                // Ad_{q⁻¹} rotates the coefficient vector by the inverse
                // quaternion: c ↦ c + 2u×(u×c − w c) with u = −v.
                let c = [x.coeffs[0], x.coeffs[1], x.coeffs[2]];
                let u = [-v[0], -v[1], -v[2]];
                let cross = |a: &[T; 3], b: &[T; 3]| {
                    [
                        a[1] * b[2] - a[2] * b[1],
                        a[2] * b[0] - a[0] * b[2],
                        a[0] * b[1] - a[1] * b[0],
                    ]
                };
                let uc = cross(&u, &c);
                let t = [uc[0] + *w * c[0], uc[1] + *w * c[1], uc[2] + *w * c[2]];
                let utc = cross(&u, &t);
                LieValue::from_coeffs(&[
                    c[0] + T::two() * utc[0],
                    c[1] + T::two() * utc[1],
                    c[2] + T::two() * utc[2],
                ])
            }
        }
    }

    /// Matrix logarithm mapped back to basis coefficients. The SU(2) branch
    /// takes the principal log (rotation angle in [0, π]).
    pub fn log(&self, g: &GroupSpec<T>) -> LieValue<T> {
        match self {
            GroupElement::U1(a) => {
                let theta = a.im.atan2(a.re);
                let mut v = LieValue::zero();
                v.coeffs[0] = theta;
                let _ = g;
                v
            }
            GroupElement::Su2 { w, v } => {
                let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if vn == T::zero() {
                    return LieValue::zero();
                }
                let half_angle = vn.atan2(*w);
                let s = T::two() * half_angle / vn;
                LieValue::from_coeffs(&[v[0] * s, v[1] * s, v[2] * s])
            }
        }
    }

    /// Geodesic midpoint of `self` and `other`.
    pub fn midpoint(&self, other: &Self, g: &GroupSpec<T>) -> Self {
        let rel = self.inv().mul(other);
        let half_log = rel.log(g).scale(T::half());
        self.mul(&group_exp(&half_log, g))
    }

    /// Defining-representation matrix; U(1) occupies the upper-left entry
    /// with a 1 in the lower-right so the matrix stays unitary.
    pub fn as_matrix(&self) -> [[Complex<T>; 2]; 2] {
        let z = Complex::new(T::zero(), T::zero());
        match self {
            GroupElement::U1(a) => [[*a, z], [z, Complex::new(T::one(), T::zero())]],
            GroupElement::Su2 { w, v } => {
                // w·I − i v·σ
                [
                    [Complex::new(*w, -v[2]), Complex::new(-v[1], -v[0])],
                    [Complex::new(v[1], -v[0]), Complex::new(*w, v[2])],
                ]
            }
        }
    }

    /// Deviation from unitarity in the Frobenius norm of g†g − I.
    pub fn unitarity_defect(&self) -> T {
        let m = self.as_matrix();
        let mut defect = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Complex::new(T::zero(), T::zero());
                for k in 0..2 {
                    s = s + m[k][i].conj() * m[k][j];
                }
                let target = if i == j { T::one() } else { T::zero() };
                let d = s - Complex::new(target, T::zero());
                defect += d.norm_sqr();
            }
        }
        defect.sqrt()
    }
}

/// exp(X) by the closed 2×2 formula: a phase for U(1) and the
/// Rodrigues-type formula cos(θ/2)·I − i sin(θ/2) X̂·σ for SU(2).
pub fn group_exp<T: Scalar>(x: &LieValue<T>, g: &GroupSpec<T>) -> GroupElement<T> {
    match g.name {
        GroupName::U1 => {
            let theta = x.coeffs[0];
            GroupElement::U1(Complex::new(theta.cos(), theta.sin()))
        }
        GroupName::Su2 => {
            let n = x.norm();
            if n == T::zero() {
                return GroupElement::identity(g);
            }
            let half = n * T::half();
            let s = half.sin() / n;
            GroupElement::Su2 {
                w: half.cos(),
                v: [x.coeffs[0] * s, x.coeffs[1] * s, x.coeffs[2] * s],
            }
        }
    }
}
