//! Storage and norms for 𝔨-valued differential forms on the periodic grid.
//!
//! A `FormField` of degree p keeps C(3,p) components per site, each a Lie
//! algebra coefficient vector. Data is laid out structure-of-arrays per
//! (component, basis index) channel so stencil loops stream contiguously.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lie::{GroupName, GroupSpec, LieValue};
use crate::quadrature::pairwise_sum;
use crate::scalar::Scalar;

/// Component count per degree 0..=3.
pub const COMPONENT_COUNT: [usize; 4] = [1, 3, 3, 1];

/// Lexicographically ordered direction sets per degree. `COMPONENT_DIRS[p][c]`
/// lists the axes of component `c` of a p-form.
pub const COMPONENT_DIRS: [&[&[usize]]; 4] = [
    &[&[]],
    &[&[0], &[1], &[2]],
    &[&[0, 1], &[0, 2], &[1, 2]],
    &[&[0, 1, 2]],
];

/// Index of the degree-2 component with direction set {a,b}, a < b.
pub fn comp2_index(a: usize, b: usize) -> usize {
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (1, 2) => 2,
        _ => panic!("unordered pair"),
    }
}

/// 𝔨-valued lattice p-form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField<T> {
    pub degree: u8,
    pub grid: Grid<T>,
    pub group: GroupSpec<T>,
    data: Vec<T>,
}

impl<T: Scalar> FormField<T> {
    pub fn zeros(degree: u8, grid: Grid<T>, group: GroupSpec<T>) -> Self {
        assert!(degree <= 3, "form degree must be 0..=3");
        let len = COMPONENT_COUNT[degree as usize] * group.dim * grid.num_sites();
        FormField {
            degree,
            grid,
            group,
            data: vec![T::zero(); len],
        }
    }

    /// Build a field by sampling `f(position, component)` at every site.
    pub fn from_fn(
        degree: u8,
        grid: Grid<T>,
        group: GroupSpec<T>,
        f: impl Fn([T; 3], usize) -> LieValue<T>,
    ) -> Self {
        let mut out = Self::zeros(degree, grid, group);
        for site in 0..grid.num_sites() {
            let pos = grid.position(site);
            for c in 0..out.num_components() {
                out.set_value(site, c, &f(pos, c));
            }
        }
        out
    }

    pub fn num_components(&self) -> usize {
        COMPONENT_COUNT[self.degree as usize]
    }

    pub fn num_sites(&self) -> usize {
        self.grid.num_sites()
    }

    #[inline(always)]
    fn channel_offset(&self, comp: usize, basis: usize) -> usize {
        (comp * self.group.dim + basis) * self.num_sites()
    }

    /// Contiguous per-site slice of one (component, basis) channel.
    #[inline(always)]
    pub fn channel(&self, comp: usize, basis: usize) -> &[T] {
        let o = self.channel_offset(comp, basis);
        &self.data[o..o + self.num_sites()]
    }

    #[inline(always)]
    pub fn channel_mut(&mut self, comp: usize, basis: usize) -> &mut [T] {
        let o = self.channel_offset(comp, basis);
        let n = self.num_sites();
        &mut self.data[o..o + n]
    }

    #[inline(always)]
    pub fn value(&self, site: usize, comp: usize) -> LieValue<T> {
        let mut v = LieValue::zero();
        for b in 0..self.group.dim {
            v.coeffs[b] = self.data[self.channel_offset(comp, b) + site];
        }
        v
    }

    #[inline(always)]
    pub fn set_value(&mut self, site: usize, comp: usize, v: &LieValue<T>) {
        for b in 0..self.group.dim {
            let o = self.channel_offset(comp, b);
            self.data[o + site] = v.coeffs[b];
        }
    }

    /// All basis channels of one component as disjoint mutable slices.
    pub fn component_channels_mut(&mut self, comp: usize) -> Vec<&mut [T]> {
        let n = self.num_sites();
        let dim = self.group.dim;
        let o = self.channel_offset(comp, 0);
        self.data[o..o + dim * n].chunks_mut(n).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = T::zero());
    }

    pub fn scale_in_place(&mut self, a: T) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    /// self += a · other
    pub fn add_scaled(&mut self, a: T, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += a * *y;
        }
    }

    /// self = a · u + b · v (shapes must agree)
    pub fn assign_linear(&mut self, a: T, u: &Self, b: T, v: &Self) {
        for i in 0..self.data.len() {
            self.data[i] = a * u.data[i] + b * v.data[i];
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(-T::one(), other);
        out
    }

    /// L² inner product ⟨f, g⟩ = h³ Σ entries (orthonormal fiber basis).
    pub fn l2_dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.grid.cell_volume() * pairwise_sum(self.data.len(), &|i| self.data[i] * other.data[i])
    }

    pub fn norm_l2(&self) -> T {
        self.l2_dot(self).sqrt()
    }

    /// Fiberwise magnitude at one site, summed over components.
    #[inline]
    pub fn site_norm_sq(&self, site: usize) -> T {
        let mut s = T::zero();
        for c in 0..self.num_components() {
            for b in 0..self.group.dim {
                let v = self.data[self.channel_offset(c, b) + site];
                s += v * v;
            }
        }
        s
    }

    /// Lᵖ norm (Σ h³ |f(site)|ᵖ)^{1/p}; `p = ∞` returns the max site norm.
    pub fn lp_norm(&self, p: T) -> Result<T> {
        if p < T::one() {
            return Err(Error::InvalidInput(format!("Lp norm needs p >= 1, got {p}")));
        }
        let nsites = self.num_sites();
        if p.is_infinite() {
            let mut m = T::zero();
            for site in 0..nsites {
                m = m.max(self.site_norm_sq(site));
            }
            return Ok(m.sqrt());
        }
        if p == T::two() {
            return Ok(self.norm_l2());
        }
        let half_p = p * T::half();
        let s = pairwise_sum(nsites, &|site| self.site_norm_sq(site).powf(half_p));
        Ok((self.grid.cell_volume() * s).powf(T::one() / p))
    }

    /// Scan for NaN/Inf entries.
    pub fn check_finite(&self) -> Result<()> {
        for (i, x) in self.data.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite entry at flat index {i} (degree {})",
                    self.degree
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute entry difference, a cheap bitwise-closeness proxy.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for (x, y) in self.data.iter().zip(other.data.iter()) {
            m = m.max((*x - *y).abs());
        }
        m
    }

    // --- binary snapshots -------------------------------------------------

    /// Write the `YMF1` binary snapshot (bit-exact for `f64` fields).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"YMF1")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.degree as u32).to_le_bytes())?;
        w.write_all(&(self.grid.n as u32).to_le_bytes())?;
        w.write_all(&self.grid.l.to_f64_lossy().to_le_bytes())?;
        let tag: u32 = match self.group.name {
            GroupName::U1 => 0,
            GroupName::Su2 => 1,
        };
        w.write_all(&tag.to_le_bytes())?;
        // payload: (site-z-major, component, basis), little-endian f64
        for site in 0..self.num_sites() {
            for c in 0..self.num_components() {
                for b in 0..self.group.dim {
                    let v = self.data[self.channel_offset(c, b) + site].to_f64_lossy();
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Read a `YMF1` snapshot.
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"YMF1" {
            return Err(Error::SnapshotFormat("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != 1 {
            return Err(Error::SnapshotFormat(format!("unknown version {version}")));
        }
        r.read_exact(&mut u32buf)?;
        let degree = u32::from_le_bytes(u32buf);
        if degree > 3 {
            return Err(Error::SnapshotFormat(format!("bad degree {degree}")));
        }
        r.read_exact(&mut u32buf)?;
        let n = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut f64buf)?;
        let l = f64::from_le_bytes(f64buf);
        r.read_exact(&mut u32buf)?;
        let group = match u32::from_le_bytes(u32buf) {
            0 => GroupSpec::u1(),
            1 => GroupSpec::su2(),
            t => return Err(Error::SnapshotFormat(format!("unknown group tag {t}"))),
        };
        let grid = Grid::new(n, T::real(l))?;
        let mut out = Self::zeros(degree as u8, grid, group);
        for site in 0..out.num_sites() {
            for c in 0..out.num_components() {
                for b in 0..out.group.dim {
                    r.read_exact(&mut f64buf)?;
                    let o = out.channel_offset(c, b);
                    out.data[o + site] = T::real(f64::from_le_bytes(f64buf));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::GroupSpec;

    fn grid8() -> Grid<f64> {
        Grid::new(8, 1.0).unwrap()
    }

    #[test]
    fn zero_field_norms_vanish() {
        let f = FormField::<f64>::zeros(1, grid8(), GroupSpec::su2());
        assert_eq!(f.norm_l2(), 0.0);
        assert_eq!(f.lp_norm(f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn constant_unit_zero_form_has_unit_l2_norm() {
        let g = grid8();
        let f = FormField::from_fn(0, g, GroupSpec::u1(), |_, _| {
            LieValue::from_coeffs(&[1.0])
        });
        // |f| = 1 everywhere on a box of volume 1
        assert!((f.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((f.lp_norm(3.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lp_norm_rejects_p_below_one() {
        let f = FormField::<f64>::zeros(0, grid8(), GroupSpec::u1());
        assert!(f.lp_norm(0.5).is_err());
    }

    #[test]
    fn sine_mode_l2_matches_analytic_integral() {
        // f(x) = sin(2πx) on one component: ∫ sin² = 1/2 exactly, and the
        // lattice sum over a full period of equispaced samples is exact.
        let g = Grid::new(32, 1.0).unwrap();
        let f = FormField::from_fn(1, g, GroupSpec::u1(), |p, c| {
            if c == 0 {
                LieValue::from_coeffs(&[(2.0 * std::f64::consts::PI * p[0]).sin()])
            } else {
                LieValue::zero()
            }
        });
        let l2 = f.lp_norm(2.0).unwrap();
        assert!((l2 - (0.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let g = grid8();
        let f = FormField::from_fn(2, g, GroupSpec::su2(), |p, c| {
            LieValue::from_coeffs(&[
                (p[0] * 7.0).sin() + c as f64,
                p[1] * 0.37,
                1.0 / (1.0 + p[2]),
            ])
        });
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf).unwrap();
        let f2 = FormField::<f64>::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(f, f2);
        // re-serialize: identical bytes
        let mut buf2 = Vec::new();
        f2.write_snapshot(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn snapshot_rejects_bad_magic() {
        let bytes = b"NOPE\x01\x00\x00\x00";
        assert!(FormField::<f64>::read_snapshot(&bytes[..]).is_err());
    }

    #[test]
    fn check_finite_detects_nan() {
        let mut f = FormField::<f64>::zeros(0, grid8(), GroupSpec::u1());
        assert!(f.check_finite().is_ok());
        f.channel_mut(0, 0)[3] = f64::NAN;
        assert!(f.check_finite().is_err());
    }
}
