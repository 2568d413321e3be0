//! Periodic cubic lattice.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Periodic,
}

/// Uniform n³ grid on a periodic box of side `l`, spacing `h = l/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    pub n: usize,
    pub l: T,
    pub h: T,
    pub bc: BoundaryCondition,
}

impl<T: Scalar> Grid<T> {
    pub fn new(n: usize, l: T) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidInput(format!("grid needs n >= 4, got {n}")));
        }
        if !(l > T::zero()) {
            return Err(Error::InvalidInput("box side must be positive".into()));
        }
        Ok(Grid {
            n,
            l,
            h: l / T::from_usize_(n),
            bc: BoundaryCondition::Periodic,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Cell volume h³, the quadrature weight of every spatial integral.
    pub fn cell_volume(&self) -> T {
        self.h * self.h * self.h
    }

    /// Site index with x fastest and z slowest (z-major storage).
    #[inline(always)]
    pub fn site(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.n + y) * self.n + x
    }

    #[inline(always)]
    pub fn coords(&self, site: usize) -> (usize, usize, usize) {
        let n = self.n;
        (site % n, (site / n) % n, site / (n * n))
    }

    /// Site shifted by +1 in `axis`, wrapping periodically.
    #[inline(always)]
    pub fn shift_up(&self, site: usize, axis: usize) -> usize {
        let n = self.n;
        let (x, y, z) = self.coords(site);
        match axis {
            0 => self.site((x + 1) % n, y, z),
            1 => self.site(x, (y + 1) % n, z),
            _ => self.site(x, y, (z + 1) % n),
        }
    }

    /// Site shifted by −1 in `axis`, wrapping periodically.
    #[inline(always)]
    pub fn shift_down(&self, site: usize, axis: usize) -> usize {
        let n = self.n;
        let (x, y, z) = self.coords(site);
        match axis {
            0 => self.site((x + n - 1) % n, y, z),
            1 => self.site(x, (y + n - 1) % n, z),
            _ => self.site(x, y, (z + n - 1) % n),
        }
    }

    /// Physical coordinates of a site.
    pub fn position(&self, site: usize) -> [T; 3] {
        let (x, y, z) = self.coords(site);
        [
            self.h * T::from_usize_(x),
            self.h * T::from_usize_(y),
            self.h * T::from_usize_(z),
        ]
    }

    /// Discrete symbol of −Δ for integer mode k: Σ_j 4 sin²(π k_j / n) / h².
    ///
    /// This is the eigenvalue of the forward/backward 7-point Laplacian on
    /// the mode exp(2πi k·x/L), shared by the stencil operators and the
    /// spectral oracle.
    pub fn laplacian_symbol(&self, k: [i64; 3]) -> T {
        let mut s = T::zero();
        let n = T::from_usize_(self.n);
        for kj in k {
            let arg = T::PI() * T::real(kj as f64) / n;
            let sn = arg.sin();
            s += T::real(4.0) * sn * sn / (self.h * self.h);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grid() {
        assert!(Grid::<f64>::new(2, 1.0).is_err());
        assert!(Grid::<f64>::new(4, 0.0).is_err());
    }

    #[test]
    fn shifts_wrap() {
        let g = Grid::<f64>::new(4, 1.0).unwrap();
        let s = g.site(3, 0, 0);
        assert_eq!(g.shift_up(s, 0), g.site(0, 0, 0));
        assert_eq!(g.shift_down(g.site(0, 1, 2), 2), g.site(0, 1, 1));
        for site in 0..g.num_sites() {
            for axis in 0..3 {
                assert_eq!(g.shift_down(g.shift_up(site, axis), axis), site);
            }
        }
    }

    #[test]
    fn symbol_matches_1d_stencil() {
        let g = Grid::<f64>::new(8, 2.0).unwrap();
        // one-dimensional check: symbol of D⁻D⁺ on mode k is 4 sin²(kh/2)/h²
        // with k = 2π m / L
        let m = 3i64;
        let k = 2.0 * std::f64::consts::PI * m as f64 / g.l;
        let expect = 4.0 * (k * g.h / 2.0).sin().powi(2) / (g.h * g.h);
        assert!((g.laplacian_symbol([m, 0, 0]) - expect).abs() < 1e-12);
    }
}
