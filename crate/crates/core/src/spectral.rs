//! FFT-based spectral operators for the flat (A = 0) background.
//!
//! Everything here is built on the *discrete* Laplacian symbol
//! λ_h(k) = Σ_j 4 sin²(π k_j / n) / h², the exact eigenvalue of the stencil
//! operators on Fourier modes. Spectral propagators therefore commute with
//! the finite-difference calculus to rounding, and disagreements with
//! time-stepped flows isolate pure time-discretization error.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::FormField;
use crate::scalar::Scalar;

/// Cached 1-D FFT plans for an n³ grid.
pub struct SpectralPlan<T: Scalar> {
    pub n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> SpectralPlan<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        SpectralPlan {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// In-place 3-D transform of one channel (site-major, x fastest).
    fn fft3_in_place(&self, data: &mut [Complex<T>], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut line = vec![Complex::new(T::zero(), T::zero()); n];
        // x lines are contiguous
        for chunk in data.chunks_mut(n) {
            plan.process(chunk);
        }
        // y lines, stride n
        for z in 0..n {
            for x in 0..n {
                let base = z * n * n + x;
                for y in 0..n {
                    line[y] = data[base + y * n];
                }
                plan.process(&mut line);
                for y in 0..n {
                    data[base + y * n] = line[y];
                }
            }
        }
        // z lines, stride n²
        for y in 0..n {
            for x in 0..n {
                let base = y * n + x;
                for z in 0..n {
                    line[z] = data[base + z * n * n];
                }
                plan.process(&mut line);
                for z in 0..n {
                    data[base + z * n * n] = line[z];
                }
            }
        }
        if inverse {
            let scale = T::one() / T::from_usize_(n * n * n);
            for v in data.iter_mut() {
                *v = Complex::new(v.re * scale, v.im * scale);
            }
        }
    }

    /// Forward transform of a real channel into complex mode amplitudes
    /// (unnormalized DFT, `U_k = Σ_x u(x) e^{-2πi k·x/n}`).
    pub fn forward(&self, src: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = src.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fft3_in_place(&mut buf, false);
        buf
    }

    /// Inverse transform, discarding the (rounding-level) imaginary part.
    pub fn inverse_real(&self, mut modes: Vec<Complex<T>>) -> Vec<T> {
        self.fft3_in_place(&mut modes, true);
        modes.into_iter().map(|c| c.re).collect()
    }

    /// Integer mode triple of a flat spectral index.
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        let fold = |m: usize| -> i64 {
            if m <= n / 2 {
                m as i64
            } else {
                m as i64 - n as i64
            }
        };
        [
            fold(idx % n),
            fold((idx / n) % n),
            fold(idx / (n * n)),
        ]
    }
}

/// Apply a real Fourier multiplier m(k) channel-wise to every channel of a
/// form field.
pub fn apply_multiplier<T: Scalar>(
    f: &FormField<T>,
    m: impl Fn([i64; 3]) -> T,
) -> FormField<T> {
    let plan = SpectralPlan::new(f.grid.n);
    let mut out = FormField::zeros(f.degree, f.grid, f.group);
    let weights: Vec<T> = (0..f.num_sites()).map(|i| m(plan.mode(i))).collect();
    for c in 0..f.num_components() {
        for b in 0..f.group.dim {
            let mut modes = plan.forward(f.channel(c, b));
            for (v, &w) in modes.iter_mut().zip(weights.iter()) {
                *v = Complex::new(v.re * w, v.im * w);
            }
            let back = plan.inverse_real(modes);
            out.channel_mut(c, b).copy_from_slice(&back);
        }
    }
    out
}

/// Flat heat semigroup e^{tΔ} with the discrete symbol: the exact-in-time
/// solution of u' = Δu for the stencil Laplacian.
pub fn heat_semigroup<T: Scalar>(f: &FormField<T>, t: T) -> Result<FormField<T>> {
    if !(t >= T::zero()) {
        return Err(Error::InvalidInput(format!(
            "heat semigroup needs t >= 0, got {t}"
        )));
    }
    let grid = f.grid;
    Ok(apply_multiplier(f, |k| (-t * grid.laplacian_symbol(k)).exp()))
}

/// Exact solution at time `t` of the abelian flow `A' = ΔA` started from a
/// divergence-free `a0` — the spectral oracle for the nonlinear stepper.
pub fn spectral_heat<T: Scalar>(a0: &FormField<T>, t: T) -> Result<FormField<T>> {
    if a0.degree != 1 {
        return Err(Error::InvalidDegree {
            op: "spectral_heat",
            expected: "1",
            got: a0.degree,
        });
    }
    if !a0.group.is_abelian() {
        return Err(Error::InvalidInput(
            "spectral heat oracle is abelian-only".into(),
        ));
    }
    heat_semigroup(a0, t)
}

/// Discrete Helmholtz split of an abelian 1-form: `f = f_div_free + dφ`,
/// orthogonal in L², using the symbols of the forward-difference gradient.
/// The zero mode (spatially constant part) is assigned to the
/// divergence-free summand.
pub fn helmholtz_split<T: Scalar>(f: &FormField<T>) -> Result<(FormField<T>, FormField<T>)> {
    if f.degree != 1 || !f.group.is_abelian() {
        return Err(Error::InvalidInput(
            "helmholtz split expects an abelian 1-form".into(),
        ));
    }
    let grid = f.grid;
    let n = grid.n;
    let plan = SpectralPlan::new(n);
    let mut grad = FormField::zeros(1, grid, f.group);

    // symbol of D_j⁺ on mode k: (e^{2πi k_j/n} − 1)/h
    let d_sym = |kj: i64| -> Complex<T> {
        let th = T::two() * T::PI() * T::real(kj as f64) / T::from_usize_(n);
        Complex::new((th.cos() - T::one()) / grid.h, th.sin() / grid.h)
    };

    let hats: Vec<Vec<Complex<T>>> = (0..3).map(|j| plan.forward(f.channel(j, 0))).collect();
    let mut grad_hats = vec![vec![Complex::new(T::zero(), T::zero()); f.num_sites()]; 3];
    for idx in 0..f.num_sites() {
        let k = plan.mode(idx);
        let lam = grid.laplacian_symbol(k);
        if lam == T::zero() {
            continue; // zero mode stays in the divergence-free part
        }
        let d: Vec<Complex<T>> = k.iter().map(|&kj| d_sym(kj)).collect();
        // φ̂ = Σ_m conj(d_m) û_m / |d|², |d|² = λ_h(k)
        let mut phi = Complex::new(T::zero(), T::zero());
        for m in 0..3 {
            phi = phi + d[m].conj() * hats[m][idx];
        }
        phi = phi / lam;
        for j in 0..3 {
            grad_hats[j][idx] = d[j] * phi;
        }
    }
    for j in 0..3 {
        let back = plan.inverse_real(std::mem::take(&mut grad_hats[j]));
        grad.channel_mut(j, 0).copy_from_slice(&back);
    }
    let div_free = f.sub(&grad);
    Ok((div_free, grad))
}

/// Squared homogeneous Ḣ^{1/2} seminorm with the discrete symbol:
/// `Σ_k λ_h(k)^{1/2} |û(k)|²` summed over channels, with the L²-Parseval
/// normalization `û = U/n³`, ‖u‖²_{L²} = L³ Σ|û|².
pub fn h_half_seminorm_sq<T: Scalar>(f: &FormField<T>) -> T {
    sobolev_multiplier_norm_sq(f, |lam| lam.sqrt())
}

/// Squared inhomogeneous H^b norm on the flat background:
/// `Σ_k (1 + λ_h(k))^b |û(k)|²` with Parseval normalization.
pub fn flat_hb_norm_sq<T: Scalar>(f: &FormField<T>, b: T) -> T {
    sobolev_multiplier_norm_sq(f, |lam| (T::one() + lam).powf(b))
}

fn sobolev_multiplier_norm_sq<T: Scalar>(f: &FormField<T>, w: impl Fn(T) -> T) -> T {
    let grid = f.grid;
    let plan = SpectralPlan::new(grid.n);
    let n3 = T::from_usize_(grid.num_sites());
    let vol = grid.l * grid.l * grid.l;
    let weights: Vec<T> = (0..f.num_sites())
        .map(|i| w(grid.laplacian_symbol(plan.mode(i))))
        .collect();
    let mut total = T::zero();
    for c in 0..f.num_components() {
        for b in 0..f.group.dim {
            let modes = plan.forward(f.channel(c, b));
            total += crate::quadrature::pairwise_sum(modes.len(), &|i| {
                weights[i] * modes[i].norm_sqr()
            });
        }
    }
    vol * total / (n3 * n3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{coext_d, ext_d};
    use crate::grid::Grid;
    use crate::lie::{GroupSpec, LieValue};
    use crate::sampling::{random_form, SeedSplitter};

    fn grid(n: usize) -> Grid<f64> {
        Grid::new(n, 1.0).unwrap()
    }

    #[test]
    fn parseval_recovers_l2_norm() {
        let f = random_form(1, grid(8), GroupSpec::su2(), &SeedSplitter::new(5).child("p"));
        let spectral = sobolev_multiplier_norm_sq(&f, |_| 1.0f64).sqrt();
        let direct = f.norm_l2();
        assert!((spectral - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn round_trip_is_identity() {
        let plan = SpectralPlan::<f64>::new(8);
        let f = random_form(0, grid(8), GroupSpec::u1(), &SeedSplitter::new(6).child("r"));
        let modes = plan.forward(f.channel(0, 0));
        let back = plan.inverse_real(modes);
        let worst = f
            .channel(0, 0)
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-13);
    }

    #[test]
    fn heat_semigroup_decays_single_mode_with_discrete_rate() {
        let g = grid(16);
        let f = FormField::from_fn(0, g, GroupSpec::u1(), |p, _| {
            LieValue::from_coeffs(&[(2.0 * std::f64::consts::PI * 2.0 * p[0]).cos()])
        });
        let t = 0.01;
        let out = heat_semigroup(&f, t).unwrap();
        let lam = g.laplacian_symbol([2, 0, 0]);
        let expect = (-t * lam).exp();
        let ratio = out.norm_l2() / f.norm_l2();
        assert!((ratio - expect).abs() < 1e-12);
        assert!(heat_semigroup(&f, -1.0).is_err());
    }

    #[test]
    fn helmholtz_split_is_orthogonal_and_consistent() {
        let f = random_form(1, grid(8), GroupSpec::u1(), &SeedSplitter::new(7).child("h"));
        let (w, dphi) = helmholtz_split(&f).unwrap();
        // reconstruction
        assert!(w.sub(&f.sub(&dphi)).norm_l2() < 1e-13);
        // w is discretely divergence free
        let div = coext_d(&w).unwrap();
        assert!(div.norm_l2() < 1e-10 * f.norm_l2() / f.grid.h);
        // dphi is an exact discrete gradient: d of it has only rounding curl?
        // orthogonality in L²
        let ip = w.l2_dot(&dphi);
        assert!(ip.abs() < 1e-11 * f.norm_l2().powi(2));
        // gradient part is curl-free
        let curl = ext_d(&dphi).unwrap();
        assert!(curl.norm_l2() < 1e-9 * f.norm_l2() / f.grid.h);
    }

    #[test]
    fn h_half_seminorm_matches_symbol_on_single_mode() {
        let g = grid(16);
        let f = FormField::from_fn(1, g, GroupSpec::u1(), |p, c| {
            if c == 1 {
                LieValue::from_coeffs(&[(2.0 * std::f64::consts::PI * 3.0 * p[0]).sin()])
            } else {
                LieValue::zero()
            }
        });
        // ‖f‖² = 1/2, seminorm² = λ^{1/2}·1/2
        let lam = g.laplacian_symbol([3, 0, 0]);
        let got = h_half_seminorm_sq(&f);
        assert!((got - 0.5 * lam.sqrt()).abs() < 1e-10);
        let hb = flat_hb_norm_sq(&f, 0.0);
        assert!((hb - 0.5).abs() < 1e-12);
    }
}
