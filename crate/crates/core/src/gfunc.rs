//! The Gaussian conditional wavefunction of the environment, its overlap
//! kernel `K`, the g-function family
//!
//! ```text
//! g_(n,m)(tau) = int dq conj(d^n phi / dtau^n) d^m phi / dtau^m
//! ```
//!
//! and checks of the identities relating them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField1D;
use crate::scenario::GridSpec1D;
use crate::spectral::Spectral1D;

/// Largest order `n + m` supported by [`compute_g_table`].
pub const MAX_ORDER: usize = 4;

/// Sampler for
///
/// ```text
/// phi(q, tau) = (2 pi sigma^2)^(-1/4) exp(-q^2 / (4 sigma^2) + i q tau sqrt(gamma/hbar) / sigma - i c tau)
/// ```
///
/// where `c = gauge_slope` selects a gauge with `A = -hbar c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalSampler {
    pub sigma: f64,
    pub gamma: f64,
    pub hbar: f64,
    pub q_grid: GridSpec1D,
    pub gauge_slope: f64,
}

impl ConditionalSampler {
    pub fn new(sigma: f64, gamma: f64, hbar: f64, q_grid: GridSpec1D) -> Result<Self> {
        let cs = Self { sigma, gamma, hbar, q_grid, gauge_slope: 0.0 };
        cs.validate()?;
        Ok(cs)
    }

    /// A `q` grid of `n` points spanning ten widths each side.
    pub fn with_default_grid(sigma: f64, gamma: f64, hbar: f64, n: usize) -> Result<Self> {
        Self::new(sigma, gamma, hbar, GridSpec1D::new(n, 10.0 * sigma)?)
    }

    pub fn with_gauge_slope(mut self, c: f64) -> Self {
        self.gauge_slope = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: String| Err(Error::InvalidField { field, reason });
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma", format!("must be > 0, got {}", self.sigma));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("must be >= 0, got {}", self.gamma));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return bad("hbar", format!("must be > 0, got {}", self.hbar));
        }
        self.q_grid.validate("q grid")?;
        if self.q_grid.extent < 8.0 * self.sigma {
            return bad("q grid", format!("extent {} below 8 sigma = {}", self.q_grid.extent, 8.0 * self.sigma));
        }
        Ok(())
    }

    /// `sqrt(gamma / hbar) / sigma`.
    pub fn kappa(&self) -> f64 {
        (self.gamma / self.hbar).sqrt() / self.sigma
    }

    /// `d/dtau phi = i w(q) phi` with `w = q kappa - c`.
    fn frequencies(&self) -> Vec<f64> {
        let k = self.kappa();
        self.q_grid.coords().iter().map(|q| q * k - self.gauge_slope).collect()
    }

    /// `A = -hbar c`.
    pub fn gauge_field(&self) -> f64 {
        -self.hbar * self.gauge_slope
    }
}

/// `phi(q, tau)` on the sampler's `q` grid.
pub fn sample_phi(cs: &ConditionalSampler, tau: f64) -> Vec<Complex64> {
    let norm = (2.0 * std::f64::consts::PI * cs.sigma * cs.sigma).powf(-0.25);
    let s2 = 4.0 * cs.sigma * cs.sigma;
    cs.q_grid
        .coords()
        .iter()
        .zip(cs.frequencies())
        .map(|(q, w)| norm * Complex64::new(-q * q / s2, w * tau).exp())
        .collect()
}

fn overlap(a: &[Complex64], b: &[Complex64], dq: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dq
}

/// `K(tau, tau') = int conj(phi(q, tau')) phi(q, tau) dq`.
pub fn compute_k(cs: &ConditionalSampler, tau: f64, tau_prime: f64) -> Complex64 {
    overlap(&sample_phi(cs, tau_prime), &sample_phi(cs, tau), cs.q_grid.spacing())
}

/// `g_(n,m)` for `n + m <= n_max` over a `tau` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GFunctionTable {
    pub n_max: usize,
    pub tau_grid: GridSpec1D,
    /// `values[n][m]`, present for `n + m <= n_max`.
    values: Vec<Vec<Vec<Complex64>>>,
}

impl GFunctionTable {
    pub fn get(&self, n: usize, m: usize) -> &[Complex64] {
        &self.values[n][m]
    }
}

pub fn compute_g_table(cs: &ConditionalSampler, tau_grid: &GridSpec1D, n_max: usize) -> Result<GFunctionTable> {
    cs.validate()?;
    tau_grid.validate("tau grid")?;
    if n_max > MAX_ORDER {
        return Err(Error::InvalidField { field: "n_max", reason: format!("must be <= {MAX_ORDER}, got {n_max}") });
    }
    let dq = cs.q_grid.spacing();
    let w = cs.frequencies();
    let mut values: Vec<Vec<Vec<Complex64>>> =
        (0..=n_max).map(|n| vec![Vec::with_capacity(tau_grid.n_points); n_max - n + 1]).collect();
    for tau in tau_grid.coords() {
        let phi = sample_phi(cs, tau);
        // derivs[k] = (i w)^k phi
        let mut derivs = vec![phi];
        for k in 1..=n_max {
            let next = derivs[k - 1].iter().zip(&w).map(|(v, w)| v * Complex64::new(0.0, *w)).collect();
            derivs.push(next);
        }
        for n in 0..=n_max {
            for m in 0..=n_max - n {
                values[n][m].push(overlap(&derivs[n], &derivs[m], dq));
            }
        }
    }
    Ok(GFunctionTable { n_max, tau_grid: *tau_grid, values })
}

/// Largest violation of each identity over the `tau` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GIdentityReport {
    /// `|g_(0,0) - 1|`.
    pub normalization: f64,
    /// `|sum_k C(N,k) g_(N-k,k)|` for `N = 1..=n_max`.
    pub binomial: Vec<f64>,
    /// `|d g_(n,m) - g_(n+1,m) - g_(n,m+1)|` with a spectral derivative.
    pub recursion: f64,
    /// `|g_(m,n) - conj(g_(n,m))|`.
    pub conjugate_symmetry: f64,
    /// `|Im A|` with `A = -i hbar g_(0,1)`, in units of `hbar`.
    pub a_real: f64,
    /// `|Re g_(0,2) + g_(1,1)|`.
    pub second_order: f64,
    /// Whole table rebuilt from `g_(0,1..=N)` by the recursion.
    pub reconstruction: f64,
}

impl GIdentityReport {
    pub fn max(&self) -> f64 {
        self.binomial
            .iter()
            .copied()
            .chain([
                self.normalization,
                self.recursion,
                self.conjugate_symmetry,
                self.a_real,
                self.second_order,
                self.reconstruction,
            ])
            .fold(0.0, f64::max)
    }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn verify_g_identities(tbl: &GFunctionTable) -> Result<GIdentityReport> {
    let n_max = tbl.n_max;
    if n_max < 2 {
        return Err(Error::InvalidField { field: "n_max", reason: format!("need >= 2, got {n_max}") });
    }
    let len = tbl.tau_grid.n_points;
    let one = vec![Complex64::new(1.0, 0.0); len];
    let zero = vec![Complex64::new(0.0, 0.0); len];
    let mut sp = Spectral1D::new(&tbl.tau_grid);

    let binomial_sums = (1..=n_max)
        .map(|big_n| {
            let mut sum = zero.clone();
            for k in 0..=big_n {
                let c = binomial(big_n, k);
                sum.iter_mut().zip(tbl.get(big_n - k, k)).for_each(|(s, g)| *s += c * g);
            }
            max_diff(&sum, &zero)
        })
        .collect();

    let mut recursion: f64 = 0.0;
    let mut conjugate_symmetry: f64 = 0.0;
    for n in 0..=n_max {
        for m in 0..=n_max - n {
            let mirrored: Vec<Complex64> = tbl.get(m, n).iter().map(|v| v.conj()).collect();
            conjugate_symmetry = conjugate_symmetry.max(max_diff(tbl.get(n, m), &mirrored));
            if n + m < n_max {
                let d = sp.derivative(tbl.get(n, m), 1);
                let sum: Vec<Complex64> = tbl.get(n + 1, m).iter().zip(tbl.get(n, m + 1)).map(|(a, b)| a + b).collect();
                recursion = recursion.max(max_diff(&d, &sum));
            }
        }
    }

    let a_real = tbl.get(0, 1).iter().map(|g| g.re.abs()).fold(0.0, f64::max);
    let second_order = tbl
        .get(0, 2)
        .iter()
        .zip(tbl.get(1, 1))
        .map(|(g02, g11)| (Complex64::new(g02.re, 0.0) + g11).norm())
        .fold(0.0, f64::max);

    // g_(n,m) = d g_(n-1,m) - g_(n-1,m+1), seeded by row n = 0.
    let mut rebuilt: Vec<Vec<Vec<Complex64>>> = vec![(0..=n_max).map(|m| tbl.get(0, m).to_vec()).collect()];
    rebuilt[0][0] = one.clone();
    let mut reconstruction: f64 = 0.0;
    for n in 1..=n_max {
        let prev = &rebuilt[n - 1];
        let row: Vec<Vec<Complex64>> = (0..=n_max - n)
            .map(|m| {
                let d = sp.derivative(&prev[m], 1);
                d.iter().zip(&prev[m + 1]).map(|(a, b)| a - b).collect()
            })
            .collect();
        for (m, g) in row.iter().enumerate() {
            reconstruction = reconstruction.max(max_diff(g, tbl.get(n, m)));
        }
        rebuilt.push(row);
    }

    Ok(GIdentityReport {
        normalization: max_diff(tbl.get(0, 0), &one),
        binomial: binomial_sums,
        recursion,
        conjugate_symmetry,
        a_real,
        second_order,
        reconstruction,
    })
}

/// `|dK/dy - (i/hbar) A|` at `y = 0`, `z = 2 tau`, with `dK/dy` from a
/// fourth-order centered difference.
pub fn a_from_k_residual(cs: &ConditionalSampler, tau: f64) -> f64 {
    let h = 1e-3;
    let k = |y: f64| compute_k(cs, tau + 0.5 * y, tau - 0.5 * y);
    let dk = (8.0 * (k(h) - k(-h)) - (k(2.0 * h) - k(-2.0 * h))) / (12.0 * h);
    let a = -Complex64::i() * cs.hbar * overlap(&sample_phi(cs, tau), &derivative_phi(cs, tau), cs.q_grid.spacing());
    (dk - Complex64::i() / cs.hbar * a).norm()
}

fn derivative_phi(cs: &ConditionalSampler, tau: f64) -> Vec<Complex64> {
    sample_phi(cs, tau).iter().zip(cs.frequencies()).map(|(v, w)| v * Complex64::new(0.0, w)).collect()
}

/// Log-log slope of `|K(tau0 + y, tau0) - sum_{n<=2} g_(0,n)(tau0) y^n / n!|`
/// fitted over `y` log-spaced in `[1e-3, 1e-1]`.
pub fn k_taylor_power(cs: &ConditionalSampler, tau0: f64) -> Result<f64> {
    let tau_grid = GridSpec1D::new(8, 1.0)?;
    let tbl = compute_g_table(cs, &tau_grid, 2)?;
    // g's of the boltz family do not depend on tau, so any grid point serves.
    let g: Vec<Complex64> = (0..=2).map(|n| tbl.get(0, n)[0]).collect();
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let y = 10f64.powf(-3.0 + 2.0 * i as f64 / 20.0);
            let series = g[0] + g[1] * y + g[2] * y * y / 2.0;
            let r = (compute_k(cs, tau0 + y, tau0) - series).norm();
            (y.ln(), r.ln())
        })
        .collect();
    Ok(slope(&pts))
}

/// Least-squares slope of `(x, v)` pairs.
pub fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, v)| (x - mx) * (v - mv)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeReport {
    /// `max |a' phi' - a phi|` over the `(tau, q)` grid.
    pub psi_invariance: f64,
    /// `A(tau)` before the transformation.
    pub a_before: Vec<f64>,
    /// `A'(tau) = -i hbar g'_(0,1)`, from a sixth-order difference of `phi'` in `tau`.
    pub a_after: Vec<f64>,
    /// `max |A' - (A - hbar dtheta/dtau)|` over interior points.
    pub shift_residual: f64,
}

const FD6: [f64; 3] = [45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0];

fn fd6<T>(v: &[T], i: usize, h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let mut acc = (v[i + 1] - v[i - 1]) * FD6[0];
    acc = acc + (v[i + 2] - v[i - 2]) * FD6[1];
    acc = acc + (v[i + 3] - v[i - 3]) * FD6[2];
    acc * (1.0 / h)
}

/// `a' = a e^{i theta}` with `phi' = phi e^{-i theta}`. The derivative checks
/// skip three points at each end of the `tau` grid.
pub fn gauge_transform(
    a: &ComplexField1D,
    cs: &ConditionalSampler,
    theta: &[f64],
) -> Result<(ComplexField1D, GaugeReport)> {
    let n = a.values.len();
    if theta.len() != n {
        return Err(Error::InvalidField { field: "theta", reason: format!("length {} differs from grid {n}", theta.len()) });
    }
    if n < 7 {
        return Err(Error::InsufficientSamples { needed: 7, got: n });
    }
    let taus = a.grid.coords();
    let h = a.grid.spacing();
    let dq = cs.q_grid.spacing();
    let rot: Vec<Complex64> = theta.iter().map(|&th| Complex64::from_polar(1.0, th)).collect();
    let mut a_new = a.clone();
    a_new.values.iter_mut().zip(&rot).for_each(|(v, r)| *v *= r);

    let phi: Vec<Vec<Complex64>> = taus.iter().map(|&t| sample_phi(cs, t)).collect();
    let phi_new: Vec<Vec<Complex64>> =
        phi.iter().zip(&rot).map(|(row, r)| row.iter().map(|v| v * r.conj()).collect()).collect();

    let mut psi_invariance: f64 = 0.0;
    for i in 0..n {
        for (p, p_new) in phi[i].iter().zip(&phi_new[i]) {
            psi_invariance = psi_invariance.max((a_new.values[i] * p_new - a.values[i] * p).norm());
        }
    }

    let a_before: Vec<f64> = taus
        .iter()
        .map(|&t| (-Complex64::i() * cs.hbar * overlap(&sample_phi(cs, t), &derivative_phi(cs, t), dq)).re)
        .collect();
    let nq = cs.q_grid.n_points;
    let mut a_after = vec![f64::NAN; n];
    let mut shift_residual: f64 = 0.0;
    for i in 3..n - 3 {
        let d: Vec<Complex64> = (0..nq)
            .map(|iq| {
                let col: Vec<Complex64> = (i - 3..=i + 3).map(|j| phi_new[j][iq]).collect();
                fd6(&col, 3, h)
            })
            .collect();
        let g01 = overlap(&phi_new[i], &d, dq);
        a_after[i] = (-Complex64::i() * cs.hbar * g01).re;
        let expect = a_before[i] - cs.hbar * fd6(theta, i, h);
        shift_residual = shift_residual.max((a_after[i] - expect).abs());
    }

    Ok((a_new, GaugeReport { psi_invariance, a_before, a_after, shift_residual }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(sigma: f64, gamma: f64) -> ConditionalSampler {
        ConditionalSampler::with_default_grid(sigma, gamma, 1.0, 256).unwrap()
    }

    fn tau_grid() -> GridSpec1D {
        GridSpec1D::new(32, 4.0).unwrap()
    }

    #[test]
    fn phi_is_normalized_with_tau_independent_modulus() {
        let cs = sampler(1.3, 0.7);
        let dq = cs.q_grid.spacing();
        let p0 = sample_phi(&cs, 0.0);
        assert!(p0.iter().all(|v| v.im == 0.0 && v.re > 0.0));
        for tau in [0.0, 0.4, -2.0] {
            let p = sample_phi(&cs, tau);
            assert!((overlap(&p, &p, dq).re - 1.0).abs() < 1e-10);
            for (a, b) in p.iter().zip(&p0) {
                assert!((a.norm() - b.norm()).abs() < 1e-15);
            }
        }
        let free = sampler(1.0, 0.0);
        assert_eq!(sample_phi(&free, 3.0), sample_phi(&free, 0.0));
    }

    #[test]
    fn overlap_kernel_values() {
        let cs = sampler(1.0, 1.0);
        assert!((compute_k(&cs, 0.3, 0.3) - 1.0).norm() < 1e-10);
        assert!((compute_k(&cs, 1.0, 0.0) - (-0.5f64).exp()).norm() < 1e-10);
        assert!((compute_k(&cs, 1.0, 0.0).re - 0.60653).abs() < 1e-5);
        let tilted = cs.with_gauge_slope(0.4);
        for (t, tp) in [(0.2, -1.1), (2.0, 0.5)] {
            let k = compute_k(&tilted, t, tp);
            assert!(k.norm() <= 1.0 + 1e-12);
            assert_eq!(k, compute_k(&tilted, tp, t).conj());
        }
    }

    #[test]
    fn low_order_g_functions() {
        let tbl = compute_g_table(&sampler(1.0, 1.0), &tau_grid(), 4).unwrap();
        for tau_i in 0..tbl.tau_grid.n_points {
            assert!((tbl.get(0, 0)[tau_i] - 1.0).norm() < 1e-10);
            assert!(tbl.get(0, 1)[tau_i].norm() < 1e-10);
            assert!((tbl.get(0, 2)[tau_i] + 1.0).norm() < 1e-10);
            assert!((tbl.get(1, 1)[tau_i] - 1.0).norm() < 1e-10);
        }
        // g_(0,2) = -gamma/hbar for any width.
        let tbl = compute_g_table(&sampler(0.4, 2.5), &tau_grid(), 2).unwrap();
        assert!((tbl.get(0, 2)[5] + 2.5).norm() < 1e-10);
        assert!(compute_g_table(&sampler(1.0, 1.0), &tau_grid(), 5).is_err());
    }

    #[test]
    fn identities_hold() {
        for (sigma, gamma, c) in [(1.0, 1.0, 0.0), (0.5, 3.0, 0.7), (2.0, 0.2, -1.5)] {
            let cs = sampler(sigma, gamma).with_gauge_slope(c);
            let tbl = compute_g_table(&cs, &tau_grid(), 4).unwrap();
            let report = verify_g_identities(&tbl).unwrap();
            assert_eq!(report.binomial.len(), 4);
            assert!(report.max() < 1e-8, "{report:?}");
            assert!(report.conjugate_symmetry < 1e-10);
            assert!(a_from_k_residual(&cs, 0.3) < 1e-8);
        }
    }

    #[test]
    fn no_decoherence_kills_higher_g() {
        let tbl = compute_g_table(&sampler(1.0, 0.0), &tau_grid(), 4).unwrap();
        for n in 0..=4 {
            for m in 0..=4 - n {
                if n + m > 0 {
                    assert!(tbl.get(n, m).iter().all(|g| g.norm() == 0.0));
                }
            }
        }
    }

    #[test]
    fn taylor_remainder_is_third_order() {
        assert!(k_taylor_power(&sampler(1.0, 1.0), 0.2).unwrap() >= 2.9);
        let p = k_taylor_power(&sampler(1.0, 1.0).with_gauge_slope(0.5), 0.2).unwrap();
        assert!((p - 3.0).abs() < 0.1, "{p}");
    }

    #[test]
    fn gauge_transformations() {
        let cs = sampler(1.0, 1.0);
        // Phase ramps up to q kappa ~ 5 per unit tau need h ~ 0.02 for the difference stencil.
        let grid = GridSpec1D::new(256, 2.56).unwrap();
        let a = ComplexField1D::from_fn(grid, 0.0, |tau| Complex64::new(-0.25 * tau * tau, 0.0).exp());

        let constant = vec![0.8; 256];
        let (a1, r1) = gauge_transform(&a, &cs, &constant).unwrap();
        assert!(r1.shift_residual < 1e-10);
        assert!((a1.values[10] / a.values[10] - Complex64::from_polar(1.0, 0.8)).norm() < 1e-14);

        let c = 0.6;
        let linear: Vec<f64> = grid.coords().iter().map(|t| c * t).collect();
        let (_, r2) = gauge_transform(&a, &cs, &linear).unwrap();
        for i in 3..253 {
            assert!((r2.a_after[i] - (r2.a_before[i] - c)).abs() < 1e-8);
        }

        let wavy: Vec<f64> = grid.coords().iter().map(|t| (0.7 * t).sin() + 0.1 * t * t).collect();
        let (_, r3) = gauge_transform(&a, &cs, &wavy).unwrap();
        assert!(r3.psi_invariance < 1e-12);
        assert!(r3.shift_residual < 1e-6, "{}", r3.shift_residual);
    }
}
