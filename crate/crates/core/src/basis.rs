//! Orthonormal bases of L²([0,1], r^{d-1} dr).
//!
//! The radial eigenfunctions of the Laplacian on the unit ball are
//!
//! ```text
//! e_{n,d}(r) = β_n^{-1} r^{-ν} J_ν(z_n r) = β_n^{-1} z_n^{ν} G(z_n r),   ν = (d-2)/2,
//! ```
//!
//! with z_n the n-th zero of J_ν and β_n² = ∫_0^1 J_ν(z_n r)² r dr. They are
//! always evaluated through the regular kernel G, never through the
//! r^{-ν} J_ν form, which is 0/0 at the origin.
//!
//! The constant-modulus basis stands in for the torus exponentials: only
//! |e_n| ≡ 1 enters any quantity computed here.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::{composite_rule, gauss_legendre, QuadratureGrid};
use crate::specfun::{bessel_zeros, BesselKernel, BesselOrder, ZeroFinder, ZeroTable};

#[derive(Clone, Debug)]
pub struct RadialBasis {
    d: usize,
    kernel: BesselKernel,
    zeros: ZeroTable,
    normalizers: Vec<f64>,
}

/// Builds e_{1,d} … e_{n_max,d}, computing β_n by quadrature on `grid`.
///
/// The grid carries the weight r^{d-1}; since
/// J_ν(z r)² r = (z^ν G(z r))² r^{d-1}, the integral defining β_n is
/// evaluated as z_n^{2ν} Σ w_i G(z_n r_i)². A unit ⟨e_n, e_n⟩ in the
/// r^{d-1} dr inner product then follows.
pub fn build_radial_basis(d: usize, n_max: usize, grid: &QuadratureGrid) -> Result<RadialBasis> {
    if grid.dimension() != d {
        return Err(Error::InvalidArgument(format!(
            "grid built for d = {} used with d = {d}",
            grid.dimension()
        )));
    }
    let order = BesselOrder::from_dimension(d)?;
    let zeros = bessel_zeros(order, n_max)?;
    grid.check_resolves(n_max, zeros.get(n_max)?)?;
    let kernel = BesselKernel::new(order);
    let nu = order.value();
    let normalizers = zeros
        .as_slice()
        .par_iter()
        .map(|&z| {
            let s: f64 = grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .map(|(r, w)| {
                    let g = kernel.g(z * r);
                    w * g * g
                })
                .sum();
            (z.powf(2.0 * nu) * s).sqrt()
        })
        .collect();
    Ok(RadialBasis {
        d,
        kernel,
        zeros,
        normalizers,
    })
}

impl RadialBasis {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.zeros.n_max()
    }

    pub fn zeros(&self) -> &ZeroTable {
        &self.zeros
    }

    pub fn kernel(&self) -> &BesselKernel {
        &self.kernel
    }

    pub fn normalizers(&self) -> &[f64] {
        &self.normalizers
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_max() {
            return Err(Error::IndexOutOfRange {
                index: n,
                max: self.n_max(),
            });
        }
        Ok(())
    }

    pub fn zero(&self, n: usize) -> Result<f64> {
        self.zeros.get(n)
    }

    pub fn beta(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(self.normalizers[n - 1])
    }

    /// β_n^{-1} z_n^ν, the factor in front of G(z_n r).
    #[inline]
    pub fn amplitude_unchecked(&self, n: usize) -> f64 {
        let z = self.zeros.as_slice()[n - 1];
        z.powf(self.kernel.order().value()) / self.normalizers[n - 1]
    }

    #[inline]
    pub fn eval_unchecked(&self, n: usize, r: f64) -> f64 {
        let z = self.zeros.as_slice()[n - 1];
        self.amplitude_unchecked(n) * self.kernel.g(z * r)
    }

    /// e_{n,d}(r).
    pub fn eval(&self, n: usize, r: f64) -> Result<f64> {
        self.check_index(n)?;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidArgument(format!("r = {r} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(n, r))
    }

    /// e_n sampled at the grid nodes.
    pub fn sample(&self, n: usize, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        self.check_index(n)?;
        grid.check_resolves(n, self.zeros.get(n)?)?;
        let amp = self.amplitude_unchecked(n);
        let z = self.zeros.as_slice()[n - 1];
        Ok(grid.nodes().iter().map(|r| amp * self.kernel.g(z * r)).collect())
    }

    /// ⟨e_m, e_n⟩ in L²(r^{d-1} dr).
    pub fn inner_product(&self, m: usize, n: usize, grid: &QuadratureGrid) -> Result<f64> {
        let a = self.sample(m, grid)?;
        let b = self.sample(n, grid)?;
        Ok(grid
            .weights()
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(w, (x, y))| w * x * y)
            .sum())
    }

    /// ‖e_n‖_{L^p(r^{d-1} dr)}.
    pub fn lp_norm(&self, n: usize, p: f64, grid: &QuadratureGrid) -> Result<f64> {
        if grid.dimension() != self.d {
            return Err(Error::InvalidArgument("grid dimension mismatch".into()));
        }
        let abs: Vec<f64> = self.sample(n, grid)?.into_iter().map(f64::abs).collect();
        grid.lp_norm(&abs, p)
    }

    /// sup_r |e_n(r)| over the grid nodes and the origin.
    pub fn sup_norm(&self, n: usize, grid: &QuadratureGrid) -> Result<f64> {
        let at_origin = self.eval(n, 0.0)?.abs();
        Ok(self
            .sample(n, grid)?
            .into_iter()
            .fold(at_origin, |m, v| m.max(v.abs())))
    }

    /// Replaces the normalizer table, e.g. with one read back from disk.
    pub fn with_normalizers(mut self, normalizers: Vec<f64>) -> Result<Self> {
        if normalizers.len() != self.n_max() {
            return Err(Error::InvalidArgument(format!(
                "{} normalizers for {} modes",
                normalizers.len(),
                self.n_max()
            )));
        }
        if normalizers.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument("normalizers must be positive".into()));
        }
        self.normalizers = normalizers;
        Ok(self)
    }

    /// CSV rows `n,z_n,beta_n,sup_norm,lp_norm@p…` for modes 1..=n.
    pub fn to_csv(&self, n: usize, ps: &[f64], grid: &QuadratureGrid) -> Result<String> {
        let mut out = String::from("n,z_n,beta_n,sup_norm");
        for p in ps {
            let _ = write!(out, ",lp_norm@{p}");
        }
        out.push('\n');
        for k in 1..=n {
            let _ = write!(
                out,
                "{},{:.16e},{:.16e},{:.16e}",
                k,
                self.zero(k)?,
                self.beta(k)?,
                self.sup_norm(k, grid)?
            );
            for &p in ps {
                let _ = write!(out, ",{:.16e}", self.lp_norm(k, p, grid)?);
            }
            out.push('\n');
        }
        Ok(out)
    }
}

pub fn eval_e(basis: &RadialBasis, n: usize, r: f64) -> Result<f64> {
    basis.eval(n, r)
}

pub fn lp_norm_of_e(basis: &RadialBasis, n: usize, p: f64, grid: &QuadratureGrid) -> Result<f64> {
    basis.lp_norm(n, p, grid)
}

/// |e_n| ≡ 1 under a probability measure.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConstantModulusBasis;

impl ConstantModulusBasis {
    pub const MODULUS: f64 = 1.0;

    /// Mass of the reference measure.
    pub const MASS: f64 = 1.0;

    pub fn modulus(&self, _n: usize, _r: f64) -> f64 {
        Self::MODULUS
    }

    /// ‖e_n‖_p, the same for every n and p.
    pub fn lp_norm(&self, _n: usize, p: f64) -> f64 {
        Self::MODULUS * Self::MASS.powf(1.0 / p)
    }
}

/// The three-regime bound δ(n, p, d) on ‖e_{n,d}‖_{L^p}: 1 below the
/// threshold 2d/(d−1), (log(2+n))^{(d−1)/(2d)} at it, and
/// n^{−d/p + (d−1)/2} above it.
pub fn delta_bound(n: usize, p: f64, d: usize) -> f64 {
    let df = d as f64;
    if d <= 1 {
        return 1.0;
    }
    let threshold = 2.0 * df / (df - 1.0);
    let nf = n as f64;
    if (p - threshold).abs() <= 1e-12 * threshold {
        (2.0 + nf).ln().powf((df - 1.0) / (2.0 * df))
    } else if p < threshold {
        1.0
    } else {
        nf.powf(-df / p + (df - 1.0) / 2.0)
    }
}

/// The largest s with |G(t)| ≥ G(0)/2 on all of [0, s]. Modes satisfy
/// |e_n(r)| ≥ (G(0)/2) β_n^{-1} z_n^ν whenever z_n r ≤ s.
pub fn concentration_radius(basis: &RadialBasis) -> f64 {
    half_height_radius(basis.kernel())
}

pub(crate) fn half_height_radius(kernel: &BesselKernel) -> f64 {
    let half = 0.5 * kernel.g_at_zero();
    let step = 1e-3;
    let mut t = 0.0;
    while kernel.g(t + step).abs() >= half {
        t += step;
    }
    let (mut lo, mut hi) = (t, t + step);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kernel.g(mid).abs() >= half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    lo
}

/// β_n and ‖e_n‖_p for every n ≤ n_max in one sweep.
///
/// With t = z_n r,
///
/// ```text
/// ‖e_n‖_p^p = β_n^{-p} z_n^{νp − d} ∫_0^{z_n} |G(t)|^p t^{d-1} dt,
/// β_n²      = z_n^{-2}          ∫_0^{z_n} G(t)² t^{d-1} dt,
/// ```
///
/// and the integrals up to z_n are running sums of integrals over the
/// segments between consecutive zeros of G. Each segment gets four
/// Gauss–Legendre panels, matching the π/(4z) rule of [`crate::quad`].
/// This is a second route to the same numbers as [`RadialBasis::lp_norm`].
#[derive(Clone, Debug)]
pub struct ModeNormTable {
    d: usize,
    ps: Vec<f64>,
    zeros: Vec<f64>,
    betas: Vec<f64>,
    norms: Vec<Vec<f64>>,
}

pub fn mode_norm_table(d: usize, n_max: usize, ps: &[f64], points_per_panel: usize) -> Result<ModeNormTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let mut sweep = NormSweep::new(d, ps, points_per_panel)?;
    let rows = sweep.advance(n_max)?;
    let mut zeros = Vec::with_capacity(n_max);
    let mut betas = Vec::with_capacity(n_max);
    let mut norms = vec![Vec::with_capacity(n_max); ps.len()];
    for row in rows {
        zeros.push(row.zero);
        betas.push(row.beta);
        for (col, v) in norms.iter_mut().zip(row.norms) {
            col.push(v);
        }
    }
    Ok(ModeNormTable {
        d,
        ps: ps.to_vec(),
        zeros,
        betas,
        norms,
    })
}

/// ‖e_{n,d}‖_p by composite Gauss–Legendre on [0, 1] at the π/(4 z_n)
/// panel width, without building the modes below n. Panels are generated
/// on the fly, so n in the millions needs no grid storage.
pub fn mode_lp_norm(d: usize, n: usize, p: f64, points_per_panel: usize) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p = {p} must be finite and >= 1")));
    }
    if points_per_panel < crate::quad::MIN_POINTS_PER_PANEL {
        return Err(Error::InvalidArgument(format!(
            "points_per_panel = {points_per_panel} is below the minimum"
        )));
    }
    let order = BesselOrder::from_dimension(d)?;
    let z = ZeroFinder::new(order).zero(n)?;
    let kernel = BesselKernel::new(order);
    let reference = gauss_legendre(points_per_panel);
    let panels = (4.0 * z.max(std::f64::consts::PI) / std::f64::consts::PI).ceil() as usize;
    let power = (d - 1) as i32;
    let width = 1.0 / panels as f64;
    let (l2, lp) = (0..panels)
        .into_par_iter()
        .map(|k| {
            let mut acc = (0.0, 0.0);
            let a = k as f64 * width;
            for (r, w) in composite_rule(a, a + width, 1, &reference) {
                let g = kernel.g(z * r).abs();
                let wt = w * r.powi(power);
                acc.0 += wt * g * g;
                acc.1 += wt * g.powf(p);
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    // e_n = G(z r) / ‖G(z ·)‖_2, so the amplitude cancels.
    Ok(lp.powf(1.0 / p) / l2.sqrt())
}

/// One mode of a [`NormSweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub zero: f64,
    pub beta: f64,
    pub norms: Vec<f64>,
}

/// The cumulative sweep behind [`mode_norm_table`], resumable so that a
/// search can extend it until it finds what it needs.
pub struct NormSweep {
    d: usize,
    nu: f64,
    ps: Vec<f64>,
    kernel: BesselKernel,
    finder: ZeroFinder,
    reference: (Vec<f64>, Vec<f64>),
    running: Vec<f64>,
    n: usize,
    last_zero: f64,
}

impl NormSweep {
    pub fn new(d: usize, ps: &[f64], points_per_panel: usize) -> Result<Self> {
        if let Some(p) = ps.iter().find(|p| !(**p >= 1.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p = {p} must be finite and >= 1")));
        }
        let order = BesselOrder::from_dimension(d)?;
        Ok(NormSweep {
            d,
            nu: order.value(),
            ps: ps.to_vec(),
            kernel: BesselKernel::new(order),
            finder: ZeroFinder::new(order),
            reference: gauss_legendre(points_per_panel.max(crate::quad::MIN_POINTS_PER_PANEL)),
            running: vec![0.0; 1 + ps.len()],
            n: 0,
            last_zero: 0.0,
        })
    }

    /// Modes processed so far.
    pub fn position(&self) -> usize {
        self.n
    }

    /// Rows for the next `count` modes.
    pub fn advance(&mut self, count: usize) -> Result<Vec<SweepRow>> {
        let first = self.n + 1;
        let zeros = (first..first + count)
            .into_par_iter()
            .map(|n| self.finder.zero(n))
            .collect::<Result<Vec<f64>>>()?;
        let mut prev = self.last_zero;
        for (k, z) in zeros.iter().enumerate() {
            if *z <= prev {
                return Err(Error::ZeroBracket {
                    nu: self.nu,
                    index: first + k,
                    lo: prev,
                    hi: *z,
                });
            }
            prev = *z;
        }
        let power = (self.d - 1) as i32;
        let start = self.last_zero;
        // Segment integrals: [∫ G² t^{d-1}, ∫ |G|^{p_1} t^{d-1}, …].
        let segments: Vec<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|k| {
                let a = if k == 0 { start } else { zeros[k - 1] };
                let b = zeros[k];
                let mut acc = vec![0.0; 1 + self.ps.len()];
                for (t, w) in composite_rule(a, b, 4, &self.reference) {
                    let g = self.kernel.g(t).abs();
                    let wt = w * t.powi(power);
                    acc[0] += wt * g * g;
                    for (slot, p) in acc[1..].iter_mut().zip(&self.ps) {
                        *slot += wt * g.powf(*p);
                    }
                }
                acc
            })
            .collect();

        let mut rows = Vec::with_capacity(count);
        for (k, seg) in segments.iter().enumerate() {
            for (r, s) in self.running.iter_mut().zip(seg) {
                *r += s;
            }
            let z = zeros[k];
            let beta = self.running[0].sqrt() / z;
            let norms = self
                .ps
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let pth = beta.powf(-p) * z.powf(self.nu * p - self.d as f64) * self.running[1 + j];
                    pth.powf(1.0 / p)
                })
                .collect();
            rows.push(SweepRow {
                n: first + k,
                zero: z,
                beta,
                norms,
            });
        }
        self.n += count;
        self.last_zero = prev;
        Ok(rows)
    }
}

impl ModeNormTable {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.zeros.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.ps
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// ‖e_n‖_p for n = 1..=n_max, for the j-th requested exponent.
    pub fn norms(&self, j: usize) -> &[f64] {
        &self.norms[j]
    }

    pub fn norm(&self, n: usize, p: f64) -> Option<f64> {
        let j = self.ps.iter().position(|q| *q == p)?;
        self.norms[j].get(n.checked_sub(1)?).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::build_grid;
    use crate::specfun::bessel_j;
    use std::f64::consts::PI;

    fn basis(d: usize, n_max: usize) -> (RadialBasis, QuadratureGrid) {
        let z = bessel_zeros(BesselOrder::from_dimension(d).unwrap(), n_max).unwrap();
        let grid = build_grid(d, z.get(n_max).unwrap(), 8).unwrap();
        (build_radial_basis(d, n_max, &grid).unwrap(), grid)
    }

    #[test]
    fn single_mode_norm_matches_basis() {
        let (b, grid) = basis(3, 40);
        for n in [1, 17, 40] {
            let direct = mode_lp_norm(3, n, 5.0, 8).unwrap();
            let via_basis = b.lp_norm(n, 5.0, &grid).unwrap();
            assert!((direct - via_basis).abs() <= 1e-9 * via_basis, "n = {n}");
        }
    }

    #[test]
    fn chunked_sweep_matches_one_shot() {
        let mut chunked = NormSweep::new(2, &[3.0, 6.0], 8).unwrap();
        let mut rows = chunked.advance(50).unwrap();
        rows.extend(chunked.advance(77).unwrap());
        let whole = NormSweep::new(2, &[3.0, 6.0], 8).unwrap().advance(127).unwrap();
        assert_eq!(rows, whole);
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn beta_first_mode_disc() {
        let (b, _) = basis(2, 5);
        let z1 = b.zero(1).unwrap();
        let nu0 = BesselOrder::new(0.0).unwrap();
        // Composite Simpson on the defining integral ∫ J_0(z r)² r dr.
        let oracle = simpson(|r| bessel_j(nu0, z1 * r).unwrap().powi(2) * r, 0.0, 1.0, 4000).sqrt();
        let closed = bessel_j(BesselOrder::new(1.0).unwrap(), z1).unwrap().abs() / 2f64.sqrt();
        assert!((oracle - closed).abs() < 1e-12);
        assert!((b.beta(1).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn beta_matches_closed_form_and_asymptote() {
        let (b, _) = basis(2, 200);
        let nu1 = BesselOrder::new(1.0).unwrap();
        for n in [1, 7, 50, 200] {
            let z = b.zero(n).unwrap();
            let closed = bessel_j(nu1, z).unwrap().abs() / 2f64.sqrt();
            assert!((b.beta(n).unwrap() - closed).abs() <= 1e-10 * closed.max(1.0));
        }
        let z = b.zero(200).unwrap();
        let scaled = b.beta(200).unwrap() * (PI * z).sqrt();
        assert!((scaled - 1.0).abs() <= 0.02);
    }

    #[test]
    fn unit_norm_first_mode_all_dimensions() {
        for d in 1..=5 {
            let (b, grid) = basis(d, 3);
            let ip = b.inner_product(1, 1, &grid).unwrap();
            assert!((ip - 1.0).abs() <= 1e-6, "d = {d}");
        }
    }

    #[test]
    fn orthonormal_up_to_thirty() {
        for d in 2..=4 {
            let (b, grid) = basis(d, 30);
            let samples: Vec<Vec<f64>> = (1..=30).map(|n| b.sample(n, &grid).unwrap()).collect();
            for m in 0..30 {
                for n in 0..30 {
                    let ip: f64 = grid
                        .weights()
                        .iter()
                        .zip(samples[m].iter().zip(&samples[n]))
                        .map(|(w, (x, y))| w * x * y)
                        .sum();
                    let target = if m == n { 1.0 } else { 0.0 };
                    assert!((ip - target).abs() <= 1e-6, "d = {d}, ({m}, {n}): {ip}");
                }
            }
        }
    }

    #[test]
    fn origin_value_and_interior_zeros() {
        let (b, _) = basis(2, 12);
        for n in 1..=12 {
            let at0 = b.eval(n, 0.0).unwrap();
            assert!((at0 - 1.0 / b.beta(n).unwrap()).abs() < 1e-12 * at0);
        }
        for d in 2..=4 {
            let (b, _) = basis(d, 12);
            let n = 12;
            let scale = b.eval(n, 0.0).unwrap().abs();
            for m in 1..n {
                let r = b.zero(m).unwrap() / b.zero(n).unwrap();
                assert!(b.eval(n, r).unwrap().abs() <= 1e-8 * scale, "d = {d}, m = {m}");
            }
            assert!(b.eval(n, 1.0).unwrap().abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn half_integer_closed_form() {
        let (b, _) = basis(3, 5);
        let z = b.zero(5).unwrap();
        let r = 0.3;
        let j_half = (2.0 / (PI * z * r)).sqrt() * (z * r).sin();
        let expected = j_half / (b.beta(5).unwrap() * r.sqrt());
        assert!((b.eval(5, r).unwrap() - expected).abs() <= 1e-8);
    }

    #[test]
    fn eval_errors() {
        let (b, _) = basis(2, 4);
        assert!(matches!(b.eval(0, 0.5), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(b.eval(5, 0.5), Err(Error::IndexOutOfRange { .. })));
        assert!(b.eval(1, 1.5).is_err());
    }

    #[test]
    fn build_refuses_coarse_grid() {
        let grid = build_grid(2, 10.0, 8).unwrap();
        assert!(matches!(build_radial_basis(2, 20, &grid), Err(Error::Resolution { .. })));
        let (b, _) = basis(2, 20);
        assert!(matches!(b.lp_norm(20, 4.0, &grid), Err(Error::Resolution { .. })));
    }

    #[test]
    fn l2_norms_are_one() {
        let (b, grid) = basis(3, 40);
        for n in [1, 10, 40] {
            assert!((b.lp_norm(n, 2.0, &grid).unwrap() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn refinement_stability() {
        let (b, grid) = basis(2, 40);
        let z = b.zero(40).unwrap();
        let fine = build_grid(2, z, 16).unwrap();
        for n in [1, 13, 40] {
            for p in [3.0, 6.0] {
                let coarse = b.lp_norm(n, p, &grid).unwrap();
                let refined = b.lp_norm(n, p, &fine).unwrap();
                assert!((coarse - refined).abs() <= 1e-7 * refined);
            }
        }
    }

    #[test]
    fn delta_cases() {
        assert_eq!(delta_bound(7, 2.0, 3), 1.0);
        assert!((delta_bound(5, 3.0, 3) - 7f64.ln().powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((delta_bound(100, 6.0, 2) - 100f64.powf(1.0 / 6.0)).abs() < 1e-12);
        assert_eq!(delta_bound(100, 50.0, 1), 1.0);
    }

    #[test]
    fn concentration_radius_disc() {
        let (b, _) = basis(2, 2);
        let s = concentration_radius(&b);
        // Bisection on J_0(s) − 1/2 over (1, 2).
        let nu0 = BesselOrder::new(0.0).unwrap();
        let (mut lo, mut hi) = (1.0, 2.0);
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if bessel_j(nu0, m).unwrap() > 0.5 {
                lo = m
            } else {
                hi = m
            }
        }
        assert!((s - lo).abs() < 1e-9);
        assert!((s - 1.52).abs() < 0.01);
        for d in 2..=5 {
            let (b, _) = basis(d, 2);
            let s = concentration_radius(&b);
            let g0 = b.kernel().g_at_zero();
            assert!((b.kernel().g(s) - g0 / 2.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn concentration_lower_bound_scales_like_n() {
        let (b, _) = basis(3, 100);
        let s = concentration_radius(&b);
        let mut ratios = Vec::new();
        for n in (10..=100).step_by(10) {
            let z = b.zero(n).unwrap();
            let r_max = s / z;
            let min = (0..=200)
                .map(|i| b.eval(n, r_max * i as f64 / 200.0).unwrap().abs())
                .fold(f64::INFINITY, f64::min);
            let guaranteed = 0.5 * b.kernel().g_at_zero() * b.amplitude_unchecked(n);
            assert!(min >= guaranteed * (1.0 - 1e-9));
            ratios.push(min / n as f64);
        }
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(hi / lo <= 2.0);
    }

    #[test]
    fn constant_modulus_norms() {
        let c = ConstantModulusBasis;
        for n in [1, 10, 1000] {
            assert_eq!(c.modulus(n, 0.3), 1.0);
            for p in [1.0, 4.0, 20.0] {
                assert_eq!(c.lp_norm(n, p), 1.0);
            }
        }
    }

    #[test]
    fn sweep_agrees_with_grid_route() {
        for d in 2..=4 {
            let (b, grid) = basis(d, 60);
            let table = mode_norm_table(d, 60, &[2.0, 3.0, 6.0, 8.0], 8).unwrap();
            for n in [1, 2, 17, 60] {
                let beta = table.betas()[n - 1];
                assert!((beta - b.beta(n).unwrap()).abs() <= 1e-10 * beta);
                assert!((table.norm(n, 2.0).unwrap() - 1.0).abs() < 1e-10);
                for p in [3.0, 6.0, 8.0] {
                    let sweep = table.norm(n, p).unwrap();
                    let direct = b.lp_norm(n, p, &grid).unwrap();
                    assert!((sweep - direct).abs() <= 1e-7 * direct, "d = {d}, n = {n}, p = {p}");
                }
            }
        }
    }

    #[test]
    fn csv_dump_columns() {
        let (b, grid) = basis(3, 4);
        let csv = b.to_csv(4, &[2.0, 6.0], &grid).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,z_n,beta_n,sup_norm,lp_norm@2,lp_norm@6"));
        for line in lines {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert!((cols[4] - 1.0).abs() <= 1e-6);
        }
    }
}
