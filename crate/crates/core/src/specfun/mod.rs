//! Gamma, Bessel J_ν, the regularized kernel G(s) = s^{-ν} J_ν(s), and the
//! positive zeros of J_ν.
//!
//! J_ν and G share one evaluation path. For s ≤ [`SERIES_LIMIT`] the
//! everywhere-regular series of G is summed (in double-double once the
//! terms start to cancel); beyond it the Hankel expansion
//! J_ν(s) ≈ √(2/(πs)) (P cos χ − Q sin χ), χ = s − νπ/2 − π/4, is summed
//! until its terms drop below 1e-17.

mod dd;

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use dd::Dd;

/// Arguments at or below this use the power series, above it the Hankel
/// expansion.
pub const SERIES_LIMIT: f64 = 30.0;

/// Below this the series is summed in plain f64 (largest term < 500).
const PLAIN_SERIES_LIMIT: f64 = 8.0;

/// Half-width of the window searched around the McMahon estimate of a zero.
/// The estimate is off by at most 0.37 for ν ≤ 2.
const ZERO_BRACKET: f64 = 1.0;

const HANKEL_TERMS: usize = 96;

/// Order ν of a Bessel function. Built from an ambient dimension as
/// ν = (d − 2)/2, so d = 1 gives the cosine case ν = −1/2.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < -0.5 {
            return Err(domain("bessel order", format!("nu = {nu} must be >= -1/2")));
        }
        Ok(BesselOrder(nu))
    }

    pub fn from_dimension(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain("bessel order", "dimension must be >= 1"));
        }
        Ok(BesselOrder((d as f64 - 2.0) / 2.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    // Split the power so t^(x+0.5) cannot overflow before e^{-t} tames it.
    let half = t.powf(0.5 * (x + 0.5));
    (2.0 * PI).sqrt() * half * (-t).exp() * half * acc
}

/// Γ at integers and half-integers by the product recurrence from Γ(1) = 1
/// and Γ(1/2) = √π.
fn gamma_lattice(x: f64) -> Option<f64> {
    if x > 60.0 || (2.0 * x).fract() != 0.0 {
        return None;
    }
    let (mut acc, mut k) = if x.fract() == 0.0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while k < x {
        acc *= k;
        k += 1.0;
    }
    Some(acc)
}

fn gamma_positive(x: f64) -> f64 {
    gamma_lattice(x).unwrap_or_else(|| gamma_unchecked(x))
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(gamma_positive(x))
}

/// Evaluator for J_ν and G = s^{-ν} J_ν at a fixed order, with the
/// order-dependent constants precomputed.
#[derive(Clone, Debug)]
pub struct BesselKernel {
    order: BesselOrder,
    /// G(0) = 2^{-ν} / Γ(ν + 1).
    g_zero: f64,
    /// a_k(ν) of the Hankel expansion, a_0 = 1.
    hankel: Vec<f64>,
    phase_cos: f64,
    phase_sin: f64,
}

impl BesselKernel {
    pub fn new(order: BesselOrder) -> Self {
        let nu = order.value();
        let g_zero = 2f64.powf(-nu) / gamma_positive(nu + 1.0);
        let mu = 4.0 * nu * nu;
        let mut hankel = Vec::with_capacity(HANKEL_TERMS);
        hankel.push(1.0);
        for k in 1..HANKEL_TERMS {
            let odd = (2 * k - 1) as f64;
            let prev = hankel[k - 1];
            hankel.push(prev * (mu - odd * odd) / (8.0 * k as f64));
        }
        let phase = (0.5 * nu + 0.25) * PI;
        BesselKernel {
            order,
            g_zero,
            hankel,
            phase_cos: phase.cos(),
            phase_sin: phase.sin(),
        }
    }

    #[inline]
    pub fn order(&self) -> BesselOrder {
        self.order
    }

    /// G(0) = 1 / (2^ν Γ(ν + 1)).
    #[inline]
    pub fn g_at_zero(&self) -> f64 {
        self.g_zero
    }

    /// G(s) for s ≥ 0. Callers guarantee the domain.
    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        if s <= SERIES_LIMIT {
            self.g_zero * self.series_sum(s)
        } else {
            self.hankel_j(s) * s.powf(-self.order.value())
        }
    }

    /// J_ν(r) for r ≥ 0. Callers guarantee the domain.
    #[inline]
    pub fn j(&self, r: f64) -> f64 {
        if r <= SERIES_LIMIT {
            let nu = self.order.value();
            let scale = if nu == 0.0 { 1.0 } else { r.powf(nu) };
            scale * self.g_zero * self.series_sum(r)
        } else {
            self.hankel_j(r)
        }
    }

    /// Σ_k (−q)^k / (k! (ν+1)_k) with q = s²/4, i.e. G(s)/G(0).
    fn series_sum(&self, s: f64) -> f64 {
        let nu = self.order.value();
        if s <= PLAIN_SERIES_LIMIT {
            let q = 0.25 * s * s;
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..200 {
                let kf = k as f64;
                term *= -q / (kf * (kf + nu));
                sum += term;
                if term.abs() < 1e-18 * sum.abs().max(1e-300) && kf > q {
                    break;
                }
            }
            return sum;
        }
        let half = 0.5 * s;
        let q = Dd::exact_prod(half, half);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for k in 1..400 {
            let kf = k as f64;
            let den = Dd::from_f64(kf).mul(Dd::exact_sum(kf, nu));
            term = term.mul(q).div(den).neg();
            sum = sum.add(term);
            if term.hi.abs() < 1e-18 && kf > q.hi {
                break;
            }
        }
        sum.to_f64()
    }

    fn hankel_j(&self, r: f64) -> f64 {
        let inv = 1.0 / r;
        let mut p = 0.0;
        let mut q = 0.0;
        let mut pow = 1.0;
        let mut last = f64::INFINITY;
        for (k, a) in self.hankel.iter().enumerate() {
            let term = a * pow;
            let mag = term.abs();
            if k > 2 && (mag > last || mag < 1e-17) {
                break;
            }
            last = mag;
            // Signs follow (−1)^{⌊k/2⌋}.
            let signed = if (k / 2) % 2 == 0 { term } else { -term };
            if k % 2 == 0 {
                p += signed;
            } else {
                q += signed;
            }
            pow *= inv;
        }
        let (s, c) = r.sin_cos();
        // cos χ and sin χ with χ = r − phase.
        let cos_chi = c * self.phase_cos + s * self.phase_sin;
        let sin_chi = s * self.phase_cos - c * self.phase_sin;
        (2.0 / (PI * r)).sqrt() * (p * cos_chi - q * sin_chi)
    }
}

/// J_ν(r) for r ≥ 0.
pub fn bessel_j(nu: BesselOrder, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain("bessel_j", format!("r = {r} must be finite and >= 0")));
    }
    Ok(BesselKernel::new(nu).j(r))
}

/// G(s) = s^{-(d-2)/2} J_{(d-2)/2}(s), continuous at s = 0.
pub fn kernel_g(d: usize, s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain("kernel_g", format!("s = {s} must be finite and >= 0")));
    }
    Ok(BesselKernel::new(BesselOrder::from_dimension(d)?).g(s))
}

/// Positive zeros z_1 < z_2 < … of J_ν.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroTable {
    order: BesselOrder,
    zeros: Vec<f64>,
}

impl ZeroTable {
    pub fn order(&self) -> BesselOrder {
        self.order
    }

    pub fn n_max(&self) -> usize {
        self.zeros.len()
    }

    /// z_n, 1-based.
    pub fn get(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.zeros.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                max: self.zeros.len(),
            });
        }
        Ok(self.zeros[n - 1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.zeros
    }

    /// `n,z_n` rows, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,z_n\n");
        for (i, z) in self.zeros.iter().enumerate() {
            let _ = writeln!(out, "{},{:.16e}", i + 1, z);
        }
        out
    }
}

/// Newton iteration on J_ν safeguarded by bisection inside a bracket
/// centred on the McMahon estimate (n + ν/2 − 1/4)π.
pub struct ZeroFinder {
    j: BesselKernel,
    j_next: BesselKernel,
}

impl ZeroFinder {
    pub fn new(order: BesselOrder) -> Self {
        ZeroFinder {
            j: BesselKernel::new(order),
            j_next: BesselKernel::new(BesselOrder(order.value() + 1.0)),
        }
    }

    pub fn mcmahon_estimate(&self, n: usize) -> f64 {
        (n as f64 + 0.5 * self.j.order.value() - 0.25) * PI
    }

    /// The n-th positive zero (1-based).
    pub fn zero(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::IndexOutOfRange { index: 0, max: usize::MAX });
        }
        let nu = self.j.order.value();
        let guess = self.mcmahon_estimate(n);
        let mut lo = (guess - ZERO_BRACKET).max(1e-6);
        let mut hi = guess + ZERO_BRACKET;
        let f_lo = self.j.j(lo);
        let f_hi = self.j.j(hi);
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_lo.signum() == f_hi.signum() {
            return Err(Error::ZeroBracket { nu, index: n, lo, hi });
        }
        let mut x = guess;
        for _ in 0..200 {
            let f = self.j.j(x);
            if f == 0.0 {
                return Ok(x);
            }
            if f.signum() == f_lo.signum() {
                lo = x;
            } else {
                hi = x;
            }
            let df = nu / x * f - self.j_next.j(x);
            let mut next = x - f / df;
            if !next.is_finite() || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            let tol = 1e-14 * next;
            if (next - x).abs() <= tol || hi - lo <= tol {
                return Ok(next);
            }
            x = next;
        }
        Ok(0.5 * (lo + hi))
    }
}

/// The first `n_max` positive zeros of J_ν.
pub fn bessel_zeros(nu: BesselOrder, n_max: usize) -> Result<ZeroTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let finder = ZeroFinder::new(nu);
    let mut zeros = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let z = finder.zero(n)?;
        if let Some(&prev) = zeros.last() {
            if z <= prev {
                return Err(Error::ZeroBracket {
                    nu: nu.value(),
                    index: n,
                    lo: prev,
                    hi: z,
                });
            }
        }
        zeros.push(z);
    }
    Ok(ZeroTable { order: nu, zeros })
}

/// Sign changes of J_ν sampled with spacing `step` on (0, upper].
pub fn sign_changes(nu: BesselOrder, upper: f64, step: f64) -> usize {
    let kernel = BesselKernel::new(nu);
    let steps = (upper / step).ceil() as usize;
    let mut prev = kernel.j(step.min(upper) * 0.5);
    let mut count = 0;
    for i in 1..=steps {
        let r = (i as f64 * step).min(upper);
        let v = kernel.j(r);
        if v != 0.0 && prev != 0.0 && v.signum() != prev.signum() {
            count += 1;
        }
        if v != 0.0 {
            prev = v;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(nu: f64) -> BesselOrder {
        BesselOrder::new(nu).unwrap()
    }

    fn j_half(r: f64) -> f64 {
        (2.0 / (PI * r)).sqrt() * r.sin()
    }

    // Adaptive Simpson, kept here so the Γ check does not go through the
    // Lanczos code it is checking.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            ((b - a) / 6.0 * (f(a) + 4.0 * fm + f(b)), m)
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let (_, m) = simpson(f, a, b);
            let (left, _) = simpson(f, a, m);
            let (right, _) = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
        }
        let (whole, _) = simpson(f, a, b);
        rec(f, a, b, whole, tol, 40)
    }

    #[test]
    fn gamma_trivial_values() {
        assert!((gamma(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma(5.0).unwrap() - 24.0).abs() < 24.0 * 1e-13);
    }

    #[test]
    fn gamma_half_against_defining_integral() {
        // Γ(1/2) = ∫ t^{-1/2} e^{-t} dt = 2 ∫_0^∞ e^{-u²} du after t = u².
        let oracle = 2.0 * adaptive_simpson(&|u: f64| (-u * u).exp(), 0.0, 12.0, 1e-15);
        assert!((oracle - PI.sqrt()).abs() < 1e-13);
        let g = gamma(0.5).unwrap();
        assert!((g - oracle).abs() <= 1e-12 * oracle);
        assert!((g - 1.772_453_850_9).abs() < 1e-10);
    }

    #[test]
    fn gamma_closed_forms_on_range() {
        // Γ(n) = (n−1)!, Γ(n + 1/2) = (2n)! √π / (4^n n!).
        let mut fact = 1.0f64;
        for n in 1..=30u32 {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            let g = gamma(n as f64).unwrap();
            assert!((g - fact).abs() <= 1e-12 * fact, "Γ({n})");
        }
        let mut half = PI.sqrt();
        for n in 0..30u32 {
            let x = n as f64 + 0.5;
            let g = gamma(x).unwrap();
            assert!((g - half).abs() <= 1e-12 * half, "Γ({x}) = {g} vs {half}");
            half *= x;
        }
    }

    #[test]
    fn gamma_recurrence() {
        let mut x = 0.5;
        while x < 29.0 {
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs, "x = {x}");
            x += 0.173;
        }
    }

    #[test]
    fn gamma_domain() {
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn bessel_trivial_and_closed_form() {
        assert_eq!(bessel_j(order(0.0), 0.0).unwrap(), 1.0);
        assert!(bessel_j(order(0.5), PI).unwrap().abs() <= 1e-10);
        for &r in &[0.01, 0.7, 3.3, 7.9, 8.1, 17.5, 29.9, 30.1, 55.0, 400.0, 1999.0] {
            let v = bessel_j(order(0.5), r).unwrap();
            assert!((v - j_half(r)).abs() <= 1e-10, "r = {r}: {v} vs {}", j_half(r));
        }
        assert!(bessel_j(order(0.0), -1.0).is_err());
    }

    #[test]
    fn bessel_three_halves_closed_form() {
        // J_{3/2}(r) = √(2/(πr)) (sin r / r − cos r).
        for &r in &[0.3, 2.0, 9.0, 21.0, 31.0, 250.0, 1800.0] {
            let exact = (2.0 / (PI * r)).sqrt() * (r.sin() / r - r.cos());
            let v = bessel_j(order(1.5), r).unwrap();
            assert!((v - exact).abs() <= 1e-10, "r = {r}");
        }
    }

    #[test]
    fn first_zero_of_j0_matches_bisection_oracle() {
        // Bisection on the truncated power series (plain f64 is accurate at r ≈ 2.4).
        let series = |r: f64| {
            let q = r * r / 4.0;
            let mut t = 1.0;
            let mut s = 1.0;
            for k in 1..40 {
                t *= -q / ((k * k) as f64);
                s += t;
            }
            s
        };
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if series(a) * series(m) <= 0.0 {
                b = m
            } else {
                a = m
            }
        }
        let oracle = 0.5 * (a + b);
        assert!((oracle - 2.404_825_557_695_773).abs() < 1e-12);
        assert!(bessel_j(order(0.0), oracle).unwrap().abs() <= 1e-9);
        let z = bessel_zeros(order(0.0), 1).unwrap();
        assert!((z.get(1).unwrap() - oracle).abs() <= 1e-10);
    }

    #[test]
    fn half_order_zeros_are_multiples_of_pi() {
        let z = bessel_zeros(order(0.5), 100).unwrap();
        for n in 1..=100 {
            let exact = n as f64 * PI;
            assert!((z.get(n).unwrap() - exact).abs() <= 1e-10 * exact);
        }
    }

    #[test]
    fn large_index_zero_near_asymptote() {
        let z = bessel_zeros(order(0.0), 100).unwrap();
        assert!((z.get(100).unwrap() - 99.75 * PI).abs() <= 1e-3);
    }

    #[test]
    fn no_zero_skipped() {
        for d in 1..=6 {
            let nu = BesselOrder::from_dimension(d).unwrap();
            let table = bessel_zeros(nu, 120).unwrap();
            let top = table.get(120).unwrap();
            let next = ZeroFinder::new(nu).zero(121).unwrap();
            let upper = 0.5 * (top + next);
            assert_eq!(sign_changes(nu, upper, 0.05), 120, "d = {d}");
        }
    }

    #[test]
    fn zero_spacing_and_linear_bounds() {
        for d in 2..=4 {
            let table = bessel_zeros(BesselOrder::from_dimension(d).unwrap(), 500).unwrap();
            let z = table.as_slice();
            for n in 10..z.len() {
                let gap = z[n] - z[n - 1];
                assert!((gap - PI).abs() < 0.5, "d = {d}, n = {n}");
            }
            let ratios: Vec<f64> = z.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).collect();
            let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
            assert!(hi / lo <= 1.6);
        }
    }

    #[test]
    fn small_argument_bound() {
        for nu in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let k = BesselKernel::new(order(nu));
            let c = 1.05 * k.g_at_zero();
            for i in 1..=1000 {
                let r = i as f64 / 1000.0;
                assert!(k.j(r).abs() <= c * r.powf(nu), "nu = {nu}, r = {r}");
            }
        }
    }

    #[test]
    fn asymptotic_remainder_decays_like_r_three_halves() {
        for nu in [0.0, 0.5, 1.0, 1.5] {
            let k = BesselKernel::new(order(nu));
            let mut worst: f64 = 0.0;
            let mut r = 10.0;
            while r <= 1000.0 {
                let lead = (2.0 / (PI * r)).sqrt() * (r - nu * PI / 2.0 - PI / 4.0).cos();
                worst = worst.max((k.j(r) - lead).abs() * r.powf(1.5));
                r += 0.37;
            }
            // (4ν² − 1)/8 · √(2/π) bounds the leading correction.
            let bound = ((4.0 * nu * nu - 1.0).abs() / 8.0 + 0.1) * (2.0 / PI).sqrt() * 1.5;
            assert!(worst.is_finite() && worst <= bound, "nu = {nu}: C = {worst}");
        }
    }

    #[test]
    fn series_and_hankel_agree_on_overlap() {
        for nu in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let k = BesselKernel::new(order(nu));
            let mut s: f64 = 24.0;
            while s <= 36.0 {
                let series = s.powf(nu) * k.g_zero * k.series_sum(s);
                let hankel = k.hankel_j(s);
                assert!((series - hankel).abs() <= 1e-10, "nu = {nu}, s = {s}");
                s += 0.0625;
            }
        }
    }

    #[test]
    fn kernel_values() {
        assert!((kernel_g(2, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((kernel_g(4, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let expected = (2.0 / PI).sqrt() * 1f64.sin();
        assert!((kernel_g(3, 1.0).unwrap() - expected).abs() <= 1e-10);
        // d = 1 is the cosine case √(2/π) cos s.
        for &s in &[0.0, 1.0, 12.0, 45.0] {
            let v = kernel_g(1, s).unwrap();
            assert!((v - (2.0 / PI).sqrt() * s.cos()).abs() < 1e-10);
        }
        assert!(kernel_g(3, -0.1).is_err());
    }

    #[test]
    fn csv_dump_has_full_precision() {
        let z = bessel_zeros(order(0.0), 3).unwrap();
        let csv = z.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,z_n"));
        let row = lines.next().unwrap();
        let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(value, z.get(1).unwrap());
        assert!(row.starts_with("1,2.40482555769577"), "{row}");
    }
}
