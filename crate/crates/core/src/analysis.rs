//! Expected L^p norms, convergence verdicts and the critical exponent.
//!
//! Everything here rests on the moment identity
//!
//! ```text
//! E‖F^N‖_p^p = d_p · ‖S_N‖_{p/2}^{p/2},   S_N(r) = Σ_{n≤N} c_n² e_n(r)²,
//! ```
//!
//! with d_p = E|g|^p = 2^{p/2} Γ(p/2 + 1) for g = X₁ + iX₂. The functional
//! M_N on the right is deterministic, so whether E‖F‖_p^p is finite can be
//! read off the growth of M_N along a ladder of truncations.
//!
//! Verdicts look at the increments Δ_k = M_{N_{k+1}} − M_{N_k} of the
//! ladder rather than at M_N itself. A convergent M_N has increments that
//! decay like a negative power of N; a divergent one has increments that
//! grow. The slope of log M_N is reported too, but it is a poor
//! discriminator: a convergent series still approaching its limit has a
//! visibly positive level slope at N ≈ 10³.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_radial_basis, ConstantModulusBasis, NormSweep, RadialBasis};
use crate::error::{Error, Result};
use crate::quad::{build_grid, QuadratureGrid, DEFAULT_POINTS_PER_PANEL};
use crate::rng::StreamKey;
use crate::series::{
    sample_complex_gaussian, CoefficientSequence, MonteCarloEstimate, SeriesBasis, SeriesDraw,
    SeriesSampler,
};
use crate::specfun::{bessel_zeros, gamma, BesselOrder};

/// Ladder increments growing faster than N^0.05 mean divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 0.05;
/// Ladder increments must decay at least like N^0.01 (and monotonically)
/// for a convergent verdict.
pub const CONVERGENCE_THRESHOLD: f64 = 0.01;
/// Largest exponent probed by [`bracket_pcr`]; beyond it the bracket is
/// reported as unbounded.
pub const P_MAX: f64 = 20.0;
/// Modes searched by [`construct_diverging_sequence`] unless told otherwise.
pub const DEFAULT_ADVERSARIAL_CAP: usize = 1 << 20;
/// Truncations for the theorem-side partial sums in [`bracket_pcr`].
pub const THEOREM_LADDER: [usize; 8] = [64, 128, 256, 512, 1024, 2048, 4096, 8192];

/// N ∈ {64, 128, 256, 512, 1024}.
pub fn default_ladder() -> Vec<usize> {
    doubling_ladder(64, 5)
}

pub fn doubling_ladder(first: usize, rungs: usize) -> Vec<usize> {
    (0..rungs).map(|k| first << k).collect()
}

fn check_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "a ladder needs at least 5 rungs, got {}",
            ladder.len()
        )));
    }
    if ladder[0] == 0 || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "ladder rungs must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Serializes ±∞ and NaN as strings, which plain JSON cannot hold.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("+inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub p: f64,
    /// E|g|^p / (E|g|²)^{p/2} = Γ(p/2 + 1).
    pub c_p: f64,
    /// E|g|^p = 2^{p/2} C_p.
    pub d_p: f64,
}

/// |g|²/2 is a unit exponential, so E|g|^p = 2^{p/2} Γ(p/2 + 1).
pub fn moment_constants(p: f64) -> Result<MomentConstants> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p = {p} must be positive and finite")));
    }
    let c_p = gamma(0.5 * p + 1.0)?;
    Ok(MomentConstants {
        p,
        c_p,
        d_p: 2f64.powf(0.5 * p) * c_p,
    })
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p = {p} must be finite and >= 2")));
    }
    Ok(())
}

/// M_N = d_p ‖S_N‖_{p/2}^{p/2}, computed without sampling.
pub fn expected_lp_pth_power(c: &CoefficientSequence, basis: SeriesBasis<'_>, n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    basis.check_truncation(n)?;
    let dp = moment_constants(p)?.d_p;
    let coeffs = c.coefficients(n)?;
    match basis {
        SeriesBasis::Radial { basis, grid } => {
            let s = energy_profiles(basis, &coeffs, &[n], grid.nodes());
            Ok(dp * pth_power_of_profile(&s[0], grid.weights(), p))
        }
        SeriesBasis::ConstantModulus(_) => {
            let sum: f64 = coeffs.iter().map(|v| v * v).sum();
            Ok(dp * sum.powf(0.5 * p) * ConstantModulusBasis::MASS)
        }
    }
}

/// Monte Carlo mean of ‖F^N‖_p^p, the sampled side of the moment identity.
pub fn monte_carlo_lp_pth_power(
    c: &CoefficientSequence,
    basis: &RadialBasis,
    grid: &QuadratureGrid,
    n: usize,
    p: f64,
    n_seeds: usize,
    master_seed: u64,
) -> Result<MonteCarloEstimate> {
    check_p(p)?;
    let sampler = SeriesSampler::on_grid(c, basis, 1, n, grid)?;
    let w = grid.weights();
    let values = sampler.map_seeds(master_seed, n_seeds, |_, v| {
        w.iter()
            .zip(v.re.iter().zip(v.im))
            .map(|(w, (a, b))| w * (a * a + b * b).powf(0.5 * p))
            .sum::<f64>()
    });
    Ok(MonteCarloEstimate::from_samples(&values))
}

/// S_N at every point for each requested truncation (ascending).
fn energy_profiles(basis: &RadialBasis, coeffs: &[f64], rungs: &[usize], points: &[f64]) -> Vec<Vec<f64>> {
    let top = *rungs.last().unwrap_or(&0);
    let zeros = basis.zeros().as_slice();
    let weights: Vec<(f64, f64)> = (1..=top)
        .map(|n| {
            let a = basis.amplitude_unchecked(n) * coeffs[n - 1];
            (zeros[n - 1], a * a)
        })
        .collect();
    let kernel = basis.kernel();
    let by_point: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&r| {
            let mut out = Vec::with_capacity(rungs.len());
            let mut s = 0.0;
            let mut next = 0;
            for (k, (z, a2)) in weights.iter().enumerate() {
                if *a2 != 0.0 {
                    let g = kernel.g(z * r);
                    s += a2 * g * g;
                }
                while next < rungs.len() && rungs[next] == k + 1 {
                    out.push(s);
                    next += 1;
                }
            }
            out
        })
        .collect();
    (0..rungs.len())
        .map(|j| by_point.iter().map(|row| row[j]).collect())
        .collect()
}

fn pth_power_of_profile(s: &[f64], weights: &[f64], p: f64) -> f64 {
    weights.iter().zip(s).map(|(w, v)| w * v.powf(0.5 * p)).sum()
}

/// Which family of bases a verdict is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFamily {
    Radial { d: usize },
    ConstantModulus,
}

/// The energy S_N at every rung of a ladder, from which M_N follows for
/// any p at the cost of one weighted sum.
///
/// All rungs share the grid and normalizers of the top rung, which
/// resolves every lower rung as well.
#[derive(Clone, Debug)]
pub struct EnergyLadder {
    rungs: Vec<usize>,
    kind: LadderKind,
}

#[derive(Clone, Debug)]
enum LadderKind {
    Radial { weights: Vec<f64>, profiles: Vec<Vec<f64>> },
    ConstantModulus { sums: Vec<f64> },
}

impl EnergyLadder {
    pub fn new(
        c: &CoefficientSequence,
        family: BasisFamily,
        ladder: &[usize],
        points_per_panel: usize,
    ) -> Result<Self> {
        check_ladder(ladder)?;
        let top = *ladder.last().unwrap();
        let coeffs = c.coefficients(top)?;
        let kind = match family {
            BasisFamily::Radial { d } => {
                let zeros = bessel_zeros(BesselOrder::from_dimension(d)?, top)?;
                let grid = build_grid(d, zeros.get(top)?, points_per_panel)?;
                let basis = build_radial_basis(d, top, &grid)?;
                let profiles = energy_profiles(&basis, &coeffs, ladder, grid.nodes());
                LadderKind::Radial {
                    weights: grid.weights().to_vec(),
                    profiles,
                }
            }
            BasisFamily::ConstantModulus => {
                let mut sums = Vec::with_capacity(ladder.len());
                let mut s = 0.0;
                let mut n = 0;
                for &rung in ladder {
                    while n < rung {
                        s += coeffs[n] * coeffs[n];
                        n += 1;
                    }
                    sums.push(s);
                }
                LadderKind::ConstantModulus { sums }
            }
        };
        Ok(EnergyLadder {
            rungs: ladder.to_vec(),
            kind,
        })
    }

    pub fn rungs(&self) -> &[usize] {
        &self.rungs
    }

    /// M_N at every rung.
    pub fn expected_norms(&self, p: f64) -> Result<Vec<f64>> {
        check_p(p)?;
        let dp = moment_constants(p)?.d_p;
        Ok(match &self.kind {
            LadderKind::Radial { weights, profiles } => profiles
                .iter()
                .map(|s| dp * pth_power_of_profile(s, weights, p))
                .collect(),
            LadderKind::ConstantModulus { sums } => sums
                .iter()
                .map(|s| dp * s.powf(0.5 * p) * ConstantModulusBasis::MASS)
                .collect(),
        })
    }

    pub fn classify(&self, p: f64) -> Result<DivergenceVerdict> {
        let values = self.expected_norms(p)?;
        let fit = classify_growth(&self.rungs, &values);
        Ok(DivergenceVerdict {
            p,
            verdict: fit.verdict,
            fitted_growth_exponent: fit.increment_exponent,
            level_slope: fit.level_slope,
            ladder: self
                .rungs
                .iter()
                .zip(values)
                .map(|(&n, m_n)| LadderPoint { n, m_n })
                .collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M_N")]
    pub m_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub p: f64,
    pub verdict: Verdict,
    /// Least-squares slope of log Δ_k against log N_k; −∞ once the
    /// increments vanish.
    #[serde(with = "extended_f64")]
    pub fitted_growth_exponent: f64,
    /// Least-squares slope of log M_N against log N.
    pub level_slope: f64,
    pub ladder: Vec<LadderPoint>,
}

/// The outcome of [`classify_growth`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFit {
    pub verdict: Verdict,
    pub increment_exponent: f64,
    pub level_slope: f64,
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Classifies partial values `values[k]` at truncations `rungs[k]`.
///
/// Divergent: the increments grow faster than N^{DIVERGENCE_THRESHOLD} and
/// the values increase at every rung. Convergent: the increments decay
/// faster than N^{CONVERGENCE_THRESHOLD} and each is smaller than the one
/// before. Anything else, including the logarithmic borderline, is
/// Inconclusive.
pub fn classify_growth(rungs: &[usize], values: &[f64]) -> GrowthFit {
    let logs_n: Vec<f64> = rungs.iter().map(|n| (*n as f64).ln()).collect();
    let level_slope = if values.iter().all(|v| *v > 0.0) {
        least_squares_slope(&logs_n, &values.iter().map(|v| v.ln()).collect::<Vec<_>>())
    } else {
        0.0
    };
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    // Increments at the level of rounding in M_N count as zero.
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 64.0 * f64::EPSILON * scale;
    let vanished = increments.iter().rev().take_while(|d| d.abs() <= noise).count();
    let decreasing = increments
        .windows(2)
        .all(|w| w[1] < w[0] || (w[1].abs() <= noise && w[0] >= -noise));

    let increment_exponent = if vanished > 0 {
        f64::NEG_INFINITY
    } else if increments.iter().all(|d| *d > 0.0) {
        least_squares_slope(
            &logs_n[..increments.len()],
            &increments.iter().map(|d| d.ln()).collect::<Vec<_>>(),
        )
    } else {
        f64::NAN
    };
    let increasing = values.windows(2).all(|w| w[1] > w[0]);

    let verdict = if increment_exponent > DIVERGENCE_THRESHOLD && increasing {
        Verdict::Divergent
    } else if increment_exponent < CONVERGENCE_THRESHOLD && decreasing {
        Verdict::Convergent
    } else {
        Verdict::Inconclusive
    };
    GrowthFit {
        verdict,
        increment_exponent,
        level_slope,
    }
}

pub fn classify_divergence(
    c: &CoefficientSequence,
    family: BasisFamily,
    p: f64,
    ladder: &[usize],
    points_per_panel: usize,
) -> Result<DivergenceVerdict> {
    EnergyLadder::new(c, family, ladder, points_per_panel)?.classify(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub p: f64,
    pub verdict: Verdict,
    #[serde(with = "extended_f64")]
    pub fitted_growth_exponent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremBracket {
    pub lower: f64,
    #[serde(with = "extended_f64")]
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcrBracket {
    #[serde(rename = "p_lower")]
    pub lower: f64,
    #[serde(rename = "p_upper", with = "extended_f64")]
    pub upper: f64,
    pub theorem_bracket: TheoremBracket,
    /// Every exponent the bisections evaluated, in order.
    pub probes: Vec<ProbePoint>,
}

impl PcrBracket {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketOptions {
    pub p_min: f64,
    pub p_max: f64,
    pub tol: f64,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions {
            p_min: 2.0,
            p_max: P_MAX,
            tol: 0.25,
        }
    }
}

/// Largest p with `convergent(p)` and smallest p with `divergent(p)` by
/// two bisections over [p_min, p_max]. Exponents in between stay inside
/// the bracket.
fn bisect_bracket(
    options: BracketOptions,
    mut classify: impl FnMut(f64) -> Result<Verdict>,
) -> Result<(f64, f64)> {
    let BracketOptions { p_min, p_max, tol } = options;
    let at_min = classify(p_min)?;
    let at_max = classify(p_max)?;

    let lower = if at_max == Verdict::Convergent {
        p_max
    } else if at_min != Verdict::Convergent {
        p_min
    } else {
        let (mut lo, mut hi) = (p_min, p_max);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if classify(mid)? == Verdict::Convergent {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let upper = if at_max != Verdict::Divergent {
        f64::INFINITY
    } else if at_min == Verdict::Divergent {
        p_min
    } else {
        let (mut lo, mut hi) = (lower.max(p_min), p_max);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if classify(mid)? == Verdict::Divergent {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    Ok((lower, upper))
}

pub fn bracket_pcr(
    c: &CoefficientSequence,
    family: BasisFamily,
    options: BracketOptions,
    ladder: &[usize],
    points_per_panel: usize,
) -> Result<PcrBracket> {
    check_bracket_options(options)?;
    let energy = EnergyLadder::new(c, family, ladder, points_per_panel)?;
    bracket_pcr_on(&energy, c, family, options, points_per_panel)
}

fn check_bracket_options(options: BracketOptions) -> Result<()> {
    let BracketOptions { p_min, p_max, tol } = options;
    if !(tol >= 0.1) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be >= 0.1")));
    }
    check_p(p_min)?;
    if !(p_max > p_min) || !p_max.is_finite() {
        return Err(Error::InvalidArgument(format!("p range [{p_min}, {p_max}] is empty")));
    }
    Ok(())
}

/// [`bracket_pcr`] on an energy ladder built beforehand.
pub fn bracket_pcr_on(
    energy: &EnergyLadder,
    c: &CoefficientSequence,
    family: BasisFamily,
    options: BracketOptions,
    points_per_panel: usize,
) -> Result<PcrBracket> {
    check_bracket_options(options)?;
    let mut probes = Vec::new();
    let (lower, upper) = bisect_bracket(options, |p| {
        let v = energy.classify(p)?;
        probes.push(ProbePoint {
            p,
            verdict: v.verdict,
            fitted_growth_exponent: v.fitted_growth_exponent,
        });
        Ok(v.verdict)
    })?;
    let theorem_bracket = theorem_bracket(c, family, options, points_per_panel)?;
    Ok(PcrBracket {
        lower,
        upper,
        theorem_bracket,
        probes,
    })
}

/// Partial sums Σ_{n≤N} c_n² ‖e_n‖_p² and Σ_{n≤N} c_n^p ‖e_n‖_p^p on
/// [`THEOREM_LADDER`].
pub fn theorem_partial_sums(
    c: &CoefficientSequence,
    family: BasisFamily,
    p: f64,
    points_per_panel: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let top = *THEOREM_LADDER.last().unwrap();
    let coeffs = c.coefficients(top)?;
    let norms: Vec<f64> = match family {
        BasisFamily::Radial { d } => {
            let mut sweep = NormSweep::new(d, &[p], points_per_panel)?;
            sweep.advance(top)?.into_iter().map(|row| row.norms[0]).collect()
        }
        BasisFamily::ConstantModulus => vec![ConstantModulusBasis.lp_norm(1, p); top],
    };
    let (mut a, mut b) = (0.0, 0.0);
    let (mut sa, mut sb) = (Vec::new(), Vec::new());
    let mut next = 0;
    for (k, (ck, ek)) in coeffs.iter().zip(&norms).enumerate() {
        a += (ck * ek).powi(2);
        b += (ck * ek).powf(p);
        if next < THEOREM_LADDER.len() && THEOREM_LADDER[next] == k + 1 {
            sa.push(a);
            sb.push(b);
            next += 1;
        }
    }
    Ok((sa, sb))
}

fn theorem_bracket(
    c: &CoefficientSequence,
    family: BasisFamily,
    options: BracketOptions,
    points_per_panel: usize,
) -> Result<TheoremBracket> {
    // Convergence of the first sum is sufficient for a finite E‖F‖_p^p and
    // divergence of the second is sufficient for an infinite one.
    let mut cache: Vec<(f64, Verdict, Verdict)> = Vec::new();
    let mut verdicts = |p: f64| -> Result<(Verdict, Verdict)> {
        if let Some((_, a, b)) = cache.iter().find(|(q, ..)| *q == p) {
            return Ok((*a, *b));
        }
        let (sa, sb) = theorem_partial_sums(c, family, p, points_per_panel)?;
        let a = classify_growth(&THEOREM_LADDER, &sa).verdict;
        let b = classify_growth(&THEOREM_LADDER, &sb).verdict;
        cache.push((p, a, b));
        Ok((a, b))
    };
    let (lower, _) = bisect_bracket(options, |p| Ok(verdicts(p)?.0))?;
    let (_, upper) = bisect_bracket(options, |p| Ok(verdicts(p)?.1))?;
    Ok(TheoremBracket { lower, upper })
}

/// Slope of log Σ_{n≤N} n^{d−1} c_n² against log N, clamped to [0, d−1].
pub fn alpha_star(c: &CoefficientSequence, d: usize, ladder: &[usize]) -> Result<f64> {
    check_ladder(ladder)?;
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let top = *ladder.last().unwrap();
    let coeffs = c.coefficients(top)?;
    let mut sums = Vec::with_capacity(ladder.len());
    let mut s = 0.0;
    let mut n = 0;
    for &rung in ladder {
        while n < rung {
            s += ((n + 1) as f64).powi(d as i32 - 1) * coeffs[n] * coeffs[n];
            n += 1;
        }
        sums.push(s);
    }
    if sums[0] <= 0.0 {
        // Support starting past the first rung: fit from the first nonzero sum.
        let first = sums.iter().position(|v| *v > 0.0);
        match first {
            Some(k) if ladder.len() - k >= 2 => {
                let x: Vec<f64> = ladder[k..].iter().map(|v| (*v as f64).ln()).collect();
                let y: Vec<f64> = sums[k..].iter().map(|v| v.ln()).collect();
                return Ok(least_squares_slope(&x, &y).clamp(0.0, (d - 1) as f64));
            }
            _ => return Ok(0.0),
        }
    }
    let x: Vec<f64> = ladder.iter().map(|v| (*v as f64).ln()).collect();
    let y: Vec<f64> = sums.iter().map(|v| v.ln()).collect();
    Ok(least_squares_slope(&x, &y).clamp(0.0, (d - 1) as f64))
}

/// 2d/α*: above this exponent E‖F‖_p^p is infinite. +∞ when α* = 0.
pub fn divergence_exponent_bound(alpha_star: f64, d: usize) -> f64 {
    if alpha_star <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * d as f64 / alpha_star
    }
}

/// Indices n_1 < … < n_K with ‖e_{n_k}‖_p ≥ 2^k and c̃_{n_k} = 2^{−k}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergingSequence {
    pub p: f64,
    pub indices: Vec<usize>,
    pub norms: Vec<f64>,
    pub values: Vec<f64>,
}

impl DivergingSequence {
    pub fn sequence(&self) -> Result<CoefficientSequence> {
        CoefficientSequence::sparse(self.indices.clone(), self.values.clone())
    }

    /// Σ c̃_n^p ‖e_n‖_p^p over the constructed terms; each term is ≥ 1.
    pub fn divergence_sum(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.norms)
            .map(|(c, e)| (c * e).powf(self.p))
            .sum()
    }
}

pub fn construct_diverging_sequence(
    family: BasisFamily,
    p: f64,
    stages: usize,
    cap: usize,
    points_per_panel: usize,
) -> Result<DivergingSequence> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p = {p} must be finite and >= 1")));
    }
    if stages == 0 || stages > 60 {
        return Err(Error::InvalidArgument(format!("stage budget {stages} outside 1..=60")));
    }
    let mut out = DivergingSequence {
        p,
        indices: Vec::with_capacity(stages),
        norms: Vec::with_capacity(stages),
        values: Vec::with_capacity(stages),
    };
    let d = match family {
        BasisFamily::ConstantModulus => {
            return Err(Error::NoSuchSequence {
                p,
                stage: 1,
                target: 2.0,
                cap,
                max_norm: ConstantModulusBasis.lp_norm(1, p),
            })
        }
        BasisFamily::Radial { d } => d,
    };
    let mut sweep = NormSweep::new(d, &[p], points_per_panel)?;
    let mut max_norm: f64 = 0.0;
    let mut chunk = 1024;
    let mut stage = 1;
    while stage <= stages {
        let remaining = cap - sweep.position();
        if remaining == 0 {
            return Err(Error::NoSuchSequence {
                p,
                stage,
                target: 2f64.powi(stage as i32),
                cap,
                max_norm,
            });
        }
        let rows = sweep.advance(chunk.min(remaining))?;
        chunk = (2 * chunk).min(1 << 18);
        for row in rows {
            let norm = row.norms[0];
            max_norm = max_norm.max(norm);
            if stage <= stages && norm >= 2f64.powi(stage as i32) {
                out.indices.push(row.n);
                out.norms.push(norm);
                out.values.push(2f64.powi(-(stage as i32)));
                stage += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerniquePoint {
    pub eps: f64,
    /// Sample mean of exp(ε ‖F^N‖_p²); +∞ on overflow.
    #[serde(with = "extended_f64")]
    pub mean: f64,
}

/// Monte Carlo exponential moments E exp(ε ‖F^N‖_p²) over an ε ladder.
#[allow(clippy::too_many_arguments)]
pub fn fernique_probe(
    c: &CoefficientSequence,
    basis: &RadialBasis,
    grid: &QuadratureGrid,
    p: f64,
    n: usize,
    eps_ladder: &[f64],
    n_seeds: usize,
    master_seed: u64,
) -> Result<Vec<FerniquePoint>> {
    check_p(p)?;
    if let Some(e) = eps_ladder.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps = {e} must be finite and >= 0")));
    }
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("at least one seed is needed".into()));
    }
    let sampler = SeriesSampler::on_grid(c, basis, 1, n, grid)?;
    let w = grid.weights();
    let squared_norms = sampler.map_seeds(master_seed, n_seeds, |_, v| {
        let pth: f64 = w
            .iter()
            .zip(v.re.iter().zip(v.im))
            .map(|(w, (a, b))| w * (a * a + b * b).powf(0.5 * p))
            .sum();
        pth.powf(2.0 / p)
    });
    Ok(eps_ladder
        .iter()
        .map(|&eps| {
            let mean = if eps == 0.0 {
                1.0
            } else {
                squared_norms.iter().map(|x| (eps * x).exp()).sum::<f64>() / n_seeds as f64
            };
            FerniquePoint { eps, mean }
        })
        .collect())
}

/// exp(−½ ‖F‖⁴_{L⁴(D²)}) for a radial draw on the disc, the disc norm
/// being 2π times the radial integral against r dr.
pub fn gibbs_weight(draw: &SeriesDraw, grid: &QuadratureGrid) -> Result<f64> {
    if grid.dimension() != 2 || draw.field.len() != grid.len() {
        return Err(Error::InvalidArgument(
            "the Gibbs weight needs a draw on a disc (d = 2) grid".into(),
        ));
    }
    let radial: f64 = grid
        .weights()
        .iter()
        .zip(&draw.field)
        .map(|(w, f)| w * f.norm_sqr().powi(2))
        .sum();
    Ok(weight_from_l4(2.0 * PI * radial))
}

fn weight_from_l4(l4_fourth: f64) -> f64 {
    (-0.5 * l4_fourth).exp().max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSample {
    pub truncation: usize,
    pub master_seed: u64,
    pub weights: Vec<f64>,
    pub estimate: MonteCarloEstimate,
    pub min: f64,
    pub max: f64,
}

/// Gibbs weights of seeds 0..n_seeds for c_n = √2 / z_{n,2}, n ≤ N.
pub fn gibbs_sample(truncation: usize, n_seeds: usize, master_seed: u64, points_per_panel: usize) -> Result<GibbsSample> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("at least one seed is needed".into()));
    }
    let zeros = bessel_zeros(BesselOrder::from_dimension(2)?, truncation)?;
    let grid = build_grid(2, zeros.get(truncation)?, points_per_panel)?;
    let basis = build_radial_basis(2, truncation, &grid)?;
    let c = CoefficientSequence::gibbs_disc();
    let sampler = SeriesSampler::on_grid(&c, &basis, 1, truncation, &grid)?;
    let w = grid.weights();
    let weights = sampler.map_seeds(master_seed, n_seeds, |_, v| {
        let radial: f64 = w
            .iter()
            .zip(v.re.iter().zip(v.im))
            .map(|(w, (a, b))| w * (a * a + b * b).powi(2))
            .sum();
        weight_from_l4(2.0 * PI * radial)
    });
    let estimate = MonteCarloEstimate::from_samples(&weights);
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GibbsSample {
        truncation,
        master_seed,
        weights,
        estimate,
        min,
        max,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsStability {
    pub coarse: MonteCarloEstimate,
    pub fine: MonteCarloEstimate,
    pub coarse_truncation: usize,
    pub fine_truncation: usize,
    /// |mean_fine − mean_coarse| in standard errors of the fine mean.
    pub shift_in_std_errors: f64,
}

/// The mean weight at N and 2N from the same seeds.
pub fn gibbs_stability(
    truncation: usize,
    n_seeds: usize,
    master_seed: u64,
    points_per_panel: usize,
) -> Result<(GibbsSample, GibbsSample, GibbsStability)> {
    let coarse = gibbs_sample(truncation, n_seeds, master_seed, points_per_panel)?;
    let fine = gibbs_sample(2 * truncation, n_seeds, master_seed, points_per_panel)?;
    let shift = (fine.estimate.mean - coarse.estimate.mean).abs() / fine.estimate.std_error;
    let summary = GibbsStability {
        coarse: coarse.estimate,
        fine: fine.estimate,
        coarse_truncation: truncation,
        fine_truncation: 2 * truncation,
        shift_in_std_errors: shift,
    };
    Ok((coarse, fine, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfEnergy {
    pub truncation: usize,
    /// 2 H_N = Σ_{n≤N} E|g_n|² / n.
    pub analytic: f64,
    pub monte_carlo: MonteCarloEstimate,
    /// 2 H_N / (2 ln N), → 1 as N → ∞; absent at N = 1.
    pub log_ratio: Option<f64>,
}

/// Σ_{n≤N} |g_n|²/n, whose mean 2 H_N grows like 2 ln N.
pub fn h_half_partial_energy(truncation: usize, n_seeds: usize, master_seed: u64) -> Result<HalfEnergy> {
    if truncation == 0 || n_seeds == 0 {
        return Err(Error::InvalidArgument(
            "truncation and seed count must be >= 1".into(),
        ));
    }
    let harmonic: f64 = (1..=truncation).rev().map(|n| 1.0 / n as f64).sum();
    let analytic = 2.0 * harmonic;
    let values: Vec<f64> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let g = sample_complex_gaussian(&mut StreamKey::new(master_seed, s).rng(), truncation);
            g.iter()
                .enumerate()
                .map(|(k, v)| v.norm_sqr() / (k + 1) as f64)
                .sum::<f64>()
        })
        .collect();
    Ok(HalfEnergy {
        truncation,
        analytic,
        monte_carlo: MonteCarloEstimate::from_samples(&values),
        log_ratio: (truncation > 1).then(|| analytic / (2.0 * (truncation as f64).ln())),
    })
}

/// Radial basis and grid resolving modes 1..=n_max.
pub fn radial_setup(d: usize, n_max: usize, points_per_panel: usize) -> Result<(RadialBasis, QuadratureGrid)> {
    let zeros = bessel_zeros(BesselOrder::from_dimension(d)?, n_max)?;
    let grid = build_grid(d, zeros.get(n_max)?, points_per_panel)?;
    let basis = build_radial_basis(d, n_max, &grid)?;
    Ok((basis, grid))
}

/// [`radial_setup`] with the default quadrature order.
pub fn default_radial_setup(d: usize, n_max: usize) -> Result<(RadialBasis, QuadratureGrid)> {
    radial_setup(d, n_max, DEFAULT_POINTS_PER_PANEL)
}
