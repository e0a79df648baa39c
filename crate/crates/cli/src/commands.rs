use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use lpseries::analysis::{
    self, alpha_star, bracket_pcr_on, construct_diverging_sequence, default_ladder, divergence_exponent_bound,
    doubling_ladder, expected_lp_pth_power, fernique_probe, gibbs_stability, moment_constants,
    monte_carlo_lp_pth_power, radial_setup, BasisFamily, EnergyLadder, DEFAULT_ADVERSARIAL_CAP,
};
use lpseries::basis::{delta_bound, mode_norm_table, ConstantModulusBasis};
use lpseries::quad::DEFAULT_POINTS_PER_PANEL;
use lpseries::rng::StreamKey;
use lpseries::series::{draw_series, MonteCarloEstimate, SeriesBasis};
use lpseries::verify::{run_verify, Fault, VerifyOptions};
use lpseries::Error;
use serde::Serialize;

use crate::config::Settings;
use crate::output::{num, RunDir};

fn ppp(s: &Settings) -> Result<usize> {
    s.get("points_per_panel", DEFAULT_POINTS_PER_PANEL)
}

fn master_seed(s: &Settings) -> Result<u64> {
    s.get("master_seed", 0u64)
}

pub fn basis(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 2usize)?;
    let n_max = s.get("nmax", 10usize)?;
    let ps = s.list("p", &[2.0])?;
    let (basis, grid) = radial_setup(d, n_max, ppp(s)?)?;
    run.write("basis.csv", &basis.to_csv(n_max, &ps, &grid)?)?;
    println!("basis: d = {d}, {n_max} modes -> {}", run.path().join("basis.csv").display());
    run.finish("basis", None, s.echo())
}

pub fn norms(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 2usize)?;
    let n_max = s.get("nmax", 1000usize)?;
    let ps = s.list("p", &[6.0])?;
    let table = mode_norm_table(d, n_max, &ps, ppp(s)?)?;
    let mut csv = String::from("n,z_n,beta_n");
    for p in &ps {
        let _ = write!(csv, ",lp_norm@{p},delta@{p}");
    }
    csv.push('\n');
    for n in 1..=n_max {
        let _ = write!(csv, "{n},{},{}", num(table.zeros()[n - 1]), num(table.betas()[n - 1]));
        for (j, p) in ps.iter().enumerate() {
            let _ = write!(csv, ",{},{}", num(table.norms(j)[n - 1]), num(delta_bound(n, *p, d)));
        }
        csv.push('\n');
    }
    run.write("norms.csv", &csv)?;
    println!("norms: d = {d}, {n_max} modes, p = {ps:?}");
    run.finish("norms", None, s.echo())
}

#[derive(Serialize)]
struct DrawSummary {
    seed: u64,
    l2_squared: f64,
    l4_fourth: f64,
}

pub fn sample(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 2usize)?;
    let n = s.get("nmax", 32usize)?;
    let seeds = s.get("seeds", 1usize)?;
    let master = master_seed(s)?;
    let c = s.sequence(d)?;
    let (basis, grid) = radial_setup(d, n, ppp(s)?)?;
    let mut csv = String::from("seed,r,re,im\n");
    let mut summary = Vec::with_capacity(seeds);
    for seed in 0..seeds as u64 {
        let draw = draw_series(&c, &basis, n, &grid, StreamKey::new(master, seed))?;
        let mut l2 = 0.0;
        let mut l4 = 0.0;
        for ((r, w), f) in grid.nodes().iter().zip(grid.weights()).zip(&draw.field) {
            let _ = writeln!(csv, "{seed},{},{},{}", num(*r), num(f.re), num(f.im));
            l2 += w * f.norm_sqr();
            l4 += w * f.norm_sqr().powi(2);
        }
        summary.push(DrawSummary {
            seed,
            l2_squared: l2,
            l4_fourth: l4,
        });
    }
    run.write("draws.csv", &csv)?;
    run.write_json("draws.json", &summary)?;
    println!("sample: {seeds} draws of F^{n} on D^{d}");
    run.finish("sample", Some(master), s.echo())
}

#[derive(Serialize)]
struct ExpectedNormReport {
    family: BasisFamily,
    #[serde(rename = "N")]
    n: usize,
    p: f64,
    d_p: f64,
    #[serde(rename = "M_N")]
    m_n: f64,
    monte_carlo: Option<MonteCarloEstimate>,
    z_score: Option<f64>,
}

pub fn expected_norm(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 2usize)?;
    let n = s.get("nmax", 50usize)?;
    let p = s.get("p", 4.0)?;
    let seeds = s.get("seeds", 0usize)?;
    let master = master_seed(s)?;
    let c = s.sequence(d)?;
    let family = s.family(d)?;
    let (m_n, monte_carlo) = match family {
        BasisFamily::Radial { d } => {
            let (basis, grid) = radial_setup(d, n, ppp(s)?)?;
            let m_n = expected_lp_pth_power(&c, SeriesBasis::Radial { basis: &basis, grid: &grid }, n, p)?;
            let mc = if seeds > 0 {
                Some(monte_carlo_lp_pth_power(&c, &basis, &grid, n, p, seeds, master)?)
            } else {
                None
            };
            (m_n, mc)
        }
        BasisFamily::ConstantModulus => {
            let m_n = expected_lp_pth_power(&c, SeriesBasis::ConstantModulus(&ConstantModulusBasis), n, p)?;
            (m_n, None)
        }
    };
    let report = ExpectedNormReport {
        family,
        n,
        p,
        d_p: moment_constants(p)?.d_p,
        m_n,
        z_score: monte_carlo.map(|mc| mc.z_score(m_n)),
        monte_carlo,
    };
    run.write_json("expected_norm.json", &report)?;
    println!("expected-norm: M_N = {m_n:.10e}");
    run.finish("expected-norm", Some(master), s.echo())
}

fn ladder_csv(rows: impl IntoIterator<Item = (f64, usize, f64)>) -> String {
    let mut csv = String::from("p,N,M_N\n");
    for (p, n, m) in rows {
        let _ = writeln!(csv, "{p},{n},{}", num(m));
    }
    csv
}

pub fn classify(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 3usize)?;
    let p = s.get("p", 4.0)?;
    let ladder = s.ladder(default_ladder())?;
    let c = s.sequence(d)?;
    let family = s.family(d)?;
    let energy = EnergyLadder::new(&c, family, &ladder, ppp(s)?)?;
    let verdict = energy.classify(p)?;
    run.write(
        "ladder.csv",
        &ladder_csv(verdict.ladder.iter().map(|pt| (p, pt.n, pt.m_n))),
    )?;
    run.write_json("verdict.json", &verdict)?;
    println!(
        "classify: p = {p}: {:?} (growth exponent {:.4})",
        verdict.verdict, verdict.fitted_growth_exponent
    );
    run.finish("classify", None, s.echo())
}

pub fn pcr(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 3usize)?;
    let ladder = s.ladder(default_ladder())?;
    let options = s.p_range()?;
    let c = s.sequence(d)?;
    let family = s.family(d)?;
    let points = ppp(s)?;
    let energy = EnergyLadder::new(&c, family, &ladder, points)?;
    let bracket = bracket_pcr_on(&energy, &c, family, options, points)?;
    let mut rows = Vec::new();
    for probe in &bracket.probes {
        for (n, m) in energy.rungs().iter().zip(energy.expected_norms(probe.p)?) {
            rows.push((probe.p, *n, m));
        }
    }
    run.write("ladder.csv", &ladder_csv(rows))?;
    run.write_json("pcr.json", &bracket)?;
    println!(
        "pcr: p_cr in [{}, {}]; theorem bracket [{}, {}]",
        bracket.lower, bracket.upper, bracket.theorem_bracket.lower, bracket.theorem_bracket.upper
    );
    run.finish("pcr", None, s.echo())
}

#[derive(Serialize)]
struct AlphaStarReport {
    d: usize,
    ladder: Vec<usize>,
    alpha_star: f64,
    #[serde(with = "analysis::extended_f64")]
    divergence_exponent_bound: f64,
}

pub fn alpha_star_cmd(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 3usize)?;
    let ladder = s.ladder(doubling_ladder(64, 8))?;
    let c = s.sequence(d)?;
    let a = alpha_star(&c, d, &ladder)?;
    let report = AlphaStarReport {
        d,
        ladder,
        alpha_star: a,
        divergence_exponent_bound: divergence_exponent_bound(a, d),
    };
    run.write_json("alpha_star.json", &report)?;
    println!("alpha-star: {a:.6}, divergence above p = {}", report.divergence_exponent_bound);
    run.finish("alpha-star", None, s.echo())
}

#[derive(Serialize)]
struct AdversarialReport {
    status: &'static str,
    p: f64,
    stages: usize,
    cap: usize,
    indices: Vec<usize>,
    norms: Vec<f64>,
    values: Vec<f64>,
    message: Option<String>,
}

pub fn adversarial(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 2usize)?;
    let p = s.get("p", 6.0)?;
    let stages = s.get("stages", 4usize)?;
    let cap = s.get("cap", DEFAULT_ADVERSARIAL_CAP)?;
    let family = s.family(d)?;
    let report = match construct_diverging_sequence(family, p, stages, cap, ppp(s)?) {
        Ok(seq) => {
            let mut csv = String::from("k,n_k,lp_norm,c\n");
            for (k, ((n, e), c)) in seq.indices.iter().zip(&seq.norms).zip(&seq.values).enumerate() {
                let _ = writeln!(csv, "{},{n},{},{}", k + 1, num(*e), num(*c));
            }
            run.write("adversarial.csv", &csv)?;
            println!("adversarial: indices {:?}", seq.indices);
            AdversarialReport {
                status: "constructed",
                p,
                stages,
                cap,
                indices: seq.indices,
                norms: seq.norms,
                values: seq.values,
                message: None,
            }
        }
        Err(e @ Error::NoSuchSequence { .. }) => {
            println!("adversarial: {e}");
            AdversarialReport {
                status: "no_such_sequence",
                p,
                stages,
                cap,
                indices: Vec::new(),
                norms: Vec::new(),
                values: Vec::new(),
                message: Some(e.to_string()),
            }
        }
        Err(e) => return Err(e.into()),
    };
    run.write_json("adversarial.json", &report)?;
    run.finish("adversarial", None, s.echo())
}

#[derive(Serialize)]
struct FernRow {
    eps: f64,
    #[serde(with = "analysis::extended_f64")]
    mean: f64,
    #[serde(with = "analysis::extended_f64")]
    mean_doubled_seeds: f64,
    #[serde(with = "analysis::extended_f64")]
    relative_change: f64,
}

pub fn fernique(s: &Settings, mut run: RunDir) -> Result<()> {
    let d = s.get("dim", 2usize)?;
    let n = s.get("nmax", 100usize)?;
    let p = s.get("p", 4.0)?;
    let eps = s.list("eps", &[0.0, 1e-3, 1e-2])?;
    let seeds = s.get("seeds", 1000usize)?;
    let master = master_seed(s)?;
    let c = s.sequence(d)?;
    let (basis, grid) = radial_setup(d, n, ppp(s)?)?;
    let a = fernique_probe(&c, &basis, &grid, p, n, &eps, seeds, master)?;
    let b = fernique_probe(&c, &basis, &grid, p, n, &eps, 2 * seeds, master)?;
    let rows: Vec<FernRow> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| FernRow {
            eps: x.eps,
            mean: x.mean,
            mean_doubled_seeds: y.mean,
            relative_change: (y.mean - x.mean).abs() / x.mean,
        })
        .collect();
    let mut csv = String::from("eps,mean,mean_doubled_seeds,relative_change\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(r.eps),
            num(r.mean),
            num(r.mean_doubled_seeds),
            num(r.relative_change)
        );
    }
    run.write("fernique.csv", &csv)?;
    run.write_json("fernique.json", &rows)?;
    println!("fernique: {} eps values, {seeds} and {} seeds", rows.len(), 2 * seeds);
    run.finish("fernique", Some(master), s.echo())
}

#[derive(Serialize)]
struct GibbsReport {
    stability: analysis::GibbsStability,
    min_weight: f64,
    max_weight: f64,
    stable: bool,
}

pub fn gibbs(s: &Settings, mut run: RunDir) -> Result<()> {
    let n = s.get("nmax", 128usize)?;
    let seeds = s.get("seeds", 10_000usize)?;
    let master = master_seed(s)?;
    let (coarse, fine, stability) = gibbs_stability(n, seeds, master, ppp(s)?)?;
    let mut csv = String::from("seed,weight_N,weight_2N\n");
    for (k, (a, b)) in coarse.weights.iter().zip(&fine.weights).enumerate() {
        let _ = writeln!(csv, "{k},{},{}", num(*a), num(*b));
    }
    run.write("weights.csv", &csv)?;
    const BINS: usize = 20;
    let mut counts = [[0usize; 2]; BINS];
    for (j, w) in [&coarse.weights, &fine.weights].into_iter().enumerate() {
        for v in w {
            // Bins (k/20, (k+1)/20]; the weights live in (0, 1].
            let k = ((v * BINS as f64).ceil() as usize).clamp(1, BINS) - 1;
            counts[k][j] += 1;
        }
    }
    let mut hist = String::from("bin_lo,bin_hi,count_N,count_2N\n");
    for (k, c) in counts.iter().enumerate() {
        let _ = writeln!(
            hist,
            "{},{},{},{}",
            num(k as f64 / BINS as f64),
            num((k + 1) as f64 / BINS as f64),
            c[0],
            c[1]
        );
    }
    run.write("histogram.csv", &hist)?;
    let report = GibbsReport {
        stability,
        min_weight: coarse.min.min(fine.min),
        max_weight: coarse.max.max(fine.max),
        stable: stability.shift_in_std_errors <= 3.0,
    };
    run.write_json("gibbs.json", &report)?;
    println!(
        "gibbs: mean weight {:.6} (N = {n}), {:.6} (N = {}), shift {:.2} s.e.",
        stability.coarse.mean,
        stability.fine.mean,
        2 * n,
        stability.shift_in_std_errors
    );
    run.finish("gibbs", Some(master), s.echo())
}

/// Returns whether every check passed.
pub fn verify(s: &Settings, mut run: RunDir) -> Result<bool> {
    let mut options = VerifyOptions::default();
    options.master_seed = s.get("master_seed", options.master_seed)?;
    options.fault = match s.get("fault", String::new())?.as_str() {
        "" | "none" => None,
        "corrupted_beta" => Some(Fault::CorruptedBeta),
        other => bail!("--fault: unknown fault {other:?}"),
    };
    let checks = s.get("checks", String::new())?;
    if !checks.is_empty() {
        options.only = Some(checks.split(',').map(|c| c.trim().to_string()).collect());
    }
    let (report, timings) = run_verify(&options).context("running checks")?;
    for (check, t) in report.checks.iter().zip(&timings) {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} [{:>2}] {:<18} {:>8.2}s", check.criterion, check.id, t.seconds);
        if !check.passed {
            if let Some(e) = &check.error {
                println!("       error: {e}");
            }
            println!("       expected: {}", check.expected);
            for m in &check.measured {
                println!("       measured {} = {}", m.name, m.value);
            }
        }
    }
    run.write("report.json", &report.to_json())?;
    run.write_json("timings.json", &timings)?;
    run.finish("verify", Some(options.master_seed), s.echo())?;
    Ok(report.all_passed)
}
