//! Settings from a `key = value` file overlaid with command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use lpseries::analysis::{doubling_ladder, BasisFamily, BracketOptions};
use lpseries::series::CoefficientSequence;

#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Plain-text `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dimension d of the unit ball.
    #[arg(long, global = true)]
    pub dim: Option<String>,
    /// Number of modes (the truncation N for sampling commands).
    #[arg(long, global = true)]
    pub nmax: Option<String>,
    /// Exponent, or a comma-separated list where several are accepted.
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// Exponent interval `lo:hi` for the critical-exponent search.
    #[arg(long = "p-range", global = true)]
    pub p_range: Option<String>,
    /// powerlaw:a:alpha | invzero[:scale] | gibbs | sparse:FILE | explicit:FILE
    #[arg(long, global = true)]
    pub seq: Option<String>,
    /// radial | constant
    #[arg(long, global = true)]
    pub basis: Option<String>,
    /// Truncations, `64,128,256,512,1024` or `64x5` for five doublings.
    #[arg(long, global = true)]
    pub ladder: Option<String>,
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    #[arg(long = "master-seed", global = true)]
    pub master_seed: Option<String>,
    /// Run directory; created if missing, existing files are never replaced.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long = "points-per-panel", global = true)]
    pub points_per_panel: Option<String>,
    /// Bisection tolerance in p.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    /// Comma-separated ε values for the exponential-moment probe.
    #[arg(long, global = true)]
    pub eps: Option<String>,
    /// Number of stages K of the adversarial construction.
    #[arg(long, global = true)]
    pub stages: Option<String>,
    /// Largest mode index searched by the adversarial construction.
    #[arg(long, global = true)]
    pub cap: Option<String>,
    /// Fault to inject into `verify` (corrupted_beta).
    #[arg(long, global = true)]
    pub fault: Option<String>,
    /// Comma-separated check ids for `verify`.
    #[arg(long, global = true)]
    pub checks: Option<String>,
}

/// Merged settings. Keys use underscores (`master_seed`, `p_range`).
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    out: Option<PathBuf>,
    config_dir: Option<PathBuf>,
}

const KEYS: [&str; 17] = [
    "dim",
    "nmax",
    "p",
    "p_range",
    "seq",
    "basis",
    "ladder",
    "seeds",
    "master_seed",
    "points_per_panel",
    "tol",
    "eps",
    "stages",
    "cap",
    "fault",
    "checks",
    "out",
];

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) && key != "workers" {
            bail!("line {}: unknown key {key:?}", i + 1);
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut settings = Settings::default();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            settings.values =
                parse_config_text(&text).with_context(|| format!("parsing config {}", path.display()))?;
            settings.config_dir = path.parent().map(Path::to_path_buf);
        }
        let flags = [
            ("dim", &args.dim),
            ("nmax", &args.nmax),
            ("p", &args.p),
            ("p_range", &args.p_range),
            ("seq", &args.seq),
            ("basis", &args.basis),
            ("ladder", &args.ladder),
            ("seeds", &args.seeds),
            ("master_seed", &args.master_seed),
            ("points_per_panel", &args.points_per_panel),
            ("tol", &args.tol),
            ("eps", &args.eps),
            ("stages", &args.stages),
            ("cap", &args.cap),
            ("fault", &args.fault),
            ("checks", &args.checks),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                settings.values.insert(key.to_string(), v.clone());
            }
        }
        settings.out = match (&args.out, settings.values.remove("out")) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(p)) => Some(PathBuf::from(p)),
            (None, None) => None,
        };
        settings.values.remove("workers");
        Ok(settings)
    }

    #[cfg(test)]
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Settings {
            values: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            ..Settings::default()
        }
    }

    pub fn out_dir(&self, command: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("lpseries-out").join(command))
    }

    /// The settings that determine a run's outputs, for the manifest.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|e| anyhow!("--{}: cannot parse {s:?}: {e}", key.replace('_', "-"))),
        }
    }

    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => parse_list(s).with_context(|| format!("--{}", key.replace('_', "-"))),
        }
    }

    pub fn ladder(&self, default: Vec<usize>) -> Result<Vec<usize>> {
        match self.raw("ladder") {
            None => Ok(default),
            Some(s) => parse_ladder(s).context("--ladder"),
        }
    }

    pub fn p_range(&self) -> Result<BracketOptions> {
        let mut options = BracketOptions::default();
        if let Some(s) = self.raw("p_range") {
            let (lo, hi) = s
                .split_once(':')
                .ok_or_else(|| anyhow!("--p-range: expected lo:hi, got {s:?}"))?;
            options.p_min = lo.trim().parse().context("--p-range lower end")?;
            options.p_max = hi.trim().parse().context("--p-range upper end")?;
        }
        options.tol = self.get("tol", options.tol)?;
        Ok(options)
    }

    pub fn family(&self, d: usize) -> Result<BasisFamily> {
        match self.raw("basis").unwrap_or("radial") {
            "radial" => Ok(BasisFamily::Radial { d }),
            "constant" | "constant-modulus" | "torus" => Ok(BasisFamily::ConstantModulus),
            other => bail!("--basis: expected radial or constant, got {other:?}"),
        }
    }

    pub fn sequence(&self, d: usize) -> Result<CoefficientSequence> {
        let spec = self.raw("seq").unwrap_or("powerlaw:1:1");
        parse_sequence(spec, d, self.config_dir.as_deref()).with_context(|| format!("--seq {spec}"))
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("{t:?}: {e}")))
        .collect()
}

pub fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    if let Some((first, rungs)) = s.split_once('x') {
        return Ok(doubling_ladder(first.trim().parse()?, rungs.trim().parse()?));
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("{t:?}: {e}")))
        .collect()
}

fn numbers(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| anyhow!("{t:?}: {e}")))
        .collect()
}

fn read_relative(path: &str, base: Option<&Path>) -> Result<String> {
    let p = Path::new(path);
    let full = match base {
        Some(b) if p.is_relative() && !p.exists() => b.join(p),
        _ => p.to_path_buf(),
    };
    fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))
}

pub fn parse_sequence(spec: &str, d: usize, base: Option<&Path>) -> Result<CoefficientSequence> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let seq = match kind {
        "powerlaw" => {
            let parts: Vec<&str> = rest.split(':').filter(|s| !s.is_empty()).collect();
            let (a, alpha) = match parts.as_slice() {
                [] => (1.0, 1.0),
                [a, alpha] => (a.parse()?, alpha.parse()?),
                _ => bail!("expected powerlaw:a:alpha"),
            };
            CoefficientSequence::power_law(a, alpha)?
        }
        "invzero" => {
            let scale = if rest.is_empty() { 1.0 } else { rest.parse()? };
            CoefficientSequence::inverse_zero(d, scale)?
        }
        "gibbs" => CoefficientSequence::gibbs_disc(),
        "sparse" => {
            let text = read_relative(rest, base)?;
            let mut indices = Vec::new();
            let mut values = Vec::new();
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
                let mut it = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty());
                let (Some(i), Some(v), None) = (it.next(), it.next(), it.next()) else {
                    bail!("sparse line {line:?}: expected `index,value`");
                };
                indices.push(i.parse::<usize>()?);
                values.push(v.parse::<f64>()?);
            }
            CoefficientSequence::sparse(indices, values)?
        }
        "explicit" => CoefficientSequence::explicit(numbers(&read_relative(rest, base)?)?)?,
        other => bail!("unknown sequence kind {other:?}"),
    };
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text() {
        let map = parse_config_text("# run\ndim = 3\nmaster-seed=7 # trailing\n\n").unwrap();
        assert_eq!(map["dim"], "3");
        assert_eq!(map["master_seed"], "7");
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("dim 3").is_err());
    }

    #[test]
    fn ladders() {
        assert_eq!(parse_ladder("64x5").unwrap(), vec![64, 128, 256, 512, 1024]);
        assert_eq!(parse_ladder("8, 16,32").unwrap(), vec![8, 16, 32]);
        assert!(parse_ladder("8,a").is_err());
    }

    #[test]
    fn sequences() {
        assert_eq!(
            parse_sequence("powerlaw:2:1.5", 2, None).unwrap(),
            CoefficientSequence::power_law(2.0, 1.5).unwrap()
        );
        assert_eq!(
            parse_sequence("powerlaw", 2, None).unwrap(),
            CoefficientSequence::power_law(1.0, 1.0).unwrap()
        );
        assert_eq!(
            parse_sequence("invzero", 3, None).unwrap(),
            CoefficientSequence::inverse_zero(3, 1.0).unwrap()
        );
        assert!(parse_sequence("powerlaw:1:0.4", 2, None).is_err());
        assert!(parse_sequence("wavelet", 2, None).is_err());
    }

    #[test]
    fn typed_access() {
        let s = Settings::from_pairs(&[("dim", "3"), ("p", "2, 4.5"), ("p_range", "3:9"), ("basis", "constant")]);
        assert_eq!(s.get("dim", 2usize).unwrap(), 3);
        assert_eq!(s.get("nmax", 10usize).unwrap(), 10);
        assert_eq!(s.list("p", &[2.0]).unwrap(), vec![2.0, 4.5]);
        let r = s.p_range().unwrap();
        assert_eq!((r.p_min, r.p_max), (3.0, 9.0));
        assert_eq!(s.family(3).unwrap(), BasisFamily::ConstantModulus);
        assert!(Settings::from_pairs(&[("dim", "x")]).get("dim", 2usize).is_err());
    }
}
