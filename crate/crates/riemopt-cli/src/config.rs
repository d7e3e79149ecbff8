//! Flat `key = value` run configuration, shared by the config file and the
//! command-line flags.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use riemopt::manifolds::ManifoldSpec;
use riemopt::subsolvers::ProxMethod;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    Karcher,
    Online,
    Minmax,
    Geomtest,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::Karcher => "karcher",
            CommandKind::Online => "online",
            CommandKind::Minmax => "minmax",
            CommandKind::Geomtest => "geomtest",
        })
    }
}

impl FromStr for CommandKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        <CommandKind as ValueEnum>::from_str(s, false).map_err(|_| {
            anyhow!("unknown command `{s}` (expected karcher, online, minmax or geomtest)")
        })
    }
}

/// Largest sizes accepted without `paper_scale`.
pub const DESK_HYPERBOLIC: usize = 500;
pub const DESK_SPD: usize = 20;
pub const DESK_ANCHORS: usize = 20;
pub const PAPER_ANCHORS: usize = 50;

/// Everything that determines a run together with its seed. Unset optional
/// fields take per-command defaults at run time.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub manifold: Option<ManifoldSpec>,
    pub n: Option<usize>,
    pub samples: usize,
    pub iters: Option<usize>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub lambda: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub gap_cadence: usize,
    pub subsolver: ProxMethod,
    pub inner_steps: Option<usize>,
    pub paper_scale: bool,
    pub grid: bool,
    pub rbar: f64,
    pub mu: f64,
    pub drift: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            manifold: None,
            n: None,
            samples: 1000,
            iters: None,
            epsilon: None,
            eta: None,
            lambda: 1e-2,
            seed: 0,
            out: None,
            gap_cadence: 10,
            subsolver: ProxMethod::Prgd,
            inner_steps: None,
            paper_scale: false,
            grid: false,
            rbar: 0.01,
            mu: 0.0,
            drift: 0.1,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

impl RunConfig {
    /// Parse a config file. Blank lines and `#` comments are skipped; every
    /// error names its line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line}: expected `key = value`, got `{content}`"))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                bail!("line {line}: `{key}` is already set on line {first}");
            }
            seen.push((key.to_string(), line));
            cfg.set(key, value)
                .with_context(|| format!("line {line}"))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "command" => self.command = Some(parse_value(key, value)?),
            "manifold" => self.manifold = Some(parse_value(key, value)?),
            "n" => self.n = Some(parse_value(key, value)?),
            "samples" => self.samples = parse_value(key, value)?,
            "iters" => self.iters = Some(parse_value(key, value)?),
            "epsilon" => self.epsilon = Some(parse_value(key, value)?),
            "eta" => self.eta = Some(parse_value(key, value)?),
            "lambda" => self.lambda = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "gap_cadence" => self.gap_cadence = parse_value(key, value)?,
            "subsolver" => self.subsolver = parse_value(key, value)?,
            "inner_steps" => self.inner_steps = Some(parse_value(key, value)?),
            "paper_scale" => self.paper_scale = parse_value(key, value)?,
            "grid" => self.grid = parse_value(key, value)?,
            "rbar" => self.rbar = parse_value(key, value)?,
            "mu" => self.mu = parse_value(key, value)?,
            "drift" => self.drift = parse_value(key, value)?,
            other => bail!("unknown key `{other}`"),
        }
        Ok(())
    }

    /// The config as parseable text; floats use shortest round-trip form.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(c) = self.command {
            put("command", c.to_string());
        }
        if let Some(m) = self.manifold {
            put("manifold", m.to_string());
        }
        if let Some(n) = self.n {
            put("n", n.to_string());
        }
        put("samples", self.samples.to_string());
        if let Some(t) = self.iters {
            put("iters", t.to_string());
        }
        if let Some(e) = self.epsilon {
            put("epsilon", format!("{e:?}"));
        }
        if let Some(e) = self.eta {
            put("eta", format!("{e:?}"));
        }
        put("lambda", format!("{:?}", self.lambda));
        put("seed", self.seed.to_string());
        if let Some(o) = &self.out {
            put("out", o.display().to_string());
        }
        put("gap_cadence", self.gap_cadence.to_string());
        put("subsolver", self.subsolver.to_string());
        if let Some(k) = self.inner_steps {
            put("inner_steps", k.to_string());
        }
        put("paper_scale", self.paper_scale.to_string());
        put("grid", self.grid.to_string());
        put("rbar", format!("{:?}", self.rbar));
        put("mu", format!("{:?}", self.mu));
        put("drift", format!("{:?}", self.drift));
        s
    }

    /// Settle which command runs: the subcommand, the file's `command`, or
    /// both when they agree.
    pub fn with_command(mut self, command: Option<CommandKind>) -> Result<Self> {
        self.command = match (command, self.command) {
            (Some(a), Some(b)) if a != b => {
                bail!("the config file is for `{b}` but `{a}` was requested")
            }
            (Some(a), _) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => bail!("missing required field `command`"),
        };
        Ok(self)
    }

    pub fn manifold(&self) -> Result<ManifoldSpec> {
        self.manifold.ok_or_else(|| {
            anyhow!(
                "missing required field `manifold` (set `manifold = kind:dim` or pass --manifold)"
            )
        })
    }

    pub fn anchors(&self) -> usize {
        self.n
            .unwrap_or(if self.paper_scale { PAPER_ANCHORS } else { 10 })
    }

    /// Range checks, and the desk-scale limits unless `paper_scale` is set.
    pub fn validate(&self) -> Result<()> {
        let command = self
            .command
            .ok_or_else(|| anyhow!("missing required field `command`"))?;
        if command != CommandKind::Geomtest {
            self.manifold()?;
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(anyhow!("`{name}` must be positive and finite, got {v}"))
            }
        };
        for (name, v) in [("epsilon", self.epsilon), ("eta", self.eta)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        positive("lambda", self.lambda)?;
        positive("rbar", self.rbar)?;
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            bail!("`mu` must be nonnegative, got {}", self.mu);
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            bail!("`drift` must be nonnegative, got {}", self.drift);
        }
        for (name, v) in [
            ("n", self.n),
            ("iters", self.iters),
            ("inner_steps", self.inner_steps),
            ("samples", Some(self.samples)),
            ("gap_cadence", Some(self.gap_cadence)),
        ] {
            if v == Some(0) {
                bail!("`{name}` must be at least 1");
            }
        }
        if !self.paper_scale {
            let too_big = match self.manifold {
                Some(ManifoldSpec::Hyperbolic(d)) => d > DESK_HYPERBOLIC,
                Some(ManifoldSpec::Spd(d)) => d > DESK_SPD,
                _ => false,
            };
            if too_big || self.anchors() > DESK_ANCHORS {
                bail!(
                    "sizes above hyperbolic:{DESK_HYPERBOLIC}, spd:{DESK_SPD} or n = {DESK_ANCHORS} need `paper_scale = true` (--paper-scale)"
                );
            }
        }
        Ok(())
    }
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// Flat `key = value` config file (see docs/config.md).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base manifold as `euclidean:<dim>`, `hyperbolic:<dim>` or `spd:<dim>`.
    #[arg(long)]
    pub manifold: Option<ManifoldSpec>,
    /// Number of anchors (karcher).
    #[arg(long)]
    pub n: Option<usize>,
    /// Random configurations per manifold (geomtest).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Rounds to run.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Target gap; picks the round count from the convergence theorem (minmax).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Proximal parameter or online step size.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Inner projected gradient step.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for the trace and the plot.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Measure the duality gap every this many rounds.
    #[arg(long)]
    pub gap_cadence: Option<usize>,
    /// Certified prox solver: prgd, crgd or rgd.
    #[arg(long)]
    pub subsolver: Option<ProxMethod>,
    /// Fixed number of inner gradient steps per prox solve.
    #[arg(long)]
    pub inner_steps: Option<usize>,
    /// Allow the full experiment sizes (H^5000, SPD 100x100, n = 50).
    #[arg(long)]
    pub paper_scale: bool,
    /// Pick lambda and eta by grid search before the run (karcher).
    #[arg(long)]
    pub grid: bool,
    /// Radius of the adversary's balls (karcher).
    #[arg(long)]
    pub rbar: Option<f64>,
    /// Strong convexity of the test saddle (minmax).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Step of the target random walk (online).
    #[arg(long)]
    pub drift: Option<f64>,
}

impl RunArgs {
    /// Read the config file if given, then apply the flags on top.
    pub fn resolve(&self, command: Option<CommandKind>) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        let mut cfg = base.with_command(command)?;
        macro_rules! over {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v.into();
                }
            )*};
        }
        over!(manifold, n, iters, epsilon, eta, out, inner_steps);
        over!(
            samples,
            lambda,
            seed,
            gap_cadence,
            subsolver,
            rbar,
            mu,
            drift
        );
        cfg.paper_scale |= self.paper_scale;
        cfg.grid |= self.grid;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emit_then_parse_is_identity() {
        let cfg = RunConfig {
            command: Some(CommandKind::Minmax),
            manifold: Some(ManifoldSpec::Hyperbolic(7)),
            epsilon: Some(1e-4),
            eta: Some(0.1 + 0.2),
            out: Some(PathBuf::from("runs/a b")),
            inner_steps: Some(4),
            subsolver: ProxMethod::Crgd,
            mu: 0.3,
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(&cfg.emit()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_line() {
        let err = RunConfig::parse("seed = 3\n\n# note\nspeed = 4\n").unwrap_err();
        assert!(
            format!("{err:#}").contains("line 4: unknown key `speed`"),
            "{err:#}"
        );
        let err = RunConfig::parse("iters = many").unwrap_err();
        assert!(format!("{err:#}").starts_with("line 1"), "{err:#}");
        let err = RunConfig::parse("seed = 1\nseed = 2").unwrap_err();
        assert!(
            format!("{err:#}").contains("already set on line 1"),
            "{err:#}"
        );
    }

    #[test]
    fn missing_manifold_names_the_field() {
        let cfg = RunConfig::default()
            .with_command(Some(CommandKind::Karcher))
            .unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("`manifold`"), "{err}");
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "manifold = spd:3\nseed = 4\niters = 9\n").unwrap();
        let args = RunArgs {
            config: Some(path),
            seed: Some(11),
            ..Default::default()
        };
        let cfg = args.resolve(Some(CommandKind::Karcher)).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.iters, Some(9));
        assert_eq!(cfg.manifold, Some(ManifoldSpec::Spd(3)));
    }

    #[test]
    fn paper_sizes_need_the_flag() {
        let mut cfg = RunConfig {
            command: Some(CommandKind::Karcher),
            manifold: Some(ManifoldSpec::Hyperbolic(5000)),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.paper_scale = true;
        cfg.validate().unwrap();
        assert_eq!(cfg.anchors(), PAPER_ANCHORS);
    }

    #[test]
    fn file_and_subcommand_must_agree() {
        let cfg = RunConfig::parse("command = online").unwrap();
        assert!(cfg
            .clone()
            .with_command(Some(CommandKind::Karcher))
            .is_err());
        assert_eq!(
            cfg.with_command(None).unwrap().command,
            Some(CommandKind::Online)
        );
    }
}
