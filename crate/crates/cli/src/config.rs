//! Resolved experiment configuration and argument parsing.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use growthlab::gf::{prime_power, FieldCtx, FieldError};
use growthlab::sl2::{GroupTable, Mode, Sl2, Sl2Error};
use serde::Serialize;

use crate::CliError;

/// Largest group order accepted by the table-based subcommands.
pub const GROUP_CAP: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Stability,
    Almostfield,
    Dichotomy,
    Tracered,
    Expansion,
    Questions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpectralCheck {
    Mixing,
    Lambda2,
    Bnp,
    M2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Subcommand)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Field arithmetic tables and axiom checks.
    Field,
    /// Group enumeration, conjugacy classes and trace identities.
    Group,
    /// Seeded set-inequality battery.
    Setops,
    /// Growth exponents and Cayley diameters over a family of generating sets.
    Growth,
    /// Explicit-constant lemma checks.
    Lemmas {
        /// `all` or a single lemma name.
        #[arg(long, default_value = "all")]
        lemma: String,
    },
    /// Sum-product and almost-field experiments.
    Additive {
        #[arg(long, value_enum)]
        experiment: Experiment,
    },
    /// Convolution mixing, spectral gap and bounded generation.
    Spectral {
        #[arg(long, value_enum)]
        check: SpectralCheck,
    },
    /// Oracle-equivalence batteries.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Field => "field",
            Command::Group => "group",
            Command::Setops => "setops",
            Command::Growth => "growth",
            Command::Lemmas { .. } => "lemmas",
            Command::Additive { .. } => "additive",
            Command::Spectral { .. } => "spectral",
            Command::Selftest => "selftest",
        }
    }

    fn default_q(&self) -> Vec<u64> {
        match self {
            Command::Field => vec![9],
            Command::Group | Command::Lemmas { .. } => vec![5],
            Command::Setops => vec![3, 5, 7],
            Command::Growth => vec![3],
            Command::Additive { experiment } => match experiment {
                Experiment::Almostfield => vec![16],
                Experiment::Questions => vec![9],
                _ => vec![27],
            },
            Command::Spectral { check } => match check {
                SpectralCheck::Mixing => vec![3, 5, 7],
                SpectralCheck::Bnp => vec![5, 7],
                SpectralCheck::Lambda2 | SpectralCheck::M2 => vec![3],
            },
            Command::Selftest => vec![2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Field orders; empty means the subcommand default.
    pub q: Vec<u64>,
    pub p: Option<u32>,
    pub n: Option<u32>,
    /// Modulus override `[a_0, ..., a_{n-1}, 1]`.
    pub modulus: Option<Vec<u32>>,
    pub mode: Mode,
    pub family: Option<String>,
    pub seed: u64,
    pub trials: Option<usize>,
    /// Maximum elementary set operations per scan.
    pub budget: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            q: Vec::new(),
            p: None,
            n: None,
            modulus: None,
            mode: Mode::Sl,
            family: None,
            seed: 0,
            trials: None,
            budget: None,
            threads: None,
            out: None,
        }
    }

    pub fn with_q(mut self, q: &[u64]) -> Self {
        self.q = q.to_vec();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = Some(trials);
        self
    }

    pub fn with_family(mut self, family: &str) -> Self {
        self.family = Some(family.to_string());
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    /// The fields to run on, validated.
    pub fn targets(&self) -> Result<Vec<Target>, CliError> {
        if let Some(m) = &self.modulus {
            if m.len() < 2 {
                return Err(CliError::ConfigInvalid("modulus needs at least two coefficients".into()));
            }
            let n = m.len() as u32 - 1;
            let p = match (self.p, self.q.as_slice()) {
                (Some(p), _) => p,
                (None, [q]) => prime_power(*q).map_err(field_invalid)?.0,
                _ => return Err(CliError::ConfigInvalid("--modulus needs --p or a single --q".into())),
            };
            if self.n.is_some_and(|k| k != n) {
                return Err(CliError::ConfigInvalid(format!("--n {} disagrees with a modulus of degree {n}", self.n.unwrap())));
            }
            if let [q] = self.q.as_slice() {
                if (p as u64).checked_pow(n) != Some(*q) {
                    return Err(CliError::ConfigInvalid(format!("modulus of degree {n} over F_{p} does not give q = {q}")));
                }
            }
            let t = Target {
                p,
                n,
                modulus: Some(m.clone()),
            };
            t.field()?;
            return Ok(vec![t]);
        }
        if let Some(p) = self.p {
            let n = self.n.unwrap_or(1);
            let q = (p as u64).checked_pow(n).unwrap_or(u64::MAX);
            let (pp, nn) = prime_power(q).map_err(field_invalid)?;
            if pp != p {
                return Err(CliError::ConfigInvalid(format!("{p} is not prime")));
            }
            return Ok(vec![Target { p, n: nn, modulus: None }]);
        }
        if self.n.is_some() {
            return Err(CliError::ConfigInvalid("--n needs --p".into()));
        }
        let qs = if self.q.is_empty() { self.command.default_q() } else { self.q.clone() };
        qs.into_iter()
            .map(|q| {
                let (p, n) = prime_power(q).map_err(field_invalid)?;
                Ok(Target { p, n, modulus: None })
            })
            .collect()
    }
}

fn field_invalid(e: FieldError) -> CliError {
    CliError::ConfigInvalid(format!("{e} ({e:?})"))
}

/// One field `F_{p^n}`, optionally with a user modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Target {
    pub p: u32,
    pub n: u32,
    pub modulus: Option<Vec<u32>>,
}

impl Target {
    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.n)
    }

    pub fn field(&self) -> Result<Arc<FieldCtx>, CliError> {
        let f = match &self.modulus {
            Some(m) => FieldCtx::with_modulus(self.p, m),
            None => FieldCtx::new(self.p, self.n),
        };
        f.map(Arc::new).map_err(field_invalid)
    }

    pub fn group(&self, mode: Mode) -> Result<Sl2, CliError> {
        Ok(Sl2::new(self.field()?, mode))
    }

    /// The group table, refused above `GROUP_CAP`.
    pub fn table(&self, mode: Mode) -> Result<Arc<GroupTable>, CliError> {
        let g = self.group(mode)?;
        if g.order() > GROUP_CAP {
            return Err(CliError::ConfigInvalid(format!(
                "group of order {} exceeds the cap {GROUP_CAP} for q = {}",
                g.order(),
                self.q()
            )));
        }
        GroupTable::new(g).map(Arc::new).map_err(|e: Sl2Error| CliError::ConfigInvalid(e.to_string()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "growthlab", version, about = "Growth, trace and mixing experiments in SL_2 over finite fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Field orders, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Vec<u64>,
    /// Characteristic, with `--n` instead of `--q`.
    #[arg(long, global = true)]
    pub p: Option<u32>,
    /// Extension degree over `F_p`.
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Modulus coefficients from the constant term up, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub modulus: Option<Vec<u32>>,
    /// `sl` or `psl`.
    #[arg(long, global = true, default_value = "sl")]
    pub mode: Mode,
    /// `pairs`, `allpairs` or `random`.
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Seed for every random family and battery.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Random cases per field; the default depends on the command.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Maximum elementary set operations per scan.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "GROWTHLAB_THREADS")]
    pub threads: Option<usize>,
    /// Directory for `summary.json` and `rows.csv`.
    #[arg(long, global = true, default_value = "growthlab-out")]
    pub out: PathBuf,
}

impl From<Cli> for ExperimentConfig {
    fn from(c: Cli) -> Self {
        let o = c.common;
        ExperimentConfig {
            command: c.command,
            q: o.q,
            p: o.p,
            n: o.n,
            modulus: o.modulus,
            mode: o.mode,
            family: o.family,
            seed: o.seed,
            trials: o.trials,
            budget: o.budget,
            threads: o.threads,
            out: Some(o.out),
        }
    }
}

/// Parses a full argument vector, program name first.
pub fn parse_args<I, T>(args: I) -> Result<ExperimentConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args).map(Into::into)
}
