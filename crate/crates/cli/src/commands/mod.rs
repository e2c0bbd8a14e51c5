mod additive;
mod basics;
mod growth;
mod lemmas;
mod selftest;
mod setops;
mod spectral;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, ExperimentConfig, Target};
use crate::report::{FieldHeader, Outcome};
use crate::CliError;

pub(crate) fn dispatch(cfg: &ExperimentConfig, targets: &[Target]) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    for t in targets {
        let f = t.field()?;
        out.fields.push(FieldHeader {
            q: t.q(),
            p: f.p(),
            n: f.n(),
            modulus: f.modulus().iter().copied().chain([1]).collect(),
        });
    }
    match &cfg.command {
        Command::Field => basics::field(cfg, targets, &mut out)?,
        Command::Group => basics::group(cfg, targets, &mut out)?,
        Command::Setops => setops::run(cfg, targets, &mut out)?,
        Command::Growth => growth::run(cfg, targets, &mut out)?,
        Command::Lemmas { lemma } => lemmas::run(cfg, targets, lemma, &mut out)?,
        Command::Additive { experiment } => additive::run(cfg, targets, *experiment, &mut out)?,
        Command::Spectral { check } => spectral::run(cfg, targets, *check, &mut out)?,
        Command::Selftest => selftest::run(cfg, targets, &mut out)?,
    }
    Ok(out)
}

/// The random stream for one field order.
pub(crate) fn rng_for(seed: u64, q: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(q);
    r
}

pub(crate) fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub(crate) fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub(crate) fn s<T: ToString>(v: T) -> String {
    v.to_string()
}
