//! Argument groups shared between subcommands.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use rearrange::extrapolation::{MonotoneOperator, RademacherMode};
use rearrange::optimize::SearchBudget;
use rearrange::rearrangement::{glued_blocks, identity, parity_shift, RearrangementMap};
use rearrange::sampling::{random_measure_preserving, rng_for};
use rearrange::space::SpaceSpec;

use crate::Failure;

/// Largest depth a builder may be asked for; the table has `2^{N+1} - 1` entries.
pub const MAX_BUILDER_DEPTH: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Builder {
    Identity,
    Parity,
    Glued,
    /// Level-wise random shuffle, drawn from the run seed.
    Random,
}

impl Builder {
    pub fn build(self, depth: u32, seed: u64) -> Result<RearrangementMap, Failure> {
        if depth > MAX_BUILDER_DEPTH {
            return Err(Failure::usage("depth", format!("at most {MAX_BUILDER_DEPTH}")));
        }
        Ok(match self {
            Builder::Identity => identity(depth),
            Builder::Parity => parity_shift(depth),
            Builder::Glued => glued_blocks(depth),
            Builder::Random => random_measure_preserving(&mut rng_for(seed, 0), depth),
        })
    }
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct MapArgs {
    /// Named permutation builder.
    #[arg(long, value_enum, conflicts_with = "map")]
    pub builder: Option<Builder>,
    /// JSON map file, as written by `example`.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Depth N of the source grid D_0^N.
    #[arg(long)]
    pub depth: Option<u32>,
}

impl MapArgs {
    pub fn resolve(&self, seed: u64) -> Result<RearrangementMap, Failure> {
        match (&self.builder, &self.map) {
            (Some(b), None) => {
                let depth = self
                    .depth
                    .ok_or_else(|| Failure::usage("depth", "required with --builder"))?;
                b.build(depth, seed)
            }
            (None, Some(path)) => {
                let tau = load_map(path)?;
                if let Some(d) = self.depth {
                    if d != tau.source_depth() {
                        return Err(Failure::usage(
                            "depth",
                            format!("{d} disagrees with the map file (depth {})", tau.source_depth()),
                        ));
                    }
                }
                Ok(tau)
            }
            _ => Err(Failure::usage("builder", "give exactly one of --builder or --map")),
        }
    }
}

/// Reads a bare map or the `{"map": ...}` envelope emitted by `example`.
fn load_map(path: &PathBuf) -> Result<RearrangementMap, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage("map", format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::usage("map", e.to_string()))?;
    let inner = match value.get("result").and_then(|r| r.get("map")) {
        Some(m) => m.clone(),
        None => value,
    };
    RearrangementMap::from_json(&inner.to_string()).map_err(|e| Failure::usage("map", e.to_string()))
}

pub fn parse_space(s: &str) -> Result<SpaceSpec, String> {
    s.parse().map_err(|e: rearrange::Error| e.to_string())
}

#[derive(Args, Clone, Copy, Debug, Serialize)]
pub struct BudgetArgs {
    /// Random restarts of the norm search.
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    /// Ascent iterations per restart.
    #[arg(long, default_value_t = 400)]
    pub iters: usize,
}

impl BudgetArgs {
    pub fn budget(&self, seed: u64) -> Result<SearchBudget, Failure> {
        let b = SearchBudget {
            restarts: self.restarts,
            max_iters: self.iters,
            ..SearchBudget::with_seed(seed)
        };
        b.check().map_err(|e| Failure::usage("restarts", e.to_string()))?;
        Ok(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Square,
    Rademacher,
}

/// `rademacher_samples` switches the Rademacher average from exact enumeration to sampling.
pub fn monotone_operator(kind: OperatorKind, rademacher_samples: Option<usize>, seed: u64) -> MonotoneOperator {
    match kind {
        OperatorKind::Square => MonotoneOperator::Square,
        OperatorKind::Rademacher => MonotoneOperator::Rademacher {
            mode: match rademacher_samples {
                None => RademacherMode::Exact,
                Some(samples) => RademacherMode::Sampled { samples, seed },
            },
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    /// `γ_I = 1` everywhere.
    Ones,
    /// `γ_I = |τ(I)| / |I|` from the map.
    Map,
}

impl Weights {
    pub fn values(self, tau: &RearrangementMap) -> Vec<f64> {
        match self {
            Weights::Ones => vec![1.0; tau.domain().count()],
            Weights::Map => tau
                .domain()
                .map(|i| tau.gamma(&i).expect("inside the domain"))
                .collect(),
        }
    }
}
