use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use causalproc::locc::{monotonicity_probe, Direction, LoccSetting, ProbeMeasure};
use causalproc::measures::{marginal_entropy, von_neumann_entropy};
use causalproc::network::{fig6_small, network_experiment, unitary_experiment, GateMode, NetworkSpec};
use causalproc::optimizer::{
    channel_coherent_information, entanglement_generation_bound, lo_optimized_ci_with, regularized_ci_estimate,
    LoFamily, OptimizerConfig,
};
use causalproc::process::{validate, ProcessOperator};
use causalproc::{LabeledOperator, QuantumMap};

use crate::json;
use crate::{Command, MeasureArg, ModeArg, SettingArg};

pub struct Output {
    pub json: String,
    pub code: u8,
}

fn ok<T: Serialize>(value: &T) -> Result<Output> {
    Ok(Output {
        json: json::to_string(value)?,
        code: 0,
    })
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The optimizer configuration with a mandatory seed, from `--seed` or the file.
fn config(path: Option<&Path>, seed: Option<u64>) -> Result<OptimizerConfig> {
    let (mut cfg, file_seed) = match path {
        Some(p) => {
            let raw: serde_json::Value = read(p)?;
            let has_seed = raw.get("seed").is_some();
            (serde_json::from_value::<OptimizerConfig>(raw)?, has_seed)
        }
        None => (OptimizerConfig::default(), false),
    };
    match seed {
        Some(s) => cfg.seed = s,
        None if file_seed => {}
        None => bail!("a seed is required (--seed or \"seed\" in the configuration)"),
    }
    cfg.check()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Entropies {
    target: f64,
    whole: f64,
}

#[derive(Serialize)]
struct CiOutput {
    target: Vec<String>,
    value_bits: f64,
    entropies: Entropies,
}

pub fn run(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Validate { file } => {
            let w: ProcessOperator = read(file)?;
            let report = validate(&w);
            let mut out = ok(&report)?;
            out.code = if report.valid { 0 } else { 2 };
            Ok(out)
        }
        Command::Ci { file, target } => {
            let rho: LabeledOperator = read(file)?;
            let t = marginal_entropy(&rho, target)?;
            let whole = von_neumann_entropy(&rho)?;
            ok(&CiOutput {
                target: target.clone(),
                value_bits: t - whole,
                entropies: Entropies { target: t, whole },
            })
        }
        Command::ChannelQ { file, config: c, seed } => {
            let m: QuantumMap = read(file)?;
            let cfg = config(c.as_deref(), *seed)?;
            ok(&channel_coherent_information(&m, &cfg)?)
        }
        Command::ProcessCi {
            file,
            target,
            family,
            config: c,
            seed,
            copies,
            generation,
        } => {
            let w: ProcessOperator = read(file)?;
            let fam: LoFamily = match family {
                Some(p) => read(p)?,
                None => LoFamily::default(),
            };
            let cfg = config(c.as_deref(), *seed)?;
            if *generation {
                ok(&entanglement_generation_bound(&w, target, *copies, &fam, &cfg)?)
            } else if *copies > 1 {
                ok(&regularized_ci_estimate(&w, target, *copies, &fam, &cfg)?)
            } else {
                ok(&lo_optimized_ci_with(&w, target, &fam, &cfg, None)?)
            }
        }
        Command::RandomUnitaryExp {
            dims,
            cut,
            samples,
            seed,
            mode,
            bins,
        } => {
            let mode = match mode {
                ModeArg::Haar => GateMode::Haar,
                ModeArg::FactorizedAligned => GateMode::FactorizedAligned,
                ModeArg::FactorizedSwap => GateMode::FactorizedSwap,
            };
            let dims: [usize; 4] = dims.as_slice().try_into().context("--dims takes four values")?;
            ok(&unitary_experiment(dims, cut, mode, *samples, *seed, *bins)?)
        }
        Command::NetworkExp { spec, samples, seed } => {
            let net: NetworkSpec = if spec == "fig6-small" {
                fig6_small(0)?
            } else {
                read(Path::new(spec))?
            };
            ok(&network_experiment(&net, *samples, *seed)?)
        }
        Command::LoccProbe {
            process,
            target,
            setting,
            rounds,
            classical_dim,
            measure,
            samples,
            seed,
            slack,
            config: c,
        } => {
            let w: ProcessOperator = read(process)?;
            let direction = match setting {
                SettingArg::None => Direction::None,
                SettingArg::Forward => Direction::Forward,
                SettingArg::Backward => Direction::Backward,
                SettingArg::TwoWay => Direction::TwoWay,
            };
            let rounds = rounds.unwrap_or(if direction == Direction::None { 0 } else { 1 });
            let setting = LoccSetting::new(direction, rounds, *classical_dim)?;
            let target = target.clone();
            let m = match measure {
                MeasureArg::StateCi => ProbeMeasure::StateCoherentInformation { target },
                MeasureArg::Hashing => ProbeMeasure::HashingAfterReduction { target },
                MeasureArg::Lo => {
                    let mut cfg = config(c.as_deref(), Some(*seed))?;
                    if c.is_none() {
                        cfg.restarts = 2;
                    }
                    ProbeMeasure::LoOptimized {
                        target,
                        family: LoFamily::states_only(),
                        config: cfg,
                    }
                }
            };
            ok(&monotonicity_probe(&m, &w, &setting, *samples, *seed, *slack)?)
        }
    }
}
