//! Sharing structures: which α and β entries are trainable, tied or fixed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffcore::Entry;
use crate::encoder::SUBSPACES;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Named architectures reachable by constraining α and β.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Everything learned.
    LearnedSluice,
    /// All α equal to one constant and frozen.
    HardSharing,
    /// Only the inner layer is shared; auxiliary tasks predict from layer 1.
    LowSupervision,
    /// Whole-layer α (subspace entries tied), outer layer only feeds the head.
    CrossStitch,
    /// Cross-task α blocks fixed at zero.
    GroupLasso,
    /// Shared subspace 2 and private subspace 1 per task.
    FrustratinglyEasyDa,
    /// No sharing at all: identity α, outer layer only. Used for single-task
    /// baselines and for M = 1.
    SingleTask,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::LearnedSluice,
        Preset::HardSharing,
        Preset::LowSupervision,
        Preset::CrossStitch,
        Preset::GroupLasso,
        Preset::FrustratinglyEasyDa,
        Preset::SingleTask,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::LearnedSluice => "learned_sluice",
            Preset::HardSharing => "hard_sharing",
            Preset::LowSupervision => "low_supervision",
            Preset::CrossStitch => "cross_stitch",
            Preset::GroupLasso => "group_lasso",
            Preset::FrustratinglyEasyDa => "frustratingly_easy_da",
            Preset::SingleTask => "single_task",
        }
    }

    pub fn architecture(self) -> Architecture {
        let (alpha, beta) = match self {
            Preset::LearnedSluice => (AlphaPattern::Full, BetaPattern::Learned),
            Preset::HardSharing => (AlphaPattern::Constant, BetaPattern::Learned),
            Preset::LowSupervision => (AlphaPattern::InnerShared, BetaPattern::LowSupervision),
            Preset::CrossStitch => (AlphaPattern::SubspaceTied, BetaPattern::Outer),
            Preset::GroupLasso => (AlphaPattern::BlockDiagonal, BetaPattern::Learned),
            Preset::FrustratinglyEasyDa => (AlphaPattern::SharedPrivate, BetaPattern::Learned),
            Preset::SingleTask => (AlphaPattern::Identity, BetaPattern::Outer),
        };
        Architecture { alpha, beta }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s}")))
    }
}

/// Constraint pattern of every α unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPattern {
    Full,
    /// Every entry `1 / (M·S)`, frozen.
    Constant,
    /// Cross-task entries zero, within-task entries free.
    BlockDiagonal,
    /// Cross-task entries touching subspace 1 are zero; cross-task
    /// subspace-2 weights are tied to the source task's own subspace-2
    /// diagonal weight.
    SharedPrivate,
    /// Constant after layer 1, identity after deeper layers.
    InnerShared,
    /// Subspaces mix only with the same subspace and all subspaces share the
    /// same task-to-task weights, i.e. α acts on whole layers.
    SubspaceTied,
    Identity,
}

/// Constraint pattern of every β mixer, or concatenation instead of mixing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaPattern {
    Learned,
    /// Plain skip connections: every β frozen at 1.
    AllOnes,
    /// Frozen one-hot on the outer layer.
    Outer,
    /// Main task one-hot on the outer layer, auxiliary tasks on layer 1.
    LowSupervision,
    /// The head reads the concatenation of all layer outputs; β is unused.
    Concat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    pub alpha: AlphaPattern,
    pub beta: BetaPattern,
}

/// Starting values of the free α entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaInit {
    /// 0.9 on the diagonal, the remaining 0.1 of each row spread evenly.
    Biased,
    /// Every entry `1 / (M·S)`.
    Uniform,
}

impl FromStr for AlphaInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biased" => Ok(AlphaInit::Biased),
            "uniform" => Ok(AlphaInit::Uniform),
            _ => Err(Error::Config(format!("unknown alpha init {s}"))),
        }
    }
}

pub const ALPHA_DIAGONAL_INIT: f64 = 0.9;
pub const BETA_INNER_INIT: f64 = 0.1;

/// Initial value of α entry `(to, from)` in an `n × n` unit.
pub fn alpha_init_value(init: AlphaInit, n: usize, to: usize, from: usize) -> f64 {
    match init {
        AlphaInit::Uniform => 1.0 / n as f64,
        AlphaInit::Biased if to == from => ALPHA_DIAGONAL_INIT,
        AlphaInit::Biased => (1.0 - ALPHA_DIAGONAL_INIT) / (n - 1) as f64,
    }
}

/// Entry masks and raw initial values of one `n × n` α unit (`n = M·S`),
/// row `to`, column `from`.
pub fn alpha_entries<T: Scalar>(
    pattern: AlphaPattern,
    layer: usize,
    tasks: usize,
    init: AlphaInit,
) -> (Vec<Entry<T>>, Vec<f64>) {
    let s = SUBSPACES;
    let n = tasks * s;
    let task = |i: usize| i / s;
    let sub = |i: usize| i % s;
    let constant = 1.0 / n as f64;
    let mut raw: Vec<f64> = (0..n * n)
        .map(|k| alpha_init_value(init, n, k / n, k % n))
        .collect();
    let mut entries = Vec::with_capacity(n * n);
    let identity = |i: usize, j: usize| Entry::Fixed(if i == j { T::one() } else { T::zero() });
    for i in 0..n {
        for j in 0..n {
            let free = Entry::Free(i * n + j);
            let e = match pattern {
                AlphaPattern::Full => free,
                AlphaPattern::Constant => Entry::Fixed(T::lit(constant)),
                AlphaPattern::Identity => identity(i, j),
                AlphaPattern::InnerShared if layer == 0 => Entry::Fixed(T::lit(constant)),
                AlphaPattern::InnerShared => identity(i, j),
                AlphaPattern::BlockDiagonal if task(i) == task(j) => free,
                AlphaPattern::BlockDiagonal => Entry::Fixed(T::zero()),
                AlphaPattern::SharedPrivate if task(i) == task(j) => free,
                AlphaPattern::SharedPrivate if sub(i) == 1 && sub(j) == 1 => Entry::Free(j * n + j),
                AlphaPattern::SharedPrivate => Entry::Fixed(T::zero()),
                AlphaPattern::SubspaceTied if sub(i) != sub(j) => Entry::Fixed(T::zero()),
                AlphaPattern::SubspaceTied => Entry::Free(task(i) * s * n + task(j) * s),
            };
            entries.push(e);
        }
    }
    if pattern == AlphaPattern::SubspaceTied {
        // Tied values are task-to-task weights over M tasks.
        for a in 0..tasks {
            for b in 0..tasks {
                raw[a * s * n + b * s] = match init {
                    AlphaInit::Uniform => 1.0 / tasks as f64,
                    AlphaInit::Biased if tasks == 1 => 1.0,
                    AlphaInit::Biased if a == b => ALPHA_DIAGONAL_INIT,
                    AlphaInit::Biased => (1.0 - ALPHA_DIAGONAL_INIT) / (tasks - 1) as f64,
                };
            }
        }
    }
    (entries, raw)
}

/// Entry masks and raw initial values of task `task`'s β mixer.
pub fn beta_entries<T: Scalar>(
    pattern: BetaPattern,
    task: usize,
    main_task: usize,
    layers: usize,
) -> (Vec<Entry<T>>, Vec<f64>) {
    let raw: Vec<f64> = (0..layers)
        .map(|k| {
            if k + 1 == layers {
                1.0 - BETA_INNER_INIT * (layers - 1) as f64
            } else {
                BETA_INNER_INIT
            }
        })
        .collect();
    let one_hot = |at: usize| -> Vec<Entry<T>> {
        (0..layers)
            .map(|k| Entry::Fixed(if k == at { T::one() } else { T::zero() }))
            .collect()
    };
    let entries = match pattern {
        BetaPattern::Learned => (0..layers).map(Entry::Free).collect(),
        BetaPattern::AllOnes => vec![Entry::Fixed(T::one()); layers],
        BetaPattern::Outer => one_hot(layers - 1),
        BetaPattern::LowSupervision if task == main_task => one_hot(layers - 1),
        BetaPattern::LowSupervision => one_hot(0),
        BetaPattern::Concat => raw.iter().map(|&v| Entry::Fixed(T::lit(v))).collect(),
    };
    (entries, raw)
}

/// Number of distinct trainable values referenced by a mask.
pub fn free_count<T>(entries: &[Entry<T>]) -> usize {
    let mut idx: Vec<usize> = entries
        .iter()
        .filter_map(|e| match e {
            Entry::Free(i) => Some(*i),
            Entry::Fixed(_) => None,
        })
        .collect();
    idx.sort_unstable();
    idx.dedup();
    idx.len()
}
