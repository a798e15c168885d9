//! The sluice meta-architecture: α units mixing every task's layer
//! subspaces, β mixers over each task's layers, the orthogonality penalty
//! between subspaces, the joint objective, and presets that constrain α
//! and β to recover earlier multi-task architectures.

mod export;
mod mixing;
mod model;
mod preset;

pub use export::{
    export_mixing, write_alpha_csv, write_beta_csv, ParamDump, Snapshot, ALPHA_HEADER, BETA_HEADER,
    SNAPSHOT_FORMAT, SNAPSHOT_VERSION,
};
pub use mixing::{alpha_combine, beta_mix, count_extra_params, AlphaUnit, BetaMixer};
pub use model::{BatchLoss, ForwardPass, ModelConfig, SluiceModel, StepStats, TaskNetwork};
pub use preset::{
    alpha_entries, alpha_init_value, beta_entries, free_count, AlphaInit, AlphaPattern,
    Architecture, BetaPattern, Preset, ALPHA_DIAGONAL_INIT, BETA_INNER_INIT,
};
