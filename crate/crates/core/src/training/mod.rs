//! Optimization loop, evaluation, early stopping and the experiment
//! protocols built on top of it.

mod config;
mod experiments;
mod metrics;
mod run;

pub use config::{AlphaMode, DecayMode, MixingMode, TaskData, TrainConfig, CONFIG_KEYS};
pub use experiments::{
    ablation_csv, alpha_ratio, median, parallel_map, run_ablation, run_noise_experiment,
    run_synthetic_experiment, synthetic_run, AblationCell, AblationRow, AuxMode, NoiseCurves,
    NoiseSeries, PlateauRule, SyntheticCurve, SyntheticPoint, SyntheticRun, ABLATION_GRID,
    ABLATION_HEADER, NOISE_ARCHITECTURES, PLATEAU,
};
pub use metrics::{mixing_snapshot, EpochRecord, MetricsRecord, TaskEpoch};
pub use run::{
    best_epoch, build_model, early_stop_check, evaluate_accuracy, evaluate_tasks, load_corpora,
    lr_schedule, resolve_main_task, run_training, run_training_with, task_names, train_epoch,
    write_outputs, EarlyStop, EpochStats, TrainOutcome,
};
