//! Training: the joint forward/backward update over both networks, and the
//! outer elimination loop that takes the channel budget from the full set
//! down the configured ladder, one step artifact at a time.

mod artifact;
mod joint;
mod run;
mod schedule;

pub use artifact::{load_run_metrics, save_run_metrics, StepArtifact, StepMetrics};
pub use joint::{joint_gradients, joint_loss, train_batch, Batch, JointContext, JointGrads, JointOutput};
pub use run::{
    early_stop, infer, train, train_with_hook, EpochEvent, NetConfig, Phase, TrainConfig, Trainer,
};
pub use schedule::{score_alpha_after, Schedule};
