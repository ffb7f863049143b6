//! Deterministic, seedable Frogger simulator.
//!
//! One call to [`GameState::step`] is one tick: the requested action passes
//! through the sticky-action filter, the frog hops, every lane advances, and
//! then collisions, platform support, the home bays and the timer are
//! resolved in that order.

mod config;
mod game;
mod snapshot;

pub use config::{
    Direction, EnvConfig, LaneCategory, LaneSpec, RowKind, BAY_COUNT, FROG_SIZE, OBJECT_HEIGHT,
    SCREEN_HEIGHT, SCREEN_WIDTH,
};
pub use game::{apply_sticky, Action, Frog, GameState, LanePiece, StepInfo, StepResult};
pub use snapshot::{Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("step called on a terminal state")]
    Terminal,
    #[error("snapshot decode error: {0}")]
    Snapshot(String),
    #[error("unknown action {0:?}")]
    UnknownAction(String),
}
