//! Calderón–Zygmund stopping times and Fefferman–Stein checks.

mod fs;
mod levelset;
mod stopping;

pub use fs::{
    fefferman_stein_check, fs_members, generalized_fs_check, support_ball_measure, AbsMajorant, FsMember, FsNorm,
    GfsMember, MajorantProvider, PaddedMajorant,
};
pub use levelset::{level_set_check, LevelSetReport};
pub use stopping::{check_stopping_structure, default_alpha, lambda_floor, stopping_time, StoppingChecks, StoppingTimeMap};
