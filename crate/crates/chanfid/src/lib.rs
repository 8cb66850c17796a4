//! File formats, the solve pipeline and verification suites for the
//! `chanfid` command-line tool. The numerical work lives in `chanfid-core`.

pub mod channel_file;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod records;
pub mod verify;

pub use chanfid_core as core;
pub use error::{exit, Error};
