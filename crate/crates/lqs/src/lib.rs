//! Linear quantum systems toolkit.

pub mod corpus;
pub mod invert;
pub mod kalman;
pub mod linalg;
pub mod matcore;
pub mod model;
pub mod network;
pub mod par;
pub mod selftest;
pub mod spectra;
pub mod sysfile;
