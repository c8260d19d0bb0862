//! Simulation of water-to-air optical wireless links through a moving sea
//! surface, with a vision-based beam-tracking evaluation harness.
//!
//! The crate is organized bottom-up:
//!
//! - [`wave`]: directional wave spectrum and the time-varying surface.
//! - [`optics`]: minimum-OPL refraction point and the link gain chain.
//! - [`render`]: per-pixel backward ray tracing of the beacon image.
//! - [`dataset`]: labeled frame-sequence datasets and their file formats.
//! - [`tracker`]: tracker contract and the non-learned baselines.
//! - [`eval`]: angle/RSS metrics, temporal runs and noise sweeps.
//! - [`config`]: flat `key = value` run configuration.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod nelder_mead;
pub mod optics;
pub mod par;
pub mod render;
pub mod rng;
pub mod tracker;
pub mod vec3;
pub mod wave;

pub use error::{OwcError, Result};
pub use vec3::Vec3;
