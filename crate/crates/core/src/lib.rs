// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod blocks;
pub mod centro;
pub mod closed;
pub mod combin;
pub mod detector;
pub mod error;
pub mod family;
pub mod fock;
pub mod params;
pub mod teleport;
