//! Helpers shared by the integration tests. Each test target uses a subset.

#![allow(dead_code)]

pub mod maps;
pub mod portraits;
pub mod schemes;
pub mod sectors;
