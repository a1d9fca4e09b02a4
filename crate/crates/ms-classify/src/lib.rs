//! Combinatorial classification of Morse-Smale diffeomorphisms of surfaces.

pub mod core_model;
pub mod regluing;
pub mod arrangement;
pub mod validator;
pub mod equivalence;
pub mod gradient;
pub mod onedim;
pub mod format;
pub mod dot;
