//! Exact enumeration, asymptotics, and random generation for unlabelled
//! trees: Polya trees, free trees, Otter constants, symmetry statistics,
//! and total-variation comparisons between the two uniform models,
//! including degree-restricted variants.

pub mod asymptotics;
pub mod counting;
pub mod degree;
pub mod enumerate;
pub mod hp;
pub mod sample;
pub mod series;
pub mod stochastics;
pub mod tree;

pub use series::{ExactSeries, FloatSeries, Series, SeriesError};
