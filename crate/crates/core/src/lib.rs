//! Wave-shape artificial neuron.
//!
//! Inputs are grouped into synapses whose combined signal moves the way the
//! target moves; each group is then levelled and scaled by a single weight.
//! A Widrow-Hoff linear unit is included as the comparison baseline.
//!
//! ```
//! use waveshape::{data, grouping::GroupingConfig, model};
//!
//! let ds = data::load_csv(data::PLAY_SPORT_CSV.as_bytes(), &data::EncodingMap::default()).unwrap();
//! let m = model::train(&ds, &GroupingConfig::default()).unwrap();
//! assert_eq!(m.synapses.len(), 2);
//! assert_eq!(m.predict(&[0.5; 4]).unwrap(), 0.5);
//! ```

pub mod baseline;
pub mod cli;
pub mod data;
pub mod error;
pub mod grouping;
pub mod model;
pub mod rng;
pub mod shape;

pub use error::{Error, Result};
