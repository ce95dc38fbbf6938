//! Euclidean Steiner trees and maximal distance minimizers.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix the common choice.

pub mod error;
pub mod experiments;
pub mod geom;
mod linalg;
pub mod mdm;
pub mod mst;
pub mod scalar;
pub mod steiner;
pub mod topology;

pub use error::{Error, Result};
pub use geom::{Point, ToleranceConfig};
pub use scalar::Scalar;
pub use steiner::{EmbeddedTree, TreeReport};
pub use topology::{Topology, TopologyKey};

pub type Point64 = Point<f64>;
pub type Point32 = Point<f32>;
pub type Tolerance64 = ToleranceConfig<f64>;
pub type Tolerance32 = ToleranceConfig<f32>;
pub type Tree64 = EmbeddedTree<f64>;
pub type Tree32 = EmbeddedTree<f32>;
pub type Network64 = mdm::MdmNetwork<f64>;
pub type Network32 = mdm::MdmNetwork<f32>;
