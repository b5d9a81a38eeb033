//! Privacy-preserving splitting of large tiled images and Pareto-optimal
//! allocation of the resulting fragments onto a simulated hybrid cloud.
//!
//! The pipeline has two phases:
//!
//! 1. **Splitting** ([`splitter`], [`encoder`]): tissue patches of an image
//!    are turned into a king-graph (or 4-neighbour) adjacency graph, colored
//!    with a seeded random-sequential greedy pass, and every color class
//!    becomes one fragment. Fragment coordinates are then perturbed and
//!    projected onto their principal axes, and ids are replaced by keyed
//!    opaque names.
//! 2. **Allocation** ([`costmodel`], [`allocator`]): fragments are mapped onto
//!    cloud instances, minimizing the number of nodes, monetary cost and
//!    makespan under node, budget and deadline constraints.
//!
//! [`metrics`] scores a split with entropy-based privacy metrics and
//! [`experiment`] runs the approach-vs-baseline comparisons.
//!
//! ```
//! use phc::scenario::{create_patches, generate_synthetic_mask, PatchSpec};
//! use phc::splitter::{build_graph, greedy_color_rs, split_by_color, NeighborhoodRule};
//!
//! let mask = generate_synthetic_mask(20, 20, 0.5, 7).unwrap();
//! let patches = create_patches(&mask, PatchSpec::default(), "slide-1").unwrap();
//! let graph = build_graph(&patches, NeighborhoodRule::Eight).unwrap();
//! let coloring = greedy_color_rs(&graph, 42);
//! let fragments = split_by_color(&patches, &coloring).unwrap();
//! assert_eq!(fragments.len(), coloring.chi);
//! ```

pub mod allocator;
pub mod cli;
pub mod costmodel;
pub mod encoder;
mod error;
pub mod experiment;
pub mod metrics;
pub mod pareto;
pub mod scenario;
pub mod seed;
pub mod splitter;

pub use error::{Error, Result};
