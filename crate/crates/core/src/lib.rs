//! GAMES: graph-autoencoder embeddings of joint power and natural-gas
//! signals, representative-day selection, and a joint power-gas capacity
//! expansion model evaluated over the full horizon.

pub mod dataset;
pub mod games;
pub mod graph;
pub mod gtep;
pub mod matrix;
pub mod repdays;
pub mod scalar;

pub use dataset::{assemble_joint_graph, DaySignal, Dims, MultiResolutionDataset};
pub use graph::{build_adjacency, build_affinity, renormalized_laplacian, Graph, RenormalizedLaplacian};
pub use matrix::Matrix;
pub use scalar::Scalar;

/// Double-precision dataset.
pub type Dataset = MultiResolutionDataset<f64>;
/// Single-precision dataset.
pub type Dataset32 = MultiResolutionDataset<f32>;
pub type Model = games::GamesModel<f64>;
pub type Model32 = games::GamesModel<f32>;
pub type Embeddings = games::EmbeddingSet<f64>;
pub type Embeddings32 = games::EmbeddingSet<f32>;
