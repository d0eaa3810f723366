//! Contrastive graph clustering that learns a sparse node similarity matrix.
//!
//! A shared GCN encoder embeds two stochastic views of an attributed graph.
//! The objective pulls each node toward itself across views and toward its
//! neighbors, and pushes disconnected pairs whose cosine falls below a split
//! score toward zero similarity. k-means on the learned unit-norm embeddings
//! yields the clustering.

pub mod augment;
pub mod clustering;
pub mod diffmath;
pub mod encoder;
pub mod graph;
pub mod harness;
pub mod objective;
pub mod optimizer;
pub mod rng;
pub mod sparse;
