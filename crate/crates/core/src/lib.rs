//! Two-phase micro-clustering for continuous data.
//!
//! Phase one scans the data once into a clustering-feature tree and reads
//! off its leaf entries as micro-clusters ([`cf_tree`]). Phase two fits a
//! multivariate Gaussian to each micro-cluster and splits off members with
//! low normalized density ([`gaussian_refine`]). [`metrics`] scores a
//! clustering against known class labels, [`dataio`] loads CSV data, and
//! [`cli`] wires everything into the `cfgauss` command.

pub mod cf_tree;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod gaussian_refine;
pub mod metrics;

pub use cf_tree::{CfTree, CfTreeParams, CfVector, DataPoint, MicroCluster};
pub use dataio::{CsvOptions, Dataset};
pub use error::{Error, ErrorKind, Result};
pub use gaussian_refine::{GaussianModel, RefineParams};
pub use metrics::ContingencyTable;
