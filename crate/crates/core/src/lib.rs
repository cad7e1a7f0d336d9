//! Query-efficient bid optimization across platforms with discrete bid
//! landscapes, under a return-on-spend target and a budget.
//!
//! The main entry points are [`search::median_of_medians`],
//! [`augmented::branch_out_mom`] and [`centroid::centroid_method`], all of
//! which talk to the landscapes only through a [`oracle::CountingOracle`].

pub mod augmented;
pub mod centroid;
pub mod error;
pub mod harness;
pub mod landscape;
pub mod oracle;
pub mod reference;
pub mod search;

pub use error::{Error, Result};
pub use landscape::{BidVector, Instance, PlatformLandscape};
