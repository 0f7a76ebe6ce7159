//! HTTP service over a trained model: movie search, cold-start
//! recommendations and model metadata.

pub mod api;
pub mod catalog;
pub mod fixed;

pub use api::{recommend_raw, router, serve, AppState, LoadedModel, RecommendBody, RecommendResponse};
pub use catalog::{Catalog, CatalogEntry};
