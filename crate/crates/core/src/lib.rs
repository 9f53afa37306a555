//! Non-neural core of an HDR-environment video relighting pipeline:
//! HDR10 perceptual-quantizer codec, equirectangular environment handling,
//! diffuse irradiance pre-integration, light-adding shading, temporal
//! filtering, compositing, reference spheres and a timed frame pipeline.

pub mod envmap;
pub mod error;
pub mod io;
pub mod irradiance;
pub mod metrics;
pub mod pipeline;
pub mod pq;
pub mod raster;
pub mod relight;
pub mod spheres;
pub mod temporal;

pub use error::Error;
