//! File formats the pipeline exchanges: Radiance RGBE for HDR, portable
//! anymaps for LDR rasters and masks, PFM / 16-bit PNM for normal maps.

mod normal;
mod pnm;
mod rgbe;

pub use normal::{read_normal_map, write_normal_map, write_normal_map_pfm};
pub use pnm::{read_ldr, read_pfm, write_ldr, write_pfm};
pub use rgbe::{read_radiance_hdr, write_radiance_hdr};
