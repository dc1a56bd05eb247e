//! Image encodings of rate windows: line chart, heat map, scatter plot and
//! the tiled multi-granularity Gramian angular field.

mod gaf;
mod plot;
mod raster;
mod tensor;

pub use gaf::{
    encode_gaf_composite, gaf_matrix, gaf_rescale, gaf_window, render_tile, GafConfig, GafVariant,
};
pub use plot::{
    column_of, encode_heat_map, encode_line_chart, encode_scatter, heat_bin, row_of, y_scale,
};
#[cfg(feature = "png")]
pub use raster::export_png;
pub use raster::{decode_ppm, encode_ppm, export_raster, ppm_header, read_raster};
pub use tensor::{ImageTensor, Representation, SourceWindow, CHANNELS, DEFAULT_IMAGE_SIZE};
