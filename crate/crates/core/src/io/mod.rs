//! File formats and the pieces behind the command-line workflows.

mod artifact;
mod augment;
mod csv_io;
mod svg;

pub use artifact::{BandBlock, DeviationBlock, FitArtifact, SeriesBlock};
pub use augment::augment_grid;
pub use csv_io::{
    dataset_fingerprint, read_difference_csv, read_long_csv, scale_values, write_component_csv,
    write_dataset_csv, write_difference_csv, ComponentRow, DifferenceRow,
};
pub use svg::{plot_component, plot_difference, PlotConfig};
