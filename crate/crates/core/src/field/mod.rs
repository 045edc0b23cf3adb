//! Sampled complex fields and their Wigner distributions.

mod grating;
mod grid;
mod table;
mod wigner;

pub use grating::{grating_order_efficiencies, grating_wdf_closed_form, PeriodicAxes, SERIES_CONVERGENCE};
pub use grid::{ComplexGrid, ComplexGrid2d};
pub use table::{marginals, Boundary, Marginals, WignerTable};
pub use wigner::{
    mutual_intensity, separate, wdf_1d, wdf_1d_with, wdf_2d_separable, wdf_2d_separable_with, MutualIntensity,
    SeparableWigner, REALNESS_TOLERANCE, SEPARABILITY_TOLERANCE,
};
