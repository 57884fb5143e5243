//! Seeded row/column selection for host matrices and PCA for fused features.

mod pca;
mod selection;

pub use pca::{fit_pca, PcaModel};
pub use selection::{apply_selection, make_selection_plan, SelectionPlan};
