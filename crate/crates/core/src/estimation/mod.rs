//! The fitting pipeline: cellwise fit scores, the per-variable
//! concentration step, fuzzy membership updates, conditional moments,
//! the constrained parameter update, and the driver loop.

mod delta;
mod fit;
mod membership;
mod moments;
mod mstep;

pub use delta::{compute_delta, concentration_step};
pub use fit::{fit, fit_single};
pub use membership::{log_fit_matrix, update_membership};
pub use moments::{conditional_moments, ConditionalMoments};
pub use mstep::m_step;

pub(crate) use moments::completed_matrix;
