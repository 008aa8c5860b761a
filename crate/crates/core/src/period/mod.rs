//! Weight-2 quasi-period blocks of a Beltrami differential, Griffiths
//! transversality and purity of the resulting filtration.

mod checks;
mod frame;
mod quasi;

pub use checks::{
    bisect_radius, purity_determinant, stability_radius, transversality_check, PolyBlockCurve, RadiusReport,
    TransversalityReport, BISECTION_CAP,
};
pub use frame::{conjugate_mask, DeformationFrame, FrameAlgebra, SyntheticScalarFrame, TorusFrame};
pub use quasi::{gauge_defect, quasi_period, t_operator, NEUMANN_STEPS, NEUMANN_TOL};
