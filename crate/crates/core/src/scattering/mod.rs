//! Wavepacket scattering: in-states, smearing of kernels, observables.

pub mod contour;
pub mod envelope;
pub mod experiments;
pub mod grid;
pub mod observables;
pub mod smear;
pub mod state;

pub use envelope::{Envelope, Shape};
pub use experiments::{fig1_experiment, t_norm_sweep, Fig1Options, Fig1Result, PlaneGrid, PulseOrder};
pub use grid::{Axis, OutGrid};
pub use observables::{apply_smatrix, in_state_on_grid, order_exchange_defect, sequential_prediction, ScatterResult};
pub use smear::{Evaluator, SmearOptions};
pub use state::{make_in_state, AxisSpec, InStateSpec, TwoPhotonState};
