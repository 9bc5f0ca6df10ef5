//! 2D DC-resistivity testbed: `-div(mu grad u) = q` on the unit square with
//! zero-flux boundaries, dipole sources between the left and right sides and
//! receivers on the top and bottom, exposed as a [`crate::nls::ForwardModel`].

mod forward;
mod grid;
mod io;
mod layout;
mod operator;
mod synth;
mod transfer;

pub use forward::DcResistivity;
pub use grid::Grid2D;
pub use io::{read_grid, write_grid};
pub use layout::{prolong, restrict, SourceReceiverLayout};
pub use operator::{solve_pde, DirectSolver, PdeOperator, PdeSolver};
pub use synth::{synthesize, Block, SynthesisConfig, SyntheticExperiment, TrueModel, DEFAULT_SMOOTHING};
pub use transfer::Transfer;
