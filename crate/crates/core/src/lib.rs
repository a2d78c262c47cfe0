//! Certified lower bounds on the edge expansion of a graph.
//!
//! The bound comes from a doubly nonnegative relaxation of a lifted
//! fractional formulation, restricted to its minimal face, strengthened by
//! triangle cuts and solved approximately by an augmented Lagrangian method.
//! A post-processing step turns the approximate dual into a valid bound.

pub mod alm;
pub mod certify;
pub mod cuts;
pub mod graph;
pub mod lbfgsb;
pub mod model;
pub mod oracle;
pub mod relaxation;
pub mod report;
pub mod spectral;

pub use alm::{solve, solve_basic, solve_lifted, AlmError, IterationRecord, Solution, SolverConfig};
pub use certify::{certify, Certificate};
pub use graph::{generate_family, parse_graph, Family, Graph, GraphFormat};
pub use model::{build_model, DiagMode, ModelMatrices};
pub use oracle::exact_edge_expansion;
pub use relaxation::{DualState, Relaxation};
