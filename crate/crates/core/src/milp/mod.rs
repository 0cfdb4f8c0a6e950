//! The routing MILP: a solver-agnostic container and the builders that fill it.

mod bigm;
mod build;
mod model;

pub use bigm::{compute_big_m, BigM};
pub use build::{
    build_capacity, build_energy, build_flow, build_hubs, build_model, build_model_on, build_objective, build_timing,
    BuildContext, VariableCatalog,
};
pub use model::{Constraint, Domain, FamilyStats, MilpModel, ModelStats, Sense, Tag, VarClass, VarId, Variable};
