pub mod charging;
pub mod cost;
pub mod error;
pub mod generator;
pub mod graph;
pub mod instance;
pub mod io;
pub mod lp;
pub mod milp;
pub mod plan;
pub mod solver;
pub mod validator;
