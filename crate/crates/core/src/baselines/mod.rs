//! Classical baselines: simulated annealing on the QUBO and LASSO.

pub mod ks;
pub mod lasso;
pub mod sa;
