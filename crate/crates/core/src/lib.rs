//! Simulation and verification of abortable shared-memory algorithms under
//! an RMR cost model that combines cache-coherent and distributed memory.

pub mod model;
pub mod objects;
pub mod explorer;
pub mod adversary;
