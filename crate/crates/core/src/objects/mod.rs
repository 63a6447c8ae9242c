//! Subject algorithms: abortable test-and-set, name consensus and CAS, the
//! register-only leader-election subjects, and a few broken ones.

pub mod cas;
pub mod faulty;
pub mod name_decide;
pub mod peterson;
pub mod registry;
pub mod tas;

pub use cas::{CasDemo, CasOp, CasRecord};
pub use name_decide::NameDecide;
pub use peterson::PetersonTree;
pub use registry::{cas_demo, default_n, subject, RegistryError, SUBJECTS};
pub use tas::{AbortableTasObject, DoubleCall};
