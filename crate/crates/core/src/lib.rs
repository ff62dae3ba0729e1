//! Finite symmetric systems, their names, and the forcing relations over
//! them, with brute-force checks of the structural lemmas.

pub mod atomic;
pub mod bitset;
pub mod error;
pub mod extension;
pub mod families;
pub mod hf;
pub mod logic;
pub mod names;
pub mod niceness;
pub mod order;
pub mod symmetry;
pub mod sysfile;
pub mod system;
pub mod witness;

pub use atomic::Mode;
pub use bitset::CondSet;
pub use error::{Error, Result};
pub use hf::HfSet;
pub use names::{NameId, Rel, Universe};
pub use order::{Cond, Preorder};
pub use symmetry::{AutoId, AutoSet, AutomorphismGroup, SubgroupFilter};
pub use system::{Caps, SymmetricSystem};
