//! Model data: parameters, dispersal kernels, habitat profiles and the
//! validated bundle the solvers consume.

pub mod habitat;
pub mod kernel;
pub mod params;
pub mod table;
pub mod validate;

pub use habitat::{habitat_value, HabitatFamily, HabitatProfile};
pub use kernel::{kernel_mgf, Dispersal, Kernel, KernelFamily, DEFAULT_SAMPLES};
pub use params::{coexistence_state, CoexistenceState, DispersalMode, ModelParams};
pub use table::{parse_two_column, read_two_column};
pub use validate::{validate_model, ValidatedModel};
