//! Regular and singular kernels of the generator equation in Fourier space.

pub mod coeffs;
pub mod container;
pub mod ode;
pub mod remainder;
pub mod smooth;
pub mod transform;
pub mod verify;

pub use coeffs::{CoefficientModel, CoefficientTable, KernelKind, Normalization, Q};
pub use remainder::{integrate_remainder, GridSpec, RemainderTable, Trajectory};
pub use smooth::{PhiSpec, SmoothedKernel};
pub use transform::KernelTransform;
pub use verify::{verify, VerifyReport};
