pub mod dlam;
pub mod kripke;
pub use dlam::*;
pub use kripke::*;
