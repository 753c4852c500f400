pub mod determinant;
pub mod error;
pub mod factorial;
pub mod fock;
pub mod holonomy;
pub mod linalg;
pub mod mellin;
pub mod ode;
pub mod params;
pub mod recurrence;
pub mod scan;
pub mod series;
