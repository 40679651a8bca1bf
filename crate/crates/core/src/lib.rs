//! Finite-scale Katětov-style construction of the Gurarij space: polyhedral
//! normed spaces, convex Katětov envelopes, amalgams, relative Arens-Eells
//! norms and the one-point-extension tower, all evaluated by certified LPs.

pub mod acceptance;
pub mod aells;
pub mod amalgam;
pub mod gurarij;
pub mod io;
pub mod katetov;
pub mod mat;
pub mod optim;
pub mod space;
pub mod universal;

pub type Vector = Vec<f64>;
