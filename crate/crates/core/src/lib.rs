//! Pseudospectral solver and diagnostics for the inviscid Qian–Sheng
//! Q-tensor system on the periodic torus.
//!
//! The unknowns are a solenoidal velocity `v`, a symmetric traceless order
//! tensor `Q` and its material rate `P`:
//!
//! ```text
//! div v = 0
//! ∂t v + v·∇v + ∇Π = −div(∇Q ⊙ ∇Q)
//! ∂t Q + v·∇Q = P
//! ∂t P + v·∇P = −∂F(Q) + ΔQ − λI
//! ```
//!
//! Modules follow the data flow: [`tensor`] and [`spectral`] are the
//! numerical substrate, [`potential`] the bulk free energy, [`dynamics`] the
//! right-hand side and time stepping, [`diagnostics`] the conserved and
//! monitored quantities, and [`io`] configuration, persistence and resampling.

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod potential;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
