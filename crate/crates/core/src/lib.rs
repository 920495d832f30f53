//! Spectral Galerkin solver and operator verification toolkit for the
//! symmetric Majda-Biello coupled KdV system on the torus `[0, 2π]`.
//!
//! The system is solved in the interaction representation
//! `U_k(t) = exp(-i k³ t) u_k(t)`, where it reads
//! `∂t (u, v) = (B1(u,v) - B1(u,u), B1(u,v) - B1(v,v))`.

pub mod contraction;
pub mod dynamics;
pub mod error;
pub mod operators;
pub mod phase;
pub mod rng;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use spectral::{
    random_field, random_pair, uniform_field, FieldJson, Gauge, ModeSet, SobolevIndex,
    SpectralField, SpectralPair,
};
