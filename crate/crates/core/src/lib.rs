//! Positivstellensatz certificates, Schur-Agler realizations and
//! determinantal representations over matrix polynomial domains
//! `D_P = { z : ‖P_i(z)‖ < 1 }`.
//!
//! Numerical code is generic over the scalar ([`scalar::Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to one precision.

pub mod certificate;
pub mod detrep;
pub mod domains;
pub mod error;
pub mod poly;
pub mod realization;
pub mod scalar;
pub mod sdp;

pub use error::{Error, Result};

pub type MatPoly64 = poly::MatPoly<f64>;
pub type MatPoly32 = poly::MatPoly<f32>;
pub type HermPoly64 = poly::HermPoly<f64>;
pub type HermPoly32 = poly::HermPoly<f32>;
pub type DomainSpec64 = domains::DomainSpec<f64>;
pub type DomainSpec32 = domains::DomainSpec<f32>;
pub type Certificate64 = certificate::Certificate<f64>;
pub type Certificate32 = certificate::Certificate<f32>;
pub type Colligation64 = realization::Colligation<f64>;
pub type Colligation32 = realization::Colligation<f32>;
pub type RationalMatFn64 = realization::RationalMatFn<f64>;
pub type DetRep64 = detrep::DetRep<f64>;
pub type CMat64 = scalar::CMat<f64>;
