//! Semiclassical coupled-mode theory of a symmetric two-port optical resonator
//! coupled to a single matter oscillator.
//!
//! The crate is organised around five modules:
//!
//! * [`model`] evaluates the frequency-domain response: steady-state amplitudes,
//!   the 2×2 scattering matrix, polariton poles and determinant zeros, and
//!   single-beam spectra.
//! * [`twoport`] analyses any reciprocal 2×2 scattering matrix: reciprocal
//!   decomposition, two-beam joint absorbance, output dephasing and the
//!   reconstruction of `|det S|` from measurable quantities.
//! * [`critical`] explores parameter space: lineshape regime, strong and weak
//!   critical-coupling loci, and real-frequency zeros of `det S`.
//! * [`oracle`] integrates the equations of motion in the time domain and
//!   demodulates the steady state, as an independent check of everything above.
//! * [`fit`] generates synthetic spectra and fits model parameters to them.
//!
//! All energies and rates are in meV with ħ = 1; time is in meV⁻¹.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod error;
pub mod fit;
pub mod model;
pub mod oracle;
pub mod simplex;
pub mod twoport;

pub use error::{CmtError, Result};
pub use model::{
    det_s, poles_zeros, scattering_matrix, single_beam_spectrum, steady_state_response,
    Background, ModelParams, PoleZeroSet, SMatrix2, SpectrumRow, SpectrumTable, SteadyState,
};
pub use twoport::{
    decompose, delta_psi, dets_from_observables, joint_absorbance, joint_extrema,
    JointAbsorbanceExtrema, JointOutput, ReciprocalDecomposition,
};

pub use num_complex::Complex64;
