//! Analysis of an arbitrary reciprocal two-port scattering matrix.
//!
//! Every reciprocal `S` can be written as
//! `e^{iθ} [[ρ1 e^{iψ1}, iτ], [iτ, ρ2 e^{iψ2}]]` with `ρ1, ρ2, τ ≥ 0`.
//! Under equal-intensity excitation `s⁺ = (1, e^{iφ})` the joint absorbance
//! oscillates sinusoidally in φ between `(A1+A2)/2 ± A_mod`, with
//! `A_mod = √((1−A1)(1−A2) − |det S|²)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CmtError, Result};
use crate::model::SMatrix2;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest `|s12 − s21|` accepted as reciprocal.
pub const RECIPROCITY_TOL: f64 = 1e-9;
/// Magnitudes below this leave the reflection/transmission phases undefined.
pub const PHASE_MAGNITUDE_FLOOR: f64 = 1e-9;

/// Wraps an angle into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x.rem_euclid(two_pi);
    if y > PI {
        y -= two_pi;
    }
    y
}

fn arg_or_zero(z: Complex64) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        wrap_phase(z.arg())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalDecomposition {
    pub theta: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub tau: f64,
    pub psi1: f64,
    pub psi2: f64,
}

impl ReciprocalDecomposition {
    pub fn reassemble(&self) -> SMatrix2 {
        let g = Complex64::from_polar(1.0, self.theta);
        let off = g * I * self.tau;
        SMatrix2::new(
            g * Complex64::from_polar(self.rho1, self.psi1),
            off,
            off,
            g * Complex64::from_polar(self.rho2, self.psi2),
        )
    }

    /// Single-beam absorbances `A_k = 1 − ρ_k² − τ²`.
    pub fn single_beam(&self) -> (f64, f64) {
        let t2 = self.tau * self.tau;
        (1.0 - self.rho1 * self.rho1 - t2, 1.0 - self.rho2 * self.rho2 - t2)
    }
}

/// Splits a reciprocal matrix into global phase, magnitudes and reflection phases.
///
/// θ is fixed so the off-diagonal equals `iτ e^{iθ}` with τ ≥ 0; for τ = 0 it is
/// set to zero. Phases are wrapped to (−π, π].
pub fn decompose(s: &SMatrix2) -> Result<ReciprocalDecomposition> {
    let mismatch = s.reciprocity_mismatch();
    if !(mismatch < RECIPROCITY_TOL) {
        return Err(CmtError::NonReciprocal { mismatch });
    }
    let off = 0.5 * (s.s12 + s.s21);
    let tau = off.norm();
    let theta = if tau == 0.0 {
        0.0
    } else {
        wrap_phase(off.arg() - 0.5 * PI)
    };
    let unphase = Complex64::from_polar(1.0, -theta);
    Ok(ReciprocalDecomposition {
        theta,
        rho1: s.s11.norm(),
        rho2: s.s22.norm(),
        tau,
        psi1: arg_or_zero(s.s11 * unphase),
        psi2: arg_or_zero(s.s22 * unphase),
    })
}

/// Output intensities and joint absorbance for input `s⁺ = (1, e^{iφ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointOutput {
    pub a_joint: f64,
    pub out1: f64,
    pub out2: f64,
}

pub fn joint_absorbance(s: &SMatrix2, phi: f64) -> JointOutput {
    let out = s.apply([Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, phi)]);
    let out1 = out[0].norm_sqr();
    let out2 = out[1].norm_sqr();
    JointOutput {
        a_joint: 1.0 - 0.5 * (out1 + out2),
        out1,
        out2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointAbsorbanceExtrema {
    pub a_min: f64,
    pub a_max: f64,
    /// Input dephasing at which `a_min` is reached (CPT side).
    pub phi_min: f64,
    /// Input dephasing at which `a_max` is reached (CPA side).
    pub phi_max: f64,
    pub a_mod: f64,
    pub a_avg: f64,
}

/// Closed-form extrema of [`joint_absorbance`] over φ.
///
/// The total output is `‖c1‖² + ‖c2‖² + 2 Re(e^{iφ} c1ᴴc2)` for the columns
/// `c1, c2` of `S`, so `A_mod = |c1ᴴc2|` and the extremal dephasings follow
/// from `arg(c1ᴴc2)`.
pub fn joint_extrema(s: &SMatrix2) -> JointAbsorbanceExtrema {
    let a1 = 1.0 - s.s11.norm_sqr() - s.s21.norm_sqr();
    let a2 = 1.0 - s.s12.norm_sqr() - s.s22.norm_sqr();
    let a_avg = 0.5 * (a1 + a2);
    let overlap = s.s11.conj() * s.s12 + s.s21.conj() * s.s22;
    // |c1ᴴc2|² = ‖c1‖²‖c2‖² − |det S|² = (1−A1)(1−A2) − |det S|², without the
    // cancellation of the difference form near unitarity
    let a_mod = overlap.norm();
    let phi_min = wrap_phase(-arg_or_zero(overlap));
    JointAbsorbanceExtrema {
        a_min: a_avg - a_mod,
        a_max: a_avg + a_mod,
        phi_min,
        phi_max: wrap_phase(phi_min + PI),
        a_mod,
        a_avg,
    }
}

/// Output dephasing Δψ = ψ1 + ψ2 − π, wrapped to (−π, π].
pub fn delta_psi(s: &SMatrix2) -> Result<f64> {
    let dec = decompose(s)?;
    for (which, value) in [("rho1", dec.rho1), ("rho2", dec.rho2), ("tau", dec.tau)] {
        if value < PHASE_MAGNITUDE_FLOOR {
            return Err(CmtError::UndefinedPhase {
                which,
                value,
                threshold: PHASE_MAGNITUDE_FLOOR,
            });
        }
    }
    Ok(wrap_phase(dec.psi1 + dec.psi2 - PI))
}

/// `|det S| = |T − e^{iΔψ} √(R1 R2)|`, valid for any reciprocal two-port.
pub fn dets_from_observables(t: f64, r1: f64, r2: f64, dpsi: f64) -> f64 {
    (Complex64::new(t, 0.0) - Complex64::from_polar((r1 * r2).max(0.0).sqrt(), dpsi)).norm()
}

/// Least-squares fit of `offset + amplitude · sin(φ + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

pub fn fit_sinusoid(phis: &[f64], values: &[f64]) -> Option<SinusoidFit> {
    if phis.len() != values.len() || phis.len() < 3 {
        return None;
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&phi, &v) in phis.iter().zip(values) {
        let basis = Vector3::new(1.0, phi.sin(), phi.cos());
        normal += basis * basis.transpose();
        rhs += basis * v;
    }
    let coef = normal.lu().solve(&rhs)?;
    let (c0, cs, cc) = (coef[0], coef[1], coef[2]);
    let sq: f64 = phis
        .iter()
        .zip(values)
        .map(|(&phi, &v)| (v - c0 - cs * phi.sin() - cc * phi.cos()).powi(2))
        .sum();
    Some(SinusoidFit {
        offset: c0,
        amplitude: cs.hypot(cc),
        phase: wrap_phase(cc.atan2(cs)),
        rms_residual: (sq / phis.len() as f64).sqrt(),
    })
}

/// Δψ recovered from sampled output-intensity traces as the phase of the
/// port-2 sinusoid minus that of the port-1 sinusoid.
pub fn delta_psi_from_traces(phis: &[f64], out1: &[f64], out2: &[f64]) -> Option<f64> {
    let f1 = fit_sinusoid(phis, out1)?;
    let f2 = fit_sinusoid(phis, out2)?;
    Some(wrap_phase(f2.phase - f1.phase))
}
