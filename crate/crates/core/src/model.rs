//! Frequency-domain response of the resonator/oscillator pair.
//!
//! With the time dependence `e^{+iωt}` the amplitudes obey
//!
//! ```text
//! db/dt = (iω_m − γ_m) b + iΩ a
//! da/dt = (iω0 − γ_c) a + iΩ b + dᵀ s⁺
//! s⁻    = C s⁺ + a d
//! ```
//!
//! where `d = (d0, d0)` couples the cavity symmetrically to both ports and
//! `C` is the direct (background) scattering pathway.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CmtError, Result};
use crate::twoport;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Relative size below which a linear-system determinant counts as singular.
const SINGULAR_RTOL: f64 = 16.0 * f64::EPSILON;

/// Five-rate oscillator model plus an optional matter detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Cavity resonance energy ω0 (meV).
    pub omega0: f64,
    /// Radiative cavity damping γ_r (meV).
    pub gamma_r: f64,
    /// Non-radiative cavity damping γ_nr (meV).
    pub gamma_nr: f64,
    /// Matter damping γ_m (meV).
    pub gamma_m: f64,
    /// Light-matter coupling Ω (meV).
    pub omega_rabi: f64,
    /// Matter detuning ω_m − ω0 (meV).
    #[serde(default)]
    pub delta_m: f64,
}

impl ModelParams {
    /// The intersubband-polariton photonic-crystal sample:
    /// ω0 = 124.5, γ_r = 3, γ_nr = 0, γ_m = 5, Ω = 8 (meV).
    pub const MEASURED_SAMPLE: ModelParams = ModelParams {
        omega0: 124.5,
        gamma_r: 3.0,
        gamma_nr: 0.0,
        gamma_m: 5.0,
        omega_rabi: 8.0,
        delta_m: 0.0,
    };

    pub fn new(
        omega0: f64,
        gamma_r: f64,
        gamma_nr: f64,
        gamma_m: f64,
        omega_rabi: f64,
    ) -> Result<Self> {
        let p = Self {
            omega0,
            gamma_r,
            gamma_nr,
            gamma_m,
            omega_rabi,
            delta_m: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_detuning(mut self, delta_m: f64) -> Result<Self> {
        self.delta_m = delta_m;
        self.validate()?;
        Ok(self)
    }

    /// Total cavity damping γ_c = γ_r + γ_nr.
    #[inline]
    pub fn gamma_c(&self) -> f64 {
        self.gamma_r + self.gamma_nr
    }

    /// Matter resonance ω_m = ω0 + δ_m.
    #[inline]
    pub fn omega_m(&self) -> f64 {
        self.omega0 + self.delta_m
    }

    /// Residual of the strong critical-coupling condition, γ_r − γ_nr − γ_m.
    pub fn scc_residual(&self) -> f64 {
        self.gamma_r - self.gamma_nr - self.gamma_m
    }

    /// Residual of the weak critical-coupling condition, γ_m(γ_r − γ_nr) − Ω².
    pub fn wcc_residual(&self) -> f64 {
        self.gamma_m * (self.gamma_r - self.gamma_nr) - self.omega_rabi * self.omega_rabi
    }

    pub fn is_lossless(&self) -> bool {
        self.gamma_nr == 0.0 && self.gamma_m == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega0", self.omega0),
            ("gamma_r", self.gamma_r),
            ("gamma_nr", self.gamma_nr),
            ("gamma_m", self.gamma_m),
            ("omega_rabi", self.omega_rabi),
            ("delta_m", self.delta_m),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(CmtError::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.omega0 <= 0.0 {
            return Err(CmtError::InvalidParameter {
                name: "omega0",
                reason: format!("must be positive, got {}", self.omega0),
            });
        }
        for (name, v) in &fields[1..5] {
            if *v < 0.0 {
                return Err(CmtError::InvalidParameter {
                    name,
                    reason: format!("must be non-negative (passive medium), got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Direct scattering pathway `C = e^{iθ_b} [[r_b, i t_b], [i t_b, r_b]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    /// Background reflection amplitude in [0, 1].
    pub r_b: f64,
    /// Global background phase (rad).
    pub theta_b: f64,
}

impl Default for Background {
    /// Fully reflecting background, giving a fully contrasted transmission resonance.
    fn default() -> Self {
        Self {
            r_b: 1.0,
            theta_b: 0.0,
        }
    }
}

impl Background {
    pub fn new(r_b: f64, theta_b: f64) -> Result<Self> {
        let bg = Self { r_b, theta_b };
        bg.validate()?;
        Ok(bg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r_b) {
            return Err(CmtError::InvalidParameter {
                name: "r_b",
                reason: format!("must lie in [0, 1], got {}", self.r_b),
            });
        }
        if !self.theta_b.is_finite() {
            return Err(CmtError::InvalidParameter {
                name: "theta_b",
                reason: format!("must be finite, got {}", self.theta_b),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn t_b(&self) -> f64 {
        (1.0 - self.r_b * self.r_b).max(0.0).sqrt()
    }

    pub fn matrix(&self) -> SMatrix2 {
        let g = Complex64::from_polar(1.0, self.theta_b);
        let r = g * self.r_b;
        let t = g * I * self.t_b();
        SMatrix2::new(r, t, t, r)
    }

    /// Per-port coupling amplitude `d0` with `|d0|² = γ_r` and `C d* = −d`.
    pub fn coupling(&self, gamma_r: f64) -> Complex64 {
        let arg = 0.5 * (self.theta_b + self.t_b().atan2(self.r_b) + std::f64::consts::PI);
        Complex64::from_polar(gamma_r.sqrt(), arg)
    }

    /// Phase factor `e^{2iθ_b}` linking `det S` to the pole-zero ratio of [`det_s`].
    pub fn det_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * self.theta_b)
    }
}

/// 2×2 complex scattering matrix at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SMatrix2 {
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
}

impl SMatrix2 {
    pub const fn new(s11: Complex64, s12: Complex64, s21: Complex64, s22: Complex64) -> Self {
        Self { s11, s12, s21, s22 }
    }

    /// Builds the matrix from the output vectors for unit input at port 1 and port 2.
    pub fn from_columns(col1: [Complex64; 2], col2: [Complex64; 2]) -> Self {
        Self::new(col1[0], col2[0], col1[1], col2[1])
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn det(&self) -> Complex64 {
        self.s11 * self.s22 - self.s12 * self.s21
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.s11 * v[0] + self.s12 * v[1],
            self.s21 * v[0] + self.s22 * v[1],
        ]
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.s11 * k, self.s12 * k, self.s21 * k, self.s22 * k)
    }

    pub fn reciprocity_mismatch(&self) -> f64 {
        (self.s12 - self.s21).norm()
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.s11.norm_sqr() + self.s12.norm_sqr() + self.s21.norm_sqr() + self.s22.norm_sqr()
    }

    /// Largest singular value; ≤ 1 for every passive matrix.
    pub fn max_singular_value(&self) -> f64 {
        // largest eigenvalue of SᴴS = [[n1, z], [z*, n2]]
        let n1 = self.s11.norm_sqr() + self.s21.norm_sqr();
        let n2 = self.s12.norm_sqr() + self.s22.norm_sqr();
        let z = self.s11.conj() * self.s12 + self.s21.conj() * self.s22;
        let half_gap = 0.5 * (n1 - n2);
        (0.5 * (n1 + n2) + half_gap.hypot(z.norm())).sqrt()
    }
}

/// Steady-state cavity and matter amplitudes with the resulting output waves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub a: Complex64,
    pub b: Complex64,
    pub s_minus: [Complex64; 2],
}

fn singular(value: Complex64, scale: f64) -> bool {
    value.norm() <= SINGULAR_RTOL * scale
}

/// Solves the equations of motion with `d/dt → iω` for a harmonic drive `s_plus`.
///
/// The 2×2 system `[[i(ω−ω0)+γ_c, −iΩ], [−iΩ, i(ω−ω_m)+γ_m]] (a, b)ᵀ = (dᵀs⁺, 0)ᵀ`
/// is solved by Cramer's rule. With Ω = 0 the matter equation decouples and
/// `b = 0`.
pub fn steady_state_response(
    p: &ModelParams,
    bg: &Background,
    omega: f64,
    s_plus: [Complex64; 2],
) -> Result<SteadyState> {
    let d0 = bg.coupling(p.gamma_r);
    let drive = d0 * (s_plus[0] + s_plus[1]);
    let cav = Complex64::new(p.gamma_c(), omega - p.omega0);
    let energy_scale = omega.abs().max(p.omega0);

    let (a, b) = if p.omega_rabi == 0.0 {
        if singular(cav, energy_scale) {
            return Err(CmtError::Degenerate { omega });
        }
        (drive / cav, ZERO)
    } else {
        let mat = Complex64::new(p.gamma_m, omega - p.omega_m());
        let rabi_sq = p.omega_rabi * p.omega_rabi;
        let det = cav * mat + rabi_sq;
        let scale = energy_scale * (cav.norm() + mat.norm() + p.omega_rabi);
        if singular(det, scale) {
            return Err(CmtError::Degenerate { omega });
        }
        (drive * mat / det, I * p.omega_rabi * drive / det)
    };

    let direct = bg.matrix().apply(s_plus);
    Ok(SteadyState {
        a,
        b,
        s_minus: [direct[0] + a * d0, direct[1] + a * d0],
    })
}

/// Scattering matrix assembled column by column from [`steady_state_response`].
pub fn scattering_matrix(p: &ModelParams, bg: &Background, omega: f64) -> Result<SMatrix2> {
    let col1 = steady_state_response(p, bg, omega, [ONE, ZERO])?.s_minus;
    let col2 = steady_state_response(p, bg, omega, [ZERO, ONE])?.s_minus;
    Ok(SMatrix2::from_columns(col1, col2))
}

/// Polariton poles and determinant zeros (complex energies, meV).
///
/// Index 0 carries the `+` branch of the square root, index 1 the `−` branch.
/// Coalescent roots at an exceptional point are returned twice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleZeroSet {
    pub poles: [Complex64; 2],
    pub zeros: [Complex64; 2],
}

/// Roots in `u` of `(u − α)(u − β) = Ω²` with `α = ω0 + i·g_cav`, `β = ω_m + i·g_mat`.
fn coupled_roots(p: &ModelParams, g_cav: f64, g_mat: f64) -> [Complex64; 2] {
    let rabi_sq = p.omega_rabi * p.omega_rabi;
    let (center, root) = if p.delta_m == 0.0 {
        // Real discriminant: keeps the principal branch identical to the
        // closed form `[i(g_cav+g_mat) ± √(4Ω² − (g_cav−g_mat)²)]/2`.
        let half = 0.5 * (g_cav - g_mat);
        let disc = Complex64::new(rabi_sq - half * half, 0.0);
        (
            Complex64::new(p.omega0, 0.5 * (g_cav + g_mat)),
            disc.sqrt(),
        )
    } else {
        let alpha = Complex64::new(p.omega0, g_cav);
        let beta = Complex64::new(p.omega_m(), g_mat);
        let half = 0.5 * (alpha - beta);
        (0.5 * (alpha + beta), (half * half + rabi_sq).sqrt())
    };
    [center + root, center - root]
}

pub fn poles_zeros(p: &ModelParams) -> PoleZeroSet {
    PoleZeroSet {
        poles: coupled_roots(p, p.gamma_c(), p.gamma_m),
        // radiative loss enters the numerator with flipped sign
        zeros: coupled_roots(p, p.gamma_nr - p.gamma_r, p.gamma_m),
    }
}

/// Pole-zero ratio `(ω−ω̄₊)(ω−ω̄₋)/((ω−ω₊)(ω−ω₋))`.
///
/// The full determinant of [`scattering_matrix`] is this ratio times the
/// background phase `e^{2iθ_b}` ([`Background::det_phase`]); `|det_s|` is
/// background independent.
pub fn det_s(p: &ModelParams, omega: f64) -> Result<Complex64> {
    let pz = poles_zeros(p);
    let w = Complex64::new(omega, 0.0);
    let den = (w - pz.poles[0]) * (w - pz.poles[1]);
    let tol = SINGULAR_RTOL * omega.abs().max(p.omega0);
    if (w - pz.poles[0]).norm() <= tol || (w - pz.poles[1]).norm() <= tol {
        return Err(CmtError::Degenerate { omega });
    }
    Ok((w - pz.zeros[0]) * (w - pz.zeros[1]) / den)
}

/// Single-beam and joint observables at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub r1: f64,
    pub r2: f64,
    pub t: f64,
    pub a1: f64,
    pub a2: f64,
    /// `1 − |det S|²`.
    pub b: f64,
    pub abs_det: f64,
    pub a_joint_min: f64,
    pub a_joint_max: f64,
}

/// One grid row; `point` is `None` where the response is degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub point: Option<SpectrumPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub fn degenerate_omegas(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.point.is_none())
            .map(|r| r.omega)
            .collect()
    }

    /// Row maximising `key` among non-degenerate rows.
    pub fn argmax_by<F: Fn(&SpectrumPoint) -> f64>(&self, key: F) -> Option<(f64, SpectrumPoint)> {
        self.rows
            .iter()
            .filter_map(|r| r.point.map(|pt| (r.omega, pt)))
            .max_by(|x, y| key(&x.1).total_cmp(&key(&y.1)))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, &SpectrumPoint)> {
        self.rows
            .iter()
            .filter_map(|r| r.point.as_ref().map(|pt| (r.omega, pt)))
    }
}

pub fn spectrum_point(p: &ModelParams, bg: &Background, omega: f64) -> Result<SpectrumPoint> {
    let s = scattering_matrix(p, bg, omega)?;
    let abs_det = det_s(p, omega)?.norm();
    let r1 = s.s11.norm_sqr();
    let r2 = s.s22.norm_sqr();
    let t = s.s21.norm_sqr();
    let ext = twoport::joint_extrema(&s);
    Ok(SpectrumPoint {
        r1,
        r2,
        t,
        a1: 1.0 - r1 - t,
        a2: 1.0 - r2 - s.s12.norm_sqr(),
        b: 1.0 - abs_det * abs_det,
        abs_det,
        a_joint_min: ext.a_min,
        a_joint_max: ext.a_max,
    })
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(CmtError::InvalidParameter {
            name: "grid",
            reason: format!("needs at least 2 points, got {}", grid.len()),
        });
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(CmtError::InvalidParameter {
            name: "grid",
            reason: "contains non-finite energies".into(),
        });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CmtError::InvalidParameter {
            name: "grid",
            reason: "must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// Uniform grid of `n` energies from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { max } else { min + step * i as f64 })
                .collect()
        }
    }
}

/// Evaluates [`spectrum_point`] over `grid`. Degenerate frequencies produce rows
/// with `point: None` instead of NaN values.
pub fn single_beam_spectrum(
    p: &ModelParams,
    bg: &Background,
    grid: &[f64],
) -> Result<SpectrumTable> {
    p.validate()?;
    bg.validate()?;
    validate_grid(grid)?;
    let rows = grid
        .par_iter()
        .map(|&omega| match spectrum_point(p, bg, omega) {
            Ok(point) => Ok(SpectrumRow {
                omega,
                point: Some(point),
            }),
            Err(CmtError::Degenerate { .. }) => Ok(SpectrumRow { omega, point: None }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable { rows })
}
