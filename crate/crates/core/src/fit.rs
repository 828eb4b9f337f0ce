//! Synthetic spectra and least-squares parameter extraction.
//!
//! Rates, ω0 and Ω are optimised as logarithms so they stay positive; the
//! matter detuning is optimised directly. The optimiser is the Nelder–Mead
//! simplex of [`crate::simplex`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CmtError, Result};
use crate::model::{scattering_matrix, validate_grid, Background, ModelParams, SMatrix2};
use crate::simplex::{self, SimplexOptions};
use crate::twoport::{delta_psi, dets_from_observables, joint_extrema, wrap_phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Observable {
    R1,
    R2,
    T,
    A1,
    A2,
    #[serde(rename = "A_joint_max")]
    AJointMax,
    #[serde(rename = "A_joint_min")]
    AJointMin,
    /// Output dephasing Δψ (rad); the only kind not confined to [0, 1].
    #[serde(rename = "dpsi")]
    DeltaPsi,
}

impl Observable {
    pub const ALL: [Observable; 8] = [
        Observable::R1,
        Observable::R2,
        Observable::T,
        Observable::A1,
        Observable::A2,
        Observable::AJointMax,
        Observable::AJointMin,
        Observable::DeltaPsi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Observable::R1 => "R1",
            Observable::R2 => "R2",
            Observable::T => "T",
            Observable::A1 => "A1",
            Observable::A2 => "A2",
            Observable::AJointMax => "A_joint_max",
            Observable::AJointMin => "A_joint_min",
            Observable::DeltaPsi => "dpsi",
        }
    }

    fn is_intensity(self) -> bool {
        self != Observable::DeltaPsi
    }

    /// Value of this observable for the scattering matrix `s`.
    pub fn evaluate(self, s: &SMatrix2) -> Result<f64> {
        Ok(match self {
            Observable::R1 => s.s11.norm_sqr(),
            Observable::R2 => s.s22.norm_sqr(),
            Observable::T => s.s21.norm_sqr(),
            Observable::A1 => 1.0 - s.s11.norm_sqr() - s.s21.norm_sqr(),
            Observable::A2 => 1.0 - s.s22.norm_sqr() - s.s12.norm_sqr(),
            Observable::AJointMax => joint_extrema(s).a_max,
            Observable::AJointMin => joint_extrema(s).a_min,
            Observable::DeltaPsi => delta_psi(s)?,
        })
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Observable {
    type Err = CmtError;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| CmtError::InvalidDataset(format!("unknown observable kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub omega: f64,
    pub kind: Observable,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumDataset {
    pub rows: Vec<DataRow>,
}

impl SpectrumDataset {
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if !r.omega.is_finite() {
                return Err(CmtError::InvalidDataset(format!("row {i}: non-finite omega")));
            }
            if !(r.sigma > 0.0 && r.sigma.is_finite()) {
                return Err(CmtError::InvalidDataset(format!("row {i}: sigma must be positive")));
            }
            if r.kind.is_intensity() && !(0.0..=1.0).contains(&r.value) {
                return Err(CmtError::InvalidDataset(format!(
                    "row {i}: {} = {} outside [0, 1]",
                    r.kind, r.value
                )));
            }
            if !r.value.is_finite() {
                return Err(CmtError::InvalidDataset(format!("row {i}: non-finite value")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Copy with every energy multiplied by `k`.
    pub fn scale_energies(&self, k: f64) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| DataRow {
                    omega: r.omega * k,
                    ..*r
                })
                .collect(),
        }
    }
}

/// Model observables on `grid`, with independent Gaussian noise of standard
/// deviation `noise_sigma` added from a ChaCha stream seeded by `seed`.
///
/// Intensities are clamped to [0, 1] and Δψ is re-wrapped. With zero noise the
/// rows carry `sigma = 1`.
pub fn synth_dataset(
    p: &ModelParams,
    bg: &Background,
    grid: &[f64],
    kinds: &[Observable],
    noise_sigma: f64,
    seed: u64,
) -> Result<SpectrumDataset> {
    p.validate()?;
    bg.validate()?;
    validate_grid(grid)?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(CmtError::InvalidParameter {
            name: "noise_sigma",
            reason: format!("must be a non-negative number, got {noise_sigma}"),
        });
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| CmtError::InvalidParameter {
        name: "noise_sigma",
        reason: e.to_string(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = if noise_sigma > 0.0 { noise_sigma } else { 1.0 };
    let mut rows = Vec::with_capacity(grid.len() * kinds.len());
    for &omega in grid {
        let s = scattering_matrix(p, bg, omega)?;
        for &kind in kinds {
            let clean = kind.evaluate(&s)?;
            let noisy = clean + if noise_sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let value = if kind.is_intensity() {
                noisy.clamp(0.0, 1.0)
            } else {
                wrap_phase(noisy)
            };
            rows.push(DataRow {
                omega,
                kind,
                value,
                sigma,
            });
        }
    }
    Ok(SpectrumDataset { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    Omega0,
    GammaR,
    GammaNr,
    GammaM,
    OmegaRabi,
    DeltaM,
}

impl FitParam {
    pub const ALL: [FitParam; 6] = [
        FitParam::Omega0,
        FitParam::GammaR,
        FitParam::GammaNr,
        FitParam::GammaM,
        FitParam::OmegaRabi,
        FitParam::DeltaM,
    ];

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            FitParam::Omega0 => p.omega0,
            FitParam::GammaR => p.gamma_r,
            FitParam::GammaNr => p.gamma_nr,
            FitParam::GammaM => p.gamma_m,
            FitParam::OmegaRabi => p.omega_rabi,
            FitParam::DeltaM => p.delta_m,
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            FitParam::Omega0 => p.omega0 = v,
            FitParam::GammaR => p.gamma_r = v,
            FitParam::GammaNr => p.gamma_nr = v,
            FitParam::GammaM => p.gamma_m = v,
            FitParam::OmegaRabi => p.omega_rabi = v,
            FitParam::DeltaM => p.delta_m = v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitParam::Omega0 => "omega0",
            FitParam::GammaR => "gamma_r",
            FitParam::GammaNr => "gamma_nr",
            FitParam::GammaM => "gamma_m",
            FitParam::OmegaRabi => "omega_rabi",
            FitParam::DeltaM => "delta_m",
        }
    }

    fn log_scaled(self) -> bool {
        self != FitParam::DeltaM
    }

    fn encode(self, v: f64) -> f64 {
        if self.log_scaled() {
            v.ln()
        } else {
            v
        }
    }

    fn decode(self, x: f64) -> f64 {
        if self.log_scaled() {
            x.exp()
        } else {
            x
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub background: Background,
    /// Weighted sum of squared residuals.
    pub residual: f64,
    pub n_iter: usize,
    pub converged: bool,
    /// One-sigma proxy per free parameter from the curvature of the residual;
    /// `None` where the curvature matrix is singular.
    pub std_errors: BTreeMap<FitParam, Option<f64>>,
}

/// Weighted sum of squares of `data` against the model `p`.
pub fn objective(data: &SpectrumDataset, p: &ModelParams, bg: &Background) -> f64 {
    if p.validate().is_err() {
        return f64::INFINITY;
    }
    data.rows
        .par_iter()
        .map(|r| {
            let model = scattering_matrix(p, bg, r.omega).and_then(|s| r.kind.evaluate(&s));
            match model {
                Ok(m) => {
                    let diff = if r.kind.is_intensity() {
                        m - r.value
                    } else {
                        wrap_phase(m - r.value)
                    };
                    (diff / r.sigma).powi(2)
                }
                Err(_) => f64::INFINITY,
            }
        })
        .sum()
}

const FIT_XTOL: f64 = 1e-8;
const FIT_MAX_ITER: usize = 20_000;

/// Fits the parameters listed in `free`, holding everything else at `init`.
pub fn fit_params(
    data: &SpectrumDataset,
    init: &ModelParams,
    bg: &Background,
    free: &[FitParam],
) -> Result<FitResult> {
    data.validate()?;
    init.validate()?;
    bg.validate()?;
    let mut free: Vec<FitParam> = free.to_vec();
    free.sort();
    free.dedup();
    if data.len() < 3 * free.len() {
        return Err(CmtError::InvalidDataset(format!(
            "{} data rows cannot constrain {} free parameters (need at least {})",
            data.len(),
            free.len(),
            3 * free.len()
        )));
    }
    for &fp in &free {
        if fp.log_scaled() && !(fp.get(init) > 0.0) {
            return Err(CmtError::InvalidParameter {
                name: fp.name(),
                reason: "a free rate must start strictly positive".into(),
            });
        }
    }

    let assemble = |x: &[f64]| {
        let mut p = *init;
        for (&fp, &xi) in free.iter().zip(x) {
            fp.set(&mut p, fp.decode(xi));
        }
        p
    };
    let x0: Vec<f64> = free.iter().map(|fp| fp.encode(fp.get(init))).collect();
    let opts = SimplexOptions {
        initial_step: 0.1,
        xtol: FIT_XTOL,
        max_iter: FIT_MAX_ITER,
        restarts: 3,
    };
    let run = simplex::minimize(|x| objective(data, &assemble(x), bg), &x0, &opts);
    let params = assemble(&run.x);
    let std_errors = curvature_errors(data, &params, bg, &free);

    Ok(FitResult {
        params,
        background: *bg,
        residual: run.f,
        n_iter: run.n_iter,
        converged: run.converged,
        std_errors,
    })
}

/// `σ_i = √(s² · [2 H⁻¹]_ii)` with `H` the finite-difference Hessian of the
/// residual in physical units and `s²` the residual per degree of freedom.
fn curvature_errors(
    data: &SpectrumDataset,
    p: &ModelParams,
    bg: &Background,
    free: &[FitParam],
) -> BTreeMap<FitParam, Option<f64>> {
    let k = free.len();
    if k == 0 {
        return BTreeMap::new();
    }
    let steps: Vec<f64> = free
        .iter()
        .map(|fp| 1e-4 * fp.get(p).abs().max(1e-2))
        .collect();
    let eval = |shifts: &[(usize, f64)]| {
        let mut q = *p;
        for &(i, d) in shifts {
            let v = free[i].get(&q) + d;
            free[i].set(&mut q, v);
        }
        objective(data, &q, bg)
    };
    let f0 = eval(&[]);
    let mut h = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let hi = steps[i];
        h[(i, i)] = (eval(&[(i, hi)]) - 2.0 * f0 + eval(&[(i, -hi)])) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let v = (eval(&[(i, hi), (j, hj)]) - eval(&[(i, hi), (j, -hj)]) - eval(&[(i, -hi), (j, hj)])
                + eval(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let dof = (data.len().saturating_sub(k)).max(1) as f64;
    let s2 = f0 / dof;
    let inv = h.try_inverse();
    free.iter()
        .enumerate()
        .map(|(i, &fp)| {
            let se = inv
                .as_ref()
                .map(|m| 2.0 * s2 * m[(i, i)])
                .filter(|v| v.is_finite() && *v >= 0.0)
                .map(f64::sqrt);
            (fp, se)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetsCurve {
    /// `(ω, |det S|)` rows in increasing ω.
    pub points: Vec<(f64, f64)>,
    /// Energies at which at least one of R1, R2, T, Δψ was missing.
    pub skipped: Vec<f64>,
}

/// Reconstructs `|det S(ω)|` row-wise from R1, R2, T and Δψ data.
pub fn estimate_dets_curve(data: &SpectrumDataset) -> DetsCurve {
    let mut by_omega: BTreeMap<u64, (f64, [Option<f64>; 4])> = BTreeMap::new();
    for r in &data.rows {
        let slot = match r.kind {
            Observable::R1 => 0,
            Observable::R2 => 1,
            Observable::T => 2,
            Observable::DeltaPsi => 3,
            _ => continue,
        };
        by_omega
            .entry(ordered_bits(r.omega))
            .or_insert((r.omega, [None; 4]))
            .1[slot] = Some(r.value);
    }
    let mut curve = DetsCurve {
        points: Vec::new(),
        skipped: Vec::new(),
    };
    for (omega, obs) in by_omega.into_values() {
        match obs {
            [Some(r1), Some(r2), Some(t), Some(dpsi)] => {
                curve.points.push((omega, dets_from_observables(t, r1, r2, dpsi)))
            }
            _ => curve.skipped.push(omega),
        }
    }
    curve
}

/// Monotone map from finite f64 to u64 so BTreeMap keys sort numerically.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}
