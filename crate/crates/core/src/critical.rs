//! Lineshape regimes, critical-coupling loci and real-frequency zeros of `det S`.
//!
//! Strong critical coupling `γ_r = γ_nr + γ_m` (with `γ_m < Ω`) puts two zeros
//! of `det S` on the real axis at `ω0 ± √(Ω² − γ_m²)`; weak critical coupling
//! `γ_m(γ_r − γ_nr) = Ω²` puts one zero at `ω0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CmtError, Result};
use crate::model::{det_s, linspace, scattering_matrix, Background, ModelParams};
use crate::twoport::joint_extrema;

/// `|det S|` below which a real frequency is reported as a CPA frequency.
pub const CPA_THRESHOLD: f64 = 1e-6;
/// Minimum grid size accepted by [`classify_regime`].
pub const MIN_REGIME_GRID: usize = 501;

const CPA_SCAN_POINTS: usize = 4001;
/// Minima of `|det S|` at or above this are not dips at all.
const DIP_CEILING: f64 = 1.0 - 1e-9;
const INVPHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyWindow {
    pub min: f64,
    pub max: f64,
}

impl EnergyWindow {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let w = Self { min, max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CmtError::InvalidParameter {
                name: "window",
                reason: format!("need finite min < max, got [{}, {}]", self.min, self.max),
            });
        }
        Ok(())
    }

    /// Window centred on ω0 wide enough for every spectral feature of `p`.
    pub fn around(p: &ModelParams) -> Self {
        let half = 4.0 * feature_scale(p) + p.delta_m.abs();
        Self {
            min: p.omega0 - half,
            max: p.omega0 + half,
        }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

fn feature_scale(p: &ModelParams) -> f64 {
    let m = p.omega_rabi.max(p.gamma_c()).max(p.gamma_m);
    if m > 0.0 {
        m
    } else {
        1e-3 * p.omega0
    }
}

/// Golden-section minimisation of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    [(x1, f1), (x2, f2), (mid, fm)]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

fn abs_det_or_inf(p: &ModelParams, omega: f64) -> f64 {
    det_s(p, omega).map(|d| d.norm()).unwrap_or(f64::INFINITY)
}

/// Interior local minima of `|det S|` on the real axis, refined to `tol`.
fn abs_det_minima(p: &ModelParams, window: &EnergyWindow, tol: f64) -> Vec<(f64, f64)> {
    let grid = linspace(window.min, window.max, CPA_SCAN_POINTS);
    let vals: Vec<f64> = grid.iter().map(|&w| abs_det_or_inf(p, w)).collect();
    let step = window.width() / (CPA_SCAN_POINTS - 1) as f64;
    let tol = tol.max(4.0 * f64::EPSILON * window.max.abs().max(window.min.abs()));
    let mut found: Vec<(f64, f64)> = Vec::new();
    for i in 1..grid.len() - 1 {
        if vals[i] < vals[i - 1] && vals[i] <= vals[i + 1] && vals[i] < DIP_CEILING {
            let refined = golden_min(|w| abs_det_or_inf(p, w), grid[i - 1], grid[i + 1], tol);
            match found.last_mut() {
                Some(last) if (refined.0 - last.0).abs() < 3.0 * step => {
                    if refined.1 < last.1 {
                        *last = refined;
                    }
                }
                _ => found.push(refined),
            }
        }
    }
    found
}

/// Global minimum of `|det S|` over real ω in `window`: `(ω, |det S|)`.
pub fn min_abs_det_real(p: &ModelParams, window: &EnergyWindow) -> (f64, f64) {
    let mut best = [window.min, window.max]
        .into_iter()
        .map(|w| (w, abs_det_or_inf(p, w)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    for m in abs_det_minima(p, window, 1e-12) {
        if m.1 < best.1 {
            best = m;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n_peaks: usize,
    pub peak_positions: Vec<f64>,
    pub scc_residual: f64,
    pub wcc_residual: f64,
    pub cpa_frequencies: Vec<f64>,
}

/// Counts the maxima of `B(ω) = 1 − |det S(ω)|²` on an `n_grid` uniform grid.
///
/// Discrete maxima are refined by golden-section search and candidates closer
/// than three grid steps are merged.
pub fn classify_regime(p: &ModelParams, window: &EnergyWindow, n_grid: usize) -> Result<RegimeReport> {
    p.validate()?;
    window.validate()?;
    if n_grid < MIN_REGIME_GRID {
        return Err(CmtError::InvalidParameter {
            name: "n_grid",
            reason: format!("must be at least {MIN_REGIME_GRID}, got {n_grid}"),
        });
    }
    let reach = 3.0 * p.omega_rabi.max(p.gamma_c()).max(p.gamma_m);
    let lo = p.omega0.min(p.omega_m()) - reach;
    let hi = p.omega0.max(p.omega_m()) + reach;
    if window.min > lo || window.max < hi {
        return Err(CmtError::WindowTooNarrow {
            min: window.min,
            max: window.max,
            reason: format!("must cover [{lo}, {hi}]"),
        });
    }

    let grid = linspace(window.min, window.max, n_grid);
    let absorb = |w: f64| det_s(p, w).map(|d| 1.0 - d.norm_sqr());
    let b = grid.iter().map(|&w| absorb(w)).collect::<Result<Vec<f64>>>()?;

    let (bmin, bmax) = b
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if bmax - bmin < 1e-12 {
        return Err(CmtError::NoAbsorptionPeak);
    }
    let n = b.len();
    if b[0] > b[1] || b[n - 1] > b[n - 2] {
        return Err(CmtError::WindowTooNarrow {
            min: window.min,
            max: window.max,
            reason: "absorption still rising at the window edge".into(),
        });
    }

    let step = window.width() / (n_grid - 1) as f64;
    let neg_b = |w: f64| absorb(w).map(|v| -v).unwrap_or(f64::INFINITY);
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..n - 1 {
        if b[i] > b[i - 1] && b[i] >= b[i + 1] {
            let (w, nb) = golden_min(neg_b, grid[i - 1], grid[i + 1], 1e-10 * p.omega0);
            match peaks.last_mut() {
                Some(last) if (w - last.0).abs() < 3.0 * step => {
                    if -nb > last.1 {
                        *last = (w, -nb);
                    }
                }
                _ => peaks.push((w, -nb)),
            }
        }
    }
    if peaks.is_empty() {
        return Err(CmtError::NoAbsorptionPeak);
    }

    let cpa_frequencies = abs_det_minima(p, window, 1e-10 * p.omega0)
        .into_iter()
        .filter(|m| m.1 < CPA_THRESHOLD)
        .map(|m| m.0)
        .collect();

    Ok(RegimeReport {
        n_peaks: peaks.len(),
        peak_positions: peaks.into_iter().map(|pk| pk.0).collect(),
        scc_residual: p.scc_residual(),
        wcc_residual: p.wcc_residual(),
        cpa_frequencies,
    })
}

/// A local minimum of `|det S(ω)|` on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpaPoint {
    pub omega: f64,
    pub dets_min: f64,
    /// Input dephasing that maximises the joint absorbance at `omega`.
    pub phi_star: f64,
}

/// Real-axis minima of `|det S|` inside `window`, refined to `tol` (meV).
///
/// An empty list means `|det S|` has no dip in the window.
pub fn find_cpa(p: &ModelParams, bg: &Background, window: &EnergyWindow, tol: f64) -> Result<Vec<CpaPoint>> {
    p.validate()?;
    bg.validate()?;
    window.validate()?;
    if !(tol > 0.0) {
        return Err(CmtError::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    abs_det_minima(p, window, tol)
        .into_iter()
        .map(|(omega, dets_min)| {
            let s = scattering_matrix(p, bg, omega)?;
            Ok(CpaPoint {
                omega,
                dets_min,
                phi_star: joint_extrema(&s).phi_max,
            })
        })
        .collect()
}

/// Rates that can serve as sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    GammaR,
    GammaNr,
    GammaM,
    OmegaRabi,
}

impl Rate {
    pub fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            Rate::GammaR => p.gamma_r = v,
            Rate::GammaNr => p.gamma_nr = v,
            Rate::GammaM => p.gamma_m = v,
            Rate::OmegaRabi => p.omega_rabi = v,
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Rate::GammaR => p.gamma_r,
            Rate::GammaNr => p.gamma_nr,
            Rate::GammaM => p.gamma_m,
            Rate::OmegaRabi => p.omega_rabi,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rate::GammaR => "gamma_r",
            Rate::GammaNr => "gamma_nr",
            Rate::GammaM => "gamma_m",
            Rate::OmegaRabi => "omega_rabi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub rate: Rate,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.n)
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let ok = self.n >= 1
            && self.min > 0.0
            && self.max.is_finite()
            && (self.max > self.min || (self.n == 1 && self.max == self.min));
        if !ok {
            return Err(CmtError::InvalidParameter {
                name,
                reason: format!(
                    "need 0 < min < max and n >= 1 (min == max only for n == 1), got [{}, {}] x {}",
                    self.min, self.max, self.n
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweep {
    pub x: SweepAxis,
    pub y: SweepAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LociPoint {
    pub x: f64,
    pub y: f64,
    /// 0 when the spectrum has no absorption peak (lossless point).
    pub n_peaks: usize,
    pub scc_residual: f64,
    pub wcc_residual: f64,
    pub min_abs_det: f64,
    pub omega_at_min: f64,
}

/// Sweep result in row-major order: `y` outer, `x` inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LociMap {
    pub x_rate: Rate,
    pub y_rate: Rate,
    pub nx: usize,
    pub ny: usize,
    pub points: Vec<LociPoint>,
}

impl LociMap {
    pub fn at(&self, ix: usize, iy: usize) -> &LociPoint {
        &self.points[iy * self.nx + ix]
    }
}

const LOCI_REGIME_GRID: usize = 801;

/// Residuals of both critical-coupling conditions and the real-axis minimum
/// of `|det S|` over a 2D grid of two rates, all others held at `base`.
pub fn critical_loci(base: &ModelParams, sweep: &RateSweep) -> Result<LociMap> {
    base.validate()?;
    sweep.x.validate("sweep.x")?;
    sweep.y.validate("sweep.y")?;
    if sweep.x.rate == sweep.y.rate {
        return Err(CmtError::InvalidParameter {
            name: "sweep",
            reason: format!("x and y both sweep {}", sweep.x.rate.name()),
        });
    }
    let xs = sweep.x.values();
    let ys = sweep.y.values();
    let cells: Vec<(f64, f64)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    let points = cells
        .par_iter()
        .map(|&(x, y)| {
            let mut p = *base;
            sweep.x.rate.set(&mut p, x);
            sweep.y.rate.set(&mut p, y);
            let window = EnergyWindow::around(&p);
            let n_peaks = match classify_regime(&p, &window, LOCI_REGIME_GRID) {
                Ok(r) => r.n_peaks,
                Err(CmtError::NoAbsorptionPeak) => 0,
                Err(e) => return Err(e),
            };
            let (omega_at_min, min_abs_det) = min_abs_det_real(&p, &window);
            Ok(LociPoint {
                x,
                y,
                n_peaks,
                scc_residual: p.scc_residual(),
                wcc_residual: p.wcc_residual(),
                min_abs_det,
                omega_at_min,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LociMap {
        x_rate: sweep.x.rate,
        y_rate: sweep.y.rate,
        nx: xs.len(),
        ny: ys.len(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gr: f64, gnr: f64, gm: f64, om: f64) -> ModelParams {
        ModelParams::new(124.5, gr, gnr, gm, om).unwrap()
    }

    #[test]
    fn golden_finds_parabola_min() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && (fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measured_sample_is_a_doublet() {
        let p = ModelParams::MEASURED_SAMPLE;
        let r = classify_regime(&p, &EnergyWindow::around(&p), 1001).unwrap();
        assert_eq!(r.n_peaks, 2);
        assert!((r.peak_positions[0] + r.peak_positions[1] - 2.0 * 124.5).abs() < 1e-6);
        assert!((r.peak_positions[1] - 124.5 - 6.9).abs() < 0.1, "{:?}", r.peak_positions);
        assert!(r.cpa_frequencies.is_empty());
        assert_eq!(r.scc_residual, -2.0);
        assert_eq!(r.wcc_residual, 15.0 - 64.0);
    }

    #[test]
    fn overdamped_matter_merges_doublet() {
        let p = params(3.0, 0.0, 20.0, 8.0);
        let r = classify_regime(&p, &EnergyWindow::around(&p), 1001).unwrap();
        assert_eq!(r.n_peaks, 1);
        assert!((r.peak_positions[0] - 124.5).abs() < 1e-6);
    }

    #[test]
    fn uncoupled_lorentzian() {
        let p = params(2.0, 2.0, 3.0, 0.0);
        let r = classify_regime(&p, &EnergyWindow::around(&p), 801).unwrap();
        assert_eq!(r.n_peaks, 1);
        assert!((r.peak_positions[0] - 124.5).abs() < 1e-6);
        assert_eq!(r.scc_residual, -3.0);
        assert_eq!(r.wcc_residual, 0.0);
        assert_eq!(r.cpa_frequencies.len(), 1);
        assert!((r.cpa_frequencies[0] - 124.5).abs() < 1e-6);
    }

    #[test]
    fn narrow_window_rejected() {
        let p = ModelParams::MEASURED_SAMPLE;
        let w = EnergyWindow::new(115.0, 135.0).unwrap();
        assert!(matches!(classify_regime(&p, &w, 801), Err(CmtError::WindowTooNarrow { .. })));
        assert!(matches!(
            classify_regime(&p, &EnergyWindow::around(&p), 100),
            Err(CmtError::InvalidParameter { name: "n_grid", .. })
        ));
    }

    #[test]
    fn lossless_has_no_peak() {
        let p = params(3.0, 0.0, 0.0, 8.0);
        assert_eq!(
            classify_regime(&p, &EnergyWindow::around(&p), 801),
            Err(CmtError::NoAbsorptionPeak)
        );
        assert!(find_cpa(&p, &Background::default(), &EnergyWindow::around(&p), 1e-10)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn strong_critical_coupling_pair() {
        let p = params(5.0, 0.0, 5.0, 8.0);
        let found = find_cpa(&p, &Background::default(), &EnergyWindow::around(&p), 1e-11).unwrap();
        assert_eq!(found.len(), 2);
        let s = 39f64.sqrt();
        assert!((found[0].omega - (124.5 - s)).abs() < 1e-9);
        assert!((found[1].omega - (124.5 + s)).abs() < 1e-9);
        assert!(found.iter().all(|c| c.dets_min < 1e-9));
        assert!((s - 6.2450).abs() < 5e-5);
    }

    #[test]
    fn mismatched_sample_has_shallow_minima() {
        let p = ModelParams::MEASURED_SAMPLE;
        let found = find_cpa(&p, &Background::default(), &EnergyWindow::around(&p), 1e-10).unwrap();
        assert_eq!(found.len(), 2);
        for c in &found {
            assert!(((c.omega - 124.5).abs() - 6.93).abs() < 0.1, "{c:?}");
            assert!((c.dets_min - 0.219).abs() < 2e-3, "{c:?}");
        }
    }

    #[test]
    fn ordinary_two_port_cpa() {
        for gm in [0.5, 3.0, 11.0] {
            let p = params(2.0, 2.0, gm, 0.0);
            let found =
                find_cpa(&p, &Background::default(), &EnergyWindow::new(100.0, 150.0).unwrap(), 1e-11).unwrap();
            assert_eq!(found.len(), 1);
            assert!((found[0].omega - 124.5).abs() < 1e-9);
            assert!(found[0].dets_min < 1e-9);
        }
    }

    #[test]
    fn weak_locus_point() {
        let base = params(1.0, 1.0, 1.0, 8f64.sqrt());
        let sweep = RateSweep {
            x: SweepAxis { rate: Rate::GammaM, min: 2.0, max: 2.0, n: 1 },
            y: SweepAxis { rate: Rate::GammaR, min: 5.0, max: 5.0, n: 1 },
        };
        let map = critical_loci(&base, &sweep).unwrap();
        let pt = map.at(0, 0);
        assert!(pt.wcc_residual.abs() < 1e-12);
        assert!(pt.min_abs_det < 1e-9);
        assert!((pt.omega_at_min - 124.5).abs() < 1e-6);
    }

    #[test]
    fn sweep_validation() {
        let base = ModelParams::MEASURED_SAMPLE;
        let bad = RateSweep {
            x: SweepAxis { rate: Rate::GammaM, min: 0.0, max: 2.0, n: 3 },
            y: SweepAxis { rate: Rate::GammaR, min: 1.0, max: 5.0, n: 3 },
        };
        assert!(critical_loci(&base, &bad).is_err());
        let same = RateSweep {
            x: SweepAxis { rate: Rate::GammaR, min: 1.0, max: 2.0, n: 3 },
            y: SweepAxis { rate: Rate::GammaR, min: 1.0, max: 5.0, n: 3 },
        };
        assert!(critical_loci(&base, &same).is_err());
    }
}
