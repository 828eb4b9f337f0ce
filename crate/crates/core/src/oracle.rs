//! Time-domain oracle: fixed-step RK4 integration of the coupled amplitudes
//! under a harmonic two-port drive `s⁺(t) = (amp1, amp2·e^{iφ})·e^{iωt}`,
//! followed by demodulation of the steady-state outputs.
//!
//! Integration runs in the laboratory frame so that the discretisation error
//! keeps its fourth-order character; in a frame co-rotating with the drive the
//! steady state would be a fixed point reproduced exactly by any RK scheme.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CmtError, Result};
use crate::model::{poles_zeros, Background, ModelParams, SMatrix2};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `dt · max(frequency, rate)` may not exceed this.
pub const DT_GUARD: f64 = 0.05;
/// Default `dt · max(frequency, rate)` used by [`oracle_scattering`].
pub const DEFAULT_DT_FACTOR: f64 = 0.01;
/// Largest accepted drift of the demodulated outputs across the window.
pub const DRIFT_TOL: f64 = 1e-6;
/// Fraction of the trajectory, at its end, used for demodulation.
pub const DEMOD_FRACTION: f64 = 0.2;
/// Number of e-foldings of the slowest driven mode before the window opens.
const SETTLE_EFOLDS: f64 = 23.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub omega: f64,
    pub phi: f64,
    #[serde(default = "unit")]
    pub amp1: f64,
    #[serde(default = "unit")]
    pub amp2: f64,
}

fn unit() -> f64 {
    1.0
}

impl DriveSpec {
    /// Equal unit-amplitude beams with dephasing `phi`.
    pub fn new(omega: f64, phi: f64) -> Self {
        Self {
            omega,
            phi,
            amp1: 1.0,
            amp2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.phi.is_finite()) {
            return Err(CmtError::InvalidParameter {
                name: "drive",
                reason: "omega and phi must be finite".into(),
            });
        }
        for (name, v) in [("amp1", self.amp1), ("amp2", self.amp2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CmtError::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Complex input amplitudes with the `e^{iωt}` carrier removed.
    pub fn phasor(&self) -> [Complex64; 2] {
        [
            Complex64::new(self.amp1, 0.0),
            Complex64::from_polar(self.amp2, self.phi),
        ]
    }

    pub fn input_power(&self) -> f64 {
        self.amp1 * self.amp1 + self.amp2 * self.amp2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub a_t: Vec<Complex64>,
    pub b_t: Vec<Complex64>,
    pub out1_t: Vec<f64>,
    pub out2_t: Vec<f64>,
}

struct Dynamics {
    cav: Complex64,
    mat: Complex64,
    rabi: Complex64,
    d0: Complex64,
    forcing: Complex64,
    omega: f64,
    direct: [Complex64; 2],
}

impl Dynamics {
    fn new(p: &ModelParams, bg: &Background, drive: &DriveSpec) -> Self {
        let d0 = bg.coupling(p.gamma_r);
        let phasor = drive.phasor();
        Self {
            cav: Complex64::new(-p.gamma_c(), p.omega0),
            mat: Complex64::new(-p.gamma_m, p.omega_m()),
            rabi: I * p.omega_rabi,
            d0,
            forcing: d0 * (phasor[0] + phasor[1]),
            omega: drive.omega,
            direct: bg.matrix().apply(phasor),
        }
    }

    #[inline]
    fn rhs(&self, carrier: Complex64, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        (
            self.cav * a + self.rabi * b + self.forcing * carrier,
            self.mat * b + self.rabi * a,
        )
    }

    #[inline]
    fn step(&self, t: f64, h: f64, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        let c0 = Complex64::from_polar(1.0, self.omega * t);
        let ch = Complex64::from_polar(1.0, self.omega * (t + 0.5 * h));
        let c1 = Complex64::from_polar(1.0, self.omega * (t + h));
        let (ka1, kb1) = self.rhs(c0, a, b);
        let (ka2, kb2) = self.rhs(ch, a + 0.5 * h * ka1, b + 0.5 * h * kb1);
        let (ka3, kb3) = self.rhs(ch, a + 0.5 * h * ka2, b + 0.5 * h * kb2);
        let (ka4, kb4) = self.rhs(c1, a + h * ka3, b + h * kb3);
        (
            a + h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4),
            b + h / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4),
        )
    }

    /// Outputs at time `t` with the carrier removed.
    #[inline]
    fn demodulated_outputs(&self, t: f64, a: Complex64) -> [Complex64; 2] {
        let back = Complex64::from_polar(1.0, -self.omega * t);
        let rad = a * self.d0 * back;
        [self.direct[0] + rad, self.direct[1] + rad]
    }
}

/// Fastest frequency or rate in the problem, which bounds the step size.
pub fn fastest_scale(p: &ModelParams, drive: &DriveSpec) -> f64 {
    [
        p.omega0.abs(),
        p.omega_m().abs(),
        drive.omega.abs(),
        p.gamma_c(),
        p.gamma_m,
        p.omega_rabi,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn check_step(p: &ModelParams, drive: &DriveSpec, dt: f64) -> Result<()> {
    let limit = DT_GUARD / fastest_scale(p, drive);
    if !(dt > 0.0 && dt <= limit) {
        return Err(CmtError::InvalidParameter {
            name: "dt",
            reason: format!("must lie in (0, {limit:e}] meV^-1, got {dt:e}"),
        });
    }
    Ok(())
}

fn all_undamped(p: &ModelParams) -> bool {
    p.gamma_r == 0.0 && p.gamma_nr == 0.0 && p.gamma_m == 0.0
}

/// Integrates from `a(0) = b(0) = 0` up to the first multiple of `dt` at or
/// beyond `t_end`, recording every step.
pub fn integrate(
    p: &ModelParams,
    bg: &Background,
    drive: &DriveSpec,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_from(p, bg, drive, t_end, dt, [ZERO, ZERO])
}

pub fn integrate_from(
    p: &ModelParams,
    bg: &Background,
    drive: &DriveSpec,
    t_end: f64,
    dt: f64,
    initial: [Complex64; 2],
) -> Result<Trajectory> {
    p.validate()?;
    bg.validate()?;
    drive.validate()?;
    check_step(p, drive, dt)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(CmtError::InvalidParameter {
            name: "t_end",
            reason: format!("must be positive, got {t_end}"),
        });
    }
    if all_undamped(p) && drive.input_power() > 0.0 {
        log::warn!("all damping rates vanish: transients never decay and no steady state exists");
    }

    let dynamics = Dynamics::new(p, bg, drive);
    let n_steps = (t_end / dt).ceil() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps + 1),
        a_t: Vec::with_capacity(n_steps + 1),
        b_t: Vec::with_capacity(n_steps + 1),
        out1_t: Vec::with_capacity(n_steps + 1),
        out2_t: Vec::with_capacity(n_steps + 1),
    };
    let (mut a, mut b) = (initial[0], initial[1]);
    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let out = dynamics.demodulated_outputs(t, a);
        traj.times.push(t);
        traj.a_t.push(a);
        traj.b_t.push(b);
        traj.out1_t.push(out[0].norm_sqr());
        traj.out2_t.push(out[1].norm_sqr());
        if n < n_steps {
            (a, b) = dynamics.step(t, dt, a, b);
        }
    }
    Ok(traj)
}

/// Step size and duration overrides for [`oracle_scattering_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleSettings {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub initial: [Complex64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub out1: f64,
    pub out2: f64,
    pub a_joint: f64,
    /// Demodulated complex output amplitudes.
    pub s_minus: [Complex64; 2],
    pub t_end: f64,
    pub dt: f64,
}

/// Slowest decay rate among the modes the drive can excite.
fn slowest_driven_decay(p: &ModelParams) -> f64 {
    if p.omega_rabi == 0.0 {
        p.gamma_c()
    } else {
        let pz = poles_zeros(p);
        pz.poles[0].im.min(pz.poles[1].im)
    }
}

/// Duration after which the transient has decayed below the demodulation tolerance.
pub fn settle_time(p: &ModelParams) -> Result<f64> {
    if all_undamped(p) {
        return Err(CmtError::SteadyStateUndefined);
    }
    let kappa = slowest_driven_decay(p);
    if !(kappa > 0.0) {
        return Err(CmtError::SteadyStateUndefined);
    }
    let min_rate = [p.gamma_r, p.gamma_nr, p.gamma_m]
        .into_iter()
        .filter(|&g| g > 0.0)
        .fold(f64::INFINITY, f64::min);
    Ok((12.0 / min_rate).max(SETTLE_EFOLDS / ((1.0 - DEMOD_FRACTION) * kappa)))
}

pub fn oracle_scattering(p: &ModelParams, bg: &Background, drive: &DriveSpec) -> Result<OracleOutput> {
    oracle_scattering_with(p, bg, drive, &OracleSettings::default())
}

/// Integrates to steady state and demodulates the last [`DEMOD_FRACTION`] of
/// the run at the drive frequency.
pub fn oracle_scattering_with(
    p: &ModelParams,
    bg: &Background,
    drive: &DriveSpec,
    settings: &OracleSettings,
) -> Result<OracleOutput> {
    p.validate()?;
    bg.validate()?;
    drive.validate()?;
    let t_end = match settings.t_end {
        Some(t) => t,
        None => settle_time(p)?,
    };
    let dt = settings
        .dt
        .unwrap_or(DEFAULT_DT_FACTOR / fastest_scale(p, drive));
    check_step(p, drive, dt)?;

    let dynamics = Dynamics::new(p, bg, drive);
    let n_steps = (t_end / dt).ceil() as usize;
    let window_start = ((1.0 - DEMOD_FRACTION) * n_steps as f64).floor() as usize;
    let half = window_start + (n_steps - window_start) / 2;
    let mut sums = [[ZERO; 2]; 2];
    let mut counts = [0usize; 2];

    let (mut a, mut b) = (settings.initial[0], settings.initial[1]);
    for n in 0..=n_steps {
        let t = n as f64 * dt;
        if n >= window_start {
            let out = dynamics.demodulated_outputs(t, a);
            let k = usize::from(n >= half);
            sums[k][0] += out[0];
            sums[k][1] += out[1];
            counts[k] += 1;
        }
        if n < n_steps {
            (a, b) = dynamics.step(t, dt, a, b);
        }
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(CmtError::InvalidParameter {
            name: "t_end",
            reason: "too short for the demodulation window".into(),
        });
    }

    let mean = |k: usize, port: usize| sums[k][port] / counts[k] as f64;
    let drift = (0..2)
        .map(|port| (mean(0, port) - mean(1, port)).norm())
        .fold(0.0, f64::max);
    let threshold = DRIFT_TOL * drive.input_power().sqrt().max(1.0);
    if drift > threshold {
        return Err(CmtError::NotConverged {
            drift,
            threshold,
            suggested_t_end: 2.0 * t_end,
        });
    }
    let total = (counts[0] + counts[1]) as f64;
    let s_minus = [
        (sums[0][0] + sums[1][0]) / total,
        (sums[0][1] + sums[1][1]) / total,
    ];
    let out1 = s_minus[0].norm_sqr();
    let out2 = s_minus[1].norm_sqr();
    let power = drive.input_power();
    Ok(OracleOutput {
        out1,
        out2,
        a_joint: if power > 0.0 { 1.0 - (out1 + out2) / power } else { 0.0 },
        s_minus,
        t_end,
        dt,
    })
}

/// Scattering matrix measured by two oracle runs with single-port drives.
pub fn oracle_matrix(p: &ModelParams, bg: &Background, omega: f64) -> Result<SMatrix2> {
    let port = |amp1: f64, amp2: f64| {
        oracle_scattering(
            p,
            bg,
            &DriveSpec {
                omega,
                phi: 0.0,
                amp1,
                amp2,
            },
        )
        .map(|o| o.s_minus)
    };
    Ok(SMatrix2::from_columns(port(1.0, 0.0)?, port(0.0, 1.0)?))
}
