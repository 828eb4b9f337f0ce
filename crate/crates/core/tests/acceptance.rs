//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use polariton_cmt::critical::{critical_loci, find_cpa, EnergyWindow, Rate, RateSweep, SweepAxis};
use polariton_cmt::fit::{fit_params, synth_dataset, FitParam, Observable};
use polariton_cmt::model::linspace;
use polariton_cmt::oracle::{
    fastest_scale, oracle_scattering, oracle_scattering_with, settle_time, DriveSpec, OracleSettings,
};
use polariton_cmt::{
    decompose, delta_psi, det_s, dets_from_observables, joint_absorbance, joint_extrema, poles_zeros,
    scattering_matrix, single_beam_spectrum, Background, ModelParams, SMatrix2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sample() -> ModelParams {
    ModelParams::MEASURED_SAMPLE
}

fn random_bg(rng: &mut ChaCha8Rng) -> Background {
    Background::new(rng.random_range(0.0..=1.0), rng.random_range(-PI..PI)).unwrap()
}

fn c1_poles_zeros() -> Outcome {
    let p = sample();
    let start = Instant::now();
    let pz = poles_zeros(&p);
    let elapsed = start.elapsed();

    // eigenvalues of the 2×2 coupling matrix via trace and determinant
    let eig = |diag0: Complex64| {
        let diag1 = Complex64::new(p.omega_m(), p.gamma_m);
        let tr = diag0 + diag1;
        let det = diag0 * diag1 - p.omega_rabi * p.omega_rabi;
        let root = (tr * tr - 4.0 * det).sqrt();
        let (u, v) = (0.5 * (tr + root), 0.5 * (tr - root));
        if u.re >= v.re { [u, v] } else { [v, u] }
    };
    let poles = eig(Complex64::new(p.omega0, p.gamma_c()));
    let zeros = eig(Complex64::new(p.omega0, p.gamma_nr - p.gamma_r));
    let mut cross = 0.0f64;
    for k in 0..2 {
        cross = cross.max((pz.poles[k] - poles[k]).norm());
        cross = cross.max((pz.zeros[k] - zeros[k]).norm());
    }
    let quoted = [
        (pz.poles[0], Complex64::new(124.5 + 7.9373, 4.0)),
        (pz.poles[1], Complex64::new(124.5 - 7.9373, 4.0)),
        (pz.zeros[0], Complex64::new(124.5 + 6.9282, 1.0)),
        (pz.zeros[1], Complex64::new(124.5 - 6.9282, 1.0)),
    ];
    let quote_err = quoted.iter().map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    check(
        cross < 1e-9 && quote_err < 5e-5 && elapsed < Duration::from_millis(1),
        format!(
            "poles {:.4} / {:.4}, zeros {:.4} / {:.4}; eigen cross-check {cross:.1e}, 4-digit quote {quote_err:.1e}, {:?}",
            pz.poles[0], pz.poles[1], pz.zeros[0], pz.zeros[1], elapsed
        ),
    )
}

fn c2_strong_critical() -> Outcome {
    let start = Instant::now();
    let p = ModelParams::new(124.5, 5.0, 0.0, 5.0, 8.0).unwrap();
    let bg = Background::default();
    let split = (p.omega_rabi.powi(2) - p.gamma_m.powi(2)).sqrt();
    let at_exact = [p.omega0 - split, p.omega0 + split]
        .iter()
        .map(|&w| det_s(&p, w).unwrap().norm())
        .fold(0.0, f64::max);
    let cpa = find_cpa(&p, &bg, &EnergyWindow::around(&p), 1e-10).unwrap();
    let zeros: Vec<_> = cpa.iter().filter(|c| c.dets_min < 1e-9).collect();
    let mut worst_out = 0.0f64;
    for z in &zeros {
        let o = oracle_scattering(&p, &bg, &DriveSpec::new(z.omega, z.phi_star)).unwrap();
        worst_out = worst_out.max(o.out1 + o.out2);
    }
    let elapsed = start.elapsed();
    check(
        at_exact < 1e-9 && zeros.len() == 2 && worst_out < 1e-6 && elapsed < Duration::from_secs(1),
        format!(
            "|det S| at 124.5 ± {split:.4} = {at_exact:.1e}; {} zeros found; oracle output at φ* {worst_out:.1e}; {elapsed:?}",
            zeros.len()
        ),
    )
}

fn c3_weak_critical() -> Outcome {
    let p = ModelParams::new(124.5, 4.0, 0.0, 2.0, 8.0f64.sqrt()).unwrap();
    let at_centre = det_s(&p, p.omega0).unwrap().norm();
    let axis = |rate| SweepAxis {
        rate,
        min: 0.5,
        max: 6.0,
        n: 12,
    };
    let bare = ModelParams::new(124.5, 3.0, 3.0, 5.0, 0.0).unwrap();
    let map = critical_loci(
        &bare,
        &RateSweep {
            x: axis(Rate::GammaR),
            y: axis(Rate::GammaNr),
        },
    )
    .unwrap();
    let mismatches = map
        .points
        .iter()
        .filter(|pt| (pt.min_abs_det < 1e-9) != ((pt.x - pt.y).abs() < 1e-12))
        .count();
    check(
        at_centre < 1e-9 && mismatches == 0,
        format!(
            "|det S(ω0)| = {at_centre:.1e} at γm(γr−γnr) = Ω² = 8; Ω = 0 map: {mismatches} of {} cells off the γr = γnr locus",
            map.points.len()
        ),
    )
}

fn c4_modulation_depth() -> Outcome {
    let p = sample();
    let grid = linspace(100.0, 150.0, 5001);
    let table = single_beam_spectrum(&p, &Background::default(), &grid).unwrap();
    let (w, best) = table.argmax_by(|pt| pt.a_joint_max).unwrap();
    let worst_min = table.points().map(|(_, pt)| pt.a_joint_min.abs()).fold(0.0, f64::max);
    check(
        (0.90..=1.0).contains(&best.a_joint_max) && worst_min < 1e-9,
        format!(
            "max A_joint,max = {:.4} at {w:.3} meV; max |A_joint,min| = {worst_min:.1e}",
            best.a_joint_max
        ),
    )
}

fn c5_single_beam_ceiling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut max_a1, mut max_split) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let p = ModelParams {
            omega0: rng.random_range(60.0..200.0),
            gamma_r: rng.random_range(0.05..12.0),
            gamma_nr: rng.random_range(0.0..8.0),
            gamma_m: rng.random_range(0.0..10.0),
            omega_rabi: rng.random_range(0.0..15.0),
            delta_m: rng.random_range(-10.0..10.0),
        };
        let bg = random_bg(&mut rng);
        let win = EnergyWindow::around(&p);
        let table = single_beam_spectrum(&p, &bg, &linspace(win.min, win.max, 401)).unwrap();
        for (_, pt) in table.points() {
            max_a1 = max_a1.max(pt.a1);
            max_split = max_split.max((pt.a1 - pt.a2).abs()).max((pt.a1 - 0.5 * pt.b).abs());
        }
    }
    check(
        max_a1 <= 0.5 + 1e-10 && max_split < 1e-10,
        format!("1000 random sets: max A1 = {max_a1:.12}; max |A1−A2|, |A1−B/2| = {max_split:.1e}"),
    )
}

fn c6_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut det_err, mut mean_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let mut z = |lo: f64| Complex64::from_polar(rng.random_range(lo..1.0), rng.random_range(-PI..PI));
        let off = z(0.01);
        let s = SMatrix2::new(z(0.01), off, off, z(0.01));
        let (r1, r2, t) = (s.s11.norm_sqr(), s.s22.norm_sqr(), s.s21.norm_sqr());
        let rebuilt = dets_from_observables(t, r1, r2, delta_psi(&s).unwrap());
        det_err = det_err.max((rebuilt - s.det().norm()).abs());
        let (a1, a2) = decompose(&s).unwrap().single_beam();
        mean_err = mean_err.max((joint_extrema(&s).a_avg - 0.5 * (a1 + a2)).abs());
    }
    check(
        det_err < 1e-12 && mean_err < 1e-12,
        format!("100 random S: |det S| reconstruction {det_err:.1e}; mean identity {mean_err:.1e}"),
    )
}

fn c7_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let p = ModelParams {
            omega0: rng.random_range(60.0..200.0),
            gamma_r: rng.random_range(0.5..8.0),
            gamma_nr: rng.random_range(0.0..4.0),
            gamma_m: rng.random_range(0.5..8.0),
            omega_rabi: rng.random_range(0.0..12.0),
            delta_m: rng.random_range(-5.0..5.0),
        };
        let bg = random_bg(&mut rng);
        let drive = DriveSpec::new(p.omega0 + rng.random_range(-15.0..15.0), rng.random_range(-PI..PI));
        match oracle_scattering(&p, &bg, &drive) {
            Ok(o) => {
                let s = scattering_matrix(&p, &bg, drive.omega).unwrap();
                worst = worst.max((o.a_joint - joint_absorbance(&s, drive.phi).a_joint).abs());
            }
            Err(_) => failures += 1,
        }
    }

    let p = sample();
    let bg = Background::new(0.7, 0.3).unwrap();
    let drive = DriveSpec::new(120.0, 0.8);
    let exact = scattering_matrix(&p, &bg, drive.omega).unwrap().apply(drive.phasor());
    let h0 = 0.04 / fastest_scale(&p, &drive);
    let t_end = 2.0 * settle_time(&p).unwrap();
    let err = |dt: f64| {
        let settings = OracleSettings {
            dt: Some(dt),
            t_end: Some(t_end),
            ..Default::default()
        };
        let o = oracle_scattering_with(&p, &bg, &drive, &settings).unwrap();
        (o.s_minus[0] - exact[0]).norm().max((o.s_minus[1] - exact[1]).norm())
    };
    let (e1, e2, e3) = (err(h0), err(h0 / 2.0), err(h0 / 4.0));
    let ratios = [e1 / e2, e2 / e3];
    let elapsed = start.elapsed();
    check(
        failures == 0
            && worst < 1e-6
            && ratios.iter().all(|r| (12.0..=20.0).contains(r))
            && elapsed < Duration::from_secs(60),
        format!(
            "100 random cases: max |Δ a_joint| = {worst:.1e} ({failures} errors); step-halving ratios {:.2}, {:.2}; {elapsed:.2?}",
            ratios[0], ratios[1]
        ),
    )
}

fn c8_fit_recovery() -> Outcome {
    let start = Instant::now();
    let truth = sample();
    let bg = Background::default();
    let grid = linspace(100.0, 150.0, 801);
    let free = [FitParam::Omega0, FitParam::GammaR, FitParam::GammaM, FitParam::OmegaRabi];
    let init = ModelParams {
        omega0: 125.0,
        gamma_r: 3.5,
        gamma_m: 4.5,
        omega_rabi: 7.5,
        ..truth
    };
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let data = synth_dataset(&truth, &bg, &grid, &[Observable::R1, Observable::T], 0.005, seed).unwrap();
        let fit = fit_params(&data, &init, &bg, &free).unwrap();
        for fp in free {
            let rel = (fp.get(&fit.params) - fp.get(&truth)).abs() / fp.get(&truth);
            worst = worst.max(rel);
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 0.02 && elapsed < Duration::from_secs(30),
        format!("20 seeds, σ = 0.005, 801 points: worst relative error {:.3}%; {elapsed:.2?}", 100.0 * worst),
    )
}

fn c9_background_independence() -> Outcome {
    let p = sample();
    let grid = linspace(100.0, 150.0, 801);
    let reference = single_beam_spectrum(&p, &Background::default(), &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let table = single_beam_spectrum(&p, &random_bg(&mut rng), &grid).unwrap();
        for ((_, a), (_, b)) in reference.points().zip(table.points()) {
            worst = worst
                .max((a.b - b.b).abs())
                .max((a.a1 - b.a1).abs())
                .max((a.abs_det - b.abs_det).abs());
        }
    }
    check(
        worst < 1e-10,
        format!("10 random backgrounds × 801 points: max deviation in B, A1, |det S| = {worst:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("poles and zeros of the measured sample", c1_poles_zeros),
        ("strong critical coupling", c2_strong_critical),
        ("weak critical coupling", c3_weak_critical),
        ("joint modulation depth", c4_modulation_depth),
        ("single-beam ceiling", c5_single_beam_ceiling),
        ("observable reconstruction", c6_reconstruction),
        ("time-domain equivalence", c7_oracle),
        ("fit recovery", c8_fit_recovery),
        ("background independence", c9_background_independence),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", k + 1, out.detail);
        failed += usize::from(!out.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
