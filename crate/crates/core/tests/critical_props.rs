use polariton_cmt::critical::{
    classify_regime, critical_loci, find_cpa, min_abs_det_real, EnergyWindow, Rate, RateSweep, SweepAxis,
};
use polariton_cmt::{det_s, Background, ModelParams};
use proptest::prelude::*;

fn params(gamma_r: f64, gamma_nr: f64, gamma_m: f64, omega_rabi: f64) -> ModelParams {
    ModelParams::new(124.5, gamma_r, gamma_nr, gamma_m, omega_rabi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_locus_has_two_real_zeros(gamma_nr in 0.0..3.0f64, gamma_m in 0.5..7.0f64) {
        let p = params(gamma_nr + gamma_m, gamma_nr, gamma_m, 8.0);
        let split = (64.0 - gamma_m * gamma_m).sqrt();
        for w in [p.omega0 - split, p.omega0 + split] {
            prop_assert!(det_s(&p, w).unwrap().norm() < 1e-12);
        }
        let cpa = find_cpa(&p, &Background::default(), &EnergyWindow::around(&p), 1e-10).unwrap();
        let zeros: Vec<_> = cpa.iter().filter(|c| c.dets_min < 1e-9).collect();
        prop_assert_eq!(zeros.len(), 2);
    }

    #[test]
    fn weak_locus_has_centre_zero(gamma_nr in 0.0..3.0f64, gamma_m in 0.5..6.0f64, omega_rabi in 0.5..6.0f64) {
        let gamma_r = gamma_nr + omega_rabi * omega_rabi / gamma_m;
        let p = params(gamma_r, gamma_nr, gamma_m, omega_rabi);
        prop_assert!(p.wcc_residual().abs() < 1e-12 * omega_rabi * omega_rabi.max(1.0));
        prop_assert!(det_s(&p, p.omega0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn loci_scale_with_energy(k in 0.2..5.0f64, gamma_r in 0.5..8.0f64, gamma_m in 0.5..8.0f64) {
        // scaling every rate and ω − ω0 by k leaves |det S| invariant
        let p = params(gamma_r, 0.5, gamma_m, 6.0);
        let q = ModelParams {
            gamma_r: k * gamma_r,
            gamma_nr: k * 0.5,
            gamma_m: k * gamma_m,
            omega_rabi: k * 6.0,
            ..p
        };
        for x in [-7.0, -2.0, 0.0, 1.5, 9.0] {
            let a = det_s(&p, p.omega0 + x).unwrap().norm();
            let b = det_s(&q, q.omega0 + k * x).unwrap().norm();
            prop_assert!((a - b).abs() < 1e-12);
        }
        let wp = EnergyWindow::around(&p);
        let wq = EnergyWindow { min: q.omega0 + k * (wp.min - p.omega0), max: q.omega0 + k * (wp.max - p.omega0) };
        let (_, mp) = min_abs_det_real(&p, &wp);
        let (_, mq) = min_abs_det_real(&q, &wq);
        prop_assert!((mp - mq).abs() < 1e-9);
        let rp = classify_regime(&p, &wp, 1001).unwrap();
        let rq = classify_regime(&q, &wq, 1001).unwrap();
        prop_assert_eq!(rp.n_peaks, rq.n_peaks);
    }

    #[test]
    fn minimum_is_continuous(gamma_r in 1.0..9.0f64) {
        let p = params(gamma_r, 0.0, 5.0, 8.0);
        let q = params(gamma_r + 1e-4, 0.0, 5.0, 8.0);
        let (_, a) = min_abs_det_real(&p, &EnergyWindow::around(&p));
        let (_, b) = min_abs_det_real(&q, &EnergyWindow::around(&q));
        prop_assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn strong_locus_is_diagonal_of_the_rate_map() {
    // Ω = 8, γ_nr = 0: strong critical coupling along γ_r = γ_m for γ_m < 8
    let base = params(3.0, 0.0, 5.0, 8.0);
    let axis = |rate| SweepAxis {
        rate,
        min: 1.0,
        max: 7.0,
        n: 13,
    };
    let map = critical_loci(
        &base,
        &RateSweep {
            x: axis(Rate::GammaR),
            y: axis(Rate::GammaM),
        },
    )
    .unwrap();
    assert_eq!(map.points.len(), 169);
    for iy in 0..map.ny {
        for ix in 0..map.nx {
            let pt = map.at(ix, iy);
            let on_diagonal = ix == iy;
            assert_eq!(pt.scc_residual.abs() < 1e-12, on_diagonal, "{pt:?}");
            if on_diagonal {
                assert!(pt.min_abs_det < 1e-9, "{pt:?}");
                assert_eq!(pt.n_peaks, 2, "{pt:?}");
            } else {
                assert!(pt.min_abs_det > 1e-6, "{pt:?}");
            }
        }
    }
}

#[test]
fn bare_cavity_weak_locus_is_ordinary_critical_coupling() {
    let base = params(3.0, 3.0, 5.0, 0.0);
    let axis = |rate| SweepAxis {
        rate,
        min: 0.5,
        max: 6.0,
        n: 12,
    };
    let map = critical_loci(
        &base,
        &RateSweep {
            x: axis(Rate::GammaR),
            y: axis(Rate::GammaNr),
        },
    )
    .unwrap();
    for pt in &map.points {
        let ordinary = (pt.x - pt.y).abs() < 1e-12;
        assert_eq!(pt.min_abs_det < 1e-9, ordinary, "{pt:?}");
        // Ω = 0: γ_m (γ_r − γ_nr) = 0 exactly on γ_r = γ_nr
        assert_eq!(pt.wcc_residual.abs() < 1e-12, ordinary, "{pt:?}");
        assert_eq!(pt.n_peaks, 1);
    }
}

#[test]
fn regime_report_is_consistent() {
    let p = ModelParams::MEASURED_SAMPLE;
    let r = classify_regime(&p, &EnergyWindow::around(&p), 2001).unwrap();
    assert_eq!(r.n_peaks, 2);
    assert!(r.cpa_frequencies.is_empty());
    assert_eq!(r.scc_residual, p.scc_residual());
    for w in &r.peak_positions {
        assert!((w - p.omega0).abs() > 5.0 && (w - p.omega0).abs() < 8.5);
    }
}

#[test]
fn critical_sample_reports_cpa_frequencies() {
    let p = params(5.0, 0.0, 5.0, 8.0);
    let r = classify_regime(&p, &EnergyWindow::around(&p), 2001).unwrap();
    let split = 39.0f64.sqrt();
    assert_eq!(r.cpa_frequencies.len(), 2);
    assert!((r.cpa_frequencies[0] - (p.omega0 - split)).abs() < 1e-5);
    assert!((r.cpa_frequencies[1] - (p.omega0 + split)).abs() < 1e-5);
}
