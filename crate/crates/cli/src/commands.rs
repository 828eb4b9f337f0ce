use std::f64::consts::PI;
use std::path::Path;

use polariton_cmt::critical::{critical_loci, find_cpa, CpaPoint, EnergyWindow, LociMap, RateSweep};
use polariton_cmt::fit::{fit_params, synth_dataset, DataRow, FitParam, FitResult, Observable, SpectrumDataset};
use polariton_cmt::model::linspace;
use polariton_cmt::oracle::{oracle_scattering_with, DriveSpec, OracleSettings};
use polariton_cmt::twoport::delta_psi_from_traces;
use polariton_cmt::{
    delta_psi, dets_from_observables, joint_absorbance, joint_extrema, scattering_matrix, single_beam_spectrum,
    JointAbsorbanceExtrema, SpectrumTable,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Product, Table};

pub const SPECTRUM_HEADER: &[&str] = &["omega_meV", "R1", "R2", "T", "A1", "A2", "B", "abs_detS"];
pub const SWEEP_PHASE_HEADER: &[&str] = &["phi_rad", "out1", "out2", "a_joint"];
pub const JOINT_HEADER: &[&str] = &[
    "omega_meV",
    "a_min",
    "a_max",
    "a_avg",
    "delta_psi_rad",
    "abs_detS",
    "abs_detS_reconstructed",
];
pub const PHASE_DIAGRAM_HEADER: &[&str] = &["x", "y", "n_peaks", "scc_residual", "wcc_residual", "min_abs_detS"];
pub const CPA_HEADER: &[&str] = &["omega_meV", "abs_detS_min", "phi_star_rad"];
pub const ORACLE_CHECK_HEADER: &[&str] = &["omega_meV", "phi_rad", "a_joint_closed", "a_joint_oracle", "abs_diff"];
pub const DATASET_HEADER: &[&str] = &["omega_meV", "kind", "value", "sigma"];
pub const FIT_HEADER: &[&str] = &["parameter", "value", "std_error"];

fn to_json(v: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("serialisable output")
}

fn grid(cfg: &RunConfig) -> Vec<f64> {
    linspace(cfg.grid.min, cfg.grid.max, cfg.grid.n)
}

/// `n` phases spaced uniformly over [−π, π).
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect()
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<Product> {
    cfg.validate_common()?;
    let table: SpectrumTable =
        single_beam_spectrum(&cfg.model, &cfg.background, &grid(cfg)).map_err(|e| CliError::from_lib("grid", e))?;
    let rows = table
        .points()
        .map(|(w, pt)| {
            vec![w, pt.r1, pt.r2, pt.t, pt.a1, pt.a2, pt.b, pt.abs_det]
                .into_iter()
                .map(Cell::from)
                .collect()
        })
        .collect();
    Ok(Product {
        table: Table {
            header: SPECTRUM_HEADER,
            rows,
        },
        json: to_json(&table),
        empty_result: false,
        notes: json!({ "degenerate_omegas": table.degenerate_omegas() }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepRow {
    pub phi: f64,
    pub out1: f64,
    pub out2: f64,
    pub a_joint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweep {
    pub omega: f64,
    pub extrema: JointAbsorbanceExtrema,
    pub rows: Vec<PhaseSweepRow>,
}

pub fn sweep_phase(cfg: &RunConfig) -> CliResult<Product> {
    cfg.validate_common()?;
    cfg.validate_sweep_phase()?;
    let omega = cfg.sweep_phase.omega.unwrap_or(cfg.model.omega0);
    let s = scattering_matrix(&cfg.model, &cfg.background, omega).map_err(CliError::Numerical)?;
    let rows: Vec<PhaseSweepRow> = phase_grid(cfg.sweep_phase.n_phases)
        .into_iter()
        .map(|phi| {
            let j = joint_absorbance(&s, phi);
            PhaseSweepRow {
                phi,
                out1: j.out1,
                out2: j.out2,
                a_joint: j.a_joint,
            }
        })
        .collect();
    let sweep = PhaseSweep {
        omega,
        extrema: joint_extrema(&s),
        rows,
    };
    Ok(Product {
        table: Table {
            header: SWEEP_PHASE_HEADER,
            rows: sweep
                .rows
                .iter()
                .map(|r| vec![r.phi.into(), r.out1.into(), r.out2.into(), r.a_joint.into()])
                .collect(),
        },
        json: to_json(&sweep),
        empty_result: false,
        notes: json!({ "omega_meV": omega, "extrema": sweep.extrema }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    pub omega: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_avg: f64,
    /// Model-exact Δψ; `None` where a reflection or transmission amplitude vanishes.
    pub delta_psi: Option<f64>,
    /// Δψ recovered from sinusoid fits of the output-intensity sweeps.
    pub delta_psi_fit: Option<f64>,
    pub abs_det: f64,
    /// `|T − e^{iΔψ} √(R1 R2)|` evaluated with the fitted Δψ.
    pub abs_det_reconstructed: Option<f64>,
}

pub fn joint(cfg: &RunConfig) -> CliResult<Product> {
    cfg.validate_common()?;
    cfg.validate_joint()?;
    let phis = phase_grid(cfg.joint.n_phases);
    let rows = grid(cfg)
        .par_iter()
        .map(|&omega| {
            let s = scattering_matrix(&cfg.model, &cfg.background, omega).map_err(CliError::Numerical)?;
            let e = joint_extrema(&s);
            let exact = delta_psi(&s).ok();
            let fitted = exact.and_then(|_| {
                let (o1, o2): (Vec<f64>, Vec<f64>) = phis
                    .iter()
                    .map(|&phi| {
                        let j = joint_absorbance(&s, phi);
                        (j.out1, j.out2)
                    })
                    .unzip();
                delta_psi_from_traces(&phis, &o1, &o2)
            });
            let (r1, r2, t) = (s.s11.norm_sqr(), s.s22.norm_sqr(), s.s21.norm_sqr());
            Ok(JointRow {
                omega,
                a_min: e.a_min,
                a_max: e.a_max,
                a_avg: e.a_avg,
                delta_psi: exact,
                delta_psi_fit: fitted,
                abs_det: s.det().norm(),
                abs_det_reconstructed: fitted.map(|d| dets_from_observables(t, r1, r2, d)),
            })
        })
        .collect::<CliResult<Vec<JointRow>>>()?;
    let undefined: Vec<f64> = rows.iter().filter(|r| r.delta_psi.is_none()).map(|r| r.omega).collect();
    Ok(Product {
        table: Table {
            header: JOINT_HEADER,
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        r.omega.into(),
                        r.a_min.into(),
                        r.a_max.into(),
                        r.a_avg.into(),
                        r.delta_psi.into(),
                        r.abs_det.into(),
                        r.abs_det_reconstructed.into(),
                    ]
                })
                .collect(),
        },
        json: to_json(&rows),
        empty_result: false,
        notes: json!({ "delta_psi_undefined_omegas": undefined, "n_phases_fit": cfg.joint.n_phases }),
    })
}

pub fn phase_diagram(cfg: &RunConfig) -> CliResult<Product> {
    cfg.model.validate().map_err(|e| CliError::from_lib("model", e))?;
    cfg.validate_phase_diagram()?;
    let sweep = RateSweep {
        x: cfg.phase_diagram.x,
        y: cfg.phase_diagram.y,
    };
    let map: LociMap = critical_loci(&cfg.model, &sweep).map_err(|e| CliError::from_lib("phase_diagram", e))?;
    Ok(Product {
        table: Table {
            header: PHASE_DIAGRAM_HEADER,
            rows: map
                .points
                .iter()
                .map(|pt| {
                    vec![
                        pt.x.into(),
                        pt.y.into(),
                        pt.n_peaks.into(),
                        pt.scc_residual.into(),
                        pt.wcc_residual.into(),
                        pt.min_abs_det.into(),
                    ]
                })
                .collect(),
        },
        json: to_json(&map),
        empty_result: false,
        notes: json!({ "x_rate": map.x_rate, "y_rate": map.y_rate, "nx": map.nx, "ny": map.ny }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpaReport {
    pub window: EnergyWindow,
    pub points: Vec<CpaPoint>,
    /// True when `|det S|` has no dip in the window.
    pub empty: bool,
}

pub fn cpa(cfg: &RunConfig) -> CliResult<Product> {
    cfg.model.validate().map_err(|e| CliError::from_lib("model", e))?;
    cfg.background.validate().map_err(|e| CliError::from_lib("background", e))?;
    cfg.validate_cpa()?;
    let window = cfg.cpa_window();
    let points =
        find_cpa(&cfg.model, &cfg.background, &window, cfg.cpa.tol).map_err(|e| CliError::from_lib("cpa", e))?;
    let report = CpaReport {
        window,
        empty: points.is_empty(),
        points,
    };
    Ok(Product {
        table: Table {
            header: CPA_HEADER,
            rows: report
                .points
                .iter()
                .map(|c| vec![c.omega.into(), c.dets_min.into(), c.phi_star.into()])
                .collect(),
        },
        json: to_json(&report),
        empty_result: report.empty,
        notes: json!({ "window": window, "tol": cfg.cpa.tol }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckRow {
    pub omega: f64,
    pub phi: f64,
    pub a_joint_closed: f64,
    pub a_joint_oracle: f64,
    pub abs_diff: f64,
}

pub fn oracle_check(cfg: &RunConfig) -> CliResult<Product> {
    cfg.validate_common()?;
    cfg.validate_oracle_check()?;
    let oc = &cfg.oracle_check;
    let omegas = linspace(cfg.grid.min, cfg.grid.max, oc.n_omega);
    let cells: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&w| phase_grid(oc.n_phases).into_iter().map(move |phi| (w, phi)))
        .collect();
    let settings = OracleSettings {
        dt: oc.dt,
        t_end: oc.t_end,
        ..Default::default()
    };
    let rows = cells
        .par_iter()
        .map(|&(omega, phi)| {
            let s = scattering_matrix(&cfg.model, &cfg.background, omega).map_err(CliError::Numerical)?;
            let closed = joint_absorbance(&s, phi).a_joint;
            let o = oracle_scattering_with(&cfg.model, &cfg.background, &DriveSpec::new(omega, phi), &settings)
                .map_err(|e| CliError::from_lib("oracle_check", e))?;
            Ok(OracleCheckRow {
                omega,
                phi,
                a_joint_closed: closed,
                a_joint_oracle: o.a_joint,
                abs_diff: (closed - o.a_joint).abs(),
            })
        })
        .collect::<CliResult<Vec<OracleCheckRow>>>()?;
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(Product {
        table: Table {
            header: ORACLE_CHECK_HEADER,
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        r.omega.into(),
                        r.phi.into(),
                        r.a_joint_closed.into(),
                        r.a_joint_oracle.into(),
                        r.abs_diff.into(),
                    ]
                })
                .collect(),
        },
        json: to_json(&rows),
        empty_result: false,
        notes: json!({ "max_abs_diff": worst }),
    })
}

fn dataset_table(data: &SpectrumDataset) -> Table {
    Table {
        header: DATASET_HEADER,
        rows: data
            .rows
            .iter()
            .map(|r| vec![r.omega.into(), Cell::Text(r.kind.as_str().into()), r.value.into(), r.sigma.into()])
            .collect(),
    }
}

pub fn synth(cfg: &RunConfig) -> CliResult<Product> {
    cfg.validate_common()?;
    cfg.validate_synth()?;
    let s = &cfg.synth;
    let data = synth_dataset(&cfg.model, &cfg.background, &grid(cfg), &s.kinds, s.noise_sigma, s.seed)
        .map_err(|e| CliError::from_lib("synth", e))?;
    Ok(Product {
        table: dataset_table(&data),
        json: to_json(&data),
        empty_result: false,
        notes: json!({ "seed": s.seed, "noise_sigma": s.noise_sigma }),
    })
}

#[derive(Debug, Deserialize)]
struct CsvDataRow {
    #[serde(rename = "omega_meV")]
    omega: f64,
    kind: String,
    value: f64,
    sigma: f64,
}

/// Reads a dataset in the `synth` layout; `.json` files are parsed as JSON, anything else as CSV.
pub fn read_dataset(path: &Path) -> CliResult<SpectrumDataset> {
    let fail = |msg: String| CliError::config("fit.data", format!("{}: {msg}", path.display()));
    let data = if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?
    } else {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvDataRow>() {
            let r = rec.map_err(|e| fail(e.to_string()))?;
            let kind: Observable = r.kind.parse().map_err(|e: polariton_cmt::CmtError| fail(e.to_string()))?;
            rows.push(DataRow {
                omega: r.omega,
                kind,
                value: r.value,
                sigma: r.sigma,
            });
        }
        SpectrumDataset { rows }
    };
    data.validate().map_err(|e| fail(e.to_string()))?;
    Ok(data)
}

pub fn fit(cfg: &RunConfig) -> CliResult<Product> {
    cfg.background.validate().map_err(|e| CliError::from_lib("background", e))?;
    cfg.validate_fit()?;
    let data = read_dataset(cfg.fit.data.as_deref().expect("validated"))?;
    let result: FitResult = fit_params(&data, &cfg.fit_init(), &cfg.background, &cfg.fit.free).map_err(|e| match e {
        polariton_cmt::CmtError::InvalidDataset(msg) => CliError::config("fit.data", msg),
        other => CliError::from_lib("fit.init", other),
    })?;
    let rows = FitParam::ALL
        .iter()
        .map(|&fp| {
            let se = result.std_errors.get(&fp).copied().flatten();
            vec![Cell::Text(fp.name().into()), fp.get(&result.params).into(), se.into()]
        })
        .collect();
    Ok(Product {
        table: Table {
            header: FIT_HEADER,
            rows,
        },
        json: to_json(&result),
        empty_result: false,
        notes: json!({
            "residual": result.residual,
            "converged": result.converged,
            "n_iter": result.n_iter,
            "n_data": data.len(),
        }),
    })
}
