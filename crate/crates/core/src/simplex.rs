//! Derivative-free Nelder–Mead minimiser over unconstrained ℝⁿ.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Initial edge length along each coordinate.
    pub initial_step: f64,
    /// Stop once every vertex lies within `xtol · (1 + |x_best|∞)` of the best one.
    pub xtol: f64,
    pub max_iter: usize,
    /// Number of fresh-simplex restarts from the converged point.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            xtol: 1e-8,
            max_iter: 20_000,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_iter: usize,
    pub n_eval: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Run {
    x: Vec<f64>,
    f: f64,
    iters: usize,
    evals: usize,
    converged: bool,
}

fn diameter(simplex: &[Vec<f64>], best: usize) -> f64 {
    simplex
        .iter()
        .map(|v| {
            v.iter()
                .zip(&simplex[best])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn run_once<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    steps: &[f64],
    opts: &SimplexOptions,
    max_iter: usize,
) -> Run {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for (i, step) in steps.iter().enumerate() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    let mut iters = 0;
    let mut converged = false;

    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };

    while iters < max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();

        let scale = 1.0 + simplex[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if diameter(&simplex, 0) < opts.xtol * scale {
            converged = true;
            break;
        }
        iters += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = point(&centroid, &worst, -REFLECT);
        let fr = f(&reflected);
        evals += 1;

        if fr < values[0] {
            let expanded = point(&centroid, &worst, -EXPAND);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (candidate, fc) = if fr < values[n] {
            let outside = point(&centroid, &reflected, CONTRACT);
            let fo = f(&outside);
            (outside, fo)
        } else {
            let inside = point(&centroid, &worst, CONTRACT);
            let fi = f(&inside);
            (inside, fi)
        };
        evals += 1;
        if fc < values[n].min(fr) {
            simplex[n] = candidate;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for k in 1..=n {
            simplex[k] = point(&best, &simplex[k], SHRINK);
            values[k] = f(&simplex[k]);
            evals += 1;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Run {
        x: simplex[best].clone(),
        f: values[best],
        iters,
        evals,
        converged,
    }
}

/// Minimises `f` from `x0`. Non-finite objective values are treated as +∞.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let mut guarded = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if x0.is_empty() {
        return SimplexResult {
            x: Vec::new(),
            f: guarded(x0),
            n_iter: 0,
            n_eval: 1,
            converged: true,
        };
    }

    let steps: Vec<f64> = x0
        .iter()
        .map(|&v| if v.abs() > 1.0 { opts.initial_step * v.abs() } else { opts.initial_step })
        .collect();
    let mut run = run_once(&mut guarded, x0, &steps, opts, opts.max_iter);
    let mut n_iter = run.iters;
    let mut n_eval = run.evals;

    // restart with a smaller simplex to escape collapsed simplices
    for _ in 0..opts.restarts {
        if !run.converged || n_iter >= opts.max_iter {
            break;
        }
        let small: Vec<f64> = steps.iter().map(|s| 0.05 * s).collect();
        let again = run_once(&mut guarded, &run.x, &small, opts, opts.max_iter - n_iter);
        n_iter += again.iters;
        n_eval += again.evals;
        let improved = again.f < run.f;
        let moved = again
            .x
            .iter()
            .zip(&run.x)
            .any(|(a, b)| (a - b).abs() > opts.xtol * (1.0 + b.abs()));
        if again.f <= run.f {
            run = again;
        } else {
            run.converged = again.converged;
        }
        if !(improved && moved) {
            break;
        }
    }

    SimplexResult {
        x: run.x,
        f: run.f,
        n_iter,
        n_eval,
        converged: run.converged && n_iter < opts.max_iter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &SimplexOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn quadratic_bowl_4d() {
        let target = [3.0, -2.0, 0.5, 10.0];
        let r = minimize(
            |x| x.iter().zip(&target).enumerate().map(|(i, (a, b))| (i as f64 + 1.0) * (a - b).powi(2)).sum(),
            &[0.0; 4],
            &SimplexOptions::default(),
        );
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let opts = SimplexOptions {
            max_iter: 5,
            ..Default::default()
        };
        let r = minimize(|x| (x[0] - 100.0).powi(2) + x[1] * x[1], &[0.0, 1.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.n_iter, 5);
    }

    #[test]
    fn empty_problem_evaluates_once() {
        let r = minimize(|_| 4.0, &[], &SimplexOptions::default());
        assert!(r.converged && r.f == 4.0 && r.x.is_empty());
    }
}
