//! Derivative-free simplex minimizer with restarts.

use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct NmOptions {
    pub max_evals: usize,
    /// Convergence tolerance on the simplex objective spread.
    pub tol: f64,
    /// Edge length of the initial simplex.
    pub init_step: f64,
    /// Rebuilds of the simplex around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self { max_evals: 2000, tol: 1e-8, init_step: 0.25, restarts: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: DVector<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evals: usize,
    pub restarts_used: usize,
    pub converged: bool,
    /// Final objective spread across the simplex.
    pub final_spread: f64,
    /// Best objective value after each improving iteration.
    pub history: Vec<f64>,
}

/// Minimize `f` starting at `x0`. Non-finite objective values are treated
/// as worst-possible, so the simplex retreats from invalid regions.
pub fn nelder_mead<F>(f: &mut F, x0: &DVector<f64>, opts: &NmOptions) -> NmResult
where
    F: FnMut(&DVector<f64>) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &DVector<f64>, evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    if n == 0 {
        let fx = eval(x0, &mut evals);
        return NmResult {
            x: x0.clone(),
            f: fx,
            iterations: 0,
            evals,
            restarts_used: 0,
            converged: true,
            final_spread: 0.0,
            history: vec![fx],
        };
    }

    let (alpha, gamma, beta, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut best_x = x0.clone();
    let mut best_f = f64::INFINITY;
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut restarts_used = 0usize;
    let mut converged = false;
    let mut final_spread;

    let mut step = opts.init_step;
    let mut center = x0.clone();

    'outer: loop {
        // Build simplex around `center`.
        let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
        let fc = eval(&center, &mut evals);
        simplex.push((center.clone(), fc));
        for i in 0..n {
            let mut v = center.clone();
            v[i] += step;
            let fv = eval(&v, &mut evals);
            simplex.push((v, fv));
        }

        loop {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if simplex[0].1 < best_f {
                best_f = simplex[0].1;
                best_x = simplex[0].0.clone();
                history.push(best_f);
            }
            let spread = if simplex[n].1.is_finite() {
                simplex[n].1 - simplex[0].1
            } else {
                f64::INFINITY
            };
            final_spread = spread;
            if spread <= opts.tol * (1.0 + simplex[0].1.abs()) {
                converged = true;
                if restarts_used < opts.restarts && evals < opts.max_evals {
                    restarts_used += 1;
                    center = simplex[0].0.clone();
                    step *= 0.25;
                    continue 'outer;
                }
                break 'outer;
            }
            if evals >= opts.max_evals {
                break 'outer;
            }
            iterations += 1;

            // Centroid of all but the worst.
            let mut centroid = DVector::zeros(n);
            for (x, _) in simplex.iter().take(n) {
                centroid += x;
            }
            centroid /= n as f64;

            let worst = simplex[n].clone();
            let reflected = &centroid + (&centroid - &worst.0) * alpha;
            let fr = eval(&reflected, &mut evals);

            if fr < simplex[0].1 {
                let expanded = &centroid + (&reflected - &centroid) * gamma;
                let fe = eval(&expanded, &mut evals);
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let contract_from = if fr < worst.1 { &reflected } else { &worst.0 };
                let contracted = &centroid + (contract_from - &centroid) * beta;
                let fk = eval(&contracted, &mut evals);
                if fk < worst.1.min(fr) {
                    simplex[n] = (contracted, fk);
                } else {
                    // Shrink toward the best vertex.
                    let best = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        item.0 = &best + (&item.0 - &best) * sigma;
                        item.1 = eval(&item.0, &mut evals);
                    }
                }
            }
        }
    }

    NmResult {
        x: best_x,
        f: best_f,
        iterations,
        evals,
        restarts_used,
        converged,
        final_spread,
        history,
    }
}
