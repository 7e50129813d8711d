//! Derivative-free simplex descent with dimension-adaptive coefficients.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<T> {
    /// Budget of simplex iterations, shared by all restarts.
    pub max_iterations: usize,
    /// Relative spread of vertex values at which the simplex is converged.
    pub f_tolerance: T,
    /// Largest vertex distance from the best vertex at convergence.
    pub x_tolerance: T,
    /// Edge length of the initial (and every restart) simplex.
    pub initial_step: T,
    /// Fresh simplices built around the converged point, to escape
    /// premature collapse.
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct SimplexResult<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0`. Non-finite objective values are treated
/// as `+∞`, so infeasible regions simply repel the simplex.
pub fn minimize<T, F>(mut f: F, x0: &[T], opts: &SimplexOptions<T>) -> SimplexResult<T>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[T], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_f = eval(&best_x, &mut evaluations);
    if n == 0 || opts.max_iterations == 0 {
        return SimplexResult { x: best_x, f: best_f, iterations: 0, evaluations, converged: opts.max_iterations == 0 };
    }

    let nf = T::from_count(n);
    let one = T::one();
    let half = T::lit(0.5);
    let expand = one + T::lit(2.0) / nf;
    let contract = T::lit(0.75) - half / nf;
    let shrink = one - one / nf;

    let mut iterations = 0usize;
    let mut converged;
    let mut restarts_left = opts.restarts;

    loop {
        let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
        let mut values: Vec<T> = Vec::with_capacity(n + 1);
        simplex.push(best_x.clone());
        values.push(best_f);
        for i in 0..n {
            let mut v = best_x.clone();
            v[i] = v[i] + opts.initial_step;
            values.push(eval(&v, &mut evaluations));
            simplex.push(v);
        }
        let entry_f = best_f;
        let mut run_converged = false;

        while iterations < opts.max_iterations {
            iterations += 1;
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let (f_best, f_worst) = (values[0], values[n]);
            if f_best.is_finite() && f_worst.is_finite() {
                let spread = f_worst - f_best;
                let size = simplex[1..]
                    .iter()
                    .map(|v| v.iter().zip(&simplex[0]).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
                    .fold(T::zero(), T::max);
                if spread <= opts.f_tolerance * (f_best.abs() + opts.f_tolerance) && size <= opts.x_tolerance {
                    run_converged = true;
                    break;
                }
            }

            let mut centroid = vec![T::zero(); n];
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c = *c + *x;
                }
            }
            centroid.iter_mut().for_each(|c| *c = *c / nf);

            let along = |t: T| -> Vec<T> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| *c + t * (*c - *w)).collect()
            };

            let reflected = along(one);
            let f_r = eval(&reflected, &mut evaluations);
            if f_r < values[0] {
                let expanded = along(expand);
                let f_e = eval(&expanded, &mut evaluations);
                if f_e < f_r {
                    simplex[n] = expanded;
                    values[n] = f_e;
                } else {
                    simplex[n] = reflected;
                    values[n] = f_r;
                }
                continue;
            }
            if f_r < values[n - 1] {
                simplex[n] = reflected;
                values[n] = f_r;
                continue;
            }
            let (candidate, f_c) = if f_r < values[n] {
                let c = along(contract);
                let fc = eval(&c, &mut evaluations);
                (c, fc)
            } else {
                let c = along(-contract);
                let fc = eval(&c, &mut evaluations);
                (c, fc)
            };
            if f_c < values[n].min(f_r) {
                simplex[n] = candidate;
                values[n] = f_c;
                continue;
            }
            for i in 1..=n {
                let shrunk: Vec<T> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| *b + shrink * (*x - *b)).collect();
                values[i] = eval(&shrunk, &mut evaluations);
                simplex[i] = shrunk;
            }
        }

        let (i_best, _) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(core::cmp::Ordering::Equal))
            .expect("simplex is never empty");
        if values[i_best] < best_f {
            best_f = values[i_best];
            best_x = simplex[i_best].clone();
        }
        converged = run_converged;

        let improved = entry_f.is_infinite() || entry_f - best_f > opts.f_tolerance * (best_f.abs() + T::min_positive_value());
        if !run_converged || restarts_left == 0 || iterations >= opts.max_iterations || !improved {
            break;
        }
        restarts_left -= 1;
    }

    SimplexResult { x: best_x, f: best_f, iterations, evaluations, converged }
}
