//! Derivative-free minimisation with the Nelder–Mead polytope method.
//!
//! Uses the dimension-adaptive coefficients of Gao & Han (2012), which keep the
//! simplex from collapsing prematurely once there are more than a handful of
//! parameters.

#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub max_iters: usize,
    /// Stop when every vertex is within `xtol` (∞-norm) of the best one...
    pub xtol: f64,
    /// ...and their values spread by at most `ftol`.
    pub ftol: f64,
    pub initial_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            max_iters: 4000,
            xtol: 1e-10,
            ftol: 1e-14,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

/// Minimises `f` starting from `x0`. Non-finite values are treated as `+∞`,
/// so the objective may reject points by returning NaN.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &NmOptions) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if n == 0 {
        let fx = eval(x0);
        return NmResult {
            x: Vec::new(),
            fx,
            iters: 0,
            evals: 1,
            converged: true,
        };
    }

    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iters {
        // Stable sort keeps the earliest vertex first among ties: determinism.
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);

        let fspread = values[worst] - values[best];
        let xspread = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if xspread <= opts.xtol && (fspread <= opts.ftol || !fspread.is_finite()) {
            converged = true;
            break;
        }
        iters += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= nf);

        let along = |t: f64, out: &mut Vec<f64>, worst_v: &[f64], centroid: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(centroid).zip(worst_v) {
                *o = c + t * (c - w);
            }
        };

        along(alpha, &mut trial, &simplex[worst], &centroid);
        let fr = eval(&trial);
        if fr < values[best] {
            along(alpha * beta, &mut trial2, &simplex[worst], &centroid);
            let fe = eval(&trial2);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        let (t, reference) = if fr < values[worst] {
            (alpha * gamma, fr)
        } else {
            (-gamma, values[worst])
        };
        along(t, &mut trial2, &simplex[worst], &centroid);
        let fc = eval(&trial2);
        if fc <= reference {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for (v, a) in simplex[i].iter_mut().zip(&anchor) {
                *v = a + delta * (*v - a);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is nonempty");
    NmResult {
        x: simplex[best].clone(),
        fx: values[best],
        iters,
        evals,
        converged,
    }
}
