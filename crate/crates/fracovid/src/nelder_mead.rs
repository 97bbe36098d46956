//! Derivative-free simplex minimization (Nelder–Mead) for the low-
//! dimensional fitting problems in this crate.

/// Options for one simplex run.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iterations: usize,
    /// Converged when the function spread over the simplex falls below
    /// `f_tol * (1 + |f_best|)`.
    pub f_tol: f64,
    /// Converged when the simplex diameter falls below `x_tol`.
    pub x_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iterations: 400,
            f_tol: 1e-12,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0`, building the initial simplex by offsetting one
/// coordinate per vertex by the matching entry of `steps`.
pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], options: Options) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len());
    let dim = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut vertex = x0.to_vec();
        vertex[i] += steps[i];
        simplex.push(vertex);
    }
    let mut values: Vec<f64> = simplex
        .iter()
        .map(|v| eval(v, &mut evaluations))
        .collect();

    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        iterations += 1;

        // Order the simplex: best first.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let f_best = values[0];
        let f_worst = values[dim];
        let spread = (f_worst - f_best).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= options.f_tol * (1.0 + f_best.abs()) || diameter <= options.x_tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for vertex in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(vertex) {
                *c += v / dim as f64;
            }
        }

        let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };

        let worst = simplex[dim].clone();
        let reflected = blend(&centroid, &worst, -REFLECTION);
        let f_reflected = eval(&reflected, &mut evaluations);

        if f_reflected < values[0] {
            let expanded = blend(&centroid, &worst, -EXPANSION);
            let f_expanded = eval(&expanded, &mut evaluations);
            if f_expanded < f_reflected {
                simplex[dim] = expanded;
                values[dim] = f_expanded;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_reflected;
            }
        } else if f_reflected < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_reflected;
        } else {
            let (toward, f_toward) = if f_reflected < values[dim] {
                (reflected.clone(), f_reflected)
            } else {
                (worst.clone(), values[dim])
            };
            let contracted = blend(&centroid, &toward, CONTRACTION);
            let f_contracted = eval(&contracted, &mut evaluations);
            if f_contracted < f_toward {
                simplex[dim] = contracted;
                values[dim] = f_contracted;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=dim {
                    let shrunk = blend(&simplex[0].clone(), &simplex[i], SHRINK);
                    values[i] = eval(&shrunk, &mut evaluations);
                    simplex[i] = shrunk;
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    Minimum {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        evaluations,
        converged,
    }
}
