//! One-dimensional and box-bounded derivative-free minimizers.

/// Golden-section search on `[a, b]` until the bracket is narrower than
/// `tol`. Returns the best point evaluated.
pub fn golden_section(mut a: f64, mut b: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Vertex of the parabola through three points, if it opens upward.
pub fn parabola_vertex((x0, f0): (f64, f64), (x1, f1): (f64, f64), (x2, f2): (f64, f64)) -> Option<f64> {
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature.is_finite() && curvature > 0.0) {
        return None;
    }
    Some(0.5 * (x0 + x1) - d01 / (2.0 * curvature))
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_evaluations: usize,
    /// Relative change of the mean simplex value regarded as no progress.
    pub tolerance: f64,
    /// Consecutive non-improving accepted steps before stopping.
    pub patience: usize,
    /// Initial edge length in the unit box.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_evaluations: 1000,
            tolerance: 1e-6,
            patience: 20,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best-so-far value after each evaluation.
    pub history: Vec<f64>,
}

struct Tracker<F> {
    f: F,
    evaluations: usize,
    budget: usize,
    history: Vec<f64>,
    best: (Vec<f64>, f64),
}

impl<F: FnMut(&[f64]) -> f64> Tracker<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        self.evaluations += 1;
        if v < self.best.1 {
            self.best = (x.to_vec(), v);
        }
        self.history.push(self.best.1);
        v
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }
}

fn mean_value(simplex: &[(Vec<f64>, f64)]) -> f64 {
    simplex.iter().map(|s| s.1).sum::<f64>() / simplex.len() as f64
}

/// Nelder-Mead with dimension-adaptive coefficients on the unit box
/// `[0, 1]^n`; trial points are projected onto the box. When the simplex
/// collapses before the budget is spent it is rebuilt around the best vertex
/// with half the previous edge length.
pub fn nelder_mead(start: &[f64], options: &SimplexOptions, f: impl FnMut(&[f64]) -> f64) -> SimplexResult {
    let n = start.len();
    let dim = n.max(1) as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / dim, 0.75 - 1.0 / (2.0 * dim), 1.0 - 1.0 / dim);
    let project = |x: &mut [f64]| x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));

    let mut x0 = start.to_vec();
    project(&mut x0);
    let mut tracker = Tracker {
        f,
        evaluations: 0,
        budget: options.max_evaluations.max(1),
        history: Vec::new(),
        best: (x0.clone(), f64::INFINITY),
    };
    tracker.eval(&x0);

    let mut step = options.initial_step;
    'outer: while n > 0 && !tracker.exhausted() {
        let center = tracker.best.clone();
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![center.clone()];
        for i in 0..n {
            if tracker.exhausted() {
                break 'outer;
            }
            let mut x = center.0.clone();
            x[i] = if x[i] + step <= 1.0 { x[i] + step } else { x[i] - step };
            let v = tracker.eval(&x);
            simplex.push((x, v));
        }

        let mut stalled = 0usize;
        let mut mean = mean_value(&simplex);
        while !tracker.exhausted() {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter < 1e-12 {
                break;
            }

            let worst = simplex[n].clone();
            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|s| s.0[i]).sum::<f64>() / dim)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                let mut x: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
                project(&mut x);
                x
            };

            let xr = along(alpha);
            let fr = tracker.eval(&xr);
            let accepted = if fr < simplex[0].1 {
                if tracker.exhausted() {
                    Some((xr, fr))
                } else {
                    let xe = along(alpha * gamma);
                    let fe = tracker.eval(&xe);
                    Some(if fe < fr { (xe, fe) } else { (xr, fr) })
                }
            } else if fr < simplex[n - 1].1 {
                Some((xr, fr))
            } else if tracker.exhausted() {
                None
            } else {
                let xc = if fr < worst.1 { along(alpha * rho) } else { along(-rho) };
                let fc = tracker.eval(&xc);
                (fc < worst.1.min(fr)).then_some((xc, fc))
            };

            match accepted {
                Some(vertex) => {
                    simplex[n] = vertex;
                    let new_mean = mean_value(&simplex);
                    let scale = mean.abs().max(f64::MIN_POSITIVE);
                    let progressed =
                        !new_mean.is_finite() || !mean.is_finite() || (mean - new_mean) / scale >= options.tolerance;
                    stalled = if progressed { 0 } else { stalled + 1 };
                    mean = new_mean;
                    if stalled >= options.patience {
                        break 'outer;
                    }
                }
                None => {
                    // shrink toward the best vertex
                    let best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        if tracker.exhausted() {
                            break;
                        }
                        let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
                        let v = tracker.eval(&x);
                        *vertex = (x, v);
                    }
                    mean = mean_value(&simplex);
                }
            }
        }
        if tracker.best.1 == 0.0 {
            break;
        }
        step = (step * 0.5).max(1e-6);
    }

    SimplexResult {
        x: tracker.best.0,
        value: tracker.best.1,
        evaluations: tracker.evaluations,
        history: tracker.history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        let (x, fx) = golden_section(0.0, 2.0, 1e-8, |x| (x - 1.3).powi(2));
        assert!((x - 1.3).abs() < 1e-8);
        assert!(fx < 1e-15);
    }

    #[test]
    fn parabola_vertex_is_exact_for_quadratics() {
        let f = |x: f64| 3.0 * (x - 0.7).powi(2) + 1.0;
        let v = parabola_vertex((0.0, f(0.0)), (0.4, f(0.4)), (1.5, f(1.5))).unwrap();
        assert!((v - 0.7).abs() < 1e-12);
        assert!(parabola_vertex((0.0, 1.0), (1.0, 0.0), (2.0, -1.0)).is_none());
    }

    #[test]
    fn nelder_mead_on_box_rosenbrock() {
        let target = [0.3, 0.6];
        let options = SimplexOptions {
            max_evaluations: 4000,
            ..SimplexOptions::default()
        };
        let result = nelder_mead(&[0.9, 0.1], &options, |x| {
            let (a, b) = (x[0] - target[0], x[1] - target[1]);
            100.0 * (b - a * a).powi(2) + a * a
        });
        assert!(result.value < 1e-10, "{}", result.value);
        assert!(result.evaluations <= 4000);
        assert_eq!(result.history.len(), result.evaluations);
        assert!(result.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nelder_mead_respects_the_box() {
        let result = nelder_mead(&[0.5, 0.5, 0.5], &SimplexOptions::default(), |x| {
            x.iter().map(|v| (v - 2.0).powi(2)).sum()
        });
        assert!(result.x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!((result.value - 3.0).abs() < 1e-6);
    }
}
