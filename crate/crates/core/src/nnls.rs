//! Nonnegative least squares with a ridge term.
//!
//! Solves `min ‖Ã·x − b̃‖²  s.t.  x ≥ 0` with `Ã = [A; ω·I]` and `b̃ = [b; 0]`
//! using the Lawson–Hanson active-set method. The entering variable is the one
//! with the largest dual component; exact ties go to the smallest index.

use nalgebra::{DMatrix, DVector};

/// Default weight of the pressure-minimisation rows.
pub const DEFAULT_OMEGA: f64 = 0.06;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub omega: f64,
    /// Optional per-variable caps, applied by clamping and re-solving the rest.
    pub upper_bounds: Option<DVector<f64>>,
}

impl NnlsProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, omega: f64) -> Self {
        NnlsProblem { a, b, omega, upper_bounds: None }
    }

    pub fn with_upper_bounds(mut self, ub: DVector<f64>) -> Self {
        self.upper_bounds = Some(ub);
        self
    }

    fn augmented(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (m, n) = self.a.shape();
        let mut a = DMatrix::zeros(m + n, n);
        a.view_mut((0, 0), (m, n)).copy_from(&self.a);
        for j in 0..n {
            a[(m + j, j)] = self.omega;
        }
        let mut b = DVector::zeros(m + n);
        b.rows_mut(0, m).copy_from(&self.b);
        (a, b)
    }

    /// Stationarity tolerance `1e-10·(1 + ‖ÃᵀÃ‖∞)`.
    pub fn kkt_tolerance(&self) -> f64 {
        let (a, _) = self.augmented();
        1e-10 * (1.0 + inf_norm(&(a.transpose() * &a)))
    }

    /// Gradient of `½‖Ãx − b̃‖²`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (a, b) = self.augmented();
        a.transpose() * (&a * x - b)
    }

    /// `‖Ãx − b̃‖`.
    pub fn objective_norm(&self, x: &DVector<f64>) -> f64 {
        let (a, b) = self.augmented();
        (&a * x - b).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    /// `b − A·x` over the original rows.
    pub residual: DVector<f64>,
    /// `‖b̃ − Ã·x‖`, including the ridge rows.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn solve(problem: &NnlsProblem) -> NnlsSolution {
    let (m, n) = problem.a.shape();
    assert!(m >= 1 && n >= 1, "NNLS needs a non-empty system");
    assert_eq!(problem.b.len(), m, "right-hand side length mismatch");
    let (a, b) = problem.augmented();
    let tol = problem.kkt_tolerance();
    let pinned: Vec<bool> = problem.a.column_iter().map(|c| c.iter().all(|v| *v == 0.0)).collect();
    let cap = 3 * n * (n + m);

    let Some(ub) = &problem.upper_bounds else {
        let (x, iterations, converged) = lawson_hanson(&a, &b, &pinned, tol, cap);
        return finish(problem, x, iterations, converged);
    };

    // Clamp any over-limit variables and re-solve the remaining ones.
    let mut fixed = vec![false; n];
    let mut iterations = 0;
    loop {
        let free: Vec<usize> = (0..n).filter(|&j| !fixed[j]).collect();
        let mut rhs = b.clone();
        for j in (0..n).filter(|&j| fixed[j]) {
            rhs.axpy(-ub[j], &a.column(j), 1.0);
        }
        let mut x = DVector::zeros(n);
        for j in (0..n).filter(|&j| fixed[j]) {
            x[j] = ub[j];
        }
        let mut converged = true;
        if !free.is_empty() {
            let sub = a.select_columns(free.iter());
            let sub_pinned: Vec<bool> = free.iter().map(|&j| pinned[j]).collect();
            let (xs, it, ok) = lawson_hanson(&sub, &rhs, &sub_pinned, tol, cap);
            iterations += it;
            converged = ok;
            for (k, &j) in free.iter().enumerate() {
                x[j] = xs[k];
            }
        }
        let violators: Vec<usize> = free.iter().copied().filter(|&j| x[j] > ub[j]).collect();
        if violators.is_empty() || !converged {
            return finish(problem, x, iterations, converged);
        }
        for j in violators {
            fixed[j] = true;
        }
    }
}

fn finish(problem: &NnlsProblem, x: DVector<f64>, iterations: usize, converged: bool) -> NnlsSolution {
    let residual = &problem.b - &problem.a * &x;
    let ridge = problem.omega * x.norm();
    let residual_norm = (residual.norm_squared() + ridge * ridge).sqrt();
    NnlsSolution { x, residual, residual_norm, iterations, converged }
}

/// Returns `(x, inner iterations, converged)`.
fn lawson_hanson(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    pinned: &[bool],
    tol: f64,
    cap: usize,
) -> (DVector<f64>, usize, bool) {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut blocked = vec![false; n];
    let mut iterations = 0;

    loop {
        let w = a.transpose() * (b - a * &x);
        let entering = (0..n)
            .filter(|&j| !passive[j] && !pinned[j] && !blocked[j] && w[j] > tol)
            .fold(None, |best: Option<usize>, j| match best {
                Some(k) if w[k] >= w[j] => Some(k),
                _ => Some(j),
            });
        let Some(t) = entering else {
            return (x, iterations, true);
        };
        passive[t] = true;

        loop {
            iterations += 1;
            if iterations > cap {
                return (x, iterations, false);
            }
            let z = passive_solution(a, b, &passive);
            if z[t] <= 0.0 && x[t] == 0.0 {
                // Rounding made the entering column useless; skip it until x moves.
                passive[t] = false;
                blocked[t] = true;
                break;
            }
            if (0..n).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                x = z;
                blocked.iter_mut().for_each(|v| *v = false);
                break;
            }
            let (blocking, step) = (0..n)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| (j, x[j] / (x[j] - z[j])))
                .fold((usize::MAX, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            x += (&z - &x) * step;
            x[blocking] = 0.0;
            for j in 0..n {
                if passive[j] && x[j] <= 0.0 {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            blocked.iter_mut().for_each(|v| *v = false);
        }
    }
}

/// Unconstrained least squares on the passive columns, zero elsewhere.
fn passive_solution(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    let sub = a.select_columns(cols.iter());
    let svd = sub.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-13;
    let zs = svd.solve(b, cutoff).expect("SVD computed with U and V");
    let mut z = DVector::zeros(a.ncols());
    for (k, &j) in cols.iter().enumerate() {
        z[j] = zs[k];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn kkt_holds(problem: &NnlsProblem, sol: &NnlsSolution) -> bool {
        let tol = problem.kkt_tolerance();
        let g = problem.gradient(&sol.x);
        sol.x.iter().zip(g.iter()).all(|(&x, &g)| {
            x >= 0.0 && if x == 0.0 { g >= -tol } else { g.abs() <= tol }
        })
    }

    #[test]
    fn identity_clamps() {
        let p = NnlsProblem::new(DMatrix::identity(3, 3), DVector::from_vec(vec![1.0, -2.0, 3.0]), 0.0);
        let s = solve(&p);
        assert!(s.converged);
        assert_relative_eq!(s.x, DVector::from_vec(vec![1.0, 0.0, 3.0]), epsilon = 1e-14);
        assert!(kkt_holds(&p, &s));
    }

    #[test]
    fn ridge_shrinkage() {
        let p = NnlsProblem::new(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 1.0]), 1.0);
        let s = solve(&p);
        assert_relative_eq!(s.x, DVector::from_vec(vec![0.5, 0.5]), epsilon = 1e-9);
    }

    #[test]
    fn zero_columns_are_pinned() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0]);
        let p = NnlsProblem::new(a, DVector::from_vec(vec![3.0, 1.0]), 0.06);
        let s = solve(&p);
        assert_eq!(s.x[1], 0.0);
        assert!(kkt_holds(&p, &s));
    }

    #[test]
    fn upper_bounds_clamp_and_refit() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![3.0, 2.0]);
        let p = NnlsProblem::new(a, b, 0.0).with_upper_bounds(DVector::from_vec(vec![10.0, 1.0]));
        let s = solve(&p);
        assert_eq!(s.x[1], 1.0);
        // x0 refit against b − A·e1: rows give x0 = 2.
        assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.3, 1.0, 0.2, 0.1, 0.4, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let (x, it, ok) = lawson_hanson(&a, &b, &[false; 3], 1e-12, 1);
        assert!(!ok);
        assert!(it > 1);
        assert!(x.iter().all(|v| *v >= 0.0));
    }

    fn matrix(m: usize, n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, m * n).prop_map(move |v| DMatrix::from_vec(m, n, v))
    }

    fn vector(m: usize) -> impl Strategy<Value = DVector<f64>> {
        prop::collection::vec(-1.0f64..1.0, m).prop_map(DVector::from_vec)
    }

    proptest! {
        #[test]
        fn residual_bounded_by_zero_solution(a in matrix(3, 5), b in vector(3), omega in 0.0f64..0.5) {
            let p = NnlsProblem::new(a, b.clone(), omega);
            let s = solve(&p);
            prop_assert!(s.converged);
            prop_assert!(s.residual_norm <= b.norm() + 1e-12);
            prop_assert!(kkt_holds(&p, &s));
        }

        #[test]
        fn reproduces_unconstrained_solution(a in matrix(6, 3), x0 in prop::collection::vec(0.1f64..2.0, 3)) {
            prop_assume!(a.clone().svd(false, false).singular_values.min() > 0.05);
            let x0 = DVector::from_vec(x0);
            let p = NnlsProblem::new(a.clone(), &a * &x0, 0.0);
            let s = solve(&p);
            prop_assert!((s.x - x0).amax() < 1e-9);
        }

        #[test]
        fn norm_nonincreasing_in_omega(a in matrix(3, 5), b in vector(3), w1 in 0.0f64..0.5, dw in 0.0f64..0.5) {
            let x1 = solve(&NnlsProblem::new(a.clone(), b.clone(), w1)).x;
            let x2 = solve(&NnlsProblem::new(a, b, w1 + dw)).x;
            prop_assert!(x2.norm() <= x1.norm() + 1e-9);
        }

        #[test]
        fn scale_equivariant(a in matrix(3, 5), b in vector(3), omega in 0.01f64..0.5, c in 0.1f64..10.0) {
            let x1 = solve(&NnlsProblem::new(a.clone(), b.clone(), omega)).x;
            let x2 = solve(&NnlsProblem::new(a * c, b * c, omega * c)).x;
            prop_assert!((x1 - x2).amax() < 1e-8);
        }
    }
}
