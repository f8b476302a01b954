//! Dense box-constrained quadratic programming.
//!
//! Solves `min 1/2 x'Hx + g'x  s.t.  lower <= x <= upper` with a primal
//! active-set iteration. `H` must be symmetric positive definite, which the
//! Gauss-Newton assembly guarantees whenever the input weight is positive.
//! The iteration never aborts: on hitting the iteration cap the best (always
//! feasible) iterate is returned with a status flag so the control loop can
//! keep running.

use nalgebra::{DMatrix, DVector};

/// Per-variable bound state. `Fixed` marks equality bounds (`lower == upper`,
/// e.g. a failed rotor) that are never released.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    Free,
    Lower,
    Upper,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Signed bound multipliers: the objective gradient at the solution for
    /// active variables (>= 0 on lower bounds, <= 0 on upper bounds), zero
    /// for free variables.
    pub multipliers: DVector<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: QpStatus,
    pub active_set: Vec<VarBound>,
}

const EQUALITY_EPS: f64 = 1e-12;
const OPTIMALITY_TOL: f64 = 1e-9;

fn solve_equality_subproblem(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    x: &DVector<f64>,
    free: &[usize],
) -> Option<DVector<f64>> {
    let nf = free.len();
    let n = g.len();
    let mut hff = DMatrix::zeros(nf, nf);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            hff[(a, b)] = h[(i, j)];
        }
    }
    let mut rhs = DVector::zeros(nf);
    let free_mask: Vec<bool> = {
        let mut m = vec![false; n];
        for &i in free {
            m[i] = true;
        }
        m
    };
    for (a, &i) in free.iter().enumerate() {
        let mut v = g[i];
        for j in 0..n {
            if !free_mask[j] {
                v += h[(i, j)] * x[j];
            }
        }
        rhs[a] = -v;
    }

    let mut jitter = 0.0;
    for _ in 0..6 {
        let mut m = hff.clone();
        if jitter > 0.0 {
            for d in 0..nf {
                m[(d, d)] += jitter;
            }
        }
        if let Some(chol) = m.cholesky() {
            return Some(chol.solve(&rhs));
        }
        jitter = if jitter == 0.0 { 1e-12 } else { jitter * 100.0 };
    }
    None
}

fn kkt_residual(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    x: &DVector<f64>,
    state: &[VarBound],
) -> (f64, DVector<f64>) {
    let grad = h * x + g;
    let mut worst = 0.0f64;
    let mut multipliers = DVector::zeros(g.len());
    for i in 0..g.len() {
        match state[i] {
            VarBound::Free => worst = worst.max(grad[i].abs()),
            VarBound::Lower => {
                multipliers[i] = grad[i];
                worst = worst.max((-grad[i]).max(0.0));
            }
            VarBound::Upper => {
                multipliers[i] = grad[i];
                worst = worst.max(grad[i].max(0.0));
            }
            VarBound::Fixed => multipliers[i] = grad[i],
        }
    }
    (worst, multipliers)
}

/// Solve the box-constrained QP, optionally warm-started from a previous
/// active set.
pub fn qp_solve(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    warm_start: Option<&[VarBound]>,
    max_iter: usize,
) -> QpSolution {
    let n = g.len();
    assert_eq!(h.nrows(), n);
    assert_eq!(h.ncols(), n);
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);

    let mut state = vec![VarBound::Free; n];
    let mut x = DVector::zeros(n);
    let warm = warm_start.filter(|w| w.len() == n);
    for i in 0..n {
        if upper[i] - lower[i] < EQUALITY_EPS {
            state[i] = VarBound::Fixed;
            x[i] = lower[i];
            continue;
        }
        match warm.map(|w| w[i]) {
            Some(VarBound::Lower) => {
                state[i] = VarBound::Lower;
                x[i] = lower[i];
            }
            Some(VarBound::Upper) => {
                state[i] = VarBound::Upper;
                x[i] = upper[i];
            }
            _ => x[i] = 0.0f64.clamp(lower[i], upper[i]),
        }
    }

    let mut iterations = 0;
    let mut status = QpStatus::MaxIter;
    while iterations < max_iter {
        iterations += 1;
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == VarBound::Free).collect();

        let step = if free.is_empty() {
            DVector::zeros(0)
        } else {
            match solve_equality_subproblem(h, g, &x, &free) {
                Some(target) => {
                    let mut d = DVector::zeros(free.len());
                    for (a, &i) in free.iter().enumerate() {
                        d[a] = target[a] - x[i];
                    }
                    d
                }
                None => break,
            }
        };

        // Longest feasible step toward the equality-constrained optimum.
        let mut alpha = 1.0;
        let mut blocker: Option<(usize, VarBound)> = None;
        for (a, &i) in free.iter().enumerate() {
            let d = step[a];
            if d > 1e-14 {
                let room = (upper[i] - x[i]) / d;
                if room < alpha {
                    alpha = room;
                    blocker = Some((i, VarBound::Upper));
                }
            } else if d < -1e-14 {
                let room = (lower[i] - x[i]) / d;
                if room < alpha {
                    alpha = room;
                    blocker = Some((i, VarBound::Lower));
                }
            }
        }
        let alpha = alpha.max(0.0);
        for (a, &i) in free.iter().enumerate() {
            x[i] += alpha * step[a];
        }

        if let Some((i, side)) = blocker {
            x[i] = match side {
                VarBound::Upper => upper[i],
                _ => lower[i],
            };
            state[i] = side;
            continue;
        }

        // Full step taken: check multiplier signs of the active bounds.
        let grad = h * &x + g;
        let mut release: Option<(usize, f64)> = None;
        for i in 0..n {
            let violation = match state[i] {
                VarBound::Lower => -grad[i],
                VarBound::Upper => grad[i],
                _ => continue,
            };
            if violation > OPTIMALITY_TOL && release.map_or(true, |(_, v)| violation > v) {
                release = Some((i, violation));
            }
        }
        match release {
            Some((i, _)) => state[i] = VarBound::Free,
            None => {
                status = QpStatus::Converged;
                break;
            }
        }
    }

    let (kkt, multipliers) = kkt_residual(h, g, &x, &state);
    QpSolution { x, multipliers, kkt_residual: kkt, iterations, status, active_set: state }
}
