#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Dyn, SVD};
use num_complex::Complex;

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// nalgebra's SVD can deflate wrongly on inputs with exact zeros; retry with
/// other thresholds and on the transpose until the factors reconstruct `a`.
fn svd_checked(a: &DMatrix<f64>) -> SVD<f64, Dyn, Dyn> {
    let at = a.transpose();
    for eps in [5.0 * f64::EPSILON, f64::EPSILON, 1e-14, 1e-12] {
        for (m, transposed) in [(a, false), (&at, true)] {
            let Some(svd) = m.clone().try_svd(true, true, eps, 0) else { continue };
            if (svd.clone().recompose().unwrap() - m).norm() > 1e-10 * (1.0 + m.norm()) {
                continue;
            }
            return if transposed {
                SVD { u: svd.v_t.map(|v| v.transpose()), v_t: svd.u.map(|u| u.transpose()), singular_values: svd.singular_values }
            } else {
                svd
            };
        }
    }
    panic!("no SVD attempt reconstructed the input");
}

fn numerical_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let sv = svd_checked(a).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Brute-force `min ‖θ‖₁ s.t. Aθ = b` over real `θ`: the optimum of the
/// equivalent linear program sits at a vertex, i.e. at a solution supported on
/// `rank(A)` linearly independent columns.
pub fn l1_min_real(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<f64> {
    let tol = 1e-9;
    let r = numerical_rank(a, tol);
    if r == 0 {
        return if b.norm() == 0.0 { Some(0.0) } else { None };
    }
    let scale = 1.0 + b.norm();
    let mut best: Option<f64> = None;
    combinations(a.ncols(), r, &mut |cols| {
        let a_s = a.select_columns(cols);
        let svd = svd_checked(&a_s);
        if svd.singular_values.min() <= tol * svd.singular_values.max() {
            return;
        }
        let theta = svd.solve(b, 0.0).unwrap();
        if (&a_s * &theta - b).norm() > 1e-9 * scale {
            return;
        }
        let obj = theta.lp_norm(1);
        best = Some(best.map_or(obj, |v: f64| v.min(obj)));
    });
    best
}

/// Stacks `Zθ = y` with real `θ` as `[Re Z; Im Z] θ = [Re y; Im y]`.
pub fn stack_real(z: &DMatrix<Complex<f64>>, y: &DVector<Complex<f64>>) -> (DMatrix<f64>, DVector<f64>) {
    let m = z.nrows();
    let a = DMatrix::from_fn(2 * m, z.ncols(), |i, k| if i < m { z[(i, k)].re } else { z[(i - m, k)].im });
    let b = DVector::from_fn(2 * m, |i, _| if i < m { y[i].re } else { y[i - m].im });
    (a, b)
}

#[test]
fn oracle_on_known_instances() {
    // x1 + x2 = 1: optimum 1 attained on the whole segment
    let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    assert!((l1_min_real(&a, &DVector::from_vec(vec![1.0])).unwrap() - 1.0).abs() < 1e-12);
    // x1 + 2 x2 = 2: optimum x2 = 1
    let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
    assert!((l1_min_real(&a, &DVector::from_vec(vec![2.0])).unwrap() - 1.0).abs() < 1e-12);
    // x1 - x3 = 1, x2 - x3 = 1: vertices (1,1,0) and (0,0,-1)
    let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, -1.0]);
    assert!((l1_min_real(&a, &DVector::from_vec(vec![1.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
}
