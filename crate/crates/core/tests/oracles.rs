use gamecx::game::GameMatrix;
use gamecx::lasso::{lasso_fit, LassoOptions};
use gamecx::solvers::mixed_nash;
use gamecx::stats::{pearson_r, regularized_beta, t_two_sided_p};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::beta::beta_reg;

#[test]
fn unpenalized_lasso_is_least_squares() {
    let mut r = ChaCha8Rng::seed_from_u64(17);
    let (n, k) = (60, 5);
    let z: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
    let y: Vec<f64> = z
        .iter()
        .map(|row| 1.5 + row.iter().enumerate().map(|(j, x)| (j as f64 - 2.0) * x).sum::<f64>() + r.gen_range(-0.5..0.5))
        .collect();
    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { z[i][j - 1] });
    let ols = design.clone().svd(true, true).solve(&DVector::from_vec(y.clone()), 1e-14).unwrap();
    let opts = LassoOptions { tol: 1e-13, max_sweeps: 1_000_000 };
    let fit = lasso_fit(&z, &y, 0.0, &opts).unwrap();
    assert!((fit.intercept - ols[0]).abs() < 1e-9);
    for j in 0..k {
        assert!((fit.coef[j] - ols[j + 1]).abs() < 1e-9, "{j}: {} vs {}", fit.coef[j], ols[j + 1]);
    }
}

#[test]
fn t_test_matches_student_distribution() {
    for &df in &[1.0, 3.0, 10.0, 57.0, 400.0] {
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        for &t in &[0.0, 0.3, 1.0, 2.0, 4.5, -2.5] {
            let want = 2.0 * (1.0 - dist.cdf(f64::abs(t)));
            let got = t_two_sided_p(t, df);
            assert!((got - want).abs() < 1e-10, "t={t} df={df}: {got} vs {want}");
        }
    }
}

#[test]
fn regularized_beta_matches_reference() {
    for &(x, a, b) in &[(0.1, 0.5, 0.5), (0.5, 2.0, 3.0), (0.9, 10.0, 0.5), (0.3, 28.5, 0.5), (0.99, 1.5, 200.0)] {
        let want = beta_reg(a, b, x);
        assert!((regularized_beta(x, a, b) - want).abs() < 1e-12, "{x} {a} {b}");
    }
}

#[test]
fn correlation_p_value_uses_n_minus_two_degrees() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let y = [2.1, 1.9, 3.5, 3.9, 4.2, 6.1, 5.8, 8.4];
    let c = pearson_r(&x, &y).unwrap();
    let t = c.r * ((x.len() as f64 - 2.0) / (1.0 - c.r * c.r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, x.len() as f64 - 2.0).unwrap();
    assert!((c.p_value - 2.0 * (1.0 - dist.cdf(t))).abs() < 1e-10);
}

#[test]
fn mixed_equilibrium_solves_indifference_system() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut seen = 0;
    while seen < 200 {
        let row: [i32; 4] = [0; 4].map(|_| r.gen_range(1..=50));
        let col: [i32; 4] = [0; 4].map(|_| r.gen_range(1..=50));
        let g = GameMatrix::unchecked("m", row, col);
        let Some(m) = mixed_nash(&g).interior() else { continue };
        let [a, b, c, d] = row.map(f64::from);
        let [x, y, z, w] = col.map(f64::from);
        // (a - b - c + d) q = d - b ; (x - y - z + w) p = w - z
        let lhs = Matrix2::new(a - b - c + d, 0.0, 0.0, x - y - z + w);
        let sol = lhs.lu().solve(&Vector2::new(d - b, w - z)).unwrap();
        assert!((sol[0] - m.q_c).abs() < 1e-12 && (sol[1] - m.p_a).abs() < 1e-12);
        seen += 1;
    }
}
