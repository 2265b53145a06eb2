//! Cross-checks of the dense eigensolver and the Perron solver against
//! nalgebra's Schur decomposition.

use nalgebra::DMatrix;
use proptest::prelude::*;

use dispersal_core::assembly::{assemble_sampled, chis, pointwise_a};
use dispersal_core::model::{CoefField, DispersalSystem, KernelSpec};
use dispersal_core::opspec::{dense_spectrum, dense_spectrum_matrix, spectral_bound_matrix, spectral_report};
use dispersal_core::perron::{perron, PerronOptions};
use dispersal_core::DMat;

fn schur_eigenvalues(m: &DMat) -> Vec<(f64, f64)> {
    let n = m.rows();
    let mut ev: Vec<(f64, f64)> = DMatrix::from_row_slice(n, n, m.as_slice())
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    ev.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    ev
}

/// Each eigenvalue of `ours` has a match in `theirs` and vice versa.
fn same_multiset(ours: &[(f64, f64)], theirs: &[(f64, f64)], tol: f64) -> bool {
    let close = |a: &(f64, f64), b: &(f64, f64)| (a.0 - b.0).hypot(a.1 - b.1) <= tol;
    ours.len() == theirs.len()
        && ours.iter().all(|a| theirs.iter().any(|b| close(a, b)))
        && theirs.iter().all(|b| ours.iter().any(|a| close(a, b)))
}

fn square(n: usize, entries: &[f64]) -> DMat {
    DMat::from_fn(n, n, |i, j| entries[i * n + j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_spectrum_matches_schur(n in 1usize..12, entries in prop::collection::vec(-5.0f64..5.0, 144)) {
        let m = square(n, &entries);
        let ours: Vec<(f64, f64)> = dense_spectrum_matrix(&m).unwrap().iter().map(|z| (z.re, z.im)).collect();
        let theirs = schur_eigenvalues(&m);
        // Defective clusters lose accuracy like sqrt(eps); random draws are
        // well separated in practice.
        prop_assert!(same_multiset(&ours, &theirs, 1e-7), "{ours:?} vs {theirs:?}");
        for w in ours.windows(2) {
            prop_assert!(w[0].0 >= w[1].0);
        }
    }

    #[test]
    fn perron_root_is_rightmost_eigenvalue(
        n in 1usize..15,
        off in prop::collection::vec(0.0f64..2.0, 225),
        diag in prop::collection::vec(-10.0f64..3.0, 15),
    ) {
        let m = DMat::from_fn(n, n, |i, j| if i == j { diag[i] } else { off[i * n + j] });
        let out = perron(&m, &PerronOptions::default());
        let max_re = schur_eigenvalues(&m)[0].0;
        prop_assert!(out.converged);
        prop_assert!((out.value - max_re).abs() <= 1e-9 * max_re.abs().max(1.0), "{} vs {max_re}", out.value);
    }
}

fn system(kernel: &str, m: &[&[&str]], d: Vec<f64>, l1: usize) -> DispersalSystem {
    let rows: Vec<Vec<&str>> = m.iter().map(|r| r.to_vec()).collect();
    DispersalSystem::new(
        l1,
        d,
        (0..l1).map(|_| KernelSpec::parse(kernel).unwrap()).collect(),
        CoefField::parse(&rows).unwrap(),
        (-1.0, 1.0),
    )
    .unwrap()
}

#[test]
fn certified_eigenvalue_is_separated_in_the_dense_spectrum() {
    let cases = [
        system("exp(-(x-y)^2)", &[&["-x^2", "1"], &["1", "-x^2"]], vec![1.0, 1.0], 2),
        system("exp(-(x-y)^2)", &[&["-1 - 0.2*x^2", "1"], &["1", "-1"]], vec![50.0, 0.0], 1),
        system("1 + x*y/2", &[&["cos(x)"]], vec![0.5], 1),
    ];
    for sys in cases {
        let s = sys.sample(&sys.grid(60).unwrap()).unwrap();
        let op = assemble_sampled(&s);
        let pa = pointwise_a(&s, &chis(&s));
        let r = spectral_report(&op, &pa, &PerronOptions::default(), None).unwrap();
        let lambda = r.certificate.lambda().expect("certified");
        let spec = dense_spectrum(&op).unwrap();
        assert!((spec[0].re - lambda).abs() < 1e-9);
        let delta = lambda - spec[1].re;
        assert!(delta > 0.0, "second real part {} vs {lambda}", spec[1].re);
        let theirs = schur_eigenvalues(&op.matrix);
        assert!((theirs[0].0 - lambda).abs() < 1e-9);
    }
}

#[test]
fn spectral_bound_of_assembled_operators_matches_schur() {
    for (kernel, d) in [("exp(-(x-y)^2)", 0.3), ("exp(-abs(x-y))", 2.0), ("1 + x*y/2", 10.0)] {
        let sys = system(kernel, &[&["-1 + sin(2*x)", "0.5"], &["0.5 + x^2", "-x"]], vec![d, d], 2);
        let s = sys.sample(&sys.grid(70).unwrap()).unwrap();
        let op = assemble_sampled(&s);
        let est = spectral_bound_matrix(&op.matrix, &PerronOptions::default());
        let max_re = schur_eigenvalues(&op.matrix)[0].0;
        assert!((est.value - max_re).abs() <= 1e-9, "{kernel}: {} vs {max_re}", est.value);
    }
}
