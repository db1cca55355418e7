//! Monte Carlo and convergence-rate checks against independent reference values.

use faer::{c64, Mat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsigker_core::ensemble::{hermitian_exp_i, normalized_trace, sample_gue};
use qsigker_core::kernels::{kernel, signature_kernel_pde, signature_kernel_series, KernelMethod};
use qsigker_core::law::{limiting_development, semicircular_law, solve_schwinger_dyson, Potential, SolverOptions};
use qsigker_core::pauli::sample_pauli_ensemble;
use qsigker_core::qsim::{build_trotter_circuit, circuit_trace_exact, circuit_unitary, qsigker_run, CircuitParams};
use qsigker_core::rng::SeedStream;
use qsigker_core::words::{all_words, semicircular_moment, Word};
use qsigker_core::PiecewiseLinearPath;

fn random_path(rng: &mut ChaCha8Rng, d: usize, l: usize) -> PiecewiseLinearPath {
    let inc = (0..l).map(|_| (0..d).map(|_| rng.random_range(-0.8..0.8)).collect()).collect();
    PiecewiseLinearPath::from_increments(d, inc).unwrap()
}

fn trace_of_product(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s / n as f64
}

/// Word traces up to length 6 from prefix products up to length 3.
fn gue_moment_errors(n: usize, draws: u64) -> f64 {
    let words: Vec<Word> = all_words(2, 6).into_iter().filter(|w| !w.is_empty()).collect();
    let mut sums = vec![0.0; words.len()];
    for i in 0..draws {
        let t = sample_gue(n, 2, SeedStream::new(31).child(n as u64).child(i)).unwrap();
        let short: Vec<(Word, Mat<c64>)> = all_words(2, 3)
            .into_iter()
            .map(|w| {
                let mut acc = Mat::<c64>::identity(n, n);
                for &l in w.letters() {
                    acc = &acc * t.matrix(l as usize - 1);
                }
                (w, acc)
            })
            .collect();
        let find = |w: &[u8]| &short.iter().find(|(u, _)| u.letters() == w).unwrap().1;
        for (k, w) in words.iter().enumerate() {
            let l = w.letters();
            let cut = l.len().min(3);
            sums[k] += trace_of_product(find(&l[..cut]), find(&l[cut..]));
        }
    }
    let band = 5.0 / (draws as f64).sqrt() + 10.0 / n as f64;
    words
        .iter()
        .zip(&sums)
        .map(|(w, s)| (s / draws as f64 - semicircular_moment(w)).abs() / band)
        .fold(0.0, f64::max)
}

#[test]
fn gue_moments_converge_to_semicircle() {
    for n in [64, 256] {
        let worst = gue_moment_errors(n, 500);
        assert!(worst <= 1.0, "N={n}: worst error / band = {worst}");
    }
}

#[test]
fn quantum_estimator_concentrates() {
    let path = PiecewiseLinearPath::from_increments(2, vec![vec![0.5, 0.2], vec![-0.3, 0.4]]).unwrap();
    let runs: Vec<_> = (0..50)
        .map(|r| qsigker_run(&path, CircuitParams { m: 3, n: 3, k: 4, seed: 500 + r }, 400).unwrap())
        .collect();
    let grand = runs.iter().map(|o| o.value).sum::<f64>() / runs.len() as f64;
    let inside = runs.iter().filter(|o| (o.value - grand).abs() <= 4.0 * o.stderr()).count();
    assert!(inside >= 47, "{inside}/50 within 4 stderr");
}

#[test]
fn shot_estimator_is_unbiased() {
    let path = PiecewiseLinearPath::line(vec![1.3]);
    let params = CircuitParams { m: 2, n: 2, k: 3, seed: 41 };
    let shots = qsigker_run(&path, params, 200_000).unwrap();
    let draws = 20_000u64;
    let values: Vec<f64> = (0..draws)
        .map(|i| {
            let ops = sample_pauli_ensemble(2, 2, 1, SeedStream::new(77).child(i)).unwrap();
            circuit_trace_exact(&build_trotter_circuit(&path, &ops, 3).unwrap()).unwrap().re
        })
        .collect();
    let mean = values.iter().sum::<f64>() / draws as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
    let se = (shots.stderr().powi(2) + var / draws as f64).sqrt();
    assert!((shots.value - mean).abs() <= 4.0 * se, "{} vs {mean} (se {se})", shots.value);
}

fn operator_norm(m: &Mat<c64>) -> f64 {
    let gram = m.adjoint() * m;
    let ev = gram.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    ev.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt()
}

/// Trotter errors at K = 64 and 128 and the coefficient `|P|_α Δ²` of the first-order bound.
fn trotter_errors(n: usize, m: usize, seed: u64) -> ([f64; 2], f64) {
    let ops = sample_pauli_ensemble(n, m, 2, SeedStream::new(seed)).unwrap();
    let path = PiecewiseLinearPath::from_increments(2, vec![vec![0.7, -0.4]]).unwrap();
    let dense: Vec<Mat<c64>> = ops.iter().map(|o| o.to_dense().unwrap()).collect();
    let inc = &path.increments()[0];
    let dim = 1 << n;
    let b = Mat::from_fn(dim, dim, |r, c| dense.iter().zip(inc).map(|(a, &x)| a[(r, c)] * c64::new(x, 0.0)).sum::<c64>());
    let exact = hermitian_exp_i(&b).unwrap();
    let terms = ops.iter().map(|o| o.nonzero_terms()).max().unwrap() as f64;
    let errs = [64usize, 128]
        .map(|k| operator_norm(&(&circuit_unitary(&build_trotter_circuit(&path, &ops, k).unwrap()).unwrap() - &exact)));
    (errs, terms * path.one_variation().powi(2))
}

#[test]
fn trotter_error_is_within_bound() {
    for seed in 0..4 {
        let (errs, coeff) = trotter_errors(3, 4, seed);
        assert!(errs[0] <= coeff / 64.0 && errs[1] <= coeff / 128.0, "seed {seed}: {errs:?} vs {coeff}/K");
        assert!(errs[1] < errs[0]);
    }
}

#[test]
#[ignore = "the bound is loose: the fitted coefficient is 0.03 to 0.35 of |P|_α Δ² across sampled ensembles"]
fn trotter_error_coefficient_against_bound() {
    let (errs, coeff) = trotter_errors(3, 4, 3);
    // fitted coefficient c of err ≈ c/K + c₂/K² from the two points
    let measured = 2.0 * 128.0 * errs[1] - 64.0 * errs[0];
    let ratio = measured / coeff;
    assert!((0.5..=2.0).contains(&ratio), "coefficient {measured} vs bound {coeff} (ratio {ratio})");
}

#[test]
fn signature_kernel_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1.0 / 64.0;
    for _ in 0..20 {
        let d = rng.random_range(1..=2);
        let (la, lb) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let a = random_path(&mut rng, d, la);
        let b = random_path(&mut rng, d, lb);
        let pde = signature_kernel_pde(&a, &b, h).unwrap();
        let (series, tail) = signature_kernel_series(&a, &b, 16).unwrap();
        let budget = tail + 10.0 * h * h;
        assert!((pde - series).abs() <= budget, "{pde} vs {series}, budget {budget}");
    }
}

#[test]
fn gue_kernel_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let paths: Vec<PiecewiseLinearPath> = (0..6)
        .map(|_| {
            let l = rng.random_range(1..=3);
            random_path(&mut rng, 2, l)
        })
        .collect();
    let mc = KernelMethod::GueClassicalMc {
        params: qsigker_core::ensemble::McParams { n: 64, m: 200, k: 64, seed: 1 },
        development: qsigker_core::ensemble::Development::Exact,
    };
    let q = KernelMethod::GueQuantum { params: CircuitParams { m: 8, n: 8, k: 32, seed: 2 }, shots: 2000 };
    for w in paths.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let series = kernel(a, b, &KernelMethod::GueSeries { depth: 16 }).unwrap();
        let ie = kernel(a, b, &KernelMethod::GueIntegralEq { h: 1.0 / 128.0 }).unwrap();
        assert!((series.value - ie.value).abs() <= 1e-4, "{} vs {}", series.value, ie.value);
        for stochastic in [&mc, &q] {
            let v = kernel(a, b, stochastic).unwrap();
            let se = v.stderr.unwrap();
            assert!((v.value - series.value).abs() <= 4.0 * se + 1e-3, "{}: {} vs {}", stochastic.name(), v.value, series.value);
        }
    }
}

#[test]
fn development_matches_integral_equation() {
    let law = semicircular_law(2, 18);
    let path = PiecewiseLinearPath::from_increments(2, vec![vec![0.6, 0.1], vec![-0.2, 0.7], vec![0.3, -0.3]]).unwrap();
    let dev = limiting_development(&law, &path, 18).unwrap();
    // k(γ, constant) = ⟨γ⟩ and the integral equation is solved on γ ⋆ ←constant = γ
    let constant = PiecewiseLinearPath::constant(2);
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let ie = kernel(&path, &constant, &KernelMethod::GueIntegralEq { h }).unwrap().value;
        assert!((ie - dev.value.re).abs() <= 2.0 * h * h + dev.tail_bound, "h={h}: {ie} vs {}", dev.value.re);
    }
    assert!(dev.value.im.abs() < 1e-12);
}

#[test]
fn quartic_coupling_is_continuous_at_zero() {
    let base = semicircular_law(1, 8);
    let mut prev = f64::INFINITY;
    for g in [0.02, 0.01, 0.005, 0.0025] {
        let law = solve_schwinger_dyson(&Potential::single_variable(4, g), 12, SolverOptions::default()).unwrap();
        let gap = (1..=4)
            .map(|p| (law.coeff(&Word::repeat(1, 2 * p)) - base.coeff(&Word::repeat(1, 2 * p))).abs())
            .fold(0.0, f64::max);
        assert!(gap < prev, "g={g}: {gap}");
        prev = gap;
        // first-order term plus an O(g²) remainder
        let a2 = law.coeff(&Word::repeat(1, 2));
        assert!((a2 - (1.0 - 8.0 * g)).abs() <= 200.0 * g * g);
    }
}

#[test]
fn exact_traces_of_pauli_developments_are_real_on_average() {
    let path = PiecewiseLinearPath::line(vec![1.0]);
    let mut im = 0.0;
    for i in 0..200u64 {
        let ops = sample_pauli_ensemble(4, 4, 1, SeedStream::new(5).child(i)).unwrap();
        let u = hermitian_exp_i(&ops[0].to_dense().unwrap()).unwrap();
        let t: Complex64 = normalized_trace(&u);
        im += t.im;
        let c = circuit_trace_exact(&build_trotter_circuit(&path, &ops, 400).unwrap()).unwrap();
        assert!((c - t).norm() < 0.05);
    }
    assert!((im / 200.0).abs() < 0.02);
}
