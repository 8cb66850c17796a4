use chanfid_core::channels::ChoiMatrix;
use chanfid_core::linalg::{self, kron, partial_trace, realify, symmetric_eigenvalues};
use chanfid_core::oracle::{
    all_permutations, dense_reconstruct, permutation_operator, random_channel_choi,
};
use chanfid_core::reduction::{assemble, VariableLayout};
use chanfid_core::sdpsolve::{solve_ipm, IpmOptions};
use chanfid_core::{Complex64, ComplexMatrix, Dims, InvariantOperator, SystemShape};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix(side: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    ComplexMatrix::from_fn(side, side, |r, k| {
        let (a, b) = entries[(r * side + k) % entries.len()];
        c(a, b)
    })
}

fn hermitian(side: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    let m = matrix(side, entries);
    m.add(&m.adjoint()).unwrap()
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.sub(b).unwrap().max_abs()
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=40)
}

fn random_choi(d_in: usize, d_out: usize, k: usize, seed: u64) -> ChoiMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ChoiMatrix {
        matrix: random_channel_choi(d_in, d_out, k, &mut rng).unwrap(),
        d_a: d_in,
        d_b: d_out,
    }
}

/// Random Hermitian invariant operator with coefficients in `[-1, 1]`.
fn random_invariant(dims: Dims, seed: u64) -> InvariantOperator {
    use rand::Rng;
    let layout = VariableLayout::new(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![c(0.0, 0.0); layout.len()];
    for k in 0..layout.len() {
        let a = layout.adjoint(k);
        if k < a {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            v[k] = z;
            v[a] = z.conj();
        } else if k == a {
            v[k] = c(rng.gen_range(-1.0..1.0), 0.0);
        }
    }
    let mut op = InvariantOperator::new(dims.d_a, dims.d_abar, dims.d_h(), dims.n);
    for (k, &x) in v.iter().enumerate() {
        op.add(layout.element(k), x);
    }
    op
}

fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    max_diff(&a.matmul(b).unwrap(), &b.matmul(a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_is_linear_and_trace_preserving(
        dims in shape_strategy(),
        ea in entries(),
        eb in entries(),
        (s, t) in (-2.0f64..2.0, -2.0f64..2.0),
        mask in 0u8..8,
    ) {
        let shape = SystemShape::new(dims.clone()).unwrap();
        let side = shape.total();
        let (a, b) = (matrix(side, &ea), matrix(side, &eb));
        let traced: Vec<usize> = (0..dims.len()).filter(|k| mask >> k & 1 == 1).collect();

        let combo = a.scale(c(s, 0.0)).add(&b.scale(c(0.0, t))).unwrap();
        let lhs = partial_trace(&combo, &shape, &traced).unwrap();
        let pa = partial_trace(&a, &shape, &traced).unwrap();
        let pb = partial_trace(&b, &shape, &traced).unwrap();
        let rhs = pa.scale(c(s, 0.0)).add(&pb.scale(c(0.0, t))).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
        prop_assert!((pa.trace() - a.trace()).norm() <= 1e-12);

        let all: Vec<usize> = (0..dims.len()).collect();
        let scalar = partial_trace(&a, &shape, &all).unwrap();
        prop_assert_eq!((scalar.rows(), scalar.cols()), (1, 1));
        prop_assert!((scalar[(0, 0)] - a.trace()).norm() <= 1e-12);
    }

    #[test]
    fn kron_is_associative_on_integer_entries(
        (p, q, r) in (1usize..=3, 1usize..=3, 1usize..=2),
        ints in prop::collection::vec((-4i8..=4, -4i8..=4), 1..=20),
    ) {
        let e: Vec<(f64, f64)> = ints.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let (a, b) = (matrix(p, &e), matrix(q, &e[e.len() / 2..]));
        let m = matrix(r, &e[e.len() / 3..]);
        prop_assert_eq!(kron(&kron(&a, &b), &m), kron(&a, &kron(&b, &m)));
    }

    #[test]
    fn realify_keeps_the_spectrum(side in 1usize..=6, e in entries()) {
        let h = hermitian(side, &e);
        let complex = linalg::eigenvalues_hermitian(&h).unwrap();
        let real = symmetric_eigenvalues(&realify(&h).unwrap());
        prop_assert_eq!(real.len(), 2 * side);
        for (k, lam) in complex.iter().enumerate() {
            prop_assert!((real[2 * k] - lam).abs() <= 1e-9);
            prop_assert!((real[2 * k + 1] - lam).abs() <= 1e-9);
        }
        let lmin = linalg::min_eigenvalue(&h).unwrap();
        if lmin.abs() > 1e-9 {
            prop_assert_eq!(real[0] > 0.0, lmin > 0.0);
        }
    }

    #[test]
    fn random_channels_have_unit_trace_psd_choi(
        (d_in, d_out, k) in (1usize..=3, 1usize..=3, 1usize..=4),
        seed in any::<u64>(),
    ) {
        prop_assume!(d_in <= d_out * k);
        let choi = random_choi(d_in, d_out, k, seed);
        prop_assert!((choi.matrix.trace() - c(1.0, 0.0)).norm() <= 1e-12);
        let report = choi.report().unwrap();
        prop_assert!(report.passes, "{:?}", report);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Both marginals of an invariant operator stay invariant under the
    /// permutations of the copies that survive the partial trace.
    #[test]
    fn marginals_of_invariant_operators_keep_residual_symmetry(
        (d_a, d_abar) in (1usize..=2, 1usize..=2),
        (d_b, d_bbar) in prop_oneof![Just((2usize, 1usize)), Just((1, 2))],
        n in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let dims = Dims { d_a, d_abar, d_b, d_bbar, n };
        let rho = dense_reconstruct(&random_invariant(dims, seed)).unwrap();
        let mut sys = vec![d_a, d_abar];
        for _ in 0..n {
            sys.extend([d_b, d_bbar]);
        }
        let shape = SystemShape::new(sys.clone()).unwrap();
        let d_h = d_b * d_bbar;

        let without_abar = partial_trace(&rho, &shape, &[1]).unwrap();
        for pi in all_permutations(n) {
            let u = kron(&ComplexMatrix::identity(d_a), &permutation_operator(&pi, d_h).unwrap());
            prop_assert!(commutator_norm(&without_abar, &u) <= 1e-9);
        }

        let without_last = partial_trace(&rho, &shape, &[sys.len() - 1]).unwrap();
        for pi in all_permutations(n - 1) {
            let inner = permutation_operator(&pi, d_h).unwrap();
            let u = kron(
                &kron(&ComplexMatrix::identity(d_a * d_abar), &inner),
                &ComplexMatrix::identity(d_b),
            );
            prop_assert!(commutator_norm(&without_last, &u) <= 1e-9);
        }
    }

    /// The maximally mixed point satisfies every assembled equality and has
    /// objective `1/M²` regardless of the channel.
    #[test]
    fn maximally_mixed_point_is_feasible_with_closed_form_objective(
        (d_in, d_out, k) in (1usize..=2, 1usize..=2, 2usize..=3),
        m in 1usize..=3,
        n in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let r = assemble(&random_choi(d_in, d_out, k, seed), m, n).unwrap();
        let v = r.strictly_feasible_point();
        prop_assert!(r.row_residual(&v) <= 1e-14);
        let obj = r.objective_value(&v);
        let expect = 1.0 / (m * m) as f64;
        prop_assert!((obj.re - expect).abs() <= 1e-12 && obj.im.abs() <= 1e-12, "{obj} vs {expect}");
        for b in r.block_matrices(&v) {
            prop_assert!(linalg::min_eigenvalue(&b).unwrap() > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// IPM solutions are feasible, reproducible, and no feasible point on the
    /// segment towards the interior does better than the reported value.
    #[test]
    fn ipm_optimum_is_feasible_deterministic_and_locally_optimal(
        (d_in, d_out, k) in (2usize..=2, 1usize..=2, 2usize..=3),
        seed in any::<u64>(),
        t in 1e-6f64..1e-3,
    ) {
        let r = assemble(&random_choi(d_in, d_out, k, seed), 2, 1).unwrap();
        let (sdp, pl) = r.to_block_sdp(r.default_field()).unwrap();
        let start = r.start(&pl);
        let opts = IpmOptions::default();
        let res = solve_ipm(&sdp, &opts, &start).unwrap();
        prop_assert!(res.eq_residual <= 1e-8);
        prop_assert!(res.min_block_eig >= -1e-8);
        prop_assert!(res.value <= res.dual_value + 10.0 * opts.gap_tol);

        let again = solve_ipm(&sdp, &opts, &start).unwrap();
        prop_assert_eq!(res.value.to_bits(), again.value.to_bits());
        prop_assert_eq!(&res.assignment, &again.assignment);

        let w: Vec<f64> = res
            .assignment
            .iter()
            .zip(&start)
            .map(|(x, s)| x + t * (s - x))
            .collect();
        prop_assert!(sdp.eq_residual(&w) <= 1e-8);
        prop_assert!(sdp.min_block_eigenvalue(&w) >= -1e-8);
        prop_assert!(sdp.objective_value(&w) <= res.value + 10.0 * opts.gap_tol);
    }
}

/// At level 2 the optimizer itself has marginals with the residual symmetry.
#[test]
fn optimizer_marginals_keep_residual_symmetry() {
    let choi = random_choi(2, 2, 2, 11);
    let r = assemble(&choi, 2, 2).unwrap();
    let (sdp, pl) = r.to_block_sdp(r.default_field()).unwrap();
    let opts = IpmOptions {
        gap_tol: 1e-9,
        ..Default::default()
    };
    let res = solve_ipm(&sdp, &opts, &r.start(&pl)).unwrap();
    let rho = dense_reconstruct(&r.to_operator(&pl.complex(&res.assignment))).unwrap();
    let shape = SystemShape::new(vec![2, 2, 2, 2, 2, 2]).unwrap();
    let marginal = partial_trace(&rho, &shape, &[1]).unwrap();
    let swap = kron(
        &ComplexMatrix::identity(2),
        &permutation_operator(&[1, 0], 4).unwrap(),
    );
    assert!(commutator_norm(&marginal, &swap) <= 1e-9);
    assert!((rho.trace() - c(1.0, 0.0)).norm() <= 1e-8);
}
