//! Structural properties of states and features, checked against
//! independently built matrices.

use nalgebra::DMatrix;
use proptest::prelude::*;
use qrest::features::{coherence_features, entanglement_features, perturb_features, z_patterns, EntryKind};
use qrest::qcore::{
    c64, fidelity_exact, partial_trace, partial_transpose_matrix, tensor, trace_power, ComplexMatrix, DensityMatrix,
};
use qrest::states::{random_mixed, random_pure, random_separable};

fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() <= tol)
}

fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

fn ket(k: usize, d: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(d, 1);
    v[(k, 0)] = c64(1.0, 0.0);
    v
}

/// `Tr_B ρ = Σ_k (I ⊗ ⟨k|) ρ (I ⊗ |k⟩)` on `dA ⊗ dB`.
fn trace_out_second(rho: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(da, da);
    for k in 0..db {
        let e = tensor(&identity(da), &ket(k, db));
        out += e.adjoint() * rho * &e;
    }
    out
}

/// `Tr_A ρ = Σ_k (⟨k| ⊗ I) ρ (|k⟩ ⊗ I)`.
fn trace_out_first(rho: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(db, db);
    for k in 0..da {
        let e = tensor(&ket(k, da), &identity(db));
        out += e.adjoint() * rho * &e;
    }
    out
}

fn z_string(n: usize, slots: &[usize]) -> ComplexMatrix {
    let z = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0, 0.0), c64(-1.0, 0.0)]));
    let i2 = identity(2);
    (0..n).fold(ComplexMatrix::identity(1, 1), |acc, s| {
        tensor(&acc, if slots.contains(&s) { &z } else { &i2 })
    })
}

fn expect(rho: &DensityMatrix, op: &ComplexMatrix) -> f64 {
    (rho.matrix() * op).trace().re
}

fn dims_strategy() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4, 2usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_matches_kraus_sum((da, db) in dims_strategy(), k in 1usize..5, seed in any::<u64>()) {
        let rho = random_mixed(&[da, db], k, seed).unwrap();
        let a = partial_trace(&rho, &[0]).unwrap();
        let b = partial_trace(&rho, &[1]).unwrap();
        prop_assert!(close(a.matrix(), &trace_out_second(rho.matrix(), da, db), 1e-12));
        prop_assert!(close(b.matrix(), &trace_out_first(rho.matrix(), da, db), 1e-12));
        prop_assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_is_factor((da, db) in dims_strategy(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_mixed(&[da], 3, s1).unwrap();
        let b = random_mixed(&[db], 2, s2).unwrap();
        let ab = DensityMatrix::new(tensor(a.matrix(), b.matrix()), vec![da, db]).unwrap();
        prop_assert!(close(partial_trace(&ab, &[0]).unwrap().matrix(), a.matrix(), 1e-12));
        prop_assert!(close(partial_trace(&ab, &[1]).unwrap().matrix(), b.matrix(), 1e-12));
    }

    #[test]
    fn three_party_partial_trace_composes(seed in any::<u64>()) {
        let rho = random_mixed(&[2, 3, 2], 4, seed).unwrap();
        let direct = partial_trace(&rho, &[0, 2]).unwrap();
        let ac_then_a = partial_trace(&direct, &[0]).unwrap();
        prop_assert_eq!(direct.dims(), &[2, 2][..]);
        prop_assert!(close(ac_then_a.matrix(), partial_trace(&rho, &[0]).unwrap().matrix(), 1e-12));
    }

    #[test]
    fn partial_transpose_laws((da, db) in dims_strategy(), seed in any::<u64>()) {
        let rho = random_mixed(&[da, db], 3, seed).unwrap();
        let m = rho.matrix();
        let dims = [da, db];
        let ta = partial_transpose_matrix(m, &dims, &[0]).unwrap();
        let tb = partial_transpose_matrix(m, &dims, &[1]).unwrap();
        // involution, both cuts compose to the full transpose, trace preserved
        prop_assert!(close(&partial_transpose_matrix(&ta, &dims, &[0]).unwrap(), m, 0.0));
        prop_assert!(close(&partial_transpose_matrix(&ta, &dims, &[1]).unwrap(), &m.transpose(), 0.0));
        prop_assert!((tb.trace() - m.trace()).norm() < 1e-14);
        // ρ^{T_A} = (ρ^{T_B})ᵀ
        prop_assert!(close(&ta, &tb.transpose(), 0.0));
    }

    #[test]
    fn partial_transpose_of_product((da, db) in dims_strategy(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_mixed(&[da], 2, s1).unwrap();
        let b = random_mixed(&[db], 2, s2).unwrap();
        let ab = tensor(a.matrix(), b.matrix());
        let tb = partial_transpose_matrix(&ab, &[da, db], &[1]).unwrap();
        prop_assert!(close(&tb, &tensor(a.matrix(), &b.matrix().transpose()), 1e-15));
    }

    #[test]
    fn separable_states_are_ppt(seed in any::<u64>()) {
        let rho = random_separable(&[3, 3], 5, seed).unwrap();
        let tb = partial_transpose_matrix(rho.matrix(), &[3, 3], &[1]).unwrap();
        prop_assert!(DensityMatrix::new(tb, vec![3, 3]).is_ok());
    }

    #[test]
    fn tensor_mixed_product(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_mixed(&[2], 2, s1).unwrap().into_matrix();
        let b = random_mixed(&[3], 2, s2).unwrap().into_matrix();
        let c = random_mixed(&[2], 2, s2 ^ 1).unwrap().into_matrix();
        let d = random_mixed(&[3], 2, s1 ^ 1).unwrap().into_matrix();
        let lhs = tensor(&a, &b) * tensor(&c, &d);
        let rhs = tensor(&(&a * &c), &(&b * &d));
        prop_assert!(close(&lhs, &rhs, 1e-14));
        prop_assert!((tensor(&a, &b).trace() - a.trace() * b.trace()).norm() < 1e-14);
    }

    #[test]
    fn moments_match_matrix_powers(seed in any::<u64>(), k in 1usize..6) {
        let rho = random_mixed(&[2, 3], k, seed).unwrap();
        let m = rho.matrix();
        let p2 = (m * m).trace().re;
        let p3 = (m * m * m).trace().re;
        prop_assert!((trace_power(&rho, 2) - p2).abs() < 1e-12);
        prop_assert!((trace_power(&rho, 3) - p3).abs() < 1e-12);
        prop_assert!(p3 <= p2 + 1e-12 && p2 <= 1.0 + 1e-12);
    }

    #[test]
    fn pure_fidelity_is_overlap(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_pure(&[4], s1).unwrap();
        let b = random_pure(&[4], s2).unwrap();
        let overlap = a.amps().dotc(b.amps()).norm();
        let f = fidelity_exact(&a.to_density(), &b.to_density()).unwrap();
        prop_assert!((f - overlap).abs() < 1e-6);
    }

    #[test]
    fn fidelity_is_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_mixed(&[3], 2, s1).unwrap();
        let b = random_mixed(&[3], 3, s2).unwrap();
        let ab = fidelity_exact(&a, &b).unwrap();
        let ba = fidelity_exact(&b, &a).unwrap();
        // rank-deficient inputs put ~1e-16 eigenvalues under a square root
        prop_assert!((ab - ba).abs() < 1e-6);
    }

    #[test]
    fn coherence_features_match_pauli_strings(n in 2usize..=4, k in 1usize..8, seed in any::<u64>()) {
        let rho = random_mixed(&vec![2; n], k, seed).unwrap();
        let fv = coherence_features(&rho).unwrap();
        let patterns = z_patterns(n);
        prop_assert_eq!(fv.values.len(), patterns.len() + 2);
        for (p, v) in patterns.iter().zip(&fv.values) {
            prop_assert!((expect(&rho, &z_string(n, p)) - v).abs() < 1e-12);
        }
        let m = rho.matrix();
        prop_assert!((fv.values[patterns.len()] - (m * m).trace().re).abs() < 1e-12);
        prop_assert!((fv.values[patterns.len() + 1] - (m * m * m).trace().re).abs() < 1e-12);
    }

    #[test]
    fn entanglement_features_match_projectors(seed in any::<u64>(), k in 1usize..10) {
        let rho = random_mixed(&[3, 3], k, seed).unwrap();
        let fv = entanglement_features(&rho).unwrap();
        let m = rho.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let v = tensor(&ket(i, 3), &ket(j, 3));
                let p = (v.adjoint() * m * &v)[(0, 0)].re;
                prop_assert!((fv.values[3 * i + j] - p).abs() < 1e-12);
            }
        }
        let ra = trace_out_second(m, 3, 3);
        let rb = trace_out_first(m, 3, 3);
        let want = [
            (m * m).trace().re,
            (m * m * m).trace().re,
            (&ra * &ra).trace().re,
            (&ra * &ra * &ra).trace().re,
            (&rb * &rb).trace().re,
            (&rb * &rb * &rb).trace().re,
        ];
        for (got, w) in fv.values[9..].iter().zip(want) {
            prop_assert!((got - w).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbation_stays_in_range(seed in any::<u64>(), level in 0.0f64..0.5) {
        let rho = random_mixed(&[3, 3], 2, seed).unwrap();
        let fv = entanglement_features(&rho).unwrap();
        let p = perturb_features(&fv, level, seed).unwrap();
        for (i, (a, b)) in fv.values.iter().zip(&p.values).enumerate() {
            match fv.schema.entry_kind(i) {
                EntryKind::Projector => prop_assert!((0.0..=1.0).contains(b)),
                EntryKind::Moment => prop_assert!(*b > 0.0 && *b <= 1.0),
                EntryKind::ZPattern => unreachable!(),
            }
            prop_assert!((b - a).abs() <= level * a.abs() + 1e-15);
        }
    }
}

#[test]
fn haar_first_amplitude_moment() {
    let n = 10_000;
    let mean: f64 = (0..n)
        .map(|s| random_pure(&[2], s).unwrap().amps()[0].norm_sqr())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 0.5).abs() <= 0.02, "{mean}");
}

#[test]
fn eight_component_purity_is_strictly_mixed() {
    let n = 5000;
    let mean: f64 = (0..n)
        .map(|s| trace_power(&random_mixed(&[2, 2], 8, s).unwrap(), 2))
        .sum::<f64>()
        / n as f64;
    assert!(mean > 0.25 && mean < 1.0, "{mean}");
}

#[test]
fn z_string_oracle_is_diagonal_sign_pattern() {
    // ⟨Z⊗Z⟩ on |01⟩ is -1
    let z = z_string(2, &[0, 1]);
    let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c64(1.0, 0.0),
        c64(-1.0, 0.0),
        c64(-1.0, 0.0),
        c64(1.0, 0.0),
    ]));
    assert_eq!(z, expected);
}
