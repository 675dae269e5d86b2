use proptest::prelude::*;
use proptest::sample::subsequence;
use qpadmm::certify::SWAP_TABLE;
use qpadmm::channel::{llr, modulate_with_noise, ChannelConfig};
use qpadmm::codes::single_check;
use qpadmm::model::{BLOCK_RHS, DENSE_CAP, STENCIL};
use qpadmm::{
    AdmmState, DecoderParams, DecomposedModel, Encoder, ParityCheckMatrix, QpAdmmDecoder,
    RelativeMap,
};

/// Random parity-check matrices with every row degree in 3..=7.
fn arb_matrix() -> impl Strategy<Value = ParityCheckMatrix> {
    (7usize..40).prop_flat_map(|n| {
        let row = subsequence((0..n).collect::<Vec<_>>(), 3..=7.min(n));
        proptest::collection::vec(row, 1..12)
            .prop_map(move |rows| ParityCheckMatrix::from_rows(n, rows).expect("valid rows"))
    })
}

/// Values k / 1024 in [-4, 4]: every sum of a few of them is exact.
fn dyadic(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((-4096i32..=4096).prop_map(|k| f64::from(k) / 1024.0), len)
}

fn arb_model_with_vectors() -> impl Strategy<Value = (DecomposedModel, Vec<f64>, Vec<f64>)> {
    arb_matrix().prop_flat_map(|h| {
        let m = DecomposedModel::decompose(&h);
        let (cols, rows) = (m.n_ext(), m.n_rows());
        (Just(m), dyadic(cols), dyadic(rows))
    })
}

fn arb_codeword() -> impl Strategy<Value = (DecomposedModel, Vec<u8>)> {
    (arb_matrix(), any::<u64>()).prop_map(|(h, bits)| {
        let enc = Encoder::new(&h);
        let msg: Vec<u8> = (0..enc.k())
            .map(|i| ((bits >> (i % 64)) & 1) as u8)
            .collect();
        let c = enc.encode(&msg);
        (DecomposedModel::decompose(&h), c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn counts_follow_row_degrees(h in arb_matrix()) {
        let m = DecomposedModel::decompose(&h);
        let gc: usize = h.rows().iter().map(|r| r.len() - 2).sum();
        let ga: usize = h.rows().iter().map(|r| r.len() - 3).sum();
        prop_assert_eq!(m.gamma_c(), gc);
        prop_assert_eq!(m.gamma_a(), ga);
        prop_assert_eq!(m.n_ext(), h.n() + ga);
        for i in 0..m.n_ext() {
            let occ = m.occurrences(i).len();
            prop_assert_eq!(m.e()[i], 4.0 * occ as f64);
            prop_assert_eq!(m.ab_offset()[i], 2.0 * occ as f64);
            if i < h.n() {
                prop_assert_eq!(occ, h.col(i).len());
            } else {
                prop_assert_eq!(occ, 2);
            }
        }
        for t in m.triples() {
            prop_assert!(t.0[0] != t.0[1] && t.0[1] != t.0[2] && t.0[0] != t.0[2]);
        }
    }

    #[test]
    fn implicit_operator_matches_dense((m, v, s) in arb_model_with_vectors()) {
        let dense = m.materialize_dense(DENSE_CAP).unwrap();
        prop_assert_eq!(m.apply(&v), dense.mul(&v));
        prop_assert_eq!(m.apply_transpose(&s), dense.mul_transpose(&s));
        for (j, row) in dense.mul(&v).iter().enumerate() {
            prop_assert_eq!(m.row_dot(j / 4, j % 4, &v), *row);
        }
    }

    #[test]
    fn gram_is_diagonal_with_norms(h in arb_matrix()) {
        let m = DecomposedModel::decompose(&h);
        let dense = m.materialize_dense(DENSE_CAP).unwrap();
        let g = dense.gram();
        let c = dense.cols;
        for r in 0..c {
            for k in 0..c {
                let want = if r == k { m.e()[r] as i64 } else { 0 };
                prop_assert_eq!(g[r * c + k], want);
            }
        }
        prop_assert!(dense.a.iter().all(|&x| (-1..=1).contains(&x)));
        prop_assert_eq!(dense.b, m.rhs());
    }

    #[test]
    fn extended_codewords_are_feasible((m, c) in arb_codeword()) {
        prop_assert!(m.parity_matrix().check_parity(&c));
        let v = m.aux_extend(&c).unwrap();
        prop_assert_eq!(&v[..c.len()], &c[..]);
        prop_assert!(m.first_odd_triple(&v).is_none());
        let vf: Vec<f64> = v.iter().map(|&b| f64::from(b)).collect();
        for (a, b) in m.apply(&vf).iter().zip(m.rhs()) {
            prop_assert!(*a <= b);
        }
    }

    #[test]
    fn relative_maps_are_involutions((m, c) in arb_codeword(), seed in any::<u64>()) {
        let map = RelativeMap::for_codeword(&m, &c).unwrap();
        let v: Vec<f64> = (0..m.n_ext()).map(|i| ((seed >> (i % 61)) & 7) as f64 / 8.0).collect();
        let s: Vec<f64> = (0..m.n_rows()).map(|j| ((seed.rotate_left(j as u32)) & 15) as f64 - 7.5).collect();
        prop_assert_eq!(map.relative_vector(&map.relative_vector(&v)), v);
        prop_assert_eq!(map.map_constraint_vector(&map.map_constraint_vector(&s)), s.clone());
        // The relative map sends the reference itself to zero.
        let own: Vec<f64> = map.reference().iter().map(|&b| f64::from(b)).collect();
        prop_assert!(map.relative_vector(&own).iter().all(|&x| x == 0.0));
        // Block permutations keep each block's entries.
        let mapped = map.map_constraint_vector(&s);
        for (a, b) in mapped.chunks(4).zip(s.chunks(4)) {
            let mut a = a.to_vec();
            let mut b = b.to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn block_sign_identity(z in dyadic(4), x in dyadic(3), slot in 0usize..4) {
        // Even-weight patterns in the order the permutation table uses.
        let patterns = [[0u8, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]];
        let p = patterns[slot];
        let mz: Vec<f64> = SWAP_TABLE[slot].iter().map(|&k| z[k]).collect();
        for l in 0..3 {
            let col = |s: &[f64]| (0..4).map(|r| STENCIL[r][l] * s[r]).sum::<f64>();
            let sign = if p[l] == 1 { -1.0 } else { 1.0 };
            prop_assert_eq!(col(&mz), sign * col(&z));
        }
        // Slack blocks map like the relative vector: M(w - T x) = w - T x0.
        let slack = |x: &[f64]| -> Vec<f64> {
            (0..4).map(|r| BLOCK_RHS[r] - (0..3).map(|l| STENCIL[r][l] * x[l]).sum::<f64>()).collect()
        };
        let x0: Vec<f64> = (0..3).map(|l| if p[l] == 1 { 1.0 - x[l] } else { x[l] }).collect();
        let s = slack(&x);
        let ms: Vec<f64> = SWAP_TABLE[slot].iter().map(|&k| s[k]).collect();
        prop_assert_eq!(ms, slack(&x0));
    }

    #[test]
    fn iterates_stay_in_range(noise in proptest::collection::vec(-3.0f64..3.0, 7), alpha in 0.0f64..3.9) {
        let h = qpadmm::codes::hamming_7_4();
        let m = DecomposedModel::decompose(&h);
        let cfg = ChannelConfig::new(1.0, 4.0 / 7.0, 0).unwrap();
        let g = llr(&modulate_with_noise(&[0; 7], cfg.sigma(), &noise), &cfg);
        let dec = QpAdmmDecoder::new(&m, &g, DecoderParams::with_alpha(alpha)).unwrap();
        let mut st = AdmmState::zeros(&m);
        for _ in 0..50 {
            let r = dec.step(&mut st).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert!(st.v.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!(st.z.iter().all(|&x| x >= 0.0));
            prop_assert!(st.y_scaled.iter().all(|&x| x >= 0.0));
        }
    }
}

/// Every integral point of the decomposed single-check polytope projects to
/// an even-weight word, and every even-weight word extends to one.
#[test]
fn integral_feasible_points_are_codewords() {
    for d in 3..=6 {
        let h = single_check(d).unwrap();
        let m = DecomposedModel::decompose(&h);
        let b = m.rhs();
        let mut feasible = 0;
        for bits in 0u32..(1 << m.n_ext()) {
            let v: Vec<f64> = (0..m.n_ext()).map(|i| f64::from((bits >> i) & 1)).collect();
            let ok = m.apply(&v).iter().zip(&b).all(|(a, b)| a <= b);
            if ok {
                feasible += 1;
                let x: Vec<u8> = v[..d].iter().map(|&f| f as u8).collect();
                assert!(
                    h.check_parity(&x),
                    "degree {d}: infeasible word {x:?} passed"
                );
            }
        }
        // Auxiliaries are determined by x, so feasible points and codewords
        // are in bijection.
        assert_eq!(feasible, 1 << (d - 1), "degree {d}");
    }
}
