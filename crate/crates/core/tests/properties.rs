use eigenexpr::*;
use proptest::prelude::*;

fn ed_rows() -> impl Strategy<Value = [[f64; 5]; 6]> {
    proptest::array::uniform6(proptest::array::uniform5(0.0f64..2.0))
}

fn symmetric(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-10.0f64..10.0, n * n).prop_map(move |v| {
        let mut m = Matrix::new(n, n, v).unwrap();
        for i in 0..n {
            for j in 0..i {
                let x = m[(j, i)];
                m[(i, j)] = x;
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn votes_go_to_column_minimum(rows in ed_rows()) {
        let m = EdMatrix::new(RegionKind::Lip, rows).unwrap();
        let votes = region_votes(&m);
        for (k, e) in votes.iter().enumerate() {
            for other in Expression::ALL {
                let (w, o) = (m.get(*e, k), m.get(other, k));
                prop_assert!(w < o || (w == o && e.index() <= other.index()));
            }
        }
    }

    #[test]
    fn decision_has_most_votes(tables in proptest::collection::vec(ed_rows(), 5)) {
        let eds = RegionKind::ALL
            .iter()
            .zip(tables)
            .map(|(&r, rows)| EdMatrix::new(r, rows).unwrap())
            .collect();
        let result = aggregate(eds).unwrap();
        let totals = result.votes.totals();
        prop_assert_eq!(totals.iter().sum::<u32>(), 25);
        prop_assert_eq!(totals[result.decided.index()], *totals.iter().max().unwrap());
        let leaders = totals.iter().filter(|&&t| t == totals[result.decided.index()]).count();
        prop_assert_eq!(result.tie_broken, leaders > 1);
    }

    #[test]
    fn fixture_text_round_trips(rows in ed_rows()) {
        let m = EdMatrix::new(RegionKind::NoseLip, rows).unwrap();
        let back = EdMatrix::parse_fixture(&m.to_fixture(), RegionKind::NoseLip, "generated").unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn eigenpairs_reconstruct_matrix(m in (1usize..12).prop_flat_map(symmetric)) {
        let pairs = eigen_symmetric(&m).unwrap();
        let n = m.rows();
        let scale = m.frobenius_norm().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let r: f64 = pairs.iter().map(|p| p.value * p.vector[i] * p.vector[j]).sum();
                prop_assert!((r - m[(i, j)]).abs() <= 1e-10 * scale);
            }
        }
        prop_assert!(pairs.windows(2).all(|w| w[0].value >= w[1].value));
    }

    #[test]
    fn distance_is_a_metric(
        a in proptest::collection::vec(-1.0f64..1.0, 8),
        b in proptest::collection::vec(-1.0f64..1.0, 8),
        c in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let d = |x: &[f64], y: &[f64]| euclidean_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn resize_stays_in_range(h in 2usize..30, w in 2usize..30, th in 1usize..50, tw in 1usize..50, seed in any::<u64>()) {
        let img = GrayImage::from_fn(h, w, |i, j| ((seed.wrapping_mul(31 + i as u64 * 7 + j as u64) % 1000) as f64) / 999.0).unwrap();
        let out = resize(&img, th, tw).unwrap();
        prop_assert_eq!(out.dims(), (th, tw));
        let lo = img.pixels().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = img.pixels().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out.pixels().iter().all(|&p| p >= lo - 1e-12 && p <= hi + 1e-12));
    }
}
