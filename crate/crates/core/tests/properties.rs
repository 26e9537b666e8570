use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use moment_obc::boundary::{boundary_operator, BoundaryKind};
use moment_obc::channel::{read_profile_csv, write_profile_csv, Fields, ProfileTable};
use moment_obc::cli::{parse_radial_counts, parse_scan_range, resolve_theory, RunFile};
use moment_obc::linalg::BandedMatrix;
use moment_obc::stability::quadratic_form_h;
use moment_obc::system::{characteristic_decomposition, grad_theory, MomentSystem, Orientation};
use moment_obc::tensor::{Axis, Reduction};

fn banded_case() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>, Vec<f64>)> {
    (4usize..30, 0usize..4, 0usize..4).prop_flat_map(|(n, lo, up)| {
        (
            Just(n),
            Just(lo),
            Just(up),
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn banded_solve_matches_dense((n, lo, up, vals, b) in banded_case()) {
        let mut band = BandedMatrix::zeros(n, lo, up);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(lo)..=(i + up).min(n - 1) {
                // diagonal dominance keeps the dense reference well conditioned
                let v = vals[i * n + j] + if i == j { 4.0 } else { 0.0 };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let x = band.clone().solve(&b).unwrap();
        let reference = dense.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        for i in 0..n {
            prop_assert!((x[i] - reference[i]).abs() < 1e-10);
        }
        let ax = band.mul_vec(&x);
        for i in 0..n {
            prop_assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_csv_round_trip(rows in prop::collection::vec(prop::array::uniform7(-1e3f64..1e3), 2..40)) {
        let n = rows.len();
        let y: Vec<f64> = (0..n).map(|i| -0.5 + i as f64 / (n - 1) as f64).collect();
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
        let table = ProfileTable {
            y,
            fields: Fields { rho: col(0), v_y: col(1), theta: col(2), sigma_yy: col(3), q_y: col(4) },
            extra_names: vec!["a0".into(), "a1".into()],
            extra: rows.iter().map(|r| vec![r[5], r[6]]).collect(),
        };
        let mut buf = Vec::new();
        write_profile_csv(&table, &mut buf).unwrap();
        prop_assert_eq!(read_profile_csv(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn parsers_never_panic(s in "\\PC{0,24}") {
        let _ = parse_scan_range(&s);
        let _ = parse_radial_counts(&s);
        let _ = resolve_theory(Some(&s), None, None, Reduction::Planar);
        let _ = RunFile::from_json(&s);
        let _ = read_profile_csv(s.as_bytes());
    }

    #[test]
    fn scan_range_endpoints(a in 0.01f64..1.0, b in 0.01f64..1.0, n in 2usize..50) {
        let v = parse_scan_range(&format!("{a}:{b}:{n}")).unwrap();
        prop_assert_eq!(v.len(), n);
        prop_assert_eq!(v[0], a);
        prop_assert!((v[n - 1] - b).abs() < 1e-12);
    }

    /// `H = alpha^T S A alpha` agrees with its characteristic form, and an
    /// OBC wall with zero data never lets energy in.
    #[test]
    fn obc_boundary_flux_sign(seed in prop::collection::vec(-1.0f64..1.0, 22), chi in 0.05f64..1.0) {
        let sys = MomentSystem::assemble(&grad_theory(4, Reduction::Planar), Axis::Y).unwrap();
        let o = Orientation::plus(Axis::Y);
        let alpha = DVector::from_column_slice(&seed);
        let dec = characteristic_decomposition(&sys, o).unwrap();
        let h = quadratic_form_h(&sys, &alpha, o);
        prop_assert!((h - dec.quadratic_form(&alpha)).abs() < 1e-10 * (1.0 + h.abs()));

        let op = boundary_operator(&sys, BoundaryKind::Obc, o, chi).unwrap();
        let no = sys.n_odd();
        let mut state = alpha.clone();
        let odd = -(op.b.view((0, no), (no, sys.n_even())) * alpha.rows(no, sys.n_even()));
        state.rows_mut(0, no).copy_from(&odd);
        // outward normal +y: outflow of energy through the wall is H >= 0
        prop_assert!(quadratic_form_h(&sys, &state, o) >= -1e-10);
    }
}
