use isqa::problem::{parse_libsvm, to_libsvm, SparseDesignMatrix};
use proptest::prelude::*;

type Dataset = (usize, Vec<Vec<(usize, f64)>>, Vec<f64>);

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..40).prop_flat_map(|cols| {
        let row = proptest::collection::btree_map(0..cols, (-1e6f64..1e6).prop_filter("nonzero", |v| *v != 0.0), 0..cols.min(8))
            .prop_map(|m| m.into_iter().collect::<Vec<_>>());
        let rows = proptest::collection::vec(row, 1..30);
        rows.prop_flat_map(move |rows| {
            let n = rows.len();
            (Just(cols), Just(rows), proptest::collection::vec(prop_oneof![Just(1.0), Just(-1.0)], n))
        })
    })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity((cols, rows, labels) in dataset()) {
        let a = SparseDesignMatrix::from_rows(cols, &rows).unwrap();
        let text = to_libsvm(&a, &labels);
        let (b, y) = parse_libsvm(text.as_bytes(), Some(cols)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(labels, y);
    }

    #[test]
    fn garbage_never_panics(s in "[ -~\n]{0,200}") {
        let _ = parse_libsvm(s.as_bytes(), None);
    }
}

#[test]
fn rejects_decreasing_indices() {
    assert!(parse_libsvm("+1 3:1 2:1\n".as_bytes(), None).is_err());
    assert!(parse_libsvm("+1 0:1\n".as_bytes(), None).is_err());
    assert!(parse_libsvm("2 1:1\n".as_bytes(), None).is_err());
}
