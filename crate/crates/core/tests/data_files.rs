use madlab::data::{generate_synthetic, header, read_csv, read_csv_file, write_csv, write_csv_file, GeneratorConfig, Split};
use madlab::Error;

#[test]
fn csv_round_trip_is_bit_exact() {
    let cfg = GeneratorConfig {
        n_train: 200,
        n_val: 80,
        n_test: 80,
        ..GeneratorConfig::default()
    };
    let s = generate_synthetic(&cfg, 21).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for split in [Split::Train, Split::Validation, Split::Test] {
        let path = dir.path().join(format!("{}.csv", split.file_stem()));
        write_csv_file(s.get(split), &path).unwrap();
        let back = read_csv_file(&path, split).unwrap();
        assert_eq!(&back, s.get(split));
    }
}

#[test]
fn default_sizes_and_contamination() {
    let s = generate_synthetic(&GeneratorConfig::default(), 7).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (2000, 1000, 1000));
    assert!((s.train.abnormal_count() as i64 - 100).abs() <= 1);
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_csv(&s.train, &mut a).unwrap();
    write_csv(&generate_synthetic(&GeneratorConfig::default(), 7).unwrap().train, &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn schema_violations_name_the_offending_row() {
    let h = header(2);
    let cases = [
        (format!("{h}\n1,0,normal,unlabeled,0.5\n"), "line 2"),
        (format!("{h}\n1,0,weird,unlabeled,0.5,1\n"), "line 2"),
        (format!("{h}\n1,0,normal,unlabeled,0.5,1\n2,0,normal,abnormal,0.5,1\n"), "sample 1"),
        (format!("{h}\n1,0,normal,unlabeled,0.5,NaN\n"), "line 2"),
        ("id,x\n".to_string(), "header"),
    ];
    for (text, needle) in cases {
        match read_csv(text.as_bytes(), Split::Train) {
            Err(Error::Schema(m)) => assert!(m.contains(needle), "`{m}` should mention {needle}"),
            other => panic!("expected a schema error for {text:?}, got {other:?}"),
        }
    }
}
