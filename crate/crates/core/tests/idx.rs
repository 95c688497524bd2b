use proptest::prelude::*;
use std::path::Path;
use symreg_core::data::load_idx;
use symreg_core::Error;

fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend(d.to_be_bytes());
    }
    out
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, bytes).unwrap();
    p
}

/// Straightforward decoder that walks the files image by image.
fn reference(images: &[u8], labels: &[u8], classes: &[u8]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = u32::from_be_bytes(images[4..8].try_into().unwrap()) as usize;
    let r = u32::from_be_bytes(images[8..12].try_into().unwrap()) as usize;
    let c = u32::from_be_bytes(images[12..16].try_into().unwrap()) as usize;
    let mut rows = vec![];
    let mut classes_out = vec![];
    for i in 0..n {
        if let Some(k) = classes.iter().position(|&x| x == labels[8 + i]) {
            rows.push(images[16 + i * r * c..16 + (i + 1) * r * c].iter().map(|&p| p as f64 / 255.0).collect());
            classes_out.push(k);
        }
    }
    (rows, classes_out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn loader_matches_reference(
        n in 1usize..20,
        r in 1usize..5,
        c in 1usize..5,
        seed in proptest::collection::vec(any::<u8>(), 400),
        classes in prop_oneof![Just(vec![0u8, 7]), Just(vec![0u8, 1, 2]), Just(vec![3u8])],
    ) {
        let dir = tempfile::tempdir().unwrap();
        let mut img = header(2051, &[n as u32, r as u32, c as u32]);
        img.extend((0..n * r * c).map(|i| seed[i % seed.len()].wrapping_mul(31).wrapping_add(i as u8)));
        let mut lab = header(2049, &[n as u32]);
        lab.extend((0..n).map(|i| seed[i] % 10));
        let ip = write(dir.path(), "img", &img);
        let lp = write(dir.path(), "lab", &lab);
        let d = load_idx(&ip, &lp, &classes).unwrap();
        let (rows, cls) = reference(&img, &lab, &classes);
        prop_assert_eq!(d.len(), rows.len());
        prop_assert_eq!(d.output_count(), classes.len());
        for (i, row) in rows.iter().enumerate() {
            prop_assert_eq!(&d.input_row(i), row);
            let t = d.target_row(i);
            for (o, &v) in t.iter().enumerate() {
                prop_assert_eq!(v, if o == cls[i] { 1.0 } else { 0.0 });
            }
        }
    }
}

#[test]
fn bad_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut img = header(2051, &[2, 2, 2]);
    img.extend([0u8; 8]);
    let mut lab = header(2049, &[2]);
    lab.extend([0u8, 1]);
    let ip = write(dir.path(), "img", &img);
    let lp = write(dir.path(), "lab", &lab);
    assert!(load_idx(&ip, &lp, &[0, 1]).is_ok());

    let swapped = load_idx(&lp, &ip, &[0, 1]).unwrap_err();
    assert!(matches!(swapped, Error::Magic { found: 2049, expected: 2051, .. }), "{swapped}");

    let short = write(dir.path(), "short", &img[..img.len() - 1]);
    let err = load_idx(&short, &lp, &[0, 1]).unwrap_err();
    assert!(matches!(err, Error::Truncated { expected: 24, found: 23, .. }), "{err}");

    let stub = write(dir.path(), "stub", &img[..6]);
    assert!(matches!(load_idx(&stub, &lp, &[0]).unwrap_err(), Error::Truncated { .. }));

    let mut lab3 = header(2049, &[3]);
    lab3.extend([0u8, 1, 2]);
    let lp3 = write(dir.path(), "lab3", &lab3);
    let err = load_idx(&ip, &lp3, &[0, 1]).unwrap_err();
    assert!(matches!(err, Error::CountMismatch { images: 2, labels: 3 }), "{err}");

    let missing = load_idx(dir.path().join("nope"), &lp, &[0]).unwrap_err();
    assert!(matches!(missing, Error::Load { .. }));
}
