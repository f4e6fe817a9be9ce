use std::collections::{BTreeSet, HashMap};

use image::{Rgb, RgbImage};
use wearcnn::data::{
    class_label, class_of_radius, fractional_split, normalize_image, per_class_holdout, radius_of_class,
    scaled_holdout, DatasetManifest, SampleRecord, Split, RADII_MM, VIEWS_DEG,
};
use wearcnn::tensor::Tensor;

/// `workpieces` complete workpieces per class; ids are unique across classes.
fn manifest(workpieces: usize) -> DatasetManifest {
    let records = (0..16)
        .flat_map(|class| (0..workpieces).map(move |k| (class, (class * workpieces + k) as u32)))
        .flat_map(|(class, wp)| {
            VIEWS_DEG.map(|view| SampleRecord {
                workpiece_id: wp,
                view_deg: view,
                class_index: class,
                radius_mm: RADII_MM[class],
                image_path: format!("r{class}/wp{wp}_{view}.png"),
            })
        })
        .collect();
    DatasetManifest::new("/nonexistent", records, 64)
}

fn workpieces(part: &[SampleRecord]) -> BTreeSet<u32> {
    part.iter().map(|r| r.workpiece_id).collect()
}

fn assert_partition(m: &DatasetManifest, s: &Split) {
    assert_eq!(s.len(), m.records.len());
    let (tr, va, te) = (workpieces(&s.train), workpieces(&s.val), workpieces(&s.test));
    assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
    let all: BTreeSet<(u32, u16)> = s.train.iter().chain(&s.val).chain(&s.test).map(|r| (r.workpiece_id, r.view_deg)).collect();
    assert_eq!(all.len(), m.records.len());
}

fn per_class(part: &[SampleRecord]) -> HashMap<usize, usize> {
    let mut out = HashMap::new();
    for r in part {
        *out.entry(r.class_index).or_insert(0) += 1;
    }
    out
}

#[test]
fn holdout_reserves_equal_counts_per_class() {
    let m = manifest(10);
    let s = per_class_holdout(&m, 8, 8, 3).unwrap();
    assert_partition(&m, &s);
    for part in [&s.val, &s.test] {
        let counts = per_class(part);
        assert_eq!(counts.len(), 16);
        assert!(counts.values().all(|&n| n == 8));
    }
    assert!(per_class(&s.train).values().all(|&n| n == 24));
}

#[test]
fn holdout_depends_only_on_seed() {
    let m = manifest(10);
    assert_eq!(per_class_holdout(&m, 8, 8, 3).unwrap(), per_class_holdout(&m, 8, 8, 3).unwrap());
    assert_ne!(per_class_holdout(&m, 8, 8, 3).unwrap(), per_class_holdout(&m, 8, 8, 4).unwrap());
}

#[test]
fn fractional_split_counts_workpieces() {
    let m = manifest(25);
    let s = fractional_split(&m, (0.70, 0.15, 0.15), 9).unwrap();
    assert_partition(&m, &s);
    assert_eq!((workpieces(&s.train).len(), workpieces(&s.val).len(), workpieces(&s.test).len()), (280, 60, 60));
    assert_eq!(s, fractional_split(&m, (0.70, 0.15, 0.15), 9).unwrap());
}

#[test]
fn partial_workpieces_stay_together() {
    let mut m = manifest(6);
    m.records.retain(|r| !(r.workpiece_id % 3 == 0 && r.view_deg == 270));
    m.validate().unwrap();
    assert!(m.validate_complete().is_err());
    let s = per_class_holdout(&m, 4, 4, 0).unwrap();
    assert_partition(&m, &s);
    assert!(per_class(&s.val).values().all(|&n| n == 4));
}

#[test]
fn holdout_sizes_scale_with_corpus() {
    assert_eq!(scaled_holdout(465), 64);
    assert_eq!(scaled_holdout(80), 8);
    assert_eq!(scaled_holdout(12), 4);
    for n in 1..500 {
        assert_eq!(scaled_holdout(n) % 4, 0);
    }
}

#[test]
fn manifest_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manifest(1);
    m.root = dir.path().to_path_buf();
    m.save().unwrap();
    let back = DatasetManifest::load(dir.path()).unwrap();
    assert_eq!(back.records, m.records);

    let mut bad = manifest(1);
    bad.records[0].radius_mm = 0.45;
    assert!(bad.validate().is_err());
    let mut dup = manifest(1);
    dup.records[1].view_deg = 0;
    assert!(dup.validate().is_err());
    let mut odd = manifest(1);
    odd.records[0].view_deg = 45;
    assert!(odd.validate().is_err());
}

#[test]
fn radius_grid() {
    for (class, &r) in RADII_MM.iter().enumerate() {
        assert_eq!(class_of_radius(r).unwrap(), class);
        assert_eq!(radius_of_class(class).unwrap(), r);
    }
    assert!(RADII_MM.windows(2).all(|w| w[1] > w[0]));
    assert!(class_of_radius(0.05).is_err());
    assert!(radius_of_class(16).is_err());
    assert_eq!((class_label(0), class_label(9), class_label(15)), ("r00".into(), "r50".into(), "r80".into()));
}

#[test]
fn images_normalize_to_unit_range() {
    let img = RgbImage::from_fn(16, 16, |x, y| Rgb([(x * 17) as u8, (y * 17) as u8, 255]));
    let t: Tensor<f64> = normalize_image(&img, 16);
    assert_eq!(t.shape(), &[16, 16, 3]);
    assert_eq!(t.data()[2], 1.0);
    assert_eq!(t.data()[(15 * 16 + 15) * 3], 1.0);
    let small: Tensor<f64> = normalize_image(&img, 8);
    assert_eq!(small.shape(), &[8, 8, 3]);
    assert!(small.data().iter().all(|v| (0.0..=1.0).contains(v)));
    let flat = RgbImage::from_pixel(20, 20, Rgb([51, 102, 153]));
    let t: Tensor<f64> = normalize_image(&flat, 7);
    for px in t.data().chunks(3) {
        assert!((px[0] - 0.2).abs() < 1e-12 && (px[1] - 0.4).abs() < 1e-12 && (px[2] - 0.6).abs() < 1e-12);
    }
}
