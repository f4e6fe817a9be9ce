//! Train/validation/test partitioning at workpiece granularity: every view
//! of a workpiece lands in the same partition.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, SampleRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<SampleRecord>,
    pub val: Vec<SampleRecord>,
    pub test: Vec<SampleRecord>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Records grouped by workpiece, in ascending id order.
fn group_by_workpiece(records: &[SampleRecord]) -> BTreeMap<u32, Vec<SampleRecord>> {
    let mut groups: BTreeMap<u32, Vec<SampleRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.workpiece_id).or_default().push(r.clone());
    }
    groups
}

/// Shuffles workpieces under `seed` and assigns `floor(f_val·n)` of them to
/// validation, `floor(f_test·n)` to test and the rest to training.
pub fn fractional_split(manifest: &DatasetManifest, fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (f_train, f_val, f_test) = fractions;
    if [f_train, f_val, f_test].iter().any(|f| !(0.0..=1.0).contains(f)) || (f_train + f_val + f_test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions ({f_train}, {f_val}, {f_test}) must be in [0, 1] and sum to 1"
        )));
    }
    let groups = group_by_workpiece(&manifest.records);
    let mut ids: Vec<u32> = groups.keys().copied().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ids.len() as f64;
    // the epsilon absorbs representation error such as 0.15 * 100 = 15.000000000000002
    let n_val = (f_val * n + 1e-9).floor() as usize;
    let n_test = (f_test * n + 1e-9).floor() as usize;
    let mut split = Split::default();
    for (i, id) in ids.iter().enumerate() {
        let part = if i < n_val {
            &mut split.val
        } else if i < n_val + n_test {
            &mut split.test
        } else {
            &mut split.train
        };
        part.extend(groups[id].iter().cloned());
    }
    Ok(split)
}

/// Reserves exactly `n_val` and `n_test` images of every class for
/// validation and test, drawing whole workpieces under `seed`; everything
/// else is training data.
///
/// Complete (four-view) workpieces are drawn before partial ones, so with
/// `n` divisible by four the reservation never splits a workpiece.
pub fn per_class_holdout(manifest: &DatasetManifest, n_val: usize, n_test: usize, seed: u64) -> Result<Split> {
    let groups = group_by_workpiece(&manifest.records);
    let mut by_class: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (id, recs) in &groups {
        by_class.entry(recs[0].class_index).or_default().push(*id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split::default();
    for (class, mut ids) in by_class {
        ids.shuffle(&mut rng);
        // stable: keeps the shuffled order within each completeness group
        ids.sort_by_key(|id| groups[id].len() < 4);
        let available: usize = ids.iter().map(|id| groups[id].len()).sum();
        if available < n_val + n_test {
            return Err(Error::Data(format!(
                "class {class} has {available} images, holdout needs {}",
                n_val + n_test
            )));
        }
        let mut remaining = ids.into_iter().peekable();
        for (target, part) in [(n_val, &mut split.val), (n_test, &mut split.test)] {
            let mut taken = 0;
            let mut skipped = Vec::new();
            while taken < target {
                let Some(id) = remaining.next() else { break };
                let views = groups[&id].len();
                if taken + views <= target {
                    part.extend(groups[&id].iter().cloned());
                    taken += views;
                } else {
                    skipped.push(id);
                }
            }
            if taken != target {
                return Err(Error::Data(format!(
                    "class {class}: cannot reserve exactly {target} images from whole workpieces"
                )));
            }
            remaining = skipped.into_iter().chain(remaining).collect::<Vec<_>>().into_iter().peekable();
        }
        for id in remaining {
            split.train.extend(groups[&id].iter().cloned());
        }
    }
    Ok(split)
}

/// Holdout size per class scaled from 64 of 465 images (the full-size corpus)
/// to a corpus with `images_per_class`, rounded down to whole workpieces
/// and at least one workpiece.
pub fn scaled_holdout(images_per_class: usize) -> usize {
    let raw = images_per_class * 64 / 465;
    ((raw / 4) * 4).max(4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::radius::radius_of_class;

    fn corpus(per_class_workpieces: usize) -> DatasetManifest {
        let mut records = Vec::new();
        for class in 0..16 {
            for k in 0..per_class_workpieces {
                let wp = (class * per_class_workpieces + k) as u32;
                for view in [0, 90, 180, 270] {
                    records.push(SampleRecord {
                        workpiece_id: wp,
                        view_deg: view,
                        class_index: class,
                        radius_mm: radius_of_class(class).unwrap(),
                        image_path: String::new(),
                    });
                }
            }
        }
        DatasetManifest::new("/tmp", records, 64)
    }

    #[test]
    fn all_train_fractions() {
        let m = corpus(2);
        let s = fractional_split(&m, (1.0, 0.0, 0.0), 3).unwrap();
        assert_eq!(s.train.len(), m.records.len());
        assert!(s.val.is_empty() && s.test.is_empty());
    }

    #[test]
    fn bad_fractions_rejected() {
        assert!(fractional_split(&corpus(1), (0.5, 0.2, 0.2), 0).is_err());
    }

    #[test]
    fn holdout_zero_is_all_train() {
        let m = corpus(3);
        let s = per_class_holdout(&m, 0, 0, 1).unwrap();
        assert_eq!(s.train.len(), m.records.len());
    }

    #[test]
    fn holdout_starvation_is_error() {
        assert!(per_class_holdout(&corpus(2), 8, 4, 0).is_err());
    }

    #[test]
    fn full_size_holdout_counts() {
        // 116 complete workpieces plus one single-view workpiece: 465 per class
        let mut m = corpus(116);
        for class in 0..16 {
            m.records.push(SampleRecord {
                workpiece_id: 10_000 + class as u32,
                view_deg: 0,
                class_index: class,
                radius_mm: radius_of_class(class).unwrap(),
                image_path: String::new(),
            });
        }
        assert!(m.images_per_class().values().all(|&n| n == 465));
        let s = per_class_holdout(&m, 64, 64, 42).unwrap();
        assert_eq!(s.train.len(), 5392);
        assert_eq!(s.val.len(), 1024);
        assert_eq!(s.test.len(), 1024);
        for part in [&s.val, &s.test] {
            let per = DatasetManifest::new("/tmp", part.clone(), 64).images_per_class();
            assert!(per.values().all(|&n| n == 64));
        }
        let train = DatasetManifest::new("/tmp", s.train.clone(), 64).images_per_class();
        assert!(train.values().all(|&n| n == 337));
    }

    #[test]
    fn scaled_holdout_sizes() {
        assert_eq!(scaled_holdout(465), 64);
        assert_eq!(scaled_holdout(80), 8);
        assert_eq!(scaled_holdout(20), 4);
    }
}
