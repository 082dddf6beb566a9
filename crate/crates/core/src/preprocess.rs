//! Leakage-free preparation pipeline: sanitize non-finite values, split with
//! per-class stratification, and impute missing cells with medians fitted on
//! the training part only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};

/// Replaces every non-finite cell (positive or negative infinity) with a
/// missing value so that downstream imputation treats them like any other
/// gap. NaN cells are already the missing sentinel and pass through.
pub fn sanitize(ds: &Dataset) -> Dataset {
    let values = ds.values().map(|v| if v.is_finite() { v } else { f64::NAN });
    ds.with_values(values)
}

/// Per-column medians fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationModel {
    medians: Vec<f64>,
    /// Columns whose training rows were entirely missing; their median
    /// defaulted to 0.0.
    fallback_features: Vec<usize>,
}

impl ImputationModel {
    pub fn medians(&self) -> &[f64] {
        &self.medians
    }

    pub fn fallback_features(&self) -> &[usize] {
        &self.fallback_features
    }
}

/// Median of the finite entries; even counts take the midpoint of the two
/// central values. Returns None when no finite entry exists.
fn finite_median(column: impl Iterator<Item = f64>) -> Option<f64> {
    let mut vals: Vec<f64> = column.filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vals.len();
    if n % 2 == 1 {
        Some(vals[n / 2])
    } else {
        Some((vals[n / 2 - 1] + vals[n / 2]) / 2.0)
    }
}

/// Fits a median imputer on the given training rows only.
pub fn fit_imputer(ds: &Dataset, train_rows: &[usize]) -> Result<ImputationModel> {
    if train_rows.is_empty() {
        return Err(Error::Usage("cannot fit an imputer on zero rows".to_string()));
    }
    if let Some(&bad) = train_rows.iter().find(|&&r| r >= ds.n_rows()) {
        return Err(Error::Usage(format!(
            "training row index {bad} out of range for {} rows",
            ds.n_rows()
        )));
    }
    let mut medians = Vec::with_capacity(ds.n_features());
    let mut fallback_features = Vec::new();
    for c in 0..ds.n_features() {
        match finite_median(train_rows.iter().map(|&r| ds.values().get(r, c))) {
            Some(m) => medians.push(m),
            None => {
                log::warn!(
                    "column `{}` has no finite training value; imputing 0.0",
                    ds.feature_names()[c]
                );
                medians.push(0.0);
                fallback_features.push(c);
            }
        }
    }
    Ok(ImputationModel { medians, fallback_features })
}

/// Fills every missing cell with the fitted median of its column.
pub fn apply_imputer(model: &ImputationModel, ds: &Dataset) -> Result<Dataset> {
    if model.medians.len() != ds.n_features() {
        return Err(Error::Usage(format!(
            "imputer fitted on {} columns applied to {}",
            model.medians.len(),
            ds.n_features()
        )));
    }
    let mut values = ds.values().clone();
    for r in 0..ds.n_rows() {
        for c in 0..ds.n_features() {
            if values.get(r, c).is_nan() {
                values.set(r, c, model.medians[c]);
            }
        }
    }
    Ok(ds.with_values(values))
}

/// Row indices of the three split parts, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `total` items over parts with the
/// given fractions: floor quotas first, leftover items to the largest
/// fractional parts, earlier parts winning exact ties.
fn apportion(total: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &part in order.iter().take(total - assigned) {
        counts[part] += 1;
    }
    counts
}

/// Stratified three-way split. Each class is shuffled independently with a
/// generator seeded from `seed` and apportioned across
/// train/validation/test by largest remainder, so class proportions are
/// preserved to within one sample per part.
pub fn stratified_split(
    labels: &[u8],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitIndices> {
    let (ft, fv, fe) = fractions;
    for (name, f) in [("train", ft), ("validation", fv), ("test", fe)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Usage(format!(
                "{name} fraction must lie strictly between 0 and 1, got {f}"
            )));
        }
    }
    if (ft + fv + fe - 1.0).abs() > 1e-9 {
        return Err(Error::Usage(format!(
            "split fractions must sum to 1, got {}",
            ft + fv + fe
        )));
    }

    let mut class_rows: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in labels.iter().enumerate() {
        class_rows[label as usize].push(i);
    }
    for (class, rows) in class_rows.iter().enumerate() {
        if rows.len() < 3 {
            return Err(Error::Stratification(format!(
                "class {class} has only {} samples; at least 3 are required to stratify",
                rows.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for rows in class_rows.iter_mut() {
        for i in (1..rows.len()).rev() {
            let j = rng.gen_range(0..=i);
            rows.swap(i, j);
        }
        let counts = apportion(rows.len(), &[ft, fv, fe]);
        let mut start = 0;
        for (part, &count) in parts.iter_mut().zip(&counts) {
            part.extend_from_slice(&rows[start..start + count]);
            start += count;
        }
    }
    for part in parts.iter_mut() {
        part.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(SplitIndices { train, validation, test })
}

/// Fully prepared train/validation/test matrices, ready for model training.
#[derive(Debug, Clone)]
pub struct PreparedSplits {
    pub feature_names: Vec<String>,
    pub train_x: Matrix,
    pub train_y: Vec<u8>,
    pub validation_x: Matrix,
    pub validation_y: Vec<u8>,
    pub test_x: Matrix,
    pub test_y: Vec<u8>,
    pub imputer: ImputationModel,
    pub indices: SplitIndices,
}

/// Runs the full preparation pipeline: sanitize, stratified split, fit the
/// imputer on training rows only, impute everywhere, gather the parts.
/// Validation and test rows never influence the fitted medians.
pub fn prepare(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<PreparedSplits> {
    let clean = sanitize(ds);
    let indices = stratified_split(clean.labels(), fractions, seed)?;
    let imputer = fit_imputer(&clean, &indices.train)?;
    let filled = apply_imputer(&imputer, &clean)?;
    let (train_x, train_y) = filled.gather(&indices.train);
    let (validation_x, validation_y) = filled.gather(&indices.validation);
    let (test_x, test_y) = filled.gather(&indices.test);
    Ok(PreparedSplits {
        feature_names: filled.feature_names().to_vec(),
        train_x,
        train_y,
        validation_x,
        validation_y,
        test_x,
        test_y,
        imputer,
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureGroup;

    fn dataset_from(values: &[Vec<f64>], labels: Vec<u8>) -> Dataset {
        let d = values[0].len();
        let names = (0..d).map(|i| format!("f{i}")).collect();
        let groups = vec![FeatureGroup::PmuMeasurement; d];
        Dataset::new(names, groups, Matrix::from_rows(values), labels).unwrap()
    }

    #[test]
    fn sanitize_maps_infinities_to_missing() {
        let ds = dataset_from(
            &[
                vec![1.0, f64::INFINITY],
                vec![f64::NEG_INFINITY, f64::NAN],
                vec![2.0, 3.0],
                vec![4.0, 5.0],
                vec![6.0, 7.0],
                vec![8.0, 9.0],
            ],
            vec![1, 0, 1, 0, 1, 0],
        );
        let clean = sanitize(&ds);
        assert!(clean.values().get(0, 1).is_nan());
        assert!(clean.values().get(1, 0).is_nan());
        assert!(clean.values().get(1, 1).is_nan());
        assert_eq!(clean.values().get(0, 0), 1.0);
    }

    #[test]
    fn sanitize_is_identity_on_finite_data() {
        let ds = dataset_from(
            &[vec![1.0, -2.5], vec![0.0, 3.5], vec![7.0, 8.0]],
            vec![1, 0, 1],
        );
        let clean = sanitize(&ds);
        assert!(clean.values().bits_eq(ds.values()));
    }

    #[test]
    fn median_odd_even_and_missing() {
        assert_eq!(finite_median([3.0, 1.0, 2.0].into_iter()), Some(2.0));
        assert_eq!(finite_median([4.0, 1.0, 2.0, 3.0].into_iter()), Some(2.5));
        assert_eq!(
            finite_median([1.0, f64::NAN, 3.0, f64::INFINITY].into_iter()),
            Some(2.0)
        );
        assert_eq!(finite_median([f64::NAN, f64::NAN].into_iter()), None);
        assert_eq!(finite_median(std::iter::empty()), None);
    }

    #[test]
    fn imputer_fits_on_training_rows_only() {
        let ds = dataset_from(
            &[
                vec![1.0],
                vec![3.0],
                vec![100.0], // not a training row; must not affect the median
                vec![f64::NAN],
            ],
            vec![1, 0, 1, 0],
        );
        let model = fit_imputer(&ds, &[0, 1]).unwrap();
        assert_eq!(model.medians(), [2.0]);
        let filled = apply_imputer(&model, &ds).unwrap();
        assert_eq!(filled.values().get(3, 0), 2.0);
        assert_eq!(filled.values().get(2, 0), 100.0);
    }

    #[test]
    fn all_missing_training_column_falls_back_to_zero() {
        let ds = dataset_from(
            &[vec![f64::NAN, 5.0], vec![f64::NAN, 7.0], vec![4.0, 9.0]],
            vec![1, 0, 1],
        );
        let model = fit_imputer(&ds, &[0, 1]).unwrap();
        assert_eq!(model.medians(), [0.0, 6.0]);
        assert_eq!(model.fallback_features(), [0]);
        let filled = apply_imputer(&model, &ds).unwrap();
        assert_eq!(filled.values().get(0, 0), 0.0);
        assert_eq!(filled.values().get(2, 0), 4.0);
    }

    #[test]
    fn apportion_hand_example() {
        assert_eq!(apportion(14, &[0.7, 0.15, 0.15]), vec![10, 2, 2]);
        assert_eq!(apportion(6, &[0.7, 0.15, 0.15]), vec![4, 1, 1]);
        assert_eq!(apportion(3, &[0.7, 0.15, 0.15]), vec![2, 1, 0]);
        assert_eq!(apportion(0, &[0.7, 0.15, 0.15]), vec![0, 0, 0]);
    }

    #[test]
    fn split_counts_follow_largest_remainder_per_class() {
        // 20 samples: 14 positive, 6 negative.
        let mut labels = vec![1u8; 14];
        labels.extend(vec![0u8; 6]);
        let s = stratified_split(&labels, (0.7, 0.15, 0.15), 9).unwrap();
        assert_eq!(s.train.len(), 14);
        assert_eq!(s.validation.len(), 3);
        assert_eq!(s.test.len(), 3);
        let pos_in = |part: &[usize]| part.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!(pos_in(&s.train), 10);
        assert_eq!(pos_in(&s.validation), 2);
        assert_eq!(pos_in(&s.test), 2);
    }

    #[test]
    fn split_parts_are_disjoint_and_exhaustive() {
        let labels: Vec<u8> = (0..97).map(|i| u8::from(i % 3 == 0)).collect();
        let s = stratified_split(&labels, (0.7, 0.15, 0.15), 4).unwrap();
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        let expected: Vec<usize> = (0..97).collect();
        assert_eq!(all, expected);
        assert!(s.train.windows(2).all(|w| w[0] < w[1]));
        assert!(s.validation.windows(2).all(|w| w[0] < w[1]));
        assert!(s.test.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let labels: Vec<u8> = (0..50).map(|i| u8::from(i % 2 == 0)).collect();
        let a = stratified_split(&labels, (0.7, 0.15, 0.15), 11).unwrap();
        let b = stratified_split(&labels, (0.7, 0.15, 0.15), 11).unwrap();
        let c = stratified_split(&labels, (0.7, 0.15, 0.15), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn tiny_class_is_a_stratification_error() {
        let mut labels = vec![0u8; 10];
        labels[0] = 1;
        labels[1] = 1;
        let err = stratified_split(&labels, (0.7, 0.15, 0.15), 1).unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));
    }

    #[test]
    fn bad_fractions_are_usage_errors() {
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        assert!(matches!(
            stratified_split(&labels, (0.5, 0.25, 0.3), 1),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            stratified_split(&labels, (1.0, 0.0, 0.0), 1),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn prepare_never_leaks_validation_or_test_values() {
        let mut rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, (i * 7 % 13) as f64])
            .collect();
        rows[5][0] = f64::NAN;
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 2 == 0)).collect();
        let ds = dataset_from(&rows, labels.clone());
        let prepared = prepare(&ds, (0.7, 0.15, 0.15), 3).unwrap();

        // Perturbing a value outside the training part changes nothing the
        // training side sees: medians and training matrix stay identical.
        let victim = prepared.indices.test[0];
        let mut perturbed_rows = rows.clone();
        perturbed_rows[victim][1] = 1e6;
        let ds2 = dataset_from(&perturbed_rows, labels);
        let prepared2 = prepare(&ds2, (0.7, 0.15, 0.15), 3).unwrap();
        assert_eq!(prepared.indices, prepared2.indices);
        assert_eq!(prepared.imputer, prepared2.imputer);
        assert!(prepared.train_x.bits_eq(&prepared2.train_x));
        assert_eq!(prepared.train_y, prepared2.train_y);
    }

    #[test]
    fn prepare_output_has_no_missing_cells() {
        let mut rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 1.0]).collect();
        rows[3][1] = f64::INFINITY;
        rows[8][0] = f64::NAN;
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let ds = dataset_from(&rows, labels);
        let prepared = prepare(&ds, (0.7, 0.15, 0.15), 5).unwrap();
        assert!(prepared.train_x.all_finite());
        assert!(prepared.validation_x.all_finite());
        assert!(prepared.test_x.all_finite());
        assert_eq!(prepared.train_y.len(), prepared.train_x.n_rows());
        assert_eq!(prepared.validation_y.len(), prepared.validation_x.n_rows());
        assert_eq!(prepared.test_y.len(), prepared.test_x.n_rows());
    }
}
