use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GeoGrid};

/// Predictions are clamped to `[eps, 1 - eps]` before taking logs.
pub const BCE_EPSILON: f64 = 1e-7;

/// Weighted binary cross-entropy, averaged over cells with positive weight.
///
/// Cells with zero weight are skipped outright, so their predictions cannot
/// influence the result.
pub fn weighted_bce(pred: &GeoGrid<f64>, target: &BinaryMask, weight: &GeoGrid<f64>) -> Result<f64> {
    pred.transform().ensure_same_grid(target.transform(), "prediction vs target")?;
    pred.transform().ensure_same_grid(weight.transform(), "prediction vs weight")?;
    target.ensure_binary()?;

    let mut total = 0.0;
    let mut counted = 0usize;
    for ((&p, &t), &w) in pred.cells().iter().zip(target.cells()).zip(weight.cells()) {
        if w.is_nan() || w < 0.0 {
            return Err(Error::InvalidArgument(format!("negative or NaN loss weight {w}")));
        }
        if w == 0.0 {
            continue;
        }
        let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        let term = if t == 1 { -p.ln() } else { -(1.0 - p).ln() };
        total += w * term;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::AllWeightsZero);
    }
    Ok(total / counted as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoTransform;

    fn t(n: usize) -> GeoTransform {
        GeoTransform::new(0.0, 0.0, 1.0, 1, n).unwrap()
    }

    #[test]
    fn single_positive_cell() {
        let pred = GeoGrid::new(t(1), vec![0.5], None).unwrap();
        let target = GeoGrid::new(t(1), vec![1u8], None).unwrap();
        let weight = GeoGrid::new(t(1), vec![3.25], None).unwrap();
        let loss = weighted_bce(&pred, &target, &weight).unwrap();
        assert!((loss - 3.25 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss - 2.2527).abs() < 1e-4);
    }

    #[test]
    fn perfect_predictions_are_near_zero() {
        let pred = GeoGrid::new(t(3), vec![1.0, 0.0, 1.0], None).unwrap();
        let target = GeoGrid::new(t(3), vec![1u8, 0, 1], None).unwrap();
        let weight = GeoGrid::new(t(3), vec![1.0; 3], None).unwrap();
        let loss = weighted_bce(&pred, &target, &weight).unwrap();
        assert!(loss >= 0.0 && loss <= -(1.0 - BCE_EPSILON).ln() * (1.0 + 1e-9));
    }

    #[test]
    fn masked_cells_do_not_count() {
        let pred = GeoGrid::new(t(3), vec![0.9, 0.1, 0.5], None).unwrap();
        let target = GeoGrid::new(t(3), vec![1u8, 1, 0], None).unwrap();
        let weight = GeoGrid::new(t(3), vec![0.0, 0.0, 1.0], None).unwrap();
        let loss = weighted_bce(&pred, &target, &weight).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let pred = GeoGrid::new(t(2), vec![0.5; 2], None).unwrap();
        let target = GeoGrid::new(t(2), vec![1u8, 0], None).unwrap();
        let zero = GeoGrid::new(t(2), vec![0.0; 2], None).unwrap();
        assert!(matches!(weighted_bce(&pred, &target, &zero), Err(Error::AllWeightsZero)));
        let neg = GeoGrid::new(t(2), vec![-1.0, 1.0], None).unwrap();
        assert!(weighted_bce(&pred, &target, &neg).is_err());
        let short = GeoGrid::new(t(1), vec![1.0], None).unwrap();
        assert!(matches!(weighted_bce(&pred, &target, &short), Err(Error::Misaligned(_))));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use crate::raster::GeoTransform;
    use proptest::prelude::*;

    fn grids(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>, Vec<f64>)> {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(0u8..=1, n),
            prop::collection::vec(prop_oneof![Just(0.0), 1.0f64..4.0], n),
        )
    }

    proptest! {
        #[test]
        fn loss_is_non_negative_and_masked_cells_are_inert(
            (p, tgt, w) in grids(12),
            noise in prop::collection::vec(0.0f64..=1.0, 12),
        ) {
            prop_assume!(w.iter().any(|&x| x > 0.0));
            let tr = GeoTransform::new(0.0, 0.0, 1.0, 3, 4).unwrap();
            let target = GeoGrid::new(tr, tgt, None).unwrap();
            let weight = GeoGrid::new(tr, w.clone(), None).unwrap();
            let base = weighted_bce(&GeoGrid::new(tr, p.clone(), None).unwrap(), &target, &weight).unwrap();
            prop_assert!(base >= 0.0);
            let perturbed: Vec<f64> = p.iter().zip(&w).zip(&noise)
                .map(|((&pv, &wv), &nv)| if wv == 0.0 { nv } else { pv })
                .collect();
            let again = weighted_bce(&GeoGrid::new(tr, perturbed, None).unwrap(), &target, &weight).unwrap();
            prop_assert_eq!(base.to_bits(), again.to_bits());
        }

        #[test]
        fn monotone_in_prediction(a in 0.0f64..1.0, b in 0.0f64..1.0, w in 1.0f64..4.0) {
            let tr = GeoTransform::new(0.0, 0.0, 1.0, 1, 1).unwrap();
            let weight = GeoGrid::new(tr, vec![w], None).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let loss = |p: f64, t: u8| weighted_bce(
                &GeoGrid::new(tr, vec![p], None).unwrap(),
                &GeoGrid::new(tr, vec![t], None).unwrap(),
                &weight,
            ).unwrap();
            prop_assert!(loss(hi, 1) <= loss(lo, 1));
            prop_assert!(loss(hi, 0) >= loss(lo, 0));
        }
    }
}
