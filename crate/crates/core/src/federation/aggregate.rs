use crate::error::{Error, Result};
use crate::nn::ParamSet;

/// One soft step toward a local model: `ε·local + (1−ε)·global`, elementwise.
pub fn aggregate_soft(global: &ParamSet, local: &ParamSet, eps: f64) -> Result<ParamSet> {
    global.ensure_layout(local)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("aggregation factor {eps} outside [0, 1]")));
    }
    let mut out = global.clone();
    for (g, &l) in out.values_mut().iter_mut().zip(local.values()) {
        let v = eps * f64::from(l) + (1.0 - eps) * f64::from(*g);
        *g = v as f32;
    }
    Ok(out)
}

/// Elementwise mean, accumulated in f64 in list order.
pub fn aggregate_mean(locals: &[&ParamSet]) -> Result<ParamSet> {
    let first = locals.first().ok_or_else(|| Error::Federation("mean of zero models".into()))?;
    for p in &locals[1..] {
        first.ensure_layout(p)?;
    }
    let n = locals.len() as f64;
    let mut out = (*first).clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for p in locals {
            acc += f64::from(p.values()[i]);
        }
        *v = (acc / n) as f32;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(x: f32) -> ParamSet {
        ParamSet::from_parts(vec![vec![1]], vec![x]).unwrap()
    }

    fn vector(xs: Vec<f32>) -> ParamSet {
        ParamSet::from_parts(vec![vec![xs.len() as u32]], xs).unwrap()
    }

    #[test]
    fn endpoints_and_arithmetic() {
        let g = vector(vec![1.5, -2.0, 0.25]);
        let l = vector(vec![-7.0, 3.0, 9.5]);
        assert!(aggregate_soft(&g, &l, 1.0).unwrap().bit_eq(&l));
        assert!(aggregate_soft(&g, &l, 0.0).unwrap().bit_eq(&g));
        assert_eq!(aggregate_soft(&scalar(0.0), &scalar(1.0), 0.01).unwrap().values()[0], 0.01);
    }

    #[test]
    fn rejects_mismatch_and_bad_eps() {
        assert!(matches!(
            aggregate_soft(&scalar(0.0), &vector(vec![1.0, 2.0]), 0.5),
            Err(Error::LayoutMismatch { .. })
        ));
        assert!(aggregate_soft(&scalar(0.0), &scalar(1.0), 1.5).is_err());
        assert!(aggregate_mean(&[]).is_err());
        assert!(aggregate_mean(&[&scalar(0.0), &vector(vec![1.0, 2.0])]).is_err());
    }

    #[test]
    fn mean_examples() {
        let p = vector(vec![1.0, -3.5, 8.0]);
        assert!(aggregate_mean(&[&p]).unwrap().bit_eq(&p));
        let mut neg = p.clone();
        neg.scale(-1.0);
        assert!(aggregate_mean(&[&p, &neg]).unwrap().values().iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn soft_stays_between_inputs(
            pairs in prop::collection::vec((-1e3f32..1e3, -1e3f32..1e3), 1..20),
            eps in 0.0f64..=1.0,
        ) {
            let g = vector(pairs.iter().map(|p| p.0).collect());
            let l = vector(pairs.iter().map(|p| p.1).collect());
            let out = aggregate_soft(&g, &l, eps).unwrap();
            for (i, &v) in out.values().iter().enumerate() {
                let (a, b) = pairs[i];
                prop_assert!(v >= a.min(b) && v <= a.max(b));
            }
        }

        #[test]
        fn mean_matches_straight_sum(rows in prop::collection::vec(prop::collection::vec(-1e3f32..1e3, 4), 1..6)) {
            let sets: Vec<ParamSet> = rows.iter().cloned().map(vector).collect();
            let refs: Vec<&ParamSet> = sets.iter().collect();
            let got = aggregate_mean(&refs).unwrap();
            for i in 0..4 {
                let mut s = 0.0f64;
                for r in &rows {
                    s += f64::from(r[i]);
                }
                prop_assert_eq!(got.values()[i].to_bits(), ((s / rows.len() as f64) as f32).to_bits());
            }
        }
    }
}
