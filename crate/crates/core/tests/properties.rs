//! Randomized checks of the invariants stated for each module.

mod common;

use std::sync::Arc;

use proptest::prelude::*;

use dune::baselines::{climatology_forecast, persistence_forecast, BaselineKind};
use dune::data::{
    anomalize, build_climatology, deanomalize, latitude_weights, Cadence, GridSpec, MonthlyField, NormStats, Stamp,
    VariableId,
};
use dune::ingest::{blend_sst_t2m, Split, SplitConfig};
use dune::train::weighted_loss;
use dune::verify::{acc, hss, rmse, Category, RegionMask};

use common::ulps_f32;

fn grid(n_lat: usize, n_lon: usize) -> Arc<GridSpec> {
    Arc::new(GridSpec::regular(n_lat, n_lon).unwrap())
}

fn field(g: &Arc<GridSpec>, stamp: Option<Stamp>, values: Vec<f32>) -> MonthlyField {
    MonthlyField::new(VariableId::BlendedT, stamp, g.clone(), values).unwrap()
}

/// Three years of monthly fields on a 2x4 grid from a flat value vector.
fn three_years(values: &[f32]) -> Vec<MonthlyField> {
    let g = grid(2, 4);
    Stamp::range(Stamp::month(2000, 1), Stamp::month(2002, 12))
        .into_iter()
        .zip(values.chunks_exact(8))
        .map(|(s, v)| field(&g, Some(s), v.to_vec()))
        .collect()
}

fn category() -> impl Strategy<Value = Category> {
    prop_oneof![Just(Category::Below), Just(Category::Near), Just(Category::Above)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn latitude_weights_sum_to_one(k in 1usize..40) {
        let g = GridSpec::regular(4 * k, 8).unwrap();
        let w = g.latitude_weights();
        let sum: f64 = w.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(w.as_slice().iter().all(|&x| x >= 0.0));
        let c0 = g.lat()[0].to_radians().cos();
        for (j, &lat) in g.lat().iter().enumerate() {
            let ratio = w.get(j) / w.get(0);
            prop_assert!((ratio - lat.to_radians().cos() / c0).abs() < 1e-12);
        }
    }

    #[test]
    fn arbitrary_latitudes_weights_normalized(lats in prop::collection::vec(-89.9f64..89.9, 1..50)) {
        let w = latitude_weights(&lats);
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn anomaly_round_trip(values in prop::collection::vec(180.0f32..330.0, 288)) {
        let fields = three_years(&values);
        let clim = build_climatology(&fields, (2000, 2002), false).unwrap();
        for f in &fields {
            let back = deanomalize(&anomalize(f, &clim).unwrap(), &clim).unwrap();
            for (a, b) in f.values.iter().zip(&back.values) {
                prop_assert!(ulps_f32(*a, *b) <= 4);
            }
        }
    }

    #[test]
    fn normalization_round_trip(lo in 0.0f64..300.0, span in 1e-3f64..400.0, t in 0.0f64..1.0) {
        let s = NormStats::new("c", lo, lo + span).unwrap();
        let x = lo + t * span;
        let back = s.denormalize(s.normalize(x));
        prop_assert!((back - x).abs() <= 4.0 * f64::EPSILON * (lo + span));
        prop_assert!(NormStats::new("c", lo, lo).is_err());
    }

    #[test]
    fn climatology_ignores_field_order(values in prop::collection::vec(-40.0f32..40.0, 288), seed in any::<u64>()) {
        let fields = three_years(&values);
        let mut shuffled = fields.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let a = build_climatology(&fields, (2000, 2002), true).unwrap();
        let b = build_climatology(&shuffled, (2000, 2002), true).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn percentiles_ordered_and_monotone(values in prop::collection::vec(-40.0f32..40.0, 288), cell in 0usize..96, bump in 0.0f32..20.0) {
        let fields = three_years(&values);
        let base = build_climatology(&fields, (2000, 2002), true).unwrap();
        for slot in 0..12 {
            let (p33, p66) = (base.p33(slot).unwrap(), base.p66(slot).unwrap());
            prop_assert!(p33.iter().zip(p66).all(|(a, b)| a <= b));
        }
        let (t, i) = (cell / 8, cell % 8);
        let mut raised = fields.clone();
        raised[t].values[i] += bump;
        let up = build_climatology(&raised, (2000, 2002), true).unwrap();
        let slot = t % 12;
        prop_assert!(up.p33(slot).unwrap()[i] >= base.p33(slot).unwrap()[i]);
        prop_assert!(up.p66(slot).unwrap()[i] >= base.p66(slot).unwrap()[i]);
    }

    #[test]
    fn blend_ignores_sst_over_land(
        lsm in prop::collection::vec(0.0f32..1.0, 8),
        t2m in prop::collection::vec(250.0f32..300.0, 8),
        sst in prop::collection::vec(270.0f32..305.0, 8),
        other in prop::collection::vec(270.0f32..305.0, 8),
    ) {
        let g = grid(2, 4);
        let s = Some(Stamp::month(2001, 3));
        let mk = |v: VariableId, vals: &Vec<f32>, stamp| MonthlyField::new(v, stamp, g.clone(), vals.clone()).unwrap();
        let lsm_f = mk(VariableId::Lsm, &lsm, None);
        let t = mk(VariableId::T2m, &t2m, s);
        let a = blend_sst_t2m(&t, &mk(VariableId::Sst, &sst, s), &lsm_f, 0.5).unwrap();
        let mixed: Vec<f32> = (0..8).map(|i| if lsm[i] >= 0.5 { other[i] } else { sst[i] }).collect();
        let b = blend_sst_t2m(&t, &mk(VariableId::Sst, &mixed, s), &lsm_f, 0.5).unwrap();
        prop_assert_eq!(&a.field.values, &b.field.values);
    }

    #[test]
    fn stamps_belong_to_at_most_one_split(ordinal in 0i64..700) {
        let c = SplitConfig::reanalysis();
        let s = Stamp::from_ordinal(Cadence::Monthly, ordinal);
        let owners = Split::ALL
            .iter()
            .filter(|&&sp| c.targets(sp, Cadence::Monthly).contains(&s))
            .count();
        prop_assert!(owners <= 1);
        prop_assert_eq!(owners == 1, c.split_of(s).is_some());
    }

    #[test]
    fn loss_is_rotation_invariant_and_nonnegative(
        pred in prop::collection::vec(-3.0f64..3.0, 64),
        truth in prop::collection::vec(-3.0f64..3.0, 64),
        k in 0usize..16,
    ) {
        let w = GridSpec::regular(4, 16).unwrap().latitude_weights();
        let roll = |v: &[f64]| -> Vec<f64> {
            v.chunks(16).flat_map(|row| (0..16).map(move |i| row[(i + 16 - k) % 16])).collect()
        };
        let base = weighted_loss(&pred, &truth, &w, 16).unwrap();
        let rolled = weighted_loss(&roll(&pred), &roll(&truth), &w, 16).unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!((base - rolled).abs() <= 1e-12 * base.max(1.0));
        prop_assert_eq!(weighted_loss(&pred, &pred, &w, 16).unwrap(), 0.0);
        prop_assert_eq!(base == 0.0, pred == truth);
    }

    #[test]
    fn metric_scaling_laws(
        f in prop::collection::vec(-4.0f32..4.0, 32),
        t in prop::collection::vec(-4.0f32..4.0, 32),
        scale in prop::sample::select(vec![0.5f32, 2.0, 4.0, 0.25]),
    ) {
        let g = GridSpec::regular(4, 8).unwrap();
        let w = g.latitude_weights();
        let r = RegionMask::global(&g);
        let fs: Vec<f32> = f.iter().map(|v| v * scale).collect();
        let ts: Vec<f32> = t.iter().map(|v| v * scale).collect();
        let a0 = acc(&f, &t, &w, &r).unwrap();
        let a1 = acc(&fs, &ts, &w, &r).unwrap();
        prop_assert!((a0 - a1).abs() <= 1e-12);
        // Powers of two scale f32 exactly, so the error field scales too.
        let r0 = rmse(&f, &t, &w, &r).unwrap();
        let r1 = rmse(&fs, &ts, &w, &r).unwrap();
        prop_assert!((r1 - scale as f64 * r0).abs() <= 1e-12 * r1.max(1.0));
    }

    #[test]
    fn hss_ignores_spatial_arrangement(
        pairs in prop::collection::vec((category(), category()), 32),
        seed in any::<u64>(),
    ) {
        let region = RegionMask::new("all".into(), vec![true; 32], String::new()).unwrap();
        let (f, o): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let mut shuffled = pairs.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let (fs, os): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
        let (h0, t0) = hss(&f, &o, &region).unwrap();
        let (h1, t1) = hss(&fs, &os, &region).unwrap();
        prop_assert_eq!(h0, h1);
        prop_assert_eq!(t0, t1);
        prop_assert_eq!(t0.total, t0.hits + t0.misses + t0.false_alarms + t0.correct_negatives);
    }

    #[test]
    fn all_true_region_equals_unrestricted(
        f in prop::collection::vec(-4.0f32..4.0, 32),
        t in prop::collection::vec(-4.0f32..4.0, 32),
    ) {
        let g = GridSpec::regular(4, 8).unwrap();
        let w = g.latitude_weights();
        let all = RegionMask::new("custom".into(), vec![true; 32], String::new()).unwrap();
        let global = RegionMask::global(&g);
        prop_assert_eq!(rmse(&f, &t, &w, &all).unwrap(), rmse(&f, &t, &w, &global).unwrap());
        prop_assert_eq!(acc(&f, &t, &w, &all).unwrap(), acc(&f, &t, &w, &global).unwrap());
        // Unweighted scalar loop over every cell.
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..4 {
            for k in 0..8 {
                let d = f[j * 8 + k] as f64 - t[j * 8 + k] as f64;
                num += w.get(j) * d * d;
                den += w.get(j);
            }
        }
        prop_assert!(((num / den).sqrt() - rmse(&f, &t, &w, &all).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn persistence_copies_and_climatology_is_zero(values in prop::collection::vec(-5.0f32..5.0, 288), month in 13i64..36) {
        let fields = three_years(&values);
        let target = Stamp::month(2000, 1).offset(month);
        for kind in [BaselineKind::PersistPriorStep, BaselineKind::PersistPriorYear] {
            let source = if kind == BaselineKind::PersistPriorStep { target.prev() } else { target.prior_year() };
            let fc = persistence_forecast(kind, &fields, target).unwrap();
            let src = fields.iter().find(|f| f.stamp == Some(source)).unwrap();
            prop_assert_eq!(&fc.values, &src.values);
            prop_assert_eq!(fc.stamp, Some(target));
        }
        let clim = build_climatology(&fields, (2000, 2002), false).unwrap();
        let c = climatology_forecast(&clim, target).unwrap();
        prop_assert!(c.values.iter().all(|&v| v == 0.0));
    }
}
