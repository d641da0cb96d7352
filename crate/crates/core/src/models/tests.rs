use super::*;
use crate::geometry::Window;
use proptest::prelude::*;

fn unit(x: f64, y: f64) -> MarkedPoint<f64> {
    MarkedPoint::unmarked(x, y)
}

fn pattern(model: &ModelSpec<f64>, pts: Vec<MarkedPoint<f64>>) -> PointPattern<f64> {
    PointPattern::new(pts, Window::new(-50.0, 50.0, -50.0, 50.0).unwrap(), model.mark_space()).unwrap()
}

fn all_families() -> Vec<ModelSpec<f64>> {
    vec![
        ModelSpec::overlap_area(1.0).unwrap(),
        ModelSpec::multi_strauss(
            2,
            &[
                PairBands { types: (1, 1), radii: vec![0.0, 0.4, 0.9] },
                PairBands { types: (1, 2), radii: vec![0.2, 0.7] },
                PairBands { types: (2, 2), radii: vec![0.1, 0.5, 0.6, 1.0] },
            ],
        )
        .unwrap(),
        ModelSpec::knn_multi_strauss(
            2,
            &[
                PairBands { types: (1, 1), radii: vec![0.0, 0.5, 1.0] },
                PairBands { types: (1, 2), radii: vec![0.1, 0.8] },
                PairBands { types: (2, 2), radii: vec![0.0, 0.9] },
            ],
            2,
        )
        .unwrap(),
        ModelSpec::strauss_disc(0.4).unwrap(),
        ModelSpec::geyer_triplet(0.8).unwrap(),
        ModelSpec::area_interaction(0.5).unwrap(),
    ]
}

fn with_mark(model: &ModelSpec<f64>, x: f64, y: f64, u: f64) -> MarkedPoint<f64> {
    let mark = match model.mark_space() {
        MarkSpace::Unit => Mark::Unit,
        MarkSpace::Finite(m) => Mark::Label(1 + ((u * m as f64) as u32).min(m - 1)),
        MarkSpace::Interval(mx) => Mark::Size(u * mx),
    };
    MarkedPoint::new(x, y, mark)
}

#[test]
fn dimensions_and_ranges() {
    let fam = all_families();
    let dims: Vec<usize> = fam.iter().map(ModelSpec::dim).collect();
    assert_eq!(dims, vec![2, 2 + 2 + 1 + 3, 2 + 2 + 1 + 1, 2, 3, 2]);
    let ranges: Vec<f64> = fam.iter().map(ModelSpec::range).collect();
    assert_eq!(ranges, vec![1.0, 1.0, 3.0, 0.8, 0.8, 1.0]);
    assert_eq!(ModelSpec::<f64>::poisson().dim(), 1);
    assert_eq!(ModelSpec::<f64>::poisson().range(), 0.0);
}

#[test]
fn empty_pattern_has_zero_statistics() {
    for m in all_families() {
        let v = m.global_statistics(&pattern(&m, vec![])).unwrap();
        assert!(v.iter().all(|&x| x == 0.0), "{}", m.family());
    }
}

#[test]
fn geyer_equilateral_triangle() {
    let m = ModelSpec::geyer_triplet(1.0).unwrap();
    let h = 0.5 * 3f64.sqrt() / 2.0;
    let phi = pattern(&m, vec![unit(0.0, 0.0), unit(0.5, 0.0), unit(0.25, h)]);
    assert_eq!(m.global_statistics(&phi).unwrap(), vec![3.0, 3.0, 1.0]);
}

#[test]
fn geyer_local_with_two_close_neighbours() {
    let m = ModelSpec::geyer_triplet(1.0).unwrap();
    let phi = pattern(&m, vec![unit(0.5, 0.0), unit(0.0, 0.5)]);
    let l = m.local_statistics(&unit(0.0, 0.0), &phi).unwrap();
    assert_eq!(l.values, vec![1.0, 2.0, 1.0]);
}

#[test]
fn overlap_two_points() {
    let m = ModelSpec::overlap_area(1.0).unwrap();
    let v = m.global_statistics(&pattern(&m, vec![unit(0.0, 0.0), unit(0.5, 0.0)])).unwrap();
    assert_eq!(v[0], 2.0);
    assert!((v[1] - 0.307092425).abs() < 1e-9);
}

#[test]
fn area_interaction_isolated_point() {
    let m = ModelSpec::area_interaction(0.5).unwrap();
    let phi = pattern(&m, vec![unit(1.2, 0.0), unit(-3.0, 2.0)]);
    let l = m.local_statistics(&unit(0.0, 0.0), &phi).unwrap();
    assert_eq!(l.values[0], 1.0);
    assert!((l.values[1] - std::f64::consts::PI * 0.25).abs() < 1e-12);
}

#[test]
fn strauss_disc_interacting_pair() {
    let m = ModelSpec::strauss_disc(1.0).unwrap();
    let phi = PointPattern::new(
        vec![MarkedPoint::new(0.7, 0.0, Mark::Size(0.3))],
        Window::new(-5.0, 5.0, -5.0, 5.0).unwrap(),
        m.mark_space(),
    )
    .unwrap();
    let l = m.local_statistics(&MarkedPoint::new(0.0, 0.0, Mark::Size(0.4)), &phi).unwrap();
    assert_eq!(l.values, vec![1.0, 1.0]);
    let l = m.local_statistics(&MarkedPoint::new(0.0, 0.0, Mark::Size(0.39)), &phi).unwrap();
    assert_eq!(l.values, vec![1.0, 0.0]);
}

#[test]
fn local_energy_examples() {
    let m = ModelSpec::overlap_area(1.0).unwrap();
    let phi = pattern(&m, vec![unit(3.0, 0.0)]);
    assert_eq!(m.local_energy(&[0.0, 0.0], &unit(0.0, 0.0), &phi).unwrap(), 0.0);
    assert_eq!(m.local_energy(&[-1.5, 2.0], &unit(0.0, 0.0), &phi).unwrap(), -1.5);

    let hc = ModelSpec::multi_strauss(1, &[PairBands { types: (1, 1), radii: vec![0.2, 1.0] }]).unwrap();
    let phi = pattern(&hc, vec![unit(0.1, 0.0)]);
    assert_eq!(hc.local_energy(&[0.0, -1.0], &unit(0.0, 0.0), &phi).unwrap(), f64::INFINITY);
}

#[test]
fn local_statistics_rejects_duplicates_and_bad_marks() {
    let m = ModelSpec::geyer_triplet(1.0).unwrap();
    let phi = pattern(&m, vec![unit(0.5, 0.0)]);
    assert!(matches!(m.local_statistics(&unit(0.5, 0.0), &phi), Err(Error::InvalidInput(_))));
    assert!(matches!(
        m.local_statistics(&MarkedPoint::new(0.0, 0.0, Mark::Label(1)), &phi),
        Err(Error::ModelMismatch(_))
    ));
    let ms = all_families().remove(1);
    let bad = PointPattern::new(vec![unit(0.0, 0.0)], Window::new(-1.0, 1.0, -1.0, 1.0).unwrap(), MarkSpace::Unit).unwrap();
    assert!(matches!(ms.global_statistics(&bad), Err(Error::ModelMismatch(_))));
}

#[test]
fn validate_theta_examples() {
    let o = ModelSpec::overlap_area(1.0).unwrap();
    let v = o.theta_violations(&[0.5, -0.1]).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].component, 1);
    assert!(o.validate_theta(&[0.5, -0.1]).is_err());
    assert!(ModelSpec::area_interaction(1.0).unwrap().validate_theta(&[-3.0, -2.0]).is_ok());
    let g = ModelSpec::geyer_triplet(1.0).unwrap();
    let v = g.theta_violations(&[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(v.iter().map(|x| x.component).collect::<Vec<_>>(), vec![2]);
    assert!(matches!(g.validate_theta(&[0.0, 0.0]), Err(Error::Dimension { expected: 3, got: 2 })));
    assert!(ModelSpec::strauss(1.0).unwrap().validate_theta(&[0.0, -1.0]).is_err());
}

#[test]
fn stability_bound_examples() {
    let o = ModelSpec::overlap_area(1.0).unwrap();
    assert_eq!(o.stability_bound(&[-2.0, 1.0]).unwrap(), 2.0);
    for m in all_families() {
        let mut theta = vec![0.0; m.dim()];
        if m.family() == "geyer_triplet" {
            theta[2] = 1.0;
        }
        assert_eq!(m.stability_bound(&theta).unwrap(), 0.0, "{}", m.family());
    }
    let knn = ModelSpec::knn_multi_strauss(1, &[PairBands { types: (1, 1), radii: vec![0.0, 1.0] }], 1).unwrap();
    assert_eq!(knn.stability_bound(&[0.0, -1.0]).unwrap(), 13.0);
    assert!(o.stability_bound(&[0.0, -1.0]).is_err());
}

#[test]
fn geyer_bound_matches_sector_count() {
    // theta2 = -1, theta3 = 0.5: increments -1 + 0.5 floor(n/6) stay negative
    // for n < 12, so the minimum is at n = 12 where f(12) = 6 and the energy
    // is 0 - 12 + 0.5 * 6 = -9.
    let g = ModelSpec::geyer_triplet(1.0).unwrap();
    assert_eq!(g.stability_bound(&[0.0, -1.0, 0.5]).unwrap(), 9.0);
}

#[test]
fn hard_core_cap_bounds_hexagonal_packing() {
    // Hexagonal packing with spacing delta inside B(0, D): a ring-based
    // count always stays under floor((2D/delta + 1)^2).
    let (delta, d, spacing) = (0.199, 1.0, 0.2);
    let hc = ModelSpec::multi_strauss(1, &[PairBands { types: (1, 1), radii: vec![delta, d] }]).unwrap();
    let mut pts = Vec::new();
    for i in -10..=10 {
        for j in -10..=10 {
            let x = spacing * (i as f64 + 0.5 * j as f64);
            let y = spacing * 3f64.sqrt() / 2.0 * j as f64;
            if (x, y) != (0.0, 0.0) && x.hypot(y) <= d {
                pts.push(unit(x, y));
            }
        }
    }
    let l = hc.local_from_neighbours(&unit(0.0, 0.0), &pts);
    assert!(!l.hard_core);
    let k = hc.stability_bound(&[0.0, -1.0]).unwrap();
    assert!(l.energy(&[0.0, -1.0]) >= -k);
    assert!(l.values[1] > (d / delta).powi(2).ceil(), "packing exceeds the naive area bound");
}

#[test]
fn negative_interaction_without_hard_core_is_unstable() {
    let m = ModelSpec::multi_strauss(
        2,
        &[PairBands { types: (1, 1), radii: vec![0.1, 0.5] }, PairBands { types: (1, 2), radii: vec![0.0, 0.5] }],
    )
    .unwrap();
    // (1, 2) interaction negative while type-2 points have no hard core.
    assert!(m.stability_bound(&[0.0, 0.0, -1.0, 0.0]).is_err());
    assert!(m.stability_bound(&[0.0, -1.0, 0.0, 0.0]).unwrap() > 0.0);
}

#[test]
fn knn_range_needs_three_band_lengths() {
    // With k = 1 and D_max = 1, a point at 2.35 changes the local statistic
    // of the origin given y and z, although it is farther than 2 D_max.
    let m = ModelSpec::knn_multi_strauss(1, &[PairBands { types: (1, 1), radii: vec![0.0, 1.0] }], 1).unwrap();
    let x = unit(0.0, 0.0);
    let base = vec![unit(0.5, 0.0), unit(1.45, 0.0)];
    let mut more = base.clone();
    more.push(unit(2.35, 0.0));
    let diff = |pts: &[MarkedPoint<f64>]| {
        let mut with = pts.to_vec();
        with.push(x);
        let a = m.global_from_points(&with);
        let b = m.global_from_points(pts);
        a[1] - b[1]
    };
    assert_ne!(diff(&base), diff(&more));
    assert!(m.range() >= 2.35);
    assert_eq!(m.local_from_neighbours(&x, &base).values[1], diff(&base));
    assert_eq!(m.local_from_neighbours(&x, &more).values[1], diff(&more));
}

#[test]
fn layout_order_for_single_type() {
    let m = ModelSpec::strauss(1.5).unwrap();
    assert_eq!(m.component_names(), vec!["count[1]".to_string(), "band[1,1][0,1.5]".to_string()]);
    assert!(m.accepts(&Mark::Unit));
    assert!(m.accepts(&Mark::Label(1)));
    assert!(!m.accepts(&Mark::Label(2)));
}

fn config_strategy() -> impl Strategy<Value = (usize, Vec<(f64, f64, f64)>, (f64, f64, f64), f64, f64)> {
    (
        0..6usize,
        prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64, 0.0..1.0f64), 0..30),
        (-2.0..2.0f64, -2.0..2.0f64, 0.0..1.0f64),
        -20.0..20.0f64,
        -20.0..20.0f64,
    )
}

fn dedup(model: &ModelSpec<f64>, raw: &[(f64, f64, f64)], x: &MarkedPoint<f64>) -> Vec<MarkedPoint<f64>> {
    let mut out: Vec<MarkedPoint<f64>> = Vec::new();
    for &(a, b, u) in raw {
        let p = with_mark(model, a, b, u);
        if (p.x, p.y) != (x.x, x.y) && !out.iter().any(|q| (q.x, q.y) == (p.x, p.y)) {
            out.push(p);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn local_equals_global_difference((fam, raw, xr, _, _) in config_strategy()) {
        let model = &all_families()[fam];
        let x = with_mark(model, xr.0, xr.1, xr.2);
        let phi = dedup(model, &raw, &x);
        let mut with = phi.clone();
        with.push(x);
        let g1 = model.global_from_points(&with);
        let g0 = model.global_from_points(&phi);
        let local = model.local_from_neighbours(&x, &phi);
        for i in 0..model.dim() {
            prop_assert!((local.values[i] - (g1[i] - g0[i])).abs() <= 1e-9, "{} component {}", model.family(), i);
        }
    }

    #[test]
    fn global_statistics_are_translation_invariant((fam, raw, xr, tx, ty) in config_strategy()) {
        let model = &all_families()[fam];
        let x = with_mark(model, xr.0, xr.1, xr.2);
        let phi = dedup(model, &raw, &x);
        let shifted: Vec<_> = phi.iter().map(|p| MarkedPoint::new(p.x + tx, p.y + ty, p.mark)).collect();
        let a = model.global_from_points(&phi);
        let b = model.global_from_points(&shifted);
        for i in 0..model.dim() {
            // Shifting perturbs distances by rounding only.
            prop_assert!((a[i] - b[i]).abs() <= 1e-7 * (1.0 + a[i].abs()),
                "{} component {}: {} vs {}", model.family(), i, a[i], b[i]);
        }
    }

    #[test]
    fn far_points_do_not_change_local_statistics((fam, raw, xr, _, _) in config_strategy(), angle in 0.0..std::f64::consts::TAU, extra in 1e-6..5.0f64, u in 0.0..1.0f64) {
        let model = &all_families()[fam];
        let x = with_mark(model, xr.0, xr.1, xr.2);
        let phi = dedup(model, &raw, &x);
        let r = model.range() + extra;
        let far = with_mark(model, x.x + r * angle.cos(), x.y + r * angle.sin(), u);
        let mut more = phi.clone();
        more.push(far);
        prop_assert_eq!(model.local_from_neighbours(&x, &phi), model.local_from_neighbours(&x, &more));
    }
}
