use super::*;
use crate::models::PairBands;
use proptest::prelude::*;

fn square(side: f64) -> Window<f64> {
    Window::new(0.0, side, 0.0, side).unwrap()
}

fn config(model: ModelSpec<f64>, theta: Vec<f64>, w: Window<f64>, steps: u64) -> SimConfig<f64> {
    SimConfig { steps, burn_in: steps / 2, ..SimConfig::new(model, theta, w) }
}

fn close_pairs(p: &PointPattern<f64>, r: f64) -> usize {
    let pts = p.points();
    let mut c = 0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            c += (pts[i].dist2(&pts[j]) <= r * r) as usize;
        }
    }
    c
}

#[test]
fn poisson_counts_match_intensity() {
    let w = Window::new(0.0, 5.0, 0.0, 4.0).unwrap();
    let theta = -(2.0f64).ln();
    let cfg = config(ModelSpec::poisson(), vec![theta], w, 4000);
    let seeds: Vec<u64> = (0..200).collect();
    let runs = simulate_chains(&cfg, &seeds).unwrap();
    let mean = runs.iter().map(|r| r.pattern.len() as f64).sum::<f64>() / 200.0;
    let expected = 40.0;
    let sd = (expected / 200.0f64).sqrt();
    assert!((mean - expected).abs() < 3.0 * sd, "mean count {mean}");
}

#[test]
fn hard_core_is_never_violated() {
    let delta = 0.3;
    let model = ModelSpec::multi_strauss(1, &[PairBands { types: (1, 1), radii: vec![delta, 0.6] }]).unwrap();
    let cfg = config(model, vec![-(3.0f64).ln(), -0.5], square(4.0), 20_000);
    for run in simulate_chains(&cfg, &[1, 2, 3, 4, 5]).unwrap() {
        assert!(run.pattern.len() > 10);
        assert_eq!(close_pairs(&run.pattern, delta), 0);
    }
}

#[test]
fn inhibition_reduces_close_pairs() {
    let w = square(4.0);
    let seeds: Vec<u64> = (0..200).collect();
    let total = |theta2: f64| {
        let cfg = config(ModelSpec::strauss(0.3).unwrap(), vec![-(2.0f64).ln(), theta2], w, 6000);
        simulate_chains(&cfg, &seeds).unwrap().iter().map(|r| close_pairs(&r.pattern, 0.3)).sum::<usize>()
    };
    let (free, inhibited) = (total(0.0), total(1.5));
    assert!(inhibited < free, "{inhibited} vs {free}");
}

#[test]
fn seed_determinism() {
    let cfg = SimConfig { seed: 11, ..config(ModelSpec::area_interaction(0.3).unwrap(), vec![-1.0, 0.8], square(3.0), 3000) };
    let a = simulate_mh(&cfg).unwrap();
    let b = simulate_mh(&cfg).unwrap();
    assert_eq!(a.pattern, b.pattern);
    assert_eq!(a.stats, b.stats);
    let c = simulate_mh(&SimConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.pattern, c.pattern);
}

#[test]
fn zero_steps_returns_initial_state() {
    let cfg = config(ModelSpec::poisson(), vec![0.0], square(2.0), 0);
    let run = simulate_mh(&cfg).unwrap();
    assert!(run.pattern.is_empty());
    assert_eq!(run.stats, ChainStats::default());
}

#[test]
fn counts_exclude_burn_in() {
    let cfg = SimConfig { burn_in: 300, ..config(ModelSpec::poisson(), vec![0.0], square(2.0), 1000) };
    let s = simulate_mh(&cfg).unwrap().stats;
    assert_eq!(s.birth.proposed + s.death.proposed + s.shift.proposed, 700);
    assert_eq!(s.birth.accepted, s.birth.proposed.min(s.birth.accepted));
}

#[test]
fn moves_alone_preserve_count() {
    let initial: Vec<MarkedPoint<f64>> = (0..12).map(|i| MarkedPoint::unmarked(0.2 + 0.3 * i as f64, 1.0)).collect();
    let cfg = SimConfig {
        mix: ProposalMix { birth: 1e-300, death: 1e-300, shift: 1.0 },
        initial,
        ..config(ModelSpec::strauss(0.2).unwrap(), vec![0.0, 1.0], square(4.0), 2000)
    };
    let run = simulate_mh(&cfg).unwrap();
    assert_eq!(run.pattern.len(), 12);
    assert!(run.stats.shift.accepted > 0);
}

#[test]
fn invalid_configurations_rejected() {
    let base = config(ModelSpec::poisson(), vec![0.0], square(2.0), 100);
    let bad_mix = SimConfig { mix: ProposalMix { birth: 0.5, death: 0.4, shift: 0.2 }, ..base.clone() };
    assert!(matches!(simulate_mh(&bad_mix), Err(Error::Configuration(_))));
    let no_death = SimConfig { mix: ProposalMix { birth: 0.9, death: 0.0, shift: 0.1 }, ..base.clone() };
    assert!(simulate_mh(&no_death).is_err());
    let short = SimConfig { burn_in: 200, ..base.clone() };
    assert!(matches!(simulate_mh(&short), Err(Error::Configuration(_))));
    let outside = SimConfig { initial: vec![MarkedPoint::unmarked(3.0, 1.0)], ..base.clone() };
    assert!(simulate_mh(&outside).is_err());
    let dup = SimConfig { initial: vec![MarkedPoint::unmarked(1.0, 1.0); 2], ..base.clone() };
    assert!(simulate_mh(&dup).is_err());
    let wrong_dim = SimConfig { theta: vec![0.0, 1.0], ..base };
    assert!(simulate_mh(&wrong_dim).is_err());
}

fn families() -> Vec<(ModelSpec<f64>, Vec<f64>)> {
    vec![
        (ModelSpec::overlap_area(0.5).unwrap(), vec![-0.3, 1.2]),
        (
            ModelSpec::multi_strauss(
                2,
                &[
                    PairBands { types: (1, 1), radii: vec![0.0, 0.2, 0.4] },
                    PairBands { types: (1, 2), radii: vec![0.0, 0.3] },
                    PairBands { types: (2, 2), radii: vec![0.0, 0.35] },
                ],
            )
            .unwrap(),
            vec![0.1, 0.7, 0.3, 0.4, -0.2, 0.5],
        ),
        (
            ModelSpec::knn_multi_strauss(1, &[PairBands { types: (1, 1), radii: vec![0.0, 0.2, 0.45] }], 2).unwrap(),
            vec![0.2, 0.3, -0.4],
        ),
        (ModelSpec::strauss_disc(0.2).unwrap(), vec![0.1, 0.6]),
        (ModelSpec::geyer_triplet(0.4).unwrap(), vec![0.2, -0.3, 0.4]),
        (ModelSpec::area_interaction(0.3).unwrap(), vec![-0.2, 1.3]),
    ]
}

fn random_point(model: &ModelSpec<f64>, w: &Window<f64>, u: &[f64]) -> MarkedPoint<f64> {
    let mark = match model.mark_space() {
        MarkSpace::Unit => Mark::Unit,
        MarkSpace::Finite(m) => Mark::Label(1 + (u[2] * m as f64) as u32 % m),
        MarkSpace::Interval(mx) => Mark::Size(u[2] * mx),
    };
    MarkedPoint::new(w.xmin + u[0] * w.width(), w.ymin + u[1] * w.height(), mark)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Birth and the reverse death multiply to one, and the birth ratio equals
    /// the density ratio from global statistics times the proposal ratio.
    #[test]
    fn detailed_balance(fam in 0..6usize, n in 0..30usize, u in prop::collection::vec(0.0..1.0f64, 96),
                        pb in 0.05..0.9f64) {
        let (model, theta) = families().swap_remove(fam);
        let w = square(2.5);
        let phi: Vec<_> = (0..n).map(|i| random_point(&model, &w, &u[3 * i..3 * i + 3])).collect();
        let x = random_point(&model, &w, &u[90..93]);
        let mix = ProposalMix { birth: pb, death: (1.0 - pb) * u[93], shift: (1.0 - pb) * (1.0 - u[93]) };
        prop_assume!(mix.death > 1e-3);
        let area = w.area();

        let cfg = SimConfig { initial: phi.clone(), ..SimConfig::new(model.clone(), theta.clone(), w) };
        let mut state = State::new(&cfg);
        let e_birth = state.energy(&x, None);
        state.insert(x);
        let e_death = state.energy(&x, Some(n));
        prop_assert_eq!(e_birth, e_death);

        let fwd = birth_log_ratio(e_birth, n, area, &mix);
        let rev = death_log_ratio(e_death, n + 1, area, &mix);
        prop_assert!((fwd + rev).abs() < 1e-12 * (1.0 + fwd.abs()));

        let mut with_x = phi.clone();
        with_x.push(x);
        let dv: Vec<f64> = model.global_from_points(&with_x).iter().zip(model.global_from_points(&phi)).map(|(a, b)| a - b).collect();
        let log_density = -dv.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>();
        let proposal = (mix.death / (n + 1) as f64 / (mix.birth / area)).ln();
        let oracle = log_density + proposal;
        prop_assert!((fwd - oracle).abs() < 1e-8 * (1.0 + oracle.abs()), "{} vs {}", fwd, oracle);
    }
}
