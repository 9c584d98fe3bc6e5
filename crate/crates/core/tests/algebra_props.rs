mod common;

use common::*;
use proptest::prelude::*;
use trackx_core::algebra::{
    errors, intersect, match_subtract, negate, subtract, threshold_intervals, union, variation,
};
use trackx_core::{Event, Interval, IntervalSet, TrackKind};

const N: i64 = 2_000;

fn domain() -> Interval {
    iv(0, N)
}

fn arb_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0..N, 1..200i64), 0..30).prop_map(|v| {
        IntervalSet::from_intervals(
            v.into_iter()
                .map(|(a, len)| iv(a, (a + len).min(N).max(a + 1))),
        )
        .clip(&domain())
    })
}

fn arb_events() -> impl Strategy<Value = Vec<Event>> {
    arb_set().prop_map(|s| {
        // split every interval in two touching events to keep whole-event
        // semantics distinguishable from set semantics
        s.iter()
            .flat_map(|i| {
                let mid = i.start().0 + i.len() / 2;
                if mid > i.start().0 {
                    vec![
                        Event::bare(iv(i.start().0, mid)),
                        Event::bare(iv(mid, i.end().0)),
                    ]
                } else {
                    vec![Event::bare(*i)]
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn de_morgan(a in arb_set(), b in arb_set()) {
        let d = domain();
        prop_assert_eq!(
            negate(&union(&a, &b), &d).unwrap(),
            intersect(&negate(&a, &d).unwrap(), &negate(&b, &d).unwrap())
        );
        prop_assert_eq!(
            negate(&intersect(&a, &b), &d).unwrap(),
            union(&negate(&a, &d).unwrap(), &negate(&b, &d).unwrap())
        );
    }

    #[test]
    fn subtraction_is_intersection_with_complement(a in arb_set(), b in arb_set()) {
        prop_assert_eq!(subtract(&a, &b), intersect(&a, &negate(&b, &domain()).unwrap()));
    }

    #[test]
    fn errors_decompose(a in arb_set(), b in arb_set()) {
        prop_assert_eq!(errors(&a, &b), union(&subtract(&a, &b), &subtract(&b, &a)));
    }

    #[test]
    fn idempotence_and_identity(a in arb_set()) {
        prop_assert_eq!(intersect(&a, &a), a.clone());
        prop_assert_eq!(union(&a, &a), a.clone());
        prop_assert_eq!(union(&a, &IntervalSet::new()), a.clone());
        prop_assert!(errors(&a, &a).is_empty());
    }

    #[test]
    fn commutative_and_associative(a in arb_set(), b in arb_set(), c in arb_set()) {
        prop_assert_eq!(union(&a, &b), union(&b, &a));
        prop_assert_eq!(intersect(&a, &b), intersect(&b, &a));
        prop_assert_eq!(union(&union(&a, &b), &c), union(&a, &union(&b, &c)));
        prop_assert_eq!(intersect(&intersect(&a, &b), &c), intersect(&a, &intersect(&b, &c)));
    }

    #[test]
    fn double_negation(a in arb_set()) {
        let d = domain();
        prop_assert_eq!(negate(&negate(&a, &d).unwrap(), &d).unwrap(), a);
    }

    #[test]
    fn results_are_canonical(a in arb_set(), b in arb_set()) {
        for s in [union(&a, &b), intersect(&a, &b), subtract(&a, &b), errors(&a, &b)] {
            for w in s.as_slice().windows(2) {
                prop_assert!(w[0].end() < w[1].start());
            }
        }
    }

    #[test]
    fn set_ops_match_tick_oracle(a in arb_set(), b in arb_set()) {
        let n = N as usize;
        let (x, y) = (Bits::from_set(n, &a), Bits::from_set(n, &b));
        prop_assert_eq!(union(&a, &b), x.or(&y).to_set());
        prop_assert_eq!(intersect(&a, &b), x.and(&y).to_set());
        prop_assert_eq!(subtract(&a, &b), x.and_not(&y).to_set());
        prop_assert_eq!(errors(&a, &b), x.xor(&y).to_set());
        prop_assert_eq!(negate(&a, &domain()).unwrap(), x.not().to_set());
        prop_assert_eq!(a.duration(), x.count());
    }

    #[test]
    fn match_keeps_only_untouched_whole_events(a in arb_events(), b in arb_set()) {
        let y = Bits::from_set(N as usize, &b);
        let expected: Vec<Event> = a
            .iter()
            .filter(|e| !y.any_in(e.start().0 as usize, e.end().0 as usize))
            .cloned()
            .collect();
        let got = match_subtract(&a, &b);
        prop_assert_eq!(&got, &expected);
        for e in &got {
            prop_assert!(intersect(&IntervalSet::single(e.interval), &b).is_empty());
        }
    }
}

#[test]
fn negate_rejects_sets_outside_domain() {
    assert!(negate(&set(&[(5, 50)]), &iv(0, 10)).is_err());
    assert_eq!(
        negate(&IntervalSet::new(), &iv(0, 100)).unwrap(),
        set(&[(0, 100)])
    );
    assert_eq!(
        negate(&set(&[(10, 20)]), &iv(0, 30)).unwrap(),
        set(&[(0, 10), (20, 30)])
    );
}

#[test]
fn worked_examples() {
    let (a, b) = (set(&[(0, 10)]), set(&[(5, 15)]));
    assert_eq!(intersect(&a, &b), set(&[(5, 10)]));
    assert_eq!(subtract(&a, &b), set(&[(0, 5)]));
    assert_eq!(errors(&a, &b), set(&[(0, 5), (10, 15)]));

    let evs = [Event::bare(iv(0, 10)), Event::bare(iv(30, 40))];
    assert_eq!(
        match_subtract(&evs, &set(&[(5, 15)])),
        vec![Event::bare(iv(30, 40))]
    );
    assert!(match_subtract(&evs[..1], &set(&[(9, 20)])).is_empty());
    assert_eq!(match_subtract(&evs, &IntervalSet::new()), evs.to_vec());
}

#[test]
fn variation_is_signed_error_split() {
    let mut r = rng(7);
    for _ in 0..300 {
        let new = random_track(
            &mut r,
            id("Gait", "Ann", "1.2"),
            TrackKind::Classifier,
            30,
            N,
        );
        let old = random_track(
            &mut r,
            id("Gait", "Ann", "1.1"),
            TrackKind::Classifier,
            30,
            N,
        );
        let d = variation(&new, &old);
        let (x, y) = (track_bits(N as usize, &new), track_bits(N as usize, &old));
        assert_eq!(d.added, x.and_not(&y).to_set());
        assert_eq!(d.removed, y.and_not(&x).to_set());
        assert!(intersect(&d.added, &d.removed).is_empty());
        assert_eq!(
            union(&d.added, &d.removed),
            errors(&new.interval_set(), &old.interval_set())
        );
    }
}

#[test]
fn threshold_matches_oracle_and_is_monotone() {
    let mut r = rng(11);
    for _ in 0..300 {
        let t = random_track(
            &mut r,
            id("Tremor", "Bob", "1.0"),
            TrackKind::Classifier,
            40,
            N,
        );
        let mut prev = None;
        for theta in [0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.95, 1.0] {
            let got = threshold_intervals(&t, theta).unwrap();
            assert_eq!(got, threshold_oracle(N as usize, &t, theta).to_set());
            if let Some(p) = prev {
                assert!(got.is_subset(&p));
            }
            prev = Some(got);
        }
        let all: IntervalSet = t.events().iter().map(|e| e.interval).collect();
        assert_eq!(threshold_intervals(&t, 0.0).unwrap(), all);
    }
}

#[test]
fn threshold_rejects_labels_and_bad_theta() {
    let l = labels(id("Walk", "Rater", "1.0"), &[(0, 5)]);
    assert!(threshold_intervals(&l, 0.5).is_err());
    let c = classifier(id("Walk", "Ann", "1.0"), &[(0, 5, 0.4), (5, 9, 0.8)]);
    assert_eq!(threshold_intervals(&c, 0.5).unwrap(), set(&[(5, 9)]));
    assert!(threshold_intervals(&c, 1.5).is_err());
}
