use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

use luroth_core::expansion::{
    cylinder, detect_period, luroth_digits, luroth_iterate, luroth_step, luroth_value, stream_value, DEFAULT_CYCLE_CAP,
};
use luroth_core::intervals::{fundamental_interval, interval_diameter, inverse_branch, luroth_enclosure};
use luroth_core::rational::{rat, recip};
use luroth_core::symbolic::{scramble_count, shuffle, unshuffle_q, unshuffle_r, ShuffleSchedule};
use luroth_core::{DigitStream, EventualPeriod};

fn word(max_len: usize, max_digit: u64) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(2..=max_digit, 1..=max_len)
}

fn schedule() -> impl Strategy<Value = ShuffleSchedule> {
    prop_oneof![(2u64..8).prop_map(|m| ShuffleSchedule::EveryMth { m }), Just(ShuffleSchedule::Scramble)]
}

proptest! {
    #[test]
    fn value_then_expand_is_identity(w in word(20, 50)) {
        let two = EventualPeriod::new(vec![], vec![2]).unwrap();
        let x = luroth_value(&w, Some(&two)).unwrap();
        prop_assert_eq!(luroth_digits(&x, w.len()).unwrap().into_vec(), w.clone());
        prop_assert_eq!(x, fundamental_interval(&w).unwrap().hi);
    }

    #[test]
    fn conjugacy_on_periodic_streams(pre in prop::collection::vec(2u64..30, 0..5), period in word(5, 30)) {
        let s = DigitStream::periodic(pre, period).unwrap();
        let x = stream_value(&s).unwrap();
        prop_assert_eq!(luroth_step(&x).unwrap(), stream_value(&s.shift(1)).unwrap());
        let p = detect_period(&x, DEFAULT_CYCLE_CAP).unwrap();
        prop_assert!((1..=30).all(|j| p.digit(j) == s.digit(j)));
    }

    #[test]
    fn inverse_branch_lands_in_cell(w in word(8, 12), p in 1i64..1000, q in 1i64..1000) {
        let y = rat(p.min(q), p.max(q));
        let z = inverse_branch(&w, &y).unwrap();
        let cell = fundamental_interval(&w).unwrap();
        prop_assert!(cell.contains(&z));
        prop_assert_eq!(luroth_iterate(&z, w.len()).unwrap(), y);
        prop_assert_eq!(cell.diameter(), interval_diameter(&w).unwrap());
        prop_assert_eq!(cell.diameter(), w.iter().fold(BigRational::one(), |a, &c| a * recip(c * (c - 1))));
    }

    #[test]
    fn cells_nest_and_partition(w in word(6, 9), extra in 2u64..9) {
        let parent = fundamental_interval(&w).unwrap();
        let mut child = w.clone();
        child.push(extra);
        prop_assert!(parent.contains_interval(&fundamental_interval(&child).unwrap()));
        let mut sibling = w.clone();
        sibling.push(extra + 1);
        let (a, b) = (fundamental_interval(&child).unwrap(), fundamental_interval(&sibling).unwrap());
        prop_assert!(a.lo >= b.hi || b.lo >= a.hi);
        // children of the full alphabet tile the parent: adjacent endpoints meet
        prop_assert_eq!(a.lo, b.hi);
    }

    #[test]
    fn enclosure_contains_stream_value(pre in prop::collection::vec(2u64..9, 0..4), period in word(3, 9), n in 1usize..12) {
        let s = DigitStream::periodic(pre, period).unwrap();
        let cell = luroth_enclosure(&s, n).unwrap();
        prop_assert!(cell.contains(&stream_value(&s).unwrap()));
        prop_assert_eq!((cell.lo.clone(), cell.diameter()), cylinder(s.prefix(n).as_slice()).unwrap());
    }

    #[test]
    fn unshuffle_inverts_shuffle(sched in schedule(), a in 0u64..1000, b in 0u64..1000) {
        let x = DigitStream::uniform(2, 9, a, 0).unwrap();
        let y = DigitStream::uniform(2, 9, b, 1).unwrap();
        let c = shuffle(&x, &y, sched);
        prop_assert!(unshuffle_q(&c, sched).agrees_with(&x, 200));
        prop_assert!(unshuffle_r(&c, sched).agrees_with(&y, 200));
    }

    #[test]
    fn schedule_counts_are_consistent(sched in schedule(), k in 1u64..5000) {
        prop_assert_eq!(sched.count_r(sched.r(k)), k);
        prop_assert_eq!(sched.count_q(sched.q(k)), k);
        prop_assert!(sched.contains(sched.r(k)) && !sched.contains(sched.q(k)));
    }

    #[test]
    fn scramble_count_is_monotone(n in 1u64..1_000_000) {
        let (t0, t1) = (scramble_count(n - 1), scramble_count(n));
        prop_assert!(t1 == t0 || t1 == t0 + 1);
        prop_assert_eq!(t1 - t0, u64::from(ShuffleSchedule::Scramble.contains(n)));
    }
}
