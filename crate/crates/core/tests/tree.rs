use std::collections::BTreeSet;

use batch_ist::{
    build_ideal, compute_id, depth, flatten, Bounds, Config, FloatKey, Op, OpKind, Tree,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Sequential replay over a sorted set.
fn replay(set: &mut BTreeSet<i64>, ops: &[Op<i64>]) -> Vec<bool> {
    ops.iter()
        .map(|op| match op.kind {
            OpKind::Insert => set.insert(op.key),
            OpKind::Delete => set.remove(&op.key),
            OpKind::Contains => set.contains(&op.key),
        })
        .collect()
}

fn distinct_sorted(rng: &mut StdRng, n: usize, max: i64) -> Vec<i64> {
    let mut set = BTreeSet::new();
    while set.len() < n {
        set.insert(rng.random_range(0..max));
    }
    set.into_iter().collect()
}

fn random_ops(rng: &mut StdRng, n: usize, max: i64) -> Vec<Op<i64>> {
    (0..n)
        .map(|_| {
            let key = rng.random_range(0..max);
            match rng.random_range(0..3) {
                0 => Op::insert(key),
                1 => Op::delete(key),
                _ => Op::contains(key),
            }
        })
        .collect()
}

#[test]
fn ideal_root_of_sixteen() {
    let keys: Vec<i64> = (100..116).collect();
    let tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    let root = tree.root().unwrap();
    assert_eq!(root.rep(), &[keys[3], keys[7], keys[11]]);
    let sizes: Vec<usize> = root
        .children()
        .iter()
        .map(|c| c.as_ref().map_or(0, |c| c.s_live()))
        .collect();
    assert_eq!(sizes, [3, 3, 3, 4]);
    assert_eq!(tree.validate(), Ok(()));
}

#[test]
fn dump_matches_golden() {
    let keys: Vec<i64> = (1..=40).map(|i| i * 5).collect();
    let mut tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    tree.remove(25);
    tree.remove(100);
    tree.insert(101);
    let golden = include_str!("golden/dump_40.txt");
    assert_eq!(tree.dump(), golden);
}

#[test]
fn k_bounds_and_round_trip_at_scale() {
    let mut rng = StdRng::seed_from_u64(7);
    let keys = distinct_sorted(&mut rng, 100_000, 1 << 40);
    let tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    assert_eq!(tree.to_vec(), keys);
    assert_eq!(tree.validate(), Ok(()));
    assert_eq!(tree.len(), keys.len());
}

#[test]
fn ideal_depth_bound() {
    for n in [100usize, 1_000, 10_000, 100_000, 1_000_000] {
        let keys: Vec<i64> = (0..n as i64).map(|i| i * 2 + 1).collect();
        let root = build_ideal(&keys, Bounds::spanning(&keys).unwrap(), &Config::default());
        let bound = (n as f64).log2().log2().ceil() as usize + 2;
        let d = depth(root.as_deref());
        assert!(d <= bound, "n={n}: depth {d} > {bound}");
    }
}

#[test]
fn depth_under_sorted_insertions() {
    let n = 20_000i64;
    let mut tree = Tree::new();
    // Pin the root bounds first so later inserts do not force root rebuilds.
    tree.insert(0);
    tree.insert(n + 1);
    for k in 1..=n {
        assert!(tree.insert(k));
    }
    let bound = 2.0 * (tree.len() as f64).log2() + 2.0;
    assert!(
        (tree.depth() as f64) <= bound,
        "depth {} > {bound}",
        tree.depth()
    );
    assert_eq!(tree.to_vec(), (0..=n + 1).collect::<Vec<_>>());
    assert_eq!(tree.validate(), Ok(()));
}

#[test]
fn single_op_examples() {
    let mut tree = Tree::<i64>::new();
    assert!(!tree.contains(3));
    assert!(tree.insert(3));
    assert_eq!(tree.len(), 1);
    assert!(!tree.insert(3));
    assert_eq!(tree.len(), 1);
    assert!(tree.contains(3));
    assert!(!tree.remove(4));
    assert!(tree.remove(3));
    assert!(!tree.contains(3));
    assert!(tree.root().is_none());
    assert!(tree.is_empty());
}

#[test]
fn tombstones_resurrect() {
    let keys: Vec<i64> = (0..1000).collect();
    let mut tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    let rep0 = tree.root().unwrap().rep()[0];
    assert!(tree.remove(rep0));
    assert_eq!(tree.root().unwrap().marked_count(), 1);
    assert!(!tree.contains(rep0));
    assert!(tree.insert(rep0));
    assert_eq!(tree.root().unwrap().marked_count(), 0);
    assert_eq!(tree.to_vec(), keys);
}

#[test]
fn single_ops_match_sorted_set() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut tree = Tree::new();
    let mut set = BTreeSet::new();
    for i in 0..100_000 {
        let key = rng.random_range(0..20_000i64);
        match rng.random_range(0..3) {
            0 => assert_eq!(tree.insert(key), set.insert(key)),
            1 => assert_eq!(tree.remove(key), set.remove(&key)),
            _ => assert_eq!(tree.contains(key), set.contains(&key)),
        }
        if i % 20_000 == 0 {
            assert_eq!(tree.validate(), Ok(()));
        }
    }
    assert_eq!(tree.to_vec(), set.iter().copied().collect::<Vec<_>>());
    assert_eq!(tree.validate(), Ok(()));
}

#[test]
fn search_matches_sorted_set() {
    let mut rng = StdRng::seed_from_u64(3);
    let keys = distinct_sorted(&mut rng, 50_000, 1_000_000);
    let tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    let set: BTreeSet<i64> = keys.iter().copied().collect();
    for _ in 0..100_000 {
        let k = rng.random_range(-10..1_000_010);
        assert_eq!(tree.contains(k), set.contains(&k));
    }
}

#[test]
fn locate_matches_binary_search() {
    let mut rng = StdRng::seed_from_u64(5);
    let keys = distinct_sorted(&mut rng, 200_000, 1 << 30);
    let tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    let root = tree.root().unwrap();
    for _ in 0..10_000 {
        let k = rng.random_range(-5..(1 << 30) + 5);
        let loc = root.locate_child(k);
        let want = root.rep().partition_point(|r| *r < k);
        assert_eq!(loc.slot, want);
        assert_eq!(
            loc.found_at_rep.is_some(),
            want < root.rep().len() && root.rep()[want] == k
        );
    }
}

#[test]
fn compute_id_random_matches_predicate() {
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.random_range(1..400);
        let rep = distinct_sorted(&mut rng, n, 10_000);
        let lo = rng.random_range(-100..=rep[0]) as f64;
        let hi = rng.random_range(*rep.last().unwrap()..10_100) as f64;
        let m = ((n as f64).sqrt() as usize).max(1);
        let id = compute_id(&rep, Bounds::new(lo, hi), m);
        for i in 1..=m {
            let t = lo + i as f64 * (hi - lo) / m as f64;
            let brute = (0..=rep.len())
                .find(|&j| {
                    let below = j == 0 || (rep[j - 1] as f64) < t;
                    let above = j == rep.len() || t <= rep[j] as f64;
                    below && above
                })
                .unwrap();
            assert_eq!(id[i - 1] as usize, brute);
        }
    }
}

#[test]
fn batch_examples() {
    let mut tree = Tree::<i64>::new();
    assert!(tree.apply(&[]).is_empty());
    assert!(tree.root().is_none());

    let keys: Vec<i64> = (0..500).map(|i| i * 7).collect();
    let ops: Vec<Op<i64>> = keys.iter().rev().map(|&k| Op::insert(k)).collect();
    let out = tree.apply(&ops);
    assert!(out.outcomes.iter().all(|&b| b));
    let ideal = Tree::from_sorted(&keys, Config::default()).unwrap();
    assert_eq!(tree.dump(), ideal.dump());
}

#[test]
fn large_batch_matches_replay() {
    let mut rng = StdRng::seed_from_u64(21);
    let keys = distinct_sorted(&mut rng, 1_000_000, 4_000_000);
    let mut tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    let mut set: BTreeSet<i64> = keys.into_iter().collect();
    let ops = random_ops(&mut rng, 100_000, 4_000_000);
    let want = replay(&mut set, &ops);
    assert_eq!(tree.apply(&ops).outcomes, want);
    assert_eq!(tree.to_vec(), set.iter().copied().collect::<Vec<_>>());
    assert_eq!(tree.validate(), Ok(()));
}

#[test]
fn float_keys() {
    let mut tree = Tree::new();
    let xs = [0.5, -3.25, 1e300, -0.0, 7.0];
    for x in xs {
        tree.insert(FloatKey::new(x).unwrap());
    }
    assert!(tree.contains(FloatKey::new(0.0).unwrap()));
    let got: Vec<f64> = tree.to_vec().into_iter().map(FloatKey::get).collect();
    assert_eq!(got, vec![-3.25, 0.0, 0.5, 7.0, 1e300]);
}

#[test]
fn extreme_integer_keys() {
    let mut tree = Tree::new();
    let ops: Vec<Op<i64>> = [i64::MIN, i64::MAX, 0, i64::MIN + 1, i64::MAX - 1]
        .into_iter()
        .map(Op::insert)
        .collect();
    tree.apply(&ops);
    for k in [i64::MIN, i64::MAX - 1, 0] {
        assert!(tree.contains(k));
    }
    assert!(!tree.contains(1));
    assert_eq!(tree.validate(), Ok(()));
}

#[test]
fn corruption_is_detected() {
    let keys: Vec<i64> = (0..100).collect();
    let mut tree = Tree::from_sorted(&keys, Config::default()).unwrap();
    tree.debug_corrupt();
    assert!(tree.validate().is_err());
}

#[test]
fn invalid_config_rejected() {
    assert!(Tree::<i64>::with_config(Config::default().with_alpha(0.3)).is_err());
}

#[derive(Debug, Clone)]
enum Step {
    Single(Op<i64>),
    Batch(Vec<Op<i64>>),
}

fn op_strategy(max: i64) -> impl Strategy<Value = Op<i64>> {
    (0..max, 0u8..3).prop_map(|(key, k)| match k {
        0 => Op::insert(key),
        1 => Op::delete(key),
        _ => Op::contains(key),
    })
}

fn step_strategy() -> impl Strategy<Value = Step> {
    prop_oneof![
        op_strategy(300).prop_map(Step::Single),
        prop::collection::vec(op_strategy(300), 0..200).prop_map(Step::Batch),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip(keys in prop::collection::btree_set(any::<i64>(), 0..3000), alpha in 0.5f64..0.95) {
        let keys: Vec<i64> = keys.into_iter().collect();
        let cfg = Config::default().with_alpha(alpha).with_grain(64);
        let tree = Tree::from_sorted(&keys, cfg).unwrap();
        prop_assert_eq!(flatten(tree.root(), 16), keys.clone());
        prop_assert_eq!(tree.validate(), Ok(()));
    }

    #[test]
    fn scripts_match_replay(steps in prop::collection::vec(step_strategy(), 1..40), grain in 1usize..64) {
        let mut tree = Tree::with_config(Config::default().with_grain(grain)).unwrap();
        let mut set = BTreeSet::new();
        for step in &steps {
            match step {
                Step::Single(op) => {
                    let got = match op.kind {
                        OpKind::Insert => tree.insert(op.key),
                        OpKind::Delete => tree.remove(op.key),
                        OpKind::Contains => tree.contains(op.key),
                    };
                    prop_assert_eq!(vec![got], replay(&mut set, std::slice::from_ref(op)));
                }
                Step::Batch(ops) => {
                    prop_assert_eq!(tree.apply(ops).outcomes, replay(&mut set, ops));
                }
            }
            prop_assert_eq!(tree.validate(), Ok(()));
        }
        prop_assert_eq!(tree.to_vec(), set.iter().copied().collect::<Vec<_>>());
        prop_assert_eq!(tree.len(), set.len());
    }
}
