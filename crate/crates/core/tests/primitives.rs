use batch_ist::prim::{self, filter_with, merge_by, parallel_for, rank_by, scan_exclusive_with};
use proptest::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

fn sorted_vec(max_len: usize) -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(-500i32..500, 0..max_len).prop_map(|mut v| {
        v.sort();
        v
    })
}

fn rank_oracle(a: &[i32], b: &[i32]) -> Vec<usize> {
    a.iter()
        .map(|x| (0..=b.len()).find(|&k| k == b.len() || *x <= b[k]).unwrap())
        .collect()
}

fn two_pointer(a: &[(i32, u8)], b: &[(i32, u8)]) -> Vec<(i32, u8)> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 <= b[j].0) {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scan_matches_left_fold(xs in prop::collection::vec(0u64..1_000_000, 0..10_000), grain in 1usize..300) {
        let (out, total) = scan_exclusive_with(&xs, grain);
        let mut acc = 0;
        prop_assert_eq!(out.len(), xs.len());
        for (o, x) in out.iter().zip(&xs) {
            prop_assert_eq!(*o, acc);
            acc += x;
        }
        prop_assert_eq!(total, acc);
    }

    #[test]
    fn filter_matches_sequential(xs in prop::collection::vec(any::<u16>(), 0..10_000), modulus in 1u16..9, grain in 1usize..300) {
        let got = filter_with(&xs, |x| x % modulus == 0, grain);
        let want: Vec<u16> = xs.iter().copied().filter(|x| x % modulus == 0).collect();
        prop_assert!(got.len() <= xs.len());
        prop_assert_eq!(got, want);
    }

    #[test]
    fn rank_matches_linear_scan(a in sorted_vec(2000), b in sorted_vec(2000), grain in 1usize..200) {
        let got = rank_by(&a, &b, |y, x| y < x, grain);
        prop_assert!(got.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(got, rank_oracle(&a, &b));
    }

    #[test]
    fn merge_matches_two_pointer(a in sorted_vec(5000), b in sorted_vec(5000), grain in 1usize..400) {
        let ta: Vec<(i32, u8)> = a.iter().map(|&x| (x, 0)).collect();
        let tb: Vec<(i32, u8)> = b.iter().map(|&x| (x, 1)).collect();
        let got = merge_by(&ta, &tb, |p, q| p.0 < q.0, grain);
        prop_assert_eq!(got.len(), a.len() + b.len());
        prop_assert_eq!(got, two_pointer(&ta, &tb));
    }
}

#[test]
fn scan_random_ten_thousand() {
    let xs: Vec<u64> = (0..10_000u64)
        .map(|i| i.wrapping_mul(2654435761) % 1000)
        .collect();
    let (out, total) = prim::scan_exclusive(&xs);
    let want: Vec<u64> = xs
        .iter()
        .scan(0, |acc, x| {
            let v = *acc;
            *acc += x;
            Some(v)
        })
        .collect();
    assert_eq!(out, want);
    assert_eq!(total, xs.iter().sum::<u64>());
}

#[test]
fn merge_ten_thousand_each() {
    let a: Vec<i64> = (0..10_000).map(|i| i * 3).collect();
    let b: Vec<i64> = (0..10_000).map(|i| i * 5 + 1).collect();
    let mut want = [a.clone(), b.clone()].concat();
    want.sort();
    assert_eq!(prim::merge(&a, &b), want);
}

#[test]
fn parallel_for_grain_does_not_change_result() {
    let n = 10_000;
    let run = |grain| {
        let out: Vec<AtomicU64> = (0..n).map(|_| AtomicU64::new(u64::MAX)).collect();
        parallel_for(0..n, grain, &|i| out[i].store(i as u64, Ordering::Relaxed));
        out.into_iter().map(|x| x.into_inner()).collect::<Vec<_>>()
    };
    let seq = run(n);
    assert_eq!(seq, (0..n as u64).collect::<Vec<_>>());
    assert_eq!(run(1), seq);
    assert_eq!(run(17), seq);
}
