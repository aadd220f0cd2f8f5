//! Symbolic merging of (approximately) sorted lists and insertion sort.
//!
//! The merge procedures follow a fixed pop/push order so that their output on
//! unsorted inputs is reproducible, not only on sorted ones.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeMode {
    /// Repeatedly merge the last two lists.
    Incremental,
    /// Rounds of merging the two front lists and appending the result.
    #[default]
    Hierarchical,
}

/// Two-pointer merge; on ties the element of `a` goes first.
pub fn merge_two_sorted_lists(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while out.len() < a.len() + b.len() {
        if i == a.len() {
            out.push(b[j]);
            j += 1;
        } else if j == b.len() || a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out
}

/// Merges all lists; an empty family yields an empty list.
pub fn merge_many(lists: Vec<Vec<f64>>, mode: MergeMode) -> Vec<f64> {
    match mode {
        MergeMode::Incremental => {
            let mut lists = lists;
            for _ in 0..lists.len().saturating_sub(1) {
                let first = lists.pop().expect("at least two lists");
                let second = lists.pop().expect("at least two lists");
                lists.push(merge_two_sorted_lists(&first, &second));
            }
            lists.pop().unwrap_or_default()
        }
        MergeMode::Hierarchical => {
            let mut lists: VecDeque<Vec<f64>> = lists.into();
            while lists.len() > 1 {
                for _ in 0..lists.len() / 2 {
                    let first = lists.pop_front().expect("at least two lists");
                    let second = lists.pop_front().expect("at least two lists");
                    lists.push_back(merge_two_sorted_lists(&first, &second));
                }
            }
            lists.pop_front().unwrap_or_default()
        }
    }
}

/// Classic insertion sort by adjacent swaps.
pub fn insertion_sort(z: &[f64]) -> Vec<f64> {
    insertion_sort_with(z, |_| {})
}

/// Insertion sort that reports the list after every swap.
pub fn insertion_sort_with(z: &[f64], mut on_swap: impl FnMut(&[f64])) -> Vec<f64> {
    let mut z = z.to_vec();
    for i in 1..z.len() {
        for j in (1..=i).rev() {
            if z[j] >= z[j - 1] {
                break;
            }
            z.swap(j, j - 1);
            on_swap(&z);
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_list_examples() {
        assert_eq!(merge_two_sorted_lists(&[1.0, 3.0, 5.0], &[2.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(merge_two_sorted_lists(&[2.0, 1.0], &[3.0]), vec![2.0, 1.0, 3.0]);
        assert_eq!(merge_two_sorted_lists(&[], &[7.0]), vec![7.0]);
        assert_eq!(merge_two_sorted_lists(&[7.0], &[]), vec![7.0]);
    }

    #[test]
    fn many_examples() {
        for mode in [MergeMode::Incremental, MergeMode::Hierarchical] {
            assert_eq!(merge_many(vec![vec![3.0, 4.0]], mode), vec![3.0, 4.0]);
            assert!(merge_many(vec![], mode).is_empty());
            let lists = vec![vec![0.5, 0.9], vec![0.1], vec![0.2, 0.3, 0.95], vec![0.0, 1.0]];
            assert_eq!(merge_many(lists, mode), vec![0.0, 0.1, 0.2, 0.3, 0.5, 0.9, 0.95, 1.0]);
        }
    }

    #[test]
    fn modes_differ_on_unsorted_input() {
        let lists = vec![vec![0.9, 0.4], vec![0.4, 0.9], vec![0.7]];
        assert_eq!(merge_many(lists.clone(), MergeMode::Incremental), vec![0.4, 0.7, 0.9, 0.9, 0.4]);
        assert_eq!(merge_many(lists, MergeMode::Hierarchical), vec![0.4, 0.7, 0.9, 0.4, 0.9]);
    }

    #[test]
    fn insertion_sort_examples() {
        assert!(insertion_sort(&[]).is_empty());
        assert_eq!(insertion_sort(&[3.0, 1.0, 2.0]), vec![1.0, 2.0, 3.0]);
        let mut swaps = 0;
        insertion_sort_with(&[3.0, 2.0, 1.0], |_| swaps += 1);
        assert_eq!(swaps, 3);
    }
}
