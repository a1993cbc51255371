//! Bottom-up merge sort. Stable, `n·ceil(log2 n)` comparisons at most, no
//! input-dependent fast or slow paths.

use std::cmp::Ordering;

use super::StepCounter;

pub fn stable_sort<T: Clone, F>(items: &[T], compare: F) -> Vec<T>
where
    F: FnMut(&T, &T) -> Ordering,
{
    stable_sort_counted(items, compare, &mut StepCounter::default())
}

pub fn stable_sort_counted<T: Clone, F>(items: &[T], mut compare: F, steps: &mut StepCounter) -> Vec<T>
where
    F: FnMut(&T, &T) -> Ordering,
{
    let n = items.len();
    let mut src: Vec<usize> = (0..n).collect();
    let mut dst = vec![0usize; n];
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                steps.comparisons += 1;
                // Ties take from the left run.
                if compare(&items[src[j]], &items[src[i]]) == Ordering::Less {
                    dst[k] = src[j];
                    j += 1;
                } else {
                    dst[k] = src[i];
                    i += 1;
                }
                k += 1;
            }
            dst[k..k + (mid - i)].copy_from_slice(&src[i..mid]);
            k += mid - i;
            dst[k..k + (hi - j)].copy_from_slice(&src[j..hi]);
            lo = hi;
        }
        std::mem::swap(&mut src, &mut dst);
        width *= 2;
    }
    src.into_iter().map(|i| items[i].clone()).collect()
}

/// `n·ceil(log2 n) + n`.
pub fn comparison_bound(n: usize) -> u64 {
    let n = n as u64;
    let log = if n <= 1 { 0 } else { 64 - (n - 1).leading_zeros() as u64 };
    n * log + n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_on_equal_keys() {
        let v = [(2, 'a'), (1, 'b'), (2, 'c')];
        let s = stable_sort(&v, |x, y| x.0.cmp(&y.0));
        assert_eq!(s, vec![(1, 'b'), (2, 'a'), (2, 'c')]);
    }

    #[test]
    fn empty_and_single() {
        assert!(stable_sort::<u8, _>(&[], |a, b| a.cmp(b)).is_empty());
        assert_eq!(stable_sort(&[9], |a: &i32, b| a.cmp(b)), vec![9]);
    }

    #[test]
    fn bound_values() {
        assert_eq!(comparison_bound(0), 0);
        assert_eq!(comparison_bound(1), 1);
        assert_eq!(comparison_bound(2), 4);
        assert_eq!(comparison_bound(5), 20);
    }

    #[test]
    fn inconsistent_comparator_terminates() {
        let v: Vec<u32> = (0..1000).collect();
        let mut flip = false;
        let s = stable_sort(&v, |_, _| {
            flip = !flip;
            if flip {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        });
        assert_eq!(s.len(), 1000);
    }
}
