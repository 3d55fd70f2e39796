use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::OptimError;

/// Random disjoint split of `0..n` into `(train, validation)` index sets,
/// both sorted. The validation set has `round(fraction·n)` members, kept
/// within `1..n` so neither side is empty.
pub fn split_validation(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), OptimError> {
    if n < 2 {
        return Err(OptimError::TooFewTiles(n));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(OptimError::InvalidConfig(alloc::format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let count = (num_traits::Float::round(fraction * n as f64) as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut val = order[..count].to_vec();
    let mut train = order[count..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eighty_twenty() {
        let (t, v) = split_validation(100, 0.2, 7).unwrap();
        assert_eq!((t.len(), v.len()), (80, 20));
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_validation(100, 0.2, 7).unwrap(), (t, v));
        assert_ne!(
            split_validation(100, 0.2, 8).unwrap().1,
            split_validation(100, 0.2, 7).unwrap().1
        );
    }

    #[test]
    fn smallest_and_invalid() {
        let (t, v) = split_validation(2, 0.5, 0).unwrap();
        assert_eq!((t.len(), v.len()), (1, 1));
        assert_eq!(split_validation(1, 0.5, 0), Err(OptimError::TooFewTiles(1)));
        assert!(split_validation(10, 0.0, 0).is_err());
        assert!(split_validation(10, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn disjoint_and_exhaustive(n in 2usize..400, fraction in 0.01f64..0.99, seed in any::<u64>()) {
            let (t, v) = split_validation(n, fraction, seed).unwrap();
            prop_assert!(!t.is_empty() && !v.is_empty());
            prop_assert_eq!(t.len() + v.len(), n);
            let mut seen = alloc::vec![false; n];
            for &i in t.iter().chain(&v) {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
    }
}
