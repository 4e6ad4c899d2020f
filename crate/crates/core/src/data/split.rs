use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Assigns whole groups to splits.
///
/// Returns the split index for each entry of `groups`, in order. Split sizes
/// follow `ratios` with largest-remainder rounding, so every group lands in
/// exactly one split.
pub fn make_split_indices(groups: &[u64], ratios: &[f64], seed: u64) -> Result<Vec<usize>> {
    if ratios.is_empty() || ratios.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Config("split ratios must be non-negative".into()));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must sum to 1, got {total}")));
    }
    if groups.len() < ratios.len() {
        return Err(Error::Config(format!(
            "{} groups cannot fill {} splits",
            groups.len(),
            ratios.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = groups.iter().find(|g| !seen.insert(**g)) {
        return Err(Error::Config(format!("group id {dup} listed twice")));
    }

    let n = groups.len();
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    // Largest remainder first, ties to the lower split index.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &s in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[s] += 1;
        left -= 1;
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, "data.group_split", 0));
    let mut assignment = vec![0; n];
    let mut cursor = 0;
    for (split, &c) in counts.iter().enumerate() {
        for &g in &perm[cursor..cursor + c] {
            assignment[g] = split;
        }
        cursor += c;
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_groups_half_quarter_quarter() {
        let groups: Vec<u64> = (0..10).collect();
        let a = make_split_indices(&groups, &[0.5, 0.25, 0.25], 1).unwrap();
        let counts: Vec<usize> = (0..3).map(|s| a.iter().filter(|&&x| x == s).count()).collect();
        assert_eq!(counts[0], 5);
        assert!(matches!((counts[1], counts[2]), (2, 3) | (3, 2)));
    }

    #[test]
    fn deterministic_given_seed() {
        let groups: Vec<u64> = (100..140).collect();
        let r = [0.6, 0.2, 0.2];
        assert_eq!(make_split_indices(&groups, &r, 5).unwrap(), make_split_indices(&groups, &r, 5).unwrap());
    }

    #[test]
    fn too_few_groups() {
        assert!(make_split_indices(&[7], &[0.5, 0.25, 0.25], 0).is_err());
    }

    #[test]
    fn ratios_must_sum_to_one() {
        assert!(make_split_indices(&[1, 2, 3], &[0.5, 0.2, 0.2], 0).is_err());
    }
}
