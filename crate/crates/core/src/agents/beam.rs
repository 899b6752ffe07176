//! Beam search over additive per-dimension scores.

use crate::error::{Error, Result};

/// Live prefixes with their accumulated scores, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub prefixes: Vec<Vec<usize>>,
    pub scores: Vec<f64>,
}

/// Keeps the `width` best partial sequences at each of `n` steps.
///
/// `score_fn` receives every live prefix (all of the same length) and returns
/// one vector of `b` incremental scores per prefix. The total score of a
/// sequence is the sum of its increments. Ties keep the earlier prefix and
/// the lower bin.
pub fn beam_search<F>(
    n: usize,
    b: usize,
    width: usize,
    mut score_fn: F,
) -> Result<(Vec<usize>, f64)>
where
    F: FnMut(&[Vec<usize>]) -> Result<Vec<Vec<f64>>>,
{
    if width == 0 {
        return Err(Error::InvalidArgument(
            "beam width must be at least 1".into(),
        ));
    }
    if n == 0 || b == 0 {
        return Err(Error::InvalidArgument(
            "beam search needs at least one dimension and one bin".into(),
        ));
    }
    let mut beam = BeamState {
        prefixes: vec![Vec::new()],
        scores: vec![0.0],
    };
    for _ in 0..n {
        let increments = score_fn(&beam.prefixes)?;
        if increments.len() != beam.prefixes.len() || increments.iter().any(|v| v.len() != b) {
            return Err(crate::error::dim_err(
                "beam scores",
                format!("{} rows of {b}", beam.prefixes.len()),
                format!("{} rows", increments.len()),
            ));
        }
        let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(beam.prefixes.len() * b);
        for (p, inc) in increments.iter().enumerate() {
            for (k, &s) in inc.iter().enumerate() {
                let total = beam.scores[p] + s;
                if total.is_nan() {
                    return Err(Error::NonFinite("beam score".into()));
                }
                candidates.push((total, p, k));
            }
        }
        // Stable sort keeps (prefix, bin) order among equal scores.
        candidates.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("scores are not NaN"));
        candidates.truncate(width);
        beam = BeamState {
            prefixes: candidates
                .iter()
                .map(|&(_, p, k)| {
                    let mut seq = beam.prefixes[p].clone();
                    seq.push(k);
                    seq
                })
                .collect(),
            scores: candidates.iter().map(|c| c.0).collect(),
        };
    }
    Ok((beam.prefixes.swap_remove(0), beam.scores[0]))
}

/// Best sequence by enumerating all `b^n` of them; ties go to the
/// lexicographically smallest.
pub fn exhaustive_argmax(
    n: usize,
    b: usize,
    mut score: impl FnMut(&[usize]) -> f64,
) -> (Vec<usize>, f64) {
    let mut seq = vec![0; n];
    let mut best = (seq.clone(), f64::NEG_INFINITY);
    loop {
        let v = score(&seq);
        if v > best.1 {
            best = (seq.clone(), v);
        }
        let mut d = n;
        loop {
            if d == 0 {
                return best;
            }
            d -= 1;
            seq[d] += 1;
            if seq[d] < b {
                break;
            }
            seq[d] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_scores(prefixes: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
        Ok(prefixes
            .iter()
            .map(|p| match p.as_slice() {
                [] => vec![0.0, 1.0],
                [0] => vec![5.0, 0.0],
                [1] => vec![0.0, 2.0],
                _ => unreachable!(),
            })
            .collect())
    }

    #[test]
    fn width_changes_answer() {
        assert_eq!(
            beam_search(2, 2, 1, table_scores).unwrap(),
            (vec![1, 1], 3.0)
        );
        assert_eq!(
            beam_search(2, 2, 2, table_scores).unwrap(),
            (vec![0, 0], 5.0)
        );
    }

    #[test]
    fn single_dimension_is_argmax() {
        for w in 1..4 {
            let (seq, s) =
                beam_search(1, 4, w, |p| Ok(vec![vec![0.5, 2.0, 2.0, -1.0]; p.len()])).unwrap();
            assert_eq!((seq, s), (vec![1], 2.0));
        }
    }

    #[test]
    fn rejects_zero_width() {
        assert!(beam_search(2, 2, 0, table_scores).is_err());
    }

    #[test]
    fn exhaustive_enumerates() {
        let (seq, v) = exhaustive_argmax(3, 3, |s| {
            -((s[0] as f64 - 2.0).powi(2) + s[1] as f64 + (s[2] as f64 - 1.0).abs())
        });
        assert_eq!(seq, vec![2, 0, 1]);
        assert_eq!(v, 0.0);
    }
}
