use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::Polygon;

use super::LossConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pred: Polygon,
    pub gt: Polygon,
    pub iou: f64,
}

/// Seeded uniform subset of the pairs whose IoU exceeds
/// `candidate_min_iou`, at most `candidate_count` of them. Returned indices
/// are ascending.
pub fn sample_candidates(pairs: &[Candidate], config: &LossConfig, seed: u64) -> Vec<usize> {
    let eligible: Vec<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iou > config.candidate_min_iou)
        .map(|(i, _)| i)
        .collect();
    if eligible.len() <= config.candidate_count {
        return eligible;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, eligible.len(), config.candidate_count)
        .into_iter()
        .map(|k| eligible[k])
        .collect();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn pairs(ious: &[f64]) -> Vec<Candidate> {
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        ious.iter()
            .map(|&iou| Candidate { pred: p.clone(), gt: p.clone(), iou })
            .collect()
    }

    #[test]
    fn small_eligible_set_returned_whole() {
        let c = LossConfig::default();
        let got = sample_candidates(&pairs(&[0.9; 10]), &c, 3);
        assert_eq!(got, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn threshold_is_strict() {
        let c = LossConfig::default();
        assert!(sample_candidates(&pairs(&[0.4; 20]), &c, 0).is_empty());
        assert!(sample_candidates(&pairs(&[0.5; 20]), &c, 0).is_empty());
        assert!(sample_candidates(&[], &c, 0).is_empty());
    }

    #[test]
    fn seeded_and_bounded() {
        let c = LossConfig::default();
        let ps = pairs(&(0..1000).map(|i| if i % 3 == 0 { 0.2 } else { 0.8 }).collect::<Vec<_>>());
        let a = sample_candidates(&ps, &c, 42);
        let b = sample_candidates(&ps, &c, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 256);
        assert!(a.iter().all(|&i| ps[i].iou > c.candidate_min_iou));
        assert_ne!(a, sample_candidates(&ps, &c, 43));
    }
}
