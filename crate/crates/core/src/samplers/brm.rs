use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SamplerConfig;
use crate::bubbles::{make_bubble, BubbleCover};
use crate::distance_field::{DistanceOracle, Workspace};
use crate::error::Result;

/// Bubble roadmap: `n_sample` uniform centers, kept when the bubble clears
/// `r_min`. Bubble `k` records the 1-based index of the sample it came from.
pub fn brm(oracle: &DistanceOracle, workspace: &Workspace, cfg: &SamplerConfig) -> Result<BubbleCover> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cover = BubbleCover::new(workspace.dim());
    for i in 1..=cfg.n_sample {
        let y = workspace.sample_uniform(&mut rng);
        if let Some(b) = make_bubble(oracle, &y, cfg.eps, cfg.r_min)? {
            cover.push(b, i);
        }
    }
    Ok(cover)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance_field::{AnalyticScene, Primitive};
    use crate::point::Point;

    fn ws() -> Workspace {
        Workspace::new(Point::xy(0.0, 0.0), Point::xy(4.0, 4.0)).unwrap()
    }

    #[test]
    fn empty_scene_keeps_every_sample() {
        let oracle = DistanceOracle::analytic(AnalyticScene::new(ws(), vec![]).unwrap());
        let cfg = SamplerConfig { n_sample: 10, ..Default::default() };
        let cover = brm(&oracle, &ws(), &cfg).unwrap();
        assert_eq!(cover.len(), 10);
        assert_eq!(oracle.counts().total, 10);
        assert_eq!(cover.added_at, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn blocked_workspace_gives_empty_cover() {
        let block = Primitive::aabb(Point::xy(-1.0, -1.0), Point::xy(5.0, 5.0));
        let oracle = DistanceOracle::analytic(AnalyticScene::new(ws(), vec![block]).unwrap());
        let cfg = SamplerConfig { n_sample: 50, ..Default::default() };
        assert!(brm(&oracle, &ws(), &cfg).unwrap().is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let s = Primitive::sphere(Point::xy(2.0, 2.0), 1.0);
        let oracle = DistanceOracle::analytic(AnalyticScene::new(ws(), vec![s]).unwrap());
        let cfg = SamplerConfig { n_sample: 200, seed: 42, ..Default::default() };
        let a = brm(&oracle, &ws(), &cfg).unwrap();
        let b = brm(&oracle, &ws(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = brm(&oracle, &ws(), &SamplerConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }
}
