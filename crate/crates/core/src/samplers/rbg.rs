use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SamplerConfig, Termination};
use crate::bubbles::{make_bubble, BubbleCover, SafeBubble};
use crate::distance_field::{DistanceOracle, Workspace};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::spatial::BubbleGrid;

/// Move from the nearest bubble's center toward `y_rand`, stopping on its
/// perimeter.
pub fn steer(y_rand: &Point, near: &SafeBubble) -> Point {
    let dir = *y_rand - near.center;
    let n = dir.norm();
    near.center + dir * (near.radius / n)
}

/// Rapidly exploring bubble graph grown from `y_seed`.
///
/// Each iteration rejection-samples a point outside every bubble (from the
/// workspace inflated by `cfg.inflation` per side), steers it onto the
/// perimeter of the bubble with the nearest boundary and keeps the new bubble
/// if it clears `r_min`. Rejected draws and undersized bubbles both count as
/// failures; `max_rejections` consecutive failures end the run with
/// `saturated` set.
pub fn rbg(
    oracle: &DistanceOracle,
    workspace: &Workspace,
    y_seed: &Point,
    cfg: &SamplerConfig,
    term: Termination,
) -> Result<BubbleCover> {
    cfg.validate()?;
    let dim = workspace.dim();
    y_seed.check_dim(dim)?;
    let seed = make_bubble(oracle, y_seed, cfg.eps, cfg.r_min)?
        .ok_or_else(|| Error::SeedNotFree(format!("{y_seed:?}")))?;

    let max_bubbles = cfg.max_bubbles_for(dim);
    let max_failures = cfg.max_rejections_for(dim);
    let max_iterations = cfg.max_iterations();
    let support = workspace.inflated(cfg.inflation);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut cover = BubbleCover::new(dim);
    let mut index = BubbleGrid::new(&support, 32);
    cover.push(seed, 0);
    cover.seed_index = Some(0);
    index.insert(0, &seed);

    let mut failures = 0usize;
    let mut iteration = 0usize;
    'outer: while !term.reached(&cover, max_bubbles) && iteration < max_iterations {
        let y_rand = loop {
            let y = support.sample_uniform(&mut rng);
            if !index.candidates(&y).any(|i| cover.bubbles[i].distance_to(&y) <= 0.0) {
                break y;
            }
            failures += 1;
            if failures >= max_failures {
                cover.saturated = true;
                break 'outer;
            }
        };
        iteration += 1;
        let near = cover
            .bubbles
            .iter()
            .min_by(|a, b| a.distance_to(&y_rand).total_cmp(&b.distance_to(&y_rand)))
            .expect("cover holds the seed bubble");
        let y_new = steer(&y_rand, near);
        match make_bubble(oracle, &y_new, cfg.eps, cfg.r_min)? {
            Some(b) => {
                index.insert(cover.len(), &b);
                cover.push(b, iteration);
                failures = 0;
            }
            None => {
                failures += 1;
                if failures >= max_failures {
                    cover.saturated = true;
                    break;
                }
            }
        }
    }
    Ok(cover)
}
