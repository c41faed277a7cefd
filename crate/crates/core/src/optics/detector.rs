use rand::Rng;
use rand_distr::StandardNormal;

use super::{DetectorModel, TimeTag};
use crate::rng::SimRng;

/// Applies efficiency, Gaussian jitter (rounded to whole ps) and dead time.
///
/// The output is sorted by time; a tag arriving less than `dead_time` after
/// the previous surviving tag of its channel is dropped.
pub fn apply_detector(tags: &[TimeTag], model: &DetectorModel, rng: &mut SimRng) -> Vec<TimeTag> {
    let mut out: Vec<TimeTag> = Vec::with_capacity((tags.len() as f64 * model.efficiency * 1.01) as usize + 8);
    for tag in tags {
        if model.efficiency < 1.0 && rng.random::<f64>() >= model.efficiency {
            continue;
        }
        let time = if model.jitter_sigma > 0.0 {
            let shift = (rng.sample::<f64, _>(StandardNormal) * model.jitter_sigma).round();
            (tag.time as f64 + shift).max(0.0) as u64
        } else {
            tag.time
        };
        out.push(TimeTag { channel: tag.channel, time });
    }
    out.sort_unstable_by_key(|t| (t.time, t.channel));
    if model.dead_time > 0.0 {
        let mut last: [Option<u64>; 256] = [None; 256];
        out.retain(|t| {
            let slot = &mut last[t.channel as usize];
            let keep = slot.is_none_or(|prev| (t.time - prev) as f64 >= model.dead_time);
            if keep {
                *slot = Some(t.time);
            }
            keep
        });
    }
    out
}
