use crate::model::{Interval, Session, Tick, TrackId};

/// Reorders tracks around the instant `t` and returns the promoted tracks.
///
/// A track is relevant when its displayed intervals overlap the open window
/// `(t - eps, t + eps)`. The new order is:
/// 1. relevant tracks that were promoted last time, in their prior order;
/// 2. newly relevant tracks, by decreasing overlap with the window;
/// 3. tracks promoted last time that are no longer relevant;
/// 4. everything else, in prior order.
///
/// When nothing is relevant the order and the remembered promotions are left
/// alone.
pub fn smart_order(session: &mut Session, t: Tick, eps: i64) -> Vec<TrackId> {
    let eps = eps.max(1);
    let window = Interval::new(t.0 - eps + 1, t.0 + eps).expect("eps >= 1 gives a nonempty window");
    let overlap: Vec<i64> = session
        .tracks()
        .iter()
        .map(|tr| tr.interval_set().overlap_with(&window))
        .collect();
    if overlap.iter().all(|&o| o == 0) {
        return session.promoted.clone();
    }

    let was_promoted = |i: usize| session.promoted.contains(session.tracks()[i].id());
    let n = overlap.len();
    let mut fresh: Vec<usize> = (0..n)
        .filter(|&i| overlap[i] > 0 && !was_promoted(i))
        .collect();
    fresh.sort_by_key(|&i| std::cmp::Reverse(overlap[i]));

    let mut order: Vec<usize> = (0..n)
        .filter(|&i| overlap[i] > 0 && was_promoted(i))
        .collect();
    order.extend(fresh);
    order.extend((0..n).filter(|&i| overlap[i] == 0 && was_promoted(i)));
    order.extend((0..n).filter(|&i| overlap[i] == 0 && !was_promoted(i)));

    let relevant = order.iter().filter(|&&i| overlap[i] > 0).count();
    session.reorder(&order);
    session.promoted = session.tracks()[..relevant]
        .iter()
        .map(|tr| tr.id().clone())
        .collect();
    session.promoted.clone()
}
