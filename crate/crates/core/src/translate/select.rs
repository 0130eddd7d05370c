use super::TranslateError;

/// An item competing for selection. `index` identifies the payload and
/// breaks ties (smaller first).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub value: f64,
}

impl Candidate {
    pub fn new(index: usize, value: f64) -> Self {
        Candidate { index, value }
    }
}

// Grid values such as 3 * 0.1 are not exact in binary; without the slack
// ceil(10 * 0.30000000000000004) would give 4.
const QUOTA_SLACK: f64 = 1e-9;

/// Number of items `ceil(universe * ratio)` that a ratio allows.
pub fn quota(universe: usize, ratio: f64) -> usize {
    let raw = (universe as f64 * ratio - QUOTA_SLACK).ceil();
    if raw <= 0.0 {
        0
    } else {
        raw as usize
    }
}

pub(crate) fn check_ratio(ratio: f64) -> Result<(), TranslateError> {
    if (0.0..=1.0).contains(&ratio) {
        Ok(())
    } else {
        Err(TranslateError::InvalidRatio(ratio))
    }
}

/// Pick the `min(quota(universe, ratio), items.len())` items with the
/// largest values.
///
/// The result is in rank order. Items are ranked by a total order
/// (value descending, then index ascending), so the selections for
/// increasing ratios are nested.
pub fn select(
    items: &[Candidate],
    ratio: f64,
    universe: usize,
) -> Result<Vec<Candidate>, TranslateError> {
    check_ratio(ratio)?;

    let take = quota(universe, ratio).min(items.len());
    let mut ranked = items.to_vec();
    ranked.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then_with(|| a.index.cmp(&b.index))
    });
    ranked.truncate(take);

    Ok(ranked)
}
