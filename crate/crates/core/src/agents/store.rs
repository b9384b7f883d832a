use rustc_hash::FxHashMap;

/// Dense storage is used while `key space * row width` stays below this many
/// values; larger spaces fall back to a hash map.
pub const DENSE_LIMIT: u64 = 1 << 22;

/// Fixed-width rows of `f64` keyed by `(u64, u64)`, zero until written.
///
/// Keys inside the environment's declared bounds live in a flat array; any
/// other key goes to a hash map, so out-of-bound keys are still handled.
#[derive(Clone, Debug)]
pub struct RowStore {
    width: usize,
    zeros: Box<[f64]>,
    dense: Option<Dense>,
    sparse: FxHashMap<(u64, u64), Box<[f64]>>,
}

#[derive(Clone, Debug)]
struct Dense {
    bounds: (u64, u64),
    values: Vec<f64>,
    written: Vec<bool>,
    written_count: usize,
}

impl RowStore {
    pub fn new(width: usize, bounds: Option<(u64, u64)>) -> Self {
        let dense = bounds.and_then(|(a, b)| {
            let rows = a.checked_mul(b)?;
            let total = rows.checked_mul(width as u64)?;
            (total <= DENSE_LIMIT).then(|| Dense {
                bounds: (a, b),
                values: vec![0.0; total as usize],
                written: vec![false; rows as usize],
                written_count: 0,
            })
        });
        Self {
            width,
            zeros: vec![0.0; width].into_boxed_slice(),
            dense,
            sparse: FxHashMap::default(),
        }
    }

    #[cfg(test)]
    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    fn slot(&self, key: (u64, u64)) -> Option<usize> {
        let d = self.dense.as_ref()?;
        (key.0 < d.bounds.0 && key.1 < d.bounds.1).then(|| (key.0 * d.bounds.1 + key.1) as usize)
    }

    pub fn row(&self, key: (u64, u64)) -> &[f64] {
        match (self.slot(key), &self.dense) {
            (Some(i), Some(d)) => &d.values[i * self.width..(i + 1) * self.width],
            _ => self.sparse.get(&key).unwrap_or(&self.zeros),
        }
    }

    pub fn row_mut(&mut self, key: (u64, u64)) -> &mut [f64] {
        let width = self.width;
        match (self.slot(key), &mut self.dense) {
            (Some(i), Some(d)) => {
                if !d.written[i] {
                    d.written[i] = true;
                    d.written_count += 1;
                }
                &mut d.values[i * width..(i + 1) * width]
            }
            _ => self
                .sparse
                .entry(key)
                .or_insert_with(|| vec![0.0; width].into_boxed_slice()),
        }
    }

    /// Number of rows written at least once.
    pub fn len(&self) -> usize {
        self.dense.as_ref().map_or(0, |d| d.written_count) + self.sparse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Written rows; dense rows first in key order, then the overflow map.
    pub fn iter(&self) -> impl Iterator<Item = ((u64, u64), &[f64])> + '_ {
        let width = self.width;
        let dense = self.dense.iter().flat_map(move |d| {
            d.written
                .iter()
                .enumerate()
                .filter(|(_, &w)| w)
                .map(move |(i, _)| {
                    let key = (i as u64 / d.bounds.1, i as u64 % d.bounds.1);
                    (key, &d.values[i * width..(i + 1) * width])
                })
        });
        dense.chain(self.sparse.iter().map(|(k, v)| (*k, &v[..])))
    }

    /// Smallest and largest value over written rows.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.iter()
            .flat_map(|(_, row)| row.iter().copied())
            .fold(None, |acc, x| {
                Some(match acc {
                    None => (x, x),
                    Some((lo, hi)) => (lo.min(x), hi.max(x)),
                })
            })
    }
}
