use std::collections::HashMap;
use std::io::Write;

use rand::Rng;

use super::{Pattern, PatternError};
use crate::model::{Cost, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolParams {
    pub min_len: usize,
    pub max_len: usize,
    /// Number of most frequent patterns tracked per length.
    pub capacity: usize,
}

impl PoolParams {
    pub fn new(min_len: usize, max_len: usize, capacity: usize) -> Self {
        assert!(min_len >= 1 && min_len <= max_len, "bad pattern length range {min_len}..={max_len}");
        Self { min_len, max_len, capacity }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    freq: u64,
    /// First-seen rank; earlier patterns win frequency ties.
    order: u64,
    heap_pos: Option<usize>,
    best_cost: Option<Cost>,
}

/// One row of a pool dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolRow {
    pub pattern: Pattern,
    pub frequency: u64,
    pub best_cost: Option<Cost>,
}

/// Frequency map of every pattern seen plus, per length, a min-heap of the
/// `capacity` highest-priority patterns. Priority orders by frequency, then
/// by first-seen rank (earlier first); the heap root is the lowest-priority
/// tracked pattern and is replaced by any outside pattern that overtakes it.
#[derive(Debug, Clone)]
pub struct PatternPool {
    params: PoolParams,
    ids: HashMap<Pattern, usize>,
    patterns: Vec<Pattern>,
    entries: Vec<Entry>,
    heaps: Vec<Vec<usize>>,
    distinct: Vec<usize>,
    mass: u64,
}

impl PatternPool {
    pub fn new(params: PoolParams) -> Self {
        let lengths = params.max_len - params.min_len + 1;
        Self {
            params,
            ids: HashMap::new(),
            patterns: Vec::new(),
            entries: Vec::new(),
            heaps: vec![Vec::new(); lengths],
            distinct: vec![0; lengths],
            mass: 0,
        }
    }

    pub fn params(&self) -> &PoolParams {
        &self.params
    }

    /// Sum of all frequencies.
    pub fn total_mass(&self) -> u64 {
        self.mass
    }

    pub fn distinct(&self, len: usize) -> usize {
        self.distinct[len - self.params.min_len]
    }

    pub fn frequency(&self, p: &Pattern) -> u64 {
        self.ids.get(p).map_or(0, |&id| self.entries[id].freq)
    }

    pub fn best_cost(&self, p: &Pattern) -> Option<Cost> {
        self.ids.get(p).and_then(|&id| self.entries[id].best_cost)
    }

    /// Tracked patterns of one length, in heap array order.
    pub fn heap(&self, len: usize) -> Vec<&Pattern> {
        self.heaps[len - self.params.min_len].iter().map(|&id| &self.patterns[id]).collect()
    }

    /// Frequency of the least frequent tracked pattern of `len`.
    pub fn heap_root_frequency(&self, len: usize) -> Option<u64> {
        self.heaps[len - self.params.min_len].first().map(|&id| self.entries[id].freq)
    }

    #[inline]
    fn worse(&self, a: usize, b: usize) -> bool {
        let (ea, eb) = (&self.entries[a], &self.entries[b]);
        ea.freq < eb.freq || (ea.freq == eb.freq && ea.order > eb.order)
    }

    fn place(&mut self, h: usize, pos: usize) {
        let id = self.heaps[h][pos];
        self.entries[id].heap_pos = Some(pos);
    }

    fn sift_up(&mut self, h: usize, mut pos: usize) {
        while pos > 0 {
            let parent = (pos - 1) / 2;
            if !self.worse(self.heaps[h][pos], self.heaps[h][parent]) {
                break;
            }
            self.heaps[h].swap(pos, parent);
            self.place(h, pos);
            self.place(h, parent);
            pos = parent;
        }
    }

    fn sift_down(&mut self, h: usize, mut pos: usize) {
        let len = self.heaps[h].len();
        loop {
            let (l, r) = (2 * pos + 1, 2 * pos + 2);
            let mut smallest = pos;
            if l < len && self.worse(self.heaps[h][l], self.heaps[h][smallest]) {
                smallest = l;
            }
            if r < len && self.worse(self.heaps[h][r], self.heaps[h][smallest]) {
                smallest = r;
            }
            if smallest == pos {
                return;
            }
            self.heaps[h].swap(pos, smallest);
            self.place(h, pos);
            self.place(h, smallest);
            pos = smallest;
        }
    }

    fn id_of(&mut self, p: Pattern) -> usize {
        if let Some(&id) = self.ids.get(&p) {
            return id;
        }
        let id = self.patterns.len();
        self.distinct[p.len() - self.params.min_len] += 1;
        self.ids.insert(p.clone(), id);
        self.patterns.push(p);
        self.entries.push(Entry { freq: 0, order: id as u64, heap_pos: None, best_cost: None });
        id
    }

    /// Adds `count` to a pattern's frequency and restores the heap invariants.
    fn bump(&mut self, id: usize, count: u64, cost: Option<Cost>) {
        let h = self.patterns[id].len() - self.params.min_len;
        let entry = &mut self.entries[id];
        entry.freq += count;
        if let Some(c) = cost {
            entry.best_cost = Some(entry.best_cost.map_or(c, |b| b.min(c)));
        }
        self.mass += count;
        match entry.heap_pos {
            Some(pos) => self.sift_down(h, pos),
            None if self.heaps[h].len() < self.params.capacity => {
                self.heaps[h].push(id);
                let pos = self.heaps[h].len() - 1;
                self.place(h, pos);
                self.sift_up(h, pos);
            }
            None => {
                let Some(&root) = self.heaps[h].first() else { return };
                if self.worse(root, id) {
                    self.entries[root].heap_pos = None;
                    self.heaps[h][0] = id;
                    self.place(h, 0);
                    self.sift_down(h, 0);
                }
            }
        }
    }

    /// Increments one pattern's frequency. Patterns outside the length range are ignored.
    pub fn record(&mut self, p: &Pattern) {
        if p.len() < self.params.min_len || p.len() > self.params.max_len {
            return;
        }
        let id = self.id_of(p.clone());
        self.bump(id, 1, None);
    }

    /// Counts every pattern of every tracked length in `sol`. Returns the number of occurrences.
    pub fn extract(&mut self, sol: &Solution) -> u64 {
        self.extract_inner(sol, None)
    }

    /// Like [`extract`](Self::extract), also remembering `cost` as the best
    /// solution value each pattern has been seen in.
    pub fn extract_with_cost(&mut self, sol: &Solution, cost: Cost) -> u64 {
        self.extract_inner(sol, Some(cost))
    }

    fn extract_inner(&mut self, sol: &Solution, cost: Option<Cost>) -> u64 {
        let mut occurrences = 0;
        for len in self.params.min_len..=self.params.max_len {
            for route in sol.routes() {
                for window in route.customers().windows(len) {
                    let id = match self.ids.get(window) {
                        Some(&id) => id,
                        None => {
                            let rev: Vec<usize> = window.iter().rev().copied().collect();
                            match self.ids.get(rev.as_slice()) {
                                Some(&id) => id,
                                None => self.id_of(Pattern::from_window(window)),
                            }
                        }
                    };
                    self.bump(id, 1, cost);
                    occurrences += 1;
                }
            }
        }
        occurrences
    }

    /// Draws `min(per_length, heap size)` distinct tracked patterns of each length,
    /// uniformly without replacement.
    pub fn sample_candidates<R: Rng>(&self, per_length: usize, rng: &mut R) -> Vec<Pattern> {
        let mut out = Vec::new();
        for heap in &self.heaps {
            let amount = per_length.min(heap.len());
            if amount == 0 {
                continue;
            }
            for idx in rand::seq::index::sample(rng, heap.len(), amount) {
                out.push(self.patterns[heap[idx]].clone());
            }
        }
        out
    }

    /// All patterns, ordered by length, then frequency (descending), then first-seen rank.
    pub fn rows(&self) -> Vec<PoolRow> {
        let mut ids: Vec<usize> = (0..self.patterns.len()).collect();
        ids.sort_by_key(|&id| {
            let e = &self.entries[id];
            (self.patterns[id].len(), std::cmp::Reverse(e.freq), e.order)
        });
        ids.into_iter()
            .map(|id| PoolRow {
                pattern: self.patterns[id].clone(),
                frequency: self.entries[id].freq,
                best_cost: self.entries[id].best_cost,
            })
            .collect()
    }

    /// Writes `length,sequence,frequency,best_cost` CSV rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["length", "sequence", "frequency", "best_cost"])?;
        for row in self.rows() {
            let seq: Vec<String> = row.pattern.seq().iter().map(|c| c.to_string()).collect();
            w.write_record([
                row.pattern.len().to_string(),
                seq.join(" "),
                row.frequency.to_string(),
                row.best_cost.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dump written by [`write_csv`](Self::write_csv); the `best_cost` column is optional.
    pub fn read_rows(text: &str) -> Result<Vec<PoolRow>, PatternError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2;
            let bad = |msg: String| PatternError::Dump { line, msg };
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let len: usize = rec.get(0).unwrap_or("").parse().map_err(|_| bad("bad length".into()))?;
            let seq: Vec<usize> = rec
                .get(1)
                .unwrap_or("")
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(format!("bad customer `{t}`"))))
                .collect::<Result<_, _>>()?;
            if seq.len() != len {
                return Err(bad(format!("length {len} but {} customers", seq.len())));
            }
            let frequency = rec.get(2).unwrap_or("").parse().map_err(|_| bad("bad frequency".into()))?;
            let best_cost = match rec.get(3) {
                Some(s) if !s.is_empty() => Some(s.parse().map_err(|_| bad("bad best_cost".into()))?),
                _ => None,
            };
            let pattern = Pattern::new(&seq, 1, usize::MAX)?;
            rows.push(PoolRow { pattern, frequency, best_cost });
        }
        Ok(rows)
    }

    /// Rebuilds a pool from dump rows; row order becomes the first-seen order.
    pub fn from_rows(params: PoolParams, rows: &[PoolRow]) -> Self {
        let mut pool = Self::new(params);
        for row in rows {
            if row.pattern.len() < params.min_len || row.pattern.len() > params.max_len {
                continue;
            }
            let id = pool.id_of(row.pattern.clone());
            pool.bump(id, row.frequency, row.best_cost);
        }
        pool
    }

    #[cfg(test)]
    pub(crate) fn check_invariants(&self) {
        for (h, heap) in self.heaps.iter().enumerate() {
            let len = h + self.params.min_len;
            assert_eq!(heap.len(), self.params.capacity.min(self.distinct(len)));
            for (pos, &id) in heap.iter().enumerate() {
                assert_eq!(self.entries[id].heap_pos, Some(pos));
                if pos > 0 {
                    assert!(!self.worse(id, heap[(pos - 1) / 2]));
                }
            }
            if let Some(&root) = heap.first() {
                for (id, p) in self.patterns.iter().enumerate() {
                    if p.len() == len && self.entries[id].heap_pos.is_none() {
                        assert!(self.entries[id].freq <= self.entries[root].freq);
                    }
                }
            }
        }
    }
}
