use crate::model::{Cost, Instance, Solution};

/// Guided-local-search edge penalty counters and the resulting augmented cost matrix.
///
/// Augmented edge cost is `c_ij + weight * lambda_ij`; counters are symmetric.
#[derive(Debug, Clone)]
pub struct EdgePenalties {
    size: usize,
    weight: Cost,
    counts: Vec<u32>,
    augmented: Vec<Cost>,
}

impl EdgePenalties {
    pub fn new(inst: &Instance, weight: Cost) -> Self {
        assert!(weight >= 0);
        Self {
            size: inst.size(),
            weight,
            counts: vec![0; inst.size() * inst.size()],
            augmented: inst.distance_matrix().to_vec(),
        }
    }

    pub fn weight(&self) -> Cost {
        self.weight
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.size + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum::<u64>() / 2
    }

    pub fn augmented_matrix(&self) -> &[Cost] {
        &self.augmented
    }

    fn bump(&mut self, inst: &Instance, i: usize, j: usize) {
        for (a, b) in [(i, j), (j, i)] {
            let idx = a * self.size + b;
            self.counts[idx] += 1;
            self.augmented[idx] = inst.distance(a, b) + self.weight * self.counts[idx] as Cost;
        }
    }

    /// Increments the counter of every solution edge with maximal utility
    /// `c_ij / (1 + lambda_ij)`. Returns the penalized edges.
    pub fn penalize(&mut self, inst: &Instance, sol: &Solution) -> Vec<(usize, usize)> {
        let mut best: Vec<(usize, usize)> = Vec::new();
        // utility compared as a fraction (cost, 1 + lambda) to stay exact
        let mut best_util: Option<(Cost, Cost)> = None;
        for route in sol.routes().iter().filter(|r| !r.is_empty()) {
            let seq = route.customers();
            let edges = std::iter::once((0, seq[0]))
                .chain(seq.windows(2).map(|w| (w[0], w[1])))
                .chain(std::iter::once((seq[seq.len() - 1], 0)));
            for (a, b) in edges {
                let (a, b) = (a.min(b), a.max(b));
                let util = (inst.distance(a, b), 1 + self.count(a, b) as Cost);
                let ord = match best_util {
                    None => std::cmp::Ordering::Greater,
                    Some((c, d)) => (util.0 * d).cmp(&(c * util.1)),
                };
                match ord {
                    std::cmp::Ordering::Greater => {
                        best_util = Some(util);
                        best.clear();
                        best.push((a, b));
                    }
                    std::cmp::Ordering::Equal if !best.contains(&(a, b)) => best.push((a, b)),
                    _ => {}
                }
            }
        }
        for &(a, b) in &best {
            self.bump(inst, a, b);
        }
        best
    }
}
