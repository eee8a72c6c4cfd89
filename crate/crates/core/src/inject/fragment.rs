use crate::model::{Cost, CostParams, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FragmentKind {
    /// Starts at the depot.
    Beg,
    /// Depot-free.
    Mid,
    /// Ends at the depot.
    End,
    /// Depot at both ends: a complete route.
    Route,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot concatenate {0:?} with {1:?}")]
pub struct ConcatError(pub FragmentKind, pub FragmentKind);

/// An open route piece with cached load and internal distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    seq: Vec<usize>,
    load: i64,
    distance: Cost,
    kind: FragmentKind,
}

impl Fragment {
    /// A piece of a route; `seq` includes the depot where the piece is anchored.
    pub fn new(inst: &Instance, seq: Vec<usize>) -> Self {
        assert!(!seq.is_empty(), "empty fragment");
        let starts = seq[0] == 0;
        let ends = seq.len() > 1 && seq[seq.len() - 1] == 0;
        assert!(
            seq.len() <= 2 || seq[1..seq.len() - 1].iter().all(|&v| v != 0),
            "depot inside fragment {seq:?}"
        );
        let kind = match (starts, ends) {
            (true, true) => FragmentKind::Route,
            (true, false) => FragmentKind::Beg,
            (false, true) => FragmentKind::End,
            (false, false) => FragmentKind::Mid,
        };
        let load = seq.iter().map(|&v| inst.demand(v)).sum();
        let distance = seq.windows(2).map(|w| inst.distance(w[0], w[1])).sum();
        Self { seq, load, distance, kind }
    }

    /// The depot alone, anchoring an end fragment.
    pub fn depot_end(inst: &Instance) -> Self {
        Self { kind: FragmentKind::End, ..Self::new(inst, vec![0]) }
    }

    pub fn seq(&self) -> &[usize] {
        &self.seq
    }

    pub fn load(&self) -> i64 {
        self.load
    }

    pub fn distance(&self) -> Cost {
        self.distance
    }

    pub fn kind(&self) -> FragmentKind {
        self.kind
    }

    pub fn first(&self) -> usize {
        self.seq[0]
    }

    pub fn last(&self) -> usize {
        self.seq[self.seq.len() - 1]
    }

    pub fn is_depot_only(&self) -> bool {
        self.seq == [0]
    }

    /// Cost of the fragment as if it were a route (`None` if forbidden).
    pub fn cost(&self, inst: &Instance, params: &CostParams) -> Option<Cost> {
        params.cost(self.load, self.distance, inst.capacity())
    }

    /// Customers of the fragment without depot anchors.
    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        self.seq.iter().copied().filter(|&v| v != 0)
    }

    /// `self` followed by `other`; load and distance are updated in O(1)
    /// besides copying the sequence.
    pub fn concat(&self, other: &Fragment, inst: &Instance) -> Result<Fragment, ConcatError> {
        use FragmentKind::*;
        let kind = match (self.kind, other.kind) {
            (Beg, Mid) => Beg,
            (Beg, End) => Route,
            (Mid, Mid) => Mid,
            (Mid, End) => End,
            (a, b) => return Err(ConcatError(a, b)),
        };
        let mut seq = Vec::with_capacity(self.seq.len() + other.seq.len());
        seq.extend_from_slice(&self.seq);
        seq.extend_from_slice(&other.seq);
        Ok(Fragment {
            seq,
            load: self.load + other.load,
            distance: self.distance + inst.distance(self.last(), other.first()) + other.distance,
            kind,
        })
    }

    /// Mirror of a depot-free fragment. Anchored fragments keep their orientation.
    pub fn reversed(&self) -> Result<Fragment, ConcatError> {
        if self.kind != FragmentKind::Mid {
            return Err(ConcatError(self.kind, self.kind));
        }
        let mut seq = self.seq.clone();
        seq.reverse();
        Ok(Fragment { seq, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeasibilityMode;

    fn inst() -> Instance {
        Instance::new(
            "f",
            vec![(0.0, 0.0), (0.0, 3.0), (4.0, 3.0), (4.0, 0.0), (8.0, 0.0)],
            vec![0, 10, 7, 2, 1],
            20,
        )
        .unwrap()
    }

    #[test]
    fn load_adds() {
        let inst = inst();
        let a = Fragment::new(&inst, vec![0, 1]);
        let b = Fragment::new(&inst, vec![2]);
        assert_eq!((a.load(), b.load()), (10, 7));
        let ab = a.concat(&b, &inst).unwrap();
        assert_eq!(ab.load(), 17);
        assert_eq!(ab.kind(), FragmentKind::Beg);
    }

    #[test]
    fn distance_adds_bridge() {
        let inst = inst();
        let a = Fragment::new(&inst, vec![1, 2]); // D = 4
        let b = Fragment::new(&inst, vec![3, 4]); // D = 4, bridge 2-3 = 3
        let ab = a.concat(&b, &inst).unwrap();
        assert_eq!(ab.distance(), 4 + 3 + 4);
        assert_eq!(ab.seq(), &[1, 2, 3, 4]);
    }

    #[test]
    fn closing_with_depot_only() {
        let inst = inst();
        let a = Fragment::new(&inst, vec![0, 1, 2]);
        let route = a.concat(&Fragment::depot_end(&inst), &inst).unwrap();
        assert_eq!(route.kind(), FragmentKind::Route);
        assert_eq!(route.load(), a.load());
        assert_eq!(route.distance(), a.distance() + inst.distance(2, 0));
        let p = CostParams::new(5, FeasibilityMode::Penalized);
        assert_eq!(route.cost(&inst, &p), Some(3 + 4 + 5));
    }

    #[test]
    fn reverse_is_involution() {
        let inst = inst();
        let f = Fragment::new(&inst, vec![1, 2, 4]);
        let r = f.reversed().unwrap();
        assert_eq!(r.seq(), &[4, 2, 1]);
        assert_eq!(r.distance(), f.distance());
        assert_eq!(r.reversed().unwrap(), f);
        let single = Fragment::new(&inst, vec![3]);
        assert_eq!(single.reversed().unwrap(), single);
    }

    #[test]
    fn anchored_fragments_do_not_reverse() {
        let inst = inst();
        assert!(Fragment::new(&inst, vec![0, 1]).reversed().is_err());
        assert!(Fragment::new(&inst, vec![1, 0]).reversed().is_err());
    }

    #[test]
    fn incompatible_kinds() {
        let inst = inst();
        let end = Fragment::new(&inst, vec![1, 0]);
        let beg = Fragment::new(&inst, vec![0, 2]);
        assert!(end.concat(&beg, &inst).is_err());
        assert!(beg.concat(&beg, &inst).is_err());
    }
}
