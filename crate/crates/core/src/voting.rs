//! Global and regional winner-take-all tallies.
//!
//! A winner always needs a strict plurality. Regions with equal top counts
//! are ties and count for nobody; the regional winner is the strict
//! plurality of won regions.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{CandidateId, Grid, Partition, RegionMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Winner(CandidateId),
    Tie,
}

impl Outcome {
    pub fn winner(self) -> Option<CandidateId> {
        match self {
            Outcome::Winner(c) => Some(c),
            Outcome::Tie => None,
        }
    }

    pub fn is_won_by(self, c: CandidateId) -> bool {
        self == Outcome::Winner(c)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Winner(c) => write!(f, "{c}"),
            Outcome::Tie => f.write_str("tie"),
        }
    }
}

/// Strict plurality over `counts` (index = candidate id).
pub fn plurality(counts: &[u64]) -> Outcome {
    let mut best = 0u64;
    let mut who = None;
    let mut tied = false;
    for (i, &c) in counts.iter().enumerate() {
        if c > best {
            best = c;
            who = Some(i);
            tied = false;
        } else if c == best && who.is_some() {
            tied = true;
        }
    }
    match who {
        Some(i) if !tied => Outcome::Winner(CandidateId(i as u16)),
        _ => Outcome::Tie,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalTally {
    pub votes_per_candidate: Vec<u64>,
    pub winner: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionalTally {
    pub partition: Partition,
    pub region_winners: Vec<Outcome>,
    pub regions_won: Vec<u64>,
    pub tie_regions: u64,
    pub winner: Outcome,
}

impl RegionalTally {
    pub fn region_count(&self) -> usize {
        self.region_winners.len()
    }

    /// CSV row: `dx,dy,<wins per candidate>,ties,winner`.
    pub fn csv_row(&self) -> String {
        let mut fields = vec![self.partition.dx.to_string(), self.partition.dy.to_string()];
        fields.extend(self.regions_won.iter().map(u64::to_string));
        fields.push(self.tie_regions.to_string());
        fields.push(self.winner.to_string());
        fields.join(",")
    }

    pub fn csv_header(candidates: usize) -> String {
        let mut fields = vec!["dx".to_string(), "dy".to_string()];
        fields.extend((0..candidates).map(|c| format!("wins_{}", CandidateId(c as u16))));
        fields.push("ties".into());
        fields.push("winner".into());
        fields.join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionResult {
    pub global: GlobalTally,
    pub regional: Vec<RegionalTally>,
}

impl ElectionResult {
    pub fn to_csv(&self, candidates: usize) -> String {
        let mut out = RegionalTally::csv_header(candidates);
        out.push('\n');
        for r in &self.regional {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

pub fn tally_global(grid: &Grid) -> GlobalTally {
    let counts = grid.counts();
    GlobalTally {
        winner: plurality(&counts),
        votes_per_candidate: counts,
    }
}

/// Per-region candidate counts, `result[region][candidate]`.
pub fn region_counts(grid: &Grid, partition: Partition) -> Result<Vec<Vec<u64>>> {
    let map = partition.region_map(grid.dims())?;
    Ok(region_counts_with(grid, &map))
}

fn region_counts_with(grid: &Grid, map: &RegionMap) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; grid.candidate_count()]; map.count];
    for (i, v) in grid.votes().iter().enumerate() {
        counts[map.region_of_index(i)][v.index()] += 1;
    }
    counts
}

fn regional_from_counts(partition: Partition, candidates: usize, counts: &[Vec<u64>]) -> RegionalTally {
    let region_winners: Vec<Outcome> = counts.iter().map(|c| plurality(c)).collect();
    let mut regions_won = vec![0u64; candidates];
    let mut tie_regions = 0;
    for w in &region_winners {
        match w {
            Outcome::Winner(c) => regions_won[c.index()] += 1,
            Outcome::Tie => tie_regions += 1,
        }
    }
    RegionalTally {
        partition,
        winner: plurality(&regions_won),
        region_winners,
        regions_won,
        tie_regions,
    }
}

pub fn tally_regional(grid: &Grid, partition: Partition) -> Result<RegionalTally> {
    let counts = region_counts(grid, partition)?;
    Ok(regional_from_counts(partition, grid.candidate_count(), &counts))
}

/// Global tally plus one regional tally for `partition`, for any number of
/// candidates.
pub fn tally_multicandidate(grid: &Grid, partition: Partition) -> Result<ElectionResult> {
    Ok(ElectionResult {
        global: tally_global(grid),
        regional: vec![tally_regional(grid, partition)?],
    })
}

/// Global tally plus regional tallies for every partition, in input order.
pub fn tally_partitions(grid: &Grid, partitions: &[Partition]) -> Result<ElectionResult> {
    let regional = partitions
        .par_iter()
        .map(|&p| tally_regional(grid, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ElectionResult {
        global: tally_global(grid),
        regional,
    })
}

/// Regional tally that supports single-vote updates in O(candidates).
#[derive(Clone, Debug)]
pub struct IncrementalRegional {
    map: std::sync::Arc<RegionMap>,
    candidates: usize,
    counts: Vec<u64>,
    winners: Vec<Outcome>,
    regions_won: Vec<u64>,
    tie_regions: u64,
}

impl IncrementalRegional {
    pub fn new(grid: &Grid, map: std::sync::Arc<RegionMap>) -> Self {
        let candidates = grid.candidate_count();
        let nested = region_counts_with(grid, &map);
        let tally = regional_from_counts(map.partition, candidates, &nested);
        IncrementalRegional {
            map,
            candidates,
            counts: nested.into_iter().flatten().collect(),
            winners: tally.region_winners,
            regions_won: tally.regions_won,
            tie_regions: tally.tie_regions,
        }
    }

    pub fn partition(&self) -> Partition {
        self.map.partition
    }

    /// Moves one vote at `cell` (row-major index) from `from` to `to`.
    pub fn flip(&mut self, cell: usize, from: CandidateId, to: CandidateId) {
        let r = self.map.region_of_index(cell);
        let row = &mut self.counts[r * self.candidates..(r + 1) * self.candidates];
        row[from.index()] -= 1;
        row[to.index()] += 1;
        let new = plurality(row);
        let old = std::mem::replace(&mut self.winners[r], new);
        if old != new {
            match old {
                Outcome::Winner(c) => self.regions_won[c.index()] -= 1,
                Outcome::Tie => self.tie_regions -= 1,
            }
            match new {
                Outcome::Winner(c) => self.regions_won[c.index()] += 1,
                Outcome::Tie => self.tie_regions += 1,
            }
        }
    }

    pub fn winner(&self) -> Outcome {
        plurality(&self.regions_won)
    }

    pub fn regions_won(&self) -> &[u64] {
        &self.regions_won
    }

    pub fn tie_regions(&self) -> u64 {
        self.tie_regions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::enumerate_partitions;
    use std::sync::Arc;

    #[test]
    fn plurality_rules() {
        assert_eq!(plurality(&[3, 2]), Outcome::Winner(CandidateId::A));
        assert_eq!(plurality(&[2, 3]), Outcome::Winner(CandidateId::B));
        assert_eq!(plurality(&[2, 2]), Outcome::Tie);
        assert_eq!(plurality(&[1, 3, 3]), Outcome::Tie);
        assert_eq!(plurality(&[3, 3, 1, 4]), Outcome::Winner(CandidateId(3)));
        assert_eq!(plurality(&[0, 0]), Outcome::Tie);
    }

    #[test]
    fn unanimous_grid_wins_everywhere() {
        let g = Grid::filled(6, 6, 2, CandidateId::A).unwrap();
        let t = tally_global(&g);
        assert_eq!(t.votes_per_candidate, vec![36, 0]);
        assert_eq!(t.winner, Outcome::Winner(CandidateId::A));
        for p in enumerate_partitions(3).unwrap() {
            let r = tally_regional(&g, p).unwrap();
            assert_eq!(r.regions_won, vec![4, 0]);
            assert_eq!(r.winner, Outcome::Winner(CandidateId::A));
        }
    }

    #[test]
    fn one_lost_region_of_four() {
        // Top-left 3x3 region all B, every other region 6 A / 3 B.
        let mut rows = vec![vec![0u16; 6]; 6];
        for row in rows.iter_mut().take(3) {
            row[..3].fill(1);
        }
        for (x, y) in [(3, 0), (4, 0), (5, 0), (0, 3), (1, 3), (2, 3), (3, 3), (4, 3), (5, 3)] {
            rows[y][x] = 1;
        }
        let g = Grid::from_rows(2, &rows).unwrap();
        let r = tally_regional(&g, Partition::aligned(3).unwrap()).unwrap();
        assert_eq!(r.regions_won, vec![3, 1]);
        assert_eq!(r.tie_regions, 0);
        assert_eq!(r.winner, Outcome::Winner(CandidateId::A));
    }

    #[test]
    fn three_candidates_plurality() {
        // 15x3 grid, m_r = 3: unanimous A, B and C regions, then two
        // A-majority regions.
        let mut rows = vec![vec![0u16; 15]; 3];
        for row in rows.iter_mut() {
            row[3..6].fill(1);
            row[6..9].fill(2);
            row[9..12].copy_from_slice(&[0, 0, 1]);
            row[12..15].copy_from_slice(&[0, 0, 2]);
        }
        let g = Grid::from_rows(3, &rows).unwrap();
        let res = tally_multicandidate(&g, Partition::aligned(3).unwrap()).unwrap();
        let r = &res.regional[0];
        assert_eq!(r.regions_won, vec![3, 1, 1]);
        assert_eq!(r.tie_regions, 0);
        assert_eq!(r.winner, Outcome::Winner(CandidateId::A));
        assert_eq!(res.global.votes_per_candidate, vec![21, 12, 12]);
    }

    #[test]
    fn three_way_split_region_is_a_tie() {
        let g = Grid::from_rows(3, &[vec![0, 1, 2], vec![2, 0, 1], vec![1, 2, 0]]).unwrap();
        let r = tally_regional(&g, Partition::aligned(3).unwrap()).unwrap();
        assert_eq!(r.region_winners, vec![Outcome::Tie]);
        assert_eq!(r.tie_regions, 1);
        assert_eq!(r.winner, Outcome::Tie);
    }

    #[test]
    fn two_candidate_multicandidate_matches_regional() {
        let g = Grid::from_rows(2, &[vec![0, 1, 1, 0], vec![0, 0, 1, 1]]).unwrap();
        let p = Partition::aligned(2).unwrap();
        let res = tally_multicandidate(&g, p).unwrap();
        assert_eq!(res.regional[0], tally_regional(&g, p).unwrap());
        assert_eq!(res.global, tally_global(&g));
    }

    #[test]
    fn incremental_matches_batch() {
        let mut rows = vec![vec![0u16; 6]; 6];
        rows[0][0] = 1;
        rows[4][5] = 1;
        let g = Grid::from_rows(2, &rows).unwrap();
        let p = Partition::square(3, 1, 2).unwrap();
        let map = Arc::new(p.region_map(g.dims()).unwrap());
        let mut inc = IncrementalRegional::new(&g, map);
        let mut votes = g.votes().to_vec();
        for cell in [1usize, 2, 7, 8, 13, 14, 20, 35, 3] {
            if votes[cell] == CandidateId::A {
                inc.flip(cell, CandidateId::A, CandidateId::B);
                votes[cell] = CandidateId::B;
            }
            let now = Grid::new(6, 6, 2, votes.clone()).unwrap();
            let batch = tally_regional(&now, p).unwrap();
            assert_eq!(inc.regions_won(), &batch.regions_won[..]);
            assert_eq!(inc.tie_regions(), batch.tie_regions);
            assert_eq!(inc.winner(), batch.winner);
        }
    }

    #[test]
    fn csv_rows() {
        let g = Grid::filled(4, 4, 2, CandidateId::B).unwrap();
        let res = tally_partitions(&g, &enumerate_partitions(2).unwrap()).unwrap();
        let csv = res.to_csv(2);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("dx,dy,wins_A,wins_B,ties,winner"));
        assert_eq!(lines.next(), Some("0,0,0,4,0,B"));
        assert_eq!(csv.lines().count(), 5);
    }
}
