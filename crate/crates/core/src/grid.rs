//! The nation lattice and its toroidal partitions.
//!
//! Coordinates are `(x, y)` with `x` the column (left to right) and `y` the
//! row (top to bottom). Cells and regions are both indexed row-major.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A candidate; `0` is A, `1` is B, further ids are C, D, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(pub u16);

impl CandidateId {
    pub const A: CandidateId = CandidateId(0);
    pub const B: CandidateId = CandidateId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 26 {
            write!(f, "{}", (b'A' + self.0 as u8) as char)
        } else {
            write!(f, "#{}", self.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
}

impl GridDims {
    pub fn new(width: usize, height: usize) -> Self {
        GridDims { width, height }
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }
}

/// An `l × m` lattice of votes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    dims: GridDims,
    candidates: usize,
    votes: Vec<CandidateId>,
}

impl Grid {
    pub fn new(width: usize, height: usize, candidates: usize, votes: Vec<CandidateId>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid("grid dimensions must be positive".into()));
        }
        if candidates == 0 || candidates > u16::MAX as usize {
            return Err(Error::InvalidGrid(format!("bad candidate count {candidates}")));
        }
        if votes.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "expected {} votes, got {}",
                width * height,
                votes.len()
            )));
        }
        if let Some(bad) = votes.iter().find(|v| v.index() >= candidates) {
            return Err(Error::InvalidGrid(format!(
                "vote {} exceeds candidate count {candidates}",
                bad.0
            )));
        }
        Ok(Grid {
            dims: GridDims::new(width, height),
            candidates,
            votes,
        })
    }

    pub fn filled(width: usize, height: usize, candidates: usize, vote: CandidateId) -> Result<Self> {
        Grid::new(width, height, candidates, vec![vote; width * height])
    }

    /// Builds a grid from rows of raw ids, top row first.
    pub fn from_rows(candidates: usize, rows: &[Vec<u16>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidGrid("ragged rows".into()));
        }
        let votes = rows.iter().flatten().map(|&v| CandidateId(v)).collect();
        Grid::new(width, height, candidates, votes)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates
    }

    pub fn votes(&self) -> &[CandidateId] {
        &self.votes
    }

    pub fn get(&self, x: usize, y: usize) -> CandidateId {
        self.votes[self.dims.index(x, y)]
    }

    /// Returns a copy with `votes` replaced; the caller keeps ids in range.
    pub(crate) fn with_votes(&self, votes: Vec<CandidateId>) -> Grid {
        debug_assert_eq!(votes.len(), self.votes.len());
        Grid {
            dims: self.dims,
            candidates: self.candidates,
            votes,
        }
    }

    pub fn into_votes(self) -> Vec<CandidateId> {
        self.votes
    }

    /// Per-candidate vote counts.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.candidates];
        for v in &self.votes {
            counts[v.index()] += 1;
        }
        counts
    }

    pub fn count_of(&self, candidate: CandidateId) -> u64 {
        self.votes.iter().filter(|&&v| v == candidate).count() as u64
    }

    /// Plain-text form: `l m candidates`, then `m` rows of `l` ids.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.width(), self.height(), self.candidates)?;
        for row in self.votes.chunks(self.width()) {
            let line: Vec<String> = row.iter().map(|v| v.0.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .map(|l| l.map_err(Error::from))
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))??;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        let [width, height, candidates] = head[..] else {
            return Err(Error::Parse("header must be `l m candidate_count`".into()));
        };
        let mut votes = Vec::with_capacity(width * height);
        for row in 0..height {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {row}")))??;
            let before = votes.len();
            for t in line.split_whitespace() {
                let id: u16 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad vote {t:?} in row {row}")))?;
                votes.push(CandidateId(id));
            }
            if votes.len() - before != width {
                return Err(Error::Parse(format!(
                    "row {row} has {} entries, expected {width}",
                    votes.len() - before
                )));
            }
        }
        Grid::new(width, height, candidates, votes)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Grid::read_text(s.as_bytes())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GridRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: GridRecord = serde_json::from_str(s)?;
        rec.try_into()
    }
}

/// JSON wire form of a [`Grid`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecord {
    pub l: usize,
    pub m: usize,
    pub candidates: usize,
    pub votes: Vec<u16>,
}

impl From<&Grid> for GridRecord {
    fn from(g: &Grid) -> Self {
        GridRecord {
            l: g.width(),
            m: g.height(),
            candidates: g.candidates,
            votes: g.votes.iter().map(|v| v.0).collect(),
        }
    }
}

impl TryFrom<GridRecord> for Grid {
    type Error = Error;

    fn try_from(r: GridRecord) -> Result<Grid> {
        Grid::new(r.l, r.m, r.candidates, r.votes.into_iter().map(CandidateId).collect())
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = GridRecord::deserialize(d)?;
        Grid::try_from(rec).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub usize);

/// A tiling into `region_w × region_h` rectangles shifted by `(dx, dy)` on
/// the torus. Square regions (`m_r × m_r`) are the common case; the flag
/// experiment also uses 5-wide, 4-tall regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    pub region_w: usize,
    pub region_h: usize,
    pub dx: usize,
    pub dy: usize,
}

impl Partition {
    pub fn new(region_w: usize, region_h: usize, dx: usize, dy: usize) -> Result<Self> {
        if region_w == 0 || region_h == 0 {
            return Err(Error::InvalidParameter("region size must be positive".into()));
        }
        if dx >= region_w || dy >= region_h {
            return Err(Error::InvalidParameter(format!(
                "offset ({dx}, {dy}) must lie inside the {region_w}x{region_h} region"
            )));
        }
        Ok(Partition {
            region_w,
            region_h,
            dx,
            dy,
        })
    }

    pub fn square(m_r: usize, dx: usize, dy: usize) -> Result<Self> {
        Partition::new(m_r, m_r, dx, dy)
    }

    /// The unshifted square partition.
    pub fn aligned(m_r: usize) -> Result<Self> {
        Partition::square(m_r, 0, 0)
    }

    pub fn region_area(&self) -> usize {
        self.region_w * self.region_h
    }

    pub fn check(&self, dims: GridDims) -> Result<()> {
        if dims.width % self.region_w != 0 || dims.height % self.region_h != 0 {
            return Err(Error::DimensionMismatch {
                width: dims.width,
                height: dims.height,
                region_w: self.region_w,
                region_h: self.region_h,
            });
        }
        Ok(())
    }

    pub fn columns(&self, dims: GridDims) -> usize {
        dims.width / self.region_w
    }

    pub fn rows(&self, dims: GridDims) -> usize {
        dims.height / self.region_h
    }

    /// `K = N / (region_w · region_h)`.
    pub fn region_count(&self, dims: GridDims) -> Result<usize> {
        self.check(dims)?;
        Ok(self.columns(dims) * self.rows(dims))
    }

    /// Region index without validation; `dims` must be compatible.
    #[inline]
    pub(crate) fn region_unchecked(&self, dims: GridDims, x: usize, y: usize) -> usize {
        let sx = (x + self.dx) % dims.width;
        let sy = (y + self.dy) % dims.height;
        sx / self.region_w + self.columns(dims) * (sy / self.region_h)
    }

    /// Region index of every cell, row-major.
    pub fn region_map(&self, dims: GridDims) -> Result<RegionMap> {
        let count = self.region_count(dims)?;
        let mut cells = Vec::with_capacity(dims.cells());
        for y in 0..dims.height {
            for x in 0..dims.width {
                cells.push(self.region_unchecked(dims, x, y) as u32);
            }
        }
        Ok(RegionMap {
            partition: *self,
            dims,
            count,
            cells,
        })
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}+({},{})", self.region_w, self.region_h, self.dx, self.dy)
    }
}

/// Precomputed cell-to-region lookup for one partition.
#[derive(Clone, Debug)]
pub struct RegionMap {
    pub partition: Partition,
    pub dims: GridDims,
    pub count: usize,
    pub cells: Vec<u32>,
}

impl RegionMap {
    #[inline]
    pub fn region_of_index(&self, cell: usize) -> usize {
        self.cells[cell] as usize
    }
}

/// Region containing `cell` under `partition`.
pub fn region_of(partition: Partition, dims: GridDims, cell: (usize, usize)) -> Result<RegionId> {
    partition.check(dims)?;
    let (x, y) = cell;
    if !dims.contains(x, y) {
        return Err(Error::CellOutOfBounds {
            x,
            y,
            width: dims.width,
            height: dims.height,
        });
    }
    Ok(RegionId(partition.region_unchecked(dims, x, y)))
}

/// Region of an arbitrary integer coordinate, wrapping around the torus.
pub fn region_of_wrapped(partition: Partition, dims: GridDims, x: i64, y: i64) -> Result<RegionId> {
    partition.check(dims)?;
    let wx = x.rem_euclid(dims.width as i64) as usize;
    let wy = y.rem_euclid(dims.height as i64) as usize;
    Ok(RegionId(partition.region_unchecked(dims, wx, wy)))
}

/// All `m_r²` shifted square partitions, ordered by `(dx, dy)`.
pub fn enumerate_partitions(m_r: usize) -> Result<Vec<Partition>> {
    enumerate_rect_partitions(m_r, m_r)
}

pub fn enumerate_rect_partitions(region_w: usize, region_h: usize) -> Result<Vec<Partition>> {
    if region_w == 0 || region_h == 0 {
        return Err(Error::InvalidParameter("region size must be positive".into()));
    }
    let mut out = Vec::with_capacity(region_w * region_h);
    for dx in 0..region_w {
        for dy in 0..region_h {
            out.push(Partition {
                region_w,
                region_h,
                dx,
                dy,
            });
        }
    }
    Ok(out)
}

/// Cells of `region`, row-major within the region.
pub fn cells_of_region(partition: Partition, dims: GridDims, region: RegionId) -> Result<Vec<(usize, usize)>> {
    let count = partition.region_count(dims)?;
    if region.0 >= count {
        return Err(Error::RegionOutOfRange {
            index: region.0,
            count,
        });
    }
    let cols = partition.columns(dims);
    let (rx, ry) = (region.0 % cols, region.0 / cols);
    let mut cells = Vec::with_capacity(partition.region_area());
    for j in 0..partition.region_h {
        let sy = ry * partition.region_h + j;
        let y = (sy + dims.height - partition.dy) % dims.height;
        for i in 0..partition.region_w {
            let sx = rx * partition.region_w + i;
            let x = (sx + dims.width - partition.dx) % dims.width;
            cells.push((x, y));
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn dims() -> GridDims {
        GridDims::new(15, 24)
    }

    #[test]
    fn region_of_examples() {
        let p0 = Partition::aligned(3).unwrap();
        assert_eq!(region_of(p0, dims(), (0, 0)).unwrap(), RegionId(0));
        assert_eq!(region_of(p0, dims(), (14, 0)).unwrap(), RegionId(4));
        let p1 = Partition::square(3, 1, 0).unwrap();
        assert_eq!(region_of(p1, dims(), (14, 0)).unwrap(), RegionId(0));
    }

    #[test]
    fn region_of_rejects_bad_input() {
        let p = Partition::aligned(4).unwrap();
        assert!(matches!(
            region_of(p, dims(), (0, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
        let p = Partition::aligned(3).unwrap();
        assert!(matches!(
            region_of(p, dims(), (15, 0)),
            Err(Error::CellOutOfBounds { .. })
        ));
        assert!(Partition::square(3, 3, 0).is_err());
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate_partitions(1).unwrap(), vec![Partition::aligned(1).unwrap()]);
        assert_eq!(enumerate_partitions(3).unwrap().len(), 9);
        let eight = enumerate_partitions(8).unwrap();
        assert_eq!(eight.len(), 64);
        let distinct: HashSet<_> = eight.iter().map(|p| (p.dx, p.dy)).collect();
        assert_eq!(distinct.len(), 64);
    }

    #[test]
    fn shifted_partitions_have_distinct_region_maps() {
        let d = GridDims::new(12, 12);
        let maps: HashSet<Vec<u32>> = enumerate_partitions(3)
            .unwrap()
            .iter()
            .map(|p| p.region_map(d).unwrap().cells)
            .collect();
        assert_eq!(maps.len(), 9);
    }

    #[test]
    fn cells_of_region_first_region() {
        let p = Partition::aligned(3).unwrap();
        let mut cells = cells_of_region(p, dims(), RegionId(0)).unwrap();
        cells.sort();
        let mut want: Vec<_> = (0..3).flat_map(|x| (0..3).map(move |y| (x, y))).collect();
        want.sort();
        assert_eq!(cells, want);
        assert!(matches!(
            cells_of_region(p, dims(), RegionId(40)),
            Err(Error::RegionOutOfRange { .. })
        ));
    }

    #[test]
    fn partitions_cover_six_by_six_exhaustively() {
        let d = GridDims::new(6, 6);
        for m_r in [1, 2, 3, 6] {
            for p in enumerate_partitions(m_r).unwrap() {
                let k = p.region_count(d).unwrap();
                let mut seen = vec![0u32; d.cells()];
                for r in 0..k {
                    let cells = cells_of_region(p, d, RegionId(r)).unwrap();
                    assert_eq!(cells.len(), m_r * m_r);
                    for (x, y) in cells {
                        assert_eq!(region_of(p, d, (x, y)).unwrap(), RegionId(r));
                        seen[d.index(x, y)] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1), "{p}");
            }
        }
    }

    #[test]
    fn rectangular_regions_for_flag() {
        let d = dims();
        let p = Partition::new(5, 4, 0, 0).unwrap();
        assert_eq!(p.region_count(d).unwrap(), 18);
        let q = Partition::aligned(3).unwrap();
        assert_eq!(q.region_count(d).unwrap(), 40);
    }

    #[test]
    fn text_and_json_forms() {
        let g = Grid::from_rows(2, &[vec![0, 1, 0], vec![1, 1, 0]]).unwrap();
        let text = g.to_text();
        assert_eq!(text, "3 2 2\n0 1 0\n1 1 0\n");
        assert_eq!(Grid::from_text(&text).unwrap(), g);
        let json = g.to_json().unwrap();
        assert_eq!(json, r#"{"l":3,"m":2,"candidates":2,"votes":[0,1,0,1,1,0]}"#);
        assert_eq!(Grid::from_json(&json).unwrap(), g);
        assert!(Grid::from_text("2 2 2\n0 1\n0\n").is_err());
        assert!(Grid::from_text("2 1 2\n0 2\n").is_err());
    }
}
