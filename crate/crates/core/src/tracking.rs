//! Sparse point tracks and what is derived from them: motion weights, the
//! RBF motion heatmap, and sparse-to-dense motion transfer
//! `T(p, i, t) = p - N(p, i) + T_R(N(p, i), t)`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPoint {
    pub id: i64,
    pub coords: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackFormat {
    Json,
    Csv,
}

impl TrackFormat {
    /// Guesses from the file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TrackFormat::Csv,
            _ => TrackFormat::Json,
        }
    }
}

/// Tracked sample points, each with one position per frame.
#[derive(Debug, Clone)]
pub struct TrackSet {
    num_frames: usize,
    points: Vec<TrackedPoint>,
    by_id: HashMap<i64, usize>,
    grids: Vec<FrameGrid>,
}

impl PartialEq for TrackSet {
    fn eq(&self, other: &Self) -> bool {
        self.num_frames == other.num_frames && self.points == other.points
    }
}

impl TrackSet {
    pub fn new(num_frames: usize, points: Vec<TrackedPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("no points".into()));
        }
        if num_frames == 0 {
            return Err(Error::Validation("tracks need at least one frame".into()));
        }
        let mut by_id = HashMap::with_capacity(points.len());
        for (idx, p) in points.iter().enumerate() {
            if p.coords.len() != num_frames {
                return Err(Error::Validation(format!(
                    "point {} has {} frames, expected {num_frames}",
                    p.id,
                    p.coords.len()
                )));
            }
            if p.coords.iter().any(|c| !(c.x.is_finite() && c.y.is_finite())) {
                return Err(Error::Validation(format!(
                    "point {} has non-finite coordinates",
                    p.id
                )));
            }
            if by_id.insert(p.id, idx).is_some() {
                return Err(Error::Validation(format!("duplicate point id {}", p.id)));
            }
        }
        let grids = (0..num_frames)
            .map(|f| FrameGrid::build(points.iter().map(|p| p.coords[f])))
            .collect();
        Ok(Self {
            num_frames,
            points,
            by_id,
            grids,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn points(&self) -> &[TrackedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, id: i64) -> Result<&TrackedPoint> {
        self.by_id
            .get(&id)
            .map(|&i| &self.points[i])
            .ok_or_else(|| Error::Lookup(format!("no tracked point with id {id}")))
    }

    /// Keeps the first `num_frames` frames of every track.
    pub fn truncated(&self, num_frames: usize) -> Result<Self> {
        if num_frames > self.num_frames {
            return Err(Error::Validation(format!(
                "cannot truncate {} frames to {num_frames}",
                self.num_frames
            )));
        }
        let points = self
            .points
            .iter()
            .map(|p| TrackedPoint {
                id: p.id,
                coords: p.coords[..num_frames].to_vec(),
            })
            .collect();
        TrackSet::new(num_frames, points)
    }

    fn check_frame(&self, frame: usize) -> Result<()> {
        if frame < self.num_frames {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "frame {frame} out of range (0..{})",
                self.num_frames
            )))
        }
    }

    /// `V_m(j) = sqrt(Σ_i |TRACK_{i,j} - TRACK_{i-1,j}|)`.
    pub fn motion_weight(&self, id: i64) -> Result<f64> {
        Ok(path_length(&self.get(id)?.coords).sqrt())
    }

    /// Motion weights in point order.
    pub fn motion_weights(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| path_length(&p.coords).sqrt())
            .collect()
    }

    /// Index (into [`points`](Self::points)) of the tracked point nearest to
    /// `p` in `frame`; ties go to the lowest id.
    pub fn nearest_index(&self, p: Point, frame: usize) -> Result<usize> {
        self.check_frame(frame)?;
        Ok(self.grids[frame].nearest(p, |i| (self.points[i].coords[frame], self.points[i].id)))
    }

    /// `N(p, i)`: id of the nearest tracked point.
    pub fn nearest_sample(&self, p: Point, frame: usize) -> Result<i64> {
        Ok(self.points[self.nearest_index(p, frame)?].id)
    }

    /// Linear scan version of [`nearest_index`](Self::nearest_index).
    pub fn nearest_index_brute_force(&self, p: Point, frame: usize) -> Result<usize> {
        self.check_frame(frame)?;
        let mut best = (f64::INFINITY, i64::MAX, 0usize);
        for (i, tp) in self.points.iter().enumerate() {
            let d2 = (p - tp.coords[frame]).norm_squared();
            if (d2, tp.id) < (best.0, best.1) {
                best = (d2, tp.id, i);
            }
        }
        Ok(best.2)
    }

    /// `T(p, i, t)`: where pixel `p` of frame `from` is in frame `to`.
    pub fn transfer_point(&self, p: Point, from: usize, to: usize) -> Result<Point> {
        self.check_frame(to)?;
        let idx = self.nearest_index(p, from)?;
        Ok(self.transfer_with(p, idx, from, to))
    }

    /// The transfer formula with the nearest sample already resolved. The
    /// displacement is formed first so that `from == to` returns `p` exactly.
    pub fn transfer_with(&self, p: Point, index: usize, from: usize, to: usize) -> Point {
        let coords = &self.points[index].coords;
        p + (coords[to] - coords[from])
    }
}

fn path_length(coords: &[Point]) -> f64 {
    coords.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Uniform bucket grid over one frame's point positions.
#[derive(Debug, Clone)]
struct FrameGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl FrameGrid {
    fn build(positions: impl Iterator<Item = Point> + Clone) -> Self {
        let count = positions.clone().count().max(1);
        let (mut lo, mut hi) = (Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY));
        for q in positions.clone() {
            lo = lo.inf(&q);
            hi = hi.sup(&q);
        }
        let extent = hi - lo;
        let area = (extent.x * extent.y).max(extent.x.max(extent.y).powi(2) / count as f64);
        let mut cell = (area / count as f64).sqrt();
        if !(cell.is_finite() && cell > 0.0) {
            cell = 1.0;
        }
        let nx = ((extent.x / cell).floor() as usize + 1).min(4096);
        let ny = ((extent.y / cell).floor() as usize + 1).min(4096);
        let cell = cell.max(extent.x / nx as f64).max(extent.y / ny as f64);
        let mut grid = FrameGrid {
            origin: lo,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        };
        for (i, q) in positions.enumerate() {
            let (cx, cy) = grid.cell_of(q);
            grid.cells[cy * grid.nx + cx].push(i);
        }
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.cell).floor();
        let fy = ((p.y - self.origin.y) / self.cell).floor();
        let cx = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        (cx, cy)
    }

    /// Squared distance from `p` to the axis-aligned box of cells
    /// `[x0, x1] x [y0, y1]` (inclusive cell indices).
    fn box_dist2(&self, p: Point, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        let lx = self.origin.x + x0 as f64 * self.cell;
        let hx = self.origin.x + (x1 + 1) as f64 * self.cell;
        let ly = self.origin.y + y0 as f64 * self.cell;
        let hy = self.origin.y + (y1 + 1) as f64 * self.cell;
        let dx = (lx - p.x).max(0.0).max(p.x - hx);
        let dy = (ly - p.y).max(0.0).max(p.y - hy);
        dx * dx + dy * dy
    }

    /// Lower bound on the squared distance from `p` to any cell outside the
    /// visited block; `None` once the block covers the whole grid.
    fn unvisited_bound(&self, p: Point, x0: usize, x1: usize, y0: usize, y1: usize) -> Option<f64> {
        let mut bound = f64::INFINITY;
        let (mx, my) = (self.nx - 1, self.ny - 1);
        if x0 > 0 {
            bound = bound.min(self.box_dist2(p, 0, x0 - 1, 0, my));
        }
        if x1 < mx {
            bound = bound.min(self.box_dist2(p, x1 + 1, mx, 0, my));
        }
        if y0 > 0 {
            bound = bound.min(self.box_dist2(p, 0, mx, 0, y0 - 1));
        }
        if y1 < my {
            bound = bound.min(self.box_dist2(p, 0, mx, y1 + 1, my));
        }
        bound.is_finite().then_some(bound)
    }

    fn nearest(&self, p: Point, lookup: impl Fn(usize) -> (Point, i64)) -> usize {
        let (cx, cy) = self.cell_of(p);
        let mut best = (f64::INFINITY, i64::MAX, usize::MAX);
        let visit = |cell: &Vec<usize>, best: &mut (f64, i64, usize)| {
            for &i in cell {
                let (q, id) = lookup(i);
                let d2 = (p - q).norm_squared();
                if (d2, id) < (best.0, best.1) {
                    *best = (d2, id, i);
                }
            }
        };
        let mut r = 0usize;
        loop {
            let x0 = cx.saturating_sub(r);
            let x1 = (cx + r).min(self.nx - 1);
            let y0 = cy.saturating_sub(r);
            let y1 = (cy + r).min(self.ny - 1);
            // ring r only: cells on the border of the block
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let on_ring = x + r == cx || x == cx + r || y + r == cy || y == cy + r;
                    if r == 0 || on_ring {
                        visit(&self.cells[y * self.nx + x], &mut best);
                    }
                }
            }
            match self.unvisited_bound(p, x0, x1, y0, y1) {
                None => break,
                Some(bound) if bound > best.0 => break,
                _ => r += 1,
            }
        }
        best.2
    }
}

/// Per-pixel motion weights in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionHeatmap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl MotionHeatmap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Default RBF bandwidth for a canvas: `0.05 * max(W, H)`.
pub fn default_bandwidth(width: usize, height: usize) -> f64 {
    0.05 * width.max(height) as f64
}

/// Motion heatmap with RBF sites at frame-0 positions.
pub fn build_motion_heatmap(
    tracks: &TrackSet,
    width: usize,
    height: usize,
    bandwidth: f64,
) -> Result<MotionHeatmap> {
    build_motion_heatmap_at(tracks, width, height, bandwidth, 0)
}

/// Normalized Gaussian (Shepard) interpolation of the motion weights,
/// `Σ V_j k_j / Σ k_j` with `k_j = exp(-d_j² / 2σ²)` evaluated at pixel
/// centres, then min-max normalized. A flat field maps to all zeros.
pub fn build_motion_heatmap_at(
    tracks: &TrackSet,
    width: usize,
    height: usize,
    bandwidth: f64,
    anchor_frame: usize,
) -> Result<MotionHeatmap> {
    if width == 0 || height == 0 {
        return Err(Error::Validation("heatmap dimensions must be positive".into()));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if tracks.is_empty() {
        return Err(Error::Validation("no points".into()));
    }
    tracks.check_frame(anchor_frame)?;
    let sites: Vec<(Point, f64)> = tracks
        .points()
        .iter()
        .zip(tracks.motion_weights())
        .map(|(p, w)| (p.coords[anchor_frame], w))
        .collect();
    let inv_two_var = 1.0 / (2.0 * bandwidth * bandwidth);

    let mut values = vec![0.0; width * height];
    values
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            let mut d2 = vec![0.0; sites.len()];
            for (x, out) in row.iter_mut().enumerate() {
                let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                let mut d2_min = f64::INFINITY;
                for (slot, (s, _)) in d2.iter_mut().zip(&sites) {
                    *slot = (c - s).norm_squared();
                    d2_min = d2_min.min(*slot);
                }
                // shift by the nearest site so far pixels don't underflow to 0/0
                let (mut num, mut den) = (0.0, 0.0);
                for (&dd, (_, w)) in d2.iter().zip(&sites) {
                    let k = (-(dd - d2_min) * inv_two_var).exp();
                    num += w * k;
                    den += k;
                }
                *out = num / den;
            }
        });

    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span > 0.0 {
        for v in &mut values {
            *v = ((*v - lo) / span).clamp(0.0, 1.0);
        }
    } else {
        values.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(MotionHeatmap {
        width,
        height,
        values,
    })
}

#[derive(Serialize, Deserialize)]
struct JsonTracks {
    num_frames: usize,
    points: Vec<JsonPoint>,
}

#[derive(Serialize, Deserialize)]
struct JsonPoint {
    id: i64,
    xy: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct CsvRow {
    frame: usize,
    point_id: i64,
    x: f64,
    y: f64,
}

pub fn load_tracks(path: &Path, format: TrackFormat) -> Result<TrackSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let context = path.display().to_string();
    match format {
        TrackFormat::Json => parse_tracks_json(&text, &context),
        TrackFormat::Csv => parse_tracks_csv(&text, &context),
    }
}

pub fn parse_tracks_json(text: &str, context: &str) -> Result<TrackSet> {
    if text.trim().is_empty() {
        return Err(Error::Validation("no points".into()));
    }
    let doc: JsonTracks = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            context,
            format!("line {}, column {}: {e}", e.line(), e.column()),
        )
    })?;
    let points = doc
        .points
        .into_iter()
        .map(|p| TrackedPoint {
            id: p.id,
            coords: p.xy.into_iter().map(|[x, y]| Point::new(x, y)).collect(),
        })
        .collect();
    TrackSet::new(doc.num_frames, points)
}

pub fn parse_tracks_csv(text: &str, context: &str) -> Result<TrackSet> {
    if text.trim().is_empty() {
        return Err(Error::Validation("no points".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: BTreeMap<i64, BTreeMap<usize, Point>> = BTreeMap::new();
    let mut count = 0usize;
    for (line, record) in reader.deserialize::<CsvRow>().enumerate() {
        let row = record.map_err(|e| Error::parse(context, format!("row {}: {e}", line + 2)))?;
        count += 1;
        if rows
            .entry(row.point_id)
            .or_default()
            .insert(row.frame, Point::new(row.x, row.y))
            .is_some()
        {
            return Err(Error::Validation(format!(
                "point {} has frame {} twice",
                row.point_id, row.frame
            )));
        }
    }
    if rows.is_empty() {
        return Err(Error::Validation("no points".into()));
    }
    if count % rows.len() != 0 {
        return Err(Error::Validation(format!(
            "{count} rows do not split evenly over {} points",
            rows.len()
        )));
    }
    let num_frames = count / rows.len();
    let mut points = Vec::with_capacity(rows.len());
    for (id, frames) in rows {
        if frames.len() != num_frames || frames.keys().next_back() != Some(&(num_frames - 1)) {
            return Err(Error::Validation(format!(
                "point {id} does not cover frames 0..{num_frames}"
            )));
        }
        points.push(TrackedPoint {
            id,
            coords: frames.into_values().collect(),
        });
    }
    TrackSet::new(num_frames, points)
}

pub fn tracks_to_json(tracks: &TrackSet) -> String {
    let doc = JsonTracks {
        num_frames: tracks.num_frames,
        points: tracks
            .points
            .iter()
            .map(|p| JsonPoint {
                id: p.id,
                xy: p.coords.iter().map(|c| [c.x, c.y]).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("track documents always serialize")
}

pub fn save_tracks(tracks: &TrackSet, path: &Path) -> Result<()> {
    std::fs::write(path, tracks_to_json(tracks)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn track(id: i64, coords: Vec<Point>) -> TrackedPoint {
        TrackedPoint { id, coords }
    }

    #[test]
    fn motion_weight_examples() {
        let tracks = TrackSet::new(
            5,
            vec![
                track(0, vec![p(3.0, 3.0); 5]),
                track(1, (0..5).map(|i| p(i as f64, 0.0)).collect()),
                track(2, vec![p(0.0, 0.0), p(0.0, 9.0), p(0.0, 9.0), p(0.0, 9.0), p(0.0, 9.0)]),
            ],
        )
        .unwrap();
        assert_eq!(tracks.motion_weight(0).unwrap(), 0.0);
        assert_eq!(tracks.motion_weight(1).unwrap(), 2.0);
        assert_eq!(tracks.motion_weight(2).unwrap(), 3.0);
        assert!(matches!(tracks.motion_weight(9), Err(Error::Lookup(_))));
    }

    #[test]
    fn validation() {
        assert!(matches!(TrackSet::new(3, vec![]), Err(Error::Validation(m)) if m == "no points"));
        let ragged = TrackSet::new(3, vec![track(7, vec![p(0.0, 0.0); 2])]);
        assert!(matches!(ragged, Err(Error::Validation(m)) if m.contains("point 7")));
        let dup = TrackSet::new(1, vec![track(1, vec![p(0.0, 0.0)]), track(1, vec![p(1.0, 0.0)])]);
        assert!(dup.is_err());
        let nan = TrackSet::new(1, vec![track(1, vec![p(f64::NAN, 0.0)])]);
        assert!(nan.is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"num_frames": 3, "points": [
            {"id": 4, "xy": [[0,0],[1,1],[2,2]], "visible": [true, false, true]},
            {"id": 9, "xy": [[5,5],[5,5],[5,5]]}]}"#;
        let tracks = parse_tracks_json(text, "inline").unwrap();
        assert_eq!(tracks.num_frames(), 3);
        assert_eq!(tracks.len(), 2);
        let again = parse_tracks_json(&tracks_to_json(&tracks), "again").unwrap();
        assert_eq!(again, tracks);
    }

    #[test]
    fn json_errors() {
        assert!(matches!(parse_tracks_json("", "e"), Err(Error::Validation(m)) if m == "no points"));
        assert!(matches!(
            parse_tracks_json("{\"num_frames\": 2, \"points\": [", "e"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_tracks_json(r#"{"num_frames": 2, "points": []}"#, "e"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn csv_parsing() {
        let text = "frame,point_id,x,y\n0,1,0,0\n1,1,1,0\n0,2,5,5\n1,2,5,6\n";
        let tracks = parse_tracks_csv(text, "inline").unwrap();
        assert_eq!(tracks.num_frames(), 2);
        assert_eq!(tracks.get(2).unwrap().coords[1], p(5.0, 6.0));

        let uneven = "frame,point_id,x,y\n0,1,0,0\n1,1,1,0\n0,2,5,5\n";
        assert!(matches!(parse_tracks_csv(uneven, "u"), Err(Error::Validation(_))));
        let gap = "frame,point_id,x,y\n0,1,0,0\n2,1,1,0\n";
        assert!(matches!(parse_tracks_csv(gap, "g"), Err(Error::Validation(_))));
        assert!(matches!(parse_tracks_csv("", "e"), Err(Error::Validation(_))));
        assert!(matches!(
            parse_tracks_csv("frame,point_id,x,y\n0,a,0,0\n", "bad"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn nearest_and_ties() {
        let tracks = TrackSet::new(
            1,
            vec![
                track(7, vec![p(10.0, 0.0)]),
                track(3, vec![p(-10.0, 0.0)]),
                track(5, vec![p(0.0, 50.0)]),
            ],
        )
        .unwrap();
        assert_eq!(tracks.nearest_sample(p(0.0, 0.0), 0).unwrap(), 3);
        assert_eq!(tracks.nearest_sample(p(10.0, 0.0), 0).unwrap(), 7);
        assert_eq!(tracks.nearest_sample(p(1e6, -1e6), 0).unwrap(), 7);
        assert!(tracks.nearest_sample(p(0.0, 0.0), 1).is_err());
    }

    #[test]
    fn transfer_examples() {
        let tracks = TrackSet::new(
            3,
            vec![
                track(0, vec![p(0.0, 0.0), p(2.0, 1.0), p(4.0, 2.0)]),
                track(1, vec![p(100.0, 0.0), p(100.0, -5.0), p(100.0, -10.0)]),
            ],
        )
        .unwrap();
        let q = p(3.0, 4.0);
        assert_eq!(tracks.transfer_point(q, 1, 1).unwrap(), q);
        // nearest in frame 0 is id 0, which moves by (4, 2) to frame 2
        assert_eq!(tracks.transfer_point(q, 0, 2).unwrap(), p(7.0, 6.0));
        // near id 1 in frame 2: 97 - 100 + 100, 0 - (-10) + (-5)
        assert_eq!(tracks.transfer_point(p(97.0, 0.0), 2, 1).unwrap(), p(97.0, 5.0));
    }

    #[test]
    fn heatmap_single_mover_among_static_points() {
        let mut points = vec![track(0, vec![p(10.5, 10.5), p(14.5, 10.5), p(18.5, 10.5)])];
        for (k, (x, y)) in [(2.5, 2.5), (18.5, 2.5), (2.5, 18.5), (18.5, 18.5)].iter().enumerate() {
            points.push(track(k as i64 + 1, vec![p(*x, *y); 3]));
        }
        let tracks = TrackSet::new(3, points).unwrap();
        let map = build_motion_heatmap(&tracks, 21, 21, 1.5).unwrap();
        let argmax = map
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!((argmax % 21, argmax / 21), (10, 10));
        assert!((map.get(10, 10) - 1.0).abs() < 1e-12);
        assert!(map.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(map.values.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
    }

    #[test]
    fn heatmap_static_is_zero() {
        let tracks = TrackSet::new(2, vec![track(0, vec![p(1.0, 1.0); 2]), track(1, vec![p(5.0, 5.0); 2])]).unwrap();
        let map = build_motion_heatmap(&tracks, 8, 8, 2.0).unwrap();
        assert!(map.values.iter().all(|&v| v == 0.0));
        assert!(build_motion_heatmap(&tracks, 0, 8, 2.0).is_err());
        assert!(build_motion_heatmap(&tracks, 8, 8, 0.0).is_err());
    }

    #[test]
    fn heatmap_two_points_near_binary() {
        // mover at (5.5, 5.5), static point at (25.5, 5.5), bandwidth 2:
        // at the mover the static kernel is exp(-400/8) ~ 2e-22 so the value is ~1
        let tracks = TrackSet::new(
            2,
            vec![
                track(0, vec![p(5.5, 5.5), p(9.5, 5.5)]),
                track(1, vec![p(25.5, 5.5); 2]),
            ],
        )
        .unwrap();
        let map = build_motion_heatmap(&tracks, 31, 11, 2.0).unwrap();
        assert!(map.get(5, 5) > 1.0 - 1e-12);
        assert!(map.get(25, 5) < 1e-12);
    }
}
