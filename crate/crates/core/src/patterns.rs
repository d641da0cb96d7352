//! Marked point configurations observed in a rectangular window, and their
//! CSV representation.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Window};
use crate::scalar::Scalar;

/// Mark carried by a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Mark<T> {
    Unit,
    /// Type label in `1..=M`.
    Label(u32),
    /// Continuous mark in `[0, M_max]`.
    Size(T),
}

/// Mark space together with its probability measure: a point mass, the
/// uniform law on `{1..M}`, or the uniform law on `[0, M_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MarkSpace<T> {
    Unit,
    Finite(u32),
    Interval(T),
}

impl<T: Scalar> MarkSpace<T> {
    pub fn validate(&self, mark: &Mark<T>) -> Result<()> {
        let ok = match (self, mark) {
            (MarkSpace::Unit, Mark::Unit) => true,
            (MarkSpace::Finite(m), Mark::Label(l)) => *l >= 1 && l <= m,
            (MarkSpace::Interval(mx), Mark::Size(s)) => s.is_finite() && *s >= T::zero() && s <= mx,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ModelMismatch(format!("mark {mark:?} not in mark space {self:?}")))
        }
    }

    fn has_mark_column(&self) -> bool {
        !matches!(self, MarkSpace::Unit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint<T> {
    pub x: T,
    pub y: T,
    pub mark: Mark<T>,
}

impl<T: Scalar> MarkedPoint<T> {
    pub fn new(x: T, y: T, mark: Mark<T>) -> Self {
        Self { x, y, mark }
    }

    pub fn unmarked(x: T, y: T) -> Self {
        Self::new(x, y, Mark::Unit)
    }

    #[inline]
    pub fn location(&self) -> Point<T> {
        Point::new(self.x, self.y)
    }

    #[inline]
    pub fn dist2(&self, other: &Self) -> T {
        self.location().dist2(&other.location())
    }

    pub fn label(&self) -> Option<u32> {
        match self.mark {
            Mark::Label(l) => Some(l),
            _ => None,
        }
    }

    pub fn size(&self) -> T {
        match self.mark {
            Mark::Size(s) => s,
            _ => T::zero(),
        }
    }
}

/// Finite configuration observed in `window`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPattern<T> {
    points: Vec<MarkedPoint<T>>,
    window: Window<T>,
    mark_space: MarkSpace<T>,
}

impl<T: Scalar> PointPattern<T> {
    /// Validates marks, window membership and distinctness of locations.
    pub fn new(points: Vec<MarkedPoint<T>>, window: Window<T>, mark_space: MarkSpace<T>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if !p.location().is_finite() {
                return Err(Error::InvalidInput(format!("point {i} has non-finite coordinates")));
            }
            mark_space.validate(&p.mark)?;
            if !window.contains(&p.location()) {
                return Err(Error::InvalidInput(format!(
                    "point {i} ({}, {}) lies outside the observation window",
                    p.x, p.y
                )));
            }
            if !seen.insert(location_key(p)) {
                return Err(Error::InvalidInput(format!("duplicate location ({}, {})", p.x, p.y)));
            }
        }
        Ok(Self { points, window, mark_space })
    }

    pub fn empty(window: Window<T>, mark_space: MarkSpace<T>) -> Self {
        Self { points: Vec::new(), window, mark_space }
    }

    pub fn points(&self) -> &[MarkedPoint<T>] {
        &self.points
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn mark_space(&self) -> &MarkSpace<T> {
        &self.mark_space
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<MarkedPoint<T>> {
        self.points
    }

    /// Points lying in `region`, in their original order.
    pub fn restrict(&self, region: &Window<T>) -> PointPattern<T> {
        let points = self
            .points
            .iter()
            .filter(|p| region.contains(&p.location()))
            .copied()
            .collect();
        let window = Window::new(
            self.window.xmin.max(region.xmin),
            self.window.xmax.min(region.xmax),
            self.window.ymin.max(region.ymin),
            self.window.ymax.min(region.ymax),
        )
        .unwrap_or(*region);
        PointPattern { points, window, mark_space: self.mark_space }
    }
}

fn location_key<T: Scalar>(p: &MarkedPoint<T>) -> (u64, u64) {
    // +0.0 and -0.0 are the same location.
    let norm = |v: T| if v == T::zero() { 0.0 } else { v.to_f64_lossy() };
    (norm(p.x).to_bits(), norm(p.y).to_bits())
}

/// Shrinks the observation window by `d` on every side.
pub fn erode_window<T: Scalar>(window: &Window<T>, d: T) -> Result<Window<T>> {
    window.erode(d)
}

fn parse_field<T: Scalar>(s: &str, what: &str, line: u64) -> Result<T> {
    s.parse::<T>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse { line, message: format!("invalid {what} '{s}'") })
}

/// Reads a pattern from CSV with header `x,y,mark` (or `x,y` for the unit
/// mark space). LF and CRLF line endings are accepted.
pub fn read_pattern<T: Scalar, R: Read>(source: R, mark_space: MarkSpace<T>, window: Window<T>) -> Result<PointPattern<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let expected: &[&str] = if mark_space.has_mark_column() { &["x", "y", "mark"] } else { &["x", "y"] };
    if names != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header '{}', found '{}'", expected.join(","), names.join(",")),
        });
    }

    let mut points = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let x: T = parse_field(&rec[0], "x coordinate", line)?;
        let y: T = parse_field(&rec[1], "y coordinate", line)?;
        let mark = match mark_space {
            MarkSpace::Unit => Mark::Unit,
            MarkSpace::Finite(_) => Mark::Label(
                rec[2]
                    .parse::<u32>()
                    .map_err(|_| Error::Parse { line, message: format!("invalid mark label '{}'", &rec[2]) })?,
            ),
            MarkSpace::Interval(_) => Mark::Size(parse_field(&rec[2], "mark", line)?),
        };
        mark_space
            .validate(&mark)
            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let p = MarkedPoint::new(x, y, mark);
        if !window.contains(&p.location()) {
            return Err(Error::Parse { line, message: format!("point ({x}, {y}) outside the window") });
        }
        if !seen.insert(location_key(&p)) {
            return Err(Error::Parse { line, message: format!("duplicate location ({x}, {y})") });
        }
        points.push(p);
    }
    Ok(PointPattern { points, window, mark_space })
}

/// Writes the pattern as CSV using shortest round-trip decimal formatting.
pub fn write_pattern<T: Scalar, W: Write>(pattern: &PointPattern<T>, mut sink: W) -> Result<()> {
    let marked = pattern.mark_space.has_mark_column();
    if marked {
        writeln!(sink, "x,y,mark")?;
    } else {
        writeln!(sink, "x,y")?;
    }
    for p in &pattern.points {
        match p.mark {
            Mark::Unit => writeln!(sink, "{},{}", p.x, p.y)?,
            Mark::Label(l) => writeln!(sink, "{},{},{}", p.x, p.y, l)?,
            Mark::Size(s) => writeln!(sink, "{},{},{}", p.x, p.y, s)?,
        }
    }
    Ok(())
}
