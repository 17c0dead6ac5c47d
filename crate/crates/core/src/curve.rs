//! Ordered (x, y) series with optional pointwise confidence bands.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub band: Option<Band>,
}

/// Points ordered by nondecreasing `x`. Bands, where present, enclose `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<CurvePoint>,
}

impl CurveSeries {
    pub fn new(x_label: &str, y_label: &str) -> Self {
        CurveSeries {
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            points: Vec::new(),
        }
    }

    pub fn from_xy(x_label: &str, y_label: &str, xy: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut c = Self::new(x_label, y_label);
        c.points = xy.into_iter().map(|(x, y)| CurvePoint { x, y, band: None }).collect();
        c
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }

    pub fn has_bands(&self) -> bool {
        self.points.iter().any(|p| p.band.is_some())
    }

    /// Trapezoidal area under the polyline.
    pub fn area(&self) -> f64 {
        trapezoid(&self.xy())
    }

    /// Value of the polyline at `x`. Where several points share `x` (vertical
    /// segments) the largest `y` is returned; between distinct abscissae the
    /// connecting segment is interpolated linearly. `None` outside the range.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        value_at(&self.xy(), x)
    }

    /// Checks ordering and band containment.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, w) in self.points.windows(2).enumerate() {
            if w[1].x < w[0].x {
                return Err(format!("x decreases at point {}", i + 1));
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            if let Some(b) = p.band {
                if !(b.lower <= p.y && p.y <= b.upper) {
                    return Err(format!(
                        "band [{}, {}] excludes y={} at point {i}",
                        b.lower, b.upper, p.y
                    ));
                }
            }
        }
        Ok(())
    }

    /// Writes `x,y[,lower,upper]` with the axis labels as column names and
    /// every number at 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let bands = self.has_bands();
        let mut header = vec![self.x_label.as_str(), self.y_label.as_str()];
        if bands {
            header.extend(["lower", "upper"]);
        }
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![fmt_num(p.x), fmt_num(p.y)];
            if bands {
                match p.band {
                    Some(b) => row.extend([fmt_num(b.lower), fmt_num(b.upper)]),
                    None => row.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() != 2 && header.len() != 4 {
            return Err(DataError::Parse(format!(
                "curve file needs 2 or 4 columns, found {}",
                header.len()
            )));
        }
        let mut curve = CurveSeries::new(&header[0], &header[1]);
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, DataError> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| DataError::Parse(format!("bad number '{}'", &rec[i])))
            };
            let band = if header.len() == 4 && !rec[2].is_empty() {
                Some(Band {
                    lower: num(2)?,
                    upper: num(3)?,
                })
            } else {
                None
            };
            curve.points.push(CurvePoint {
                x: num(0)?,
                y: num(1)?,
                band,
            });
        }
        Ok(curve)
    }
}

/// Formats a number with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

pub(crate) fn value_at(points: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = points.first()?;
    let last = points.last()?;
    if !(first.0 <= x && x <= last.0) {
        return None;
    }
    let lo = points.partition_point(|p| p.0 < x);
    let hi = points.partition_point(|p| p.0 <= x);
    if lo < hi {
        return points[lo..hi].iter().map(|p| p.1).reduce(f64::max);
    }
    let (x0, y0) = points[lo - 1];
    let (x1, y1) = points[lo];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolation_rules() {
        let pts = [(0.0, 0.0), (0.0, 0.5), (0.5, 1.0), (1.0, 1.0)];
        assert_eq!(value_at(&pts, 0.0), Some(0.5));
        assert_eq!(value_at(&pts, 0.25), Some(0.75));
        assert_eq!(value_at(&pts, 1.0), Some(1.0));
        assert_eq!(value_at(&pts, 1.5), None);
        assert_eq!(value_at(&[], 0.5), None);
    }

    #[test]
    fn linspace_hits_endpoints() {
        let g = linspace(0.2, 0.9, 8);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[7], 0.9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn trapezoid_of_unit_square() {
        assert_eq!(trapezoid(&[(0.0, 1.0), (1.0, 1.0)]), 1.0);
        assert_eq!(trapezoid(&[(0.0, 0.0), (1.0, 1.0)]), 0.5);
    }

    #[test]
    fn invariant_check_reports_violations() {
        let mut c = CurveSeries::from_xy("x", "y", [(0.0, 0.1), (1.0, 0.2)]);
        assert!(c.check_invariants().is_ok());
        c.points[0].band = Some(Band { lower: 0.2, upper: 0.3 });
        assert!(c.check_invariants().is_err());
        c.points.swap(0, 1);
        assert!(c.check_invariants().is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            pts in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3, proptest::option::of((0.0f64..1.0, 0.0f64..1.0))), 0..40)
        ) {
            let mut c = CurveSeries::new("threshold", "ratio, normalized");
            for (x, y, b) in pts {
                c.points.push(CurvePoint { x, y, band: b.map(|(l, u)| Band { lower: l, upper: u }) });
            }
            let mut buf = Vec::new();
            c.write_csv(&mut buf).unwrap();
            let back = CurveSeries::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
