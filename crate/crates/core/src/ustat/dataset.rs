use std::ops::Index;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An ordered sample `X_1, ..., X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<X> {
    points: Vec<X>,
}

impl<X> Dataset<X> {
    pub fn new(points: Vec<X>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[X] {
        &self.points
    }

    pub fn into_points(self) -> Vec<X> {
        self.points
    }

    /// Copy with position `i` replaced by `value`.
    pub fn with_replaced(&self, i: usize, value: X) -> Self
    where
        X: Clone,
    {
        let mut points = self.points.clone();
        points[i] = value;
        Self { points }
    }

    /// Consecutive blocks `[0, size)`, `[size, 2 size)`, ...; the remainder is dropped.
    pub fn chunks(&self, count: usize, size: usize) -> impl Iterator<Item = Dataset<X>> + '_
    where
        X: Clone,
    {
        (0..count).map(move |c| Dataset::new(self.points[c * size..(c + 1) * size].to_vec()))
    }
}

impl<X> Index<usize> for Dataset<X> {
    type Output = X;
    fn index(&self, i: usize) -> &X {
        &self.points[i]
    }
}

impl<X> From<Vec<X>> for Dataset<X> {
    fn from(points: Vec<X>) -> Self {
        Self::new(points)
    }
}

impl<X: FromStr> Dataset<X> {
    /// One value per line; blank lines and `#` comments are skipped.
    pub fn parse_lines(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v = line
                .parse::<X>()
                .map_err(|_| Error::Parse { line: no + 1, message: format!("cannot parse {line:?}") })?;
            points.push(v);
        }
        Ok(Self { points })
    }
}

impl<X: std::fmt::Display> Dataset<X> {
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_numeric_lines() {
        let d: Dataset<f64> = Dataset::parse_lines("1.5\n\n# c\n-2\n").unwrap();
        assert_eq!(d.points(), &[1.5, -2.0]);
        let e = Dataset::<u32>::parse_lines("3\n-1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn chunking_drops_remainder() {
        let d = Dataset::new((0..7).collect::<Vec<u32>>());
        let c: Vec<_> = d.chunks(3, 2).collect();
        assert_eq!(c.len(), 3);
        assert_eq!(c[2].points(), &[4, 5]);
    }
}
