//! Plain-text matrix format: a line holding the dimension `d`, then `d` rows of
//! whitespace-separated reals. Writers emit 17 significant digits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::format::sig17;

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix text".into()))?;
    let dim: usize = header
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension line {header:?}")))?;
    if dim == 0 {
        return Err(Error::Empty);
    }
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {dim} rows, found {i}")))?;
        let row = parse_reals(line)?;
        if row.len() != dim {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {dim}", row.len())));
        }
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| sig17(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses one line of whitespace- or comma-separated reals.
pub fn parse_vector(line: &str) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(parse_reals(line)?))
}

pub fn format_vector(v: &DVector<f64>) -> String {
    v.iter().map(|x| sig17(*x)).collect::<Vec<_>>().join(" ")
}

fn parse_reals(line: &str) -> Result<Vec<f64>> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a real number: {t:?}")))
                .and_then(|v| if v.is_finite() { Ok(v) } else { Err(Error::NonFinite) })
        })
        .collect()
}
