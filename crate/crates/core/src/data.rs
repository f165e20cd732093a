//! Variables, samples and the dataset CSV format.
//!
//! A [`Dataset`] holds `m` variables with `N` aligned samples each. Real
//! variables are stored row-major (`N × dim`), categorical variables as symbol
//! indices in `0..cardinality`.
//!
//! CSV layout: one header row, one row per sample. Coordinate `k` of variable
//! `i` is the column `var<i>_<k>`; a categorical variable occupies a single
//! column `var<i>_0:cat<C>`. Reals are written with 17 significant digits so
//! a write/read cycle is lossless.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableSpec {
    Real { dim: usize },
    Categorical { cardinality: usize },
}

impl VariableSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VariableSpec::Real { dim: 0 } => Err(Error::invalid("real dimension must be >= 1")),
            VariableSpec::Categorical { cardinality } if cardinality < 2 => {
                Err(Error::invalid("categorical cardinality must be >= 2"))
            }
            _ => Ok(()),
        }
    }
}

/// A single observation of a variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sample<'a> {
    Real(&'a [f64]),
    Categorical(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Column {
    Real(Vec<f64>),
    Categorical(Vec<usize>),
}

/// `N` samples of one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    spec: VariableSpec,
    column: Column,
}

impl Variable {
    /// Real variable from row-major values (`values.len() == N * dim`).
    pub fn real(dim: usize, values: Vec<f64>) -> Result<Self> {
        let spec = VariableSpec::Real { dim };
        spec.validate()?;
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: values.len() % dim,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real variable"));
        }
        Ok(Self {
            spec,
            column: Column::Real(values),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptySamples)?.len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::real(dim, values)
    }

    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::real(1, values.to_vec())
    }

    pub fn categorical(cardinality: usize, symbols: Vec<usize>) -> Result<Self> {
        let spec = VariableSpec::Categorical { cardinality };
        spec.validate()?;
        if let Some(&symbol) = symbols.iter().find(|&&s| s >= cardinality) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                cardinality,
            });
        }
        Ok(Self {
            spec,
            column: Column::Categorical(symbols),
        })
    }

    pub fn spec(&self) -> VariableSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        match (&self.column, self.spec) {
            (Column::Real(v), VariableSpec::Real { dim }) => v.len() / dim,
            (Column::Categorical(v), _) => v.len(),
            _ => unreachable!("column/spec kinds always agree"),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension of a real variable, `None` for categorical ones.
    pub fn dim(&self) -> Option<usize> {
        match self.spec {
            VariableSpec::Real { dim } => Some(dim),
            VariableSpec::Categorical { .. } => None,
        }
    }

    pub fn cardinality(&self) -> Option<usize> {
        match self.spec {
            VariableSpec::Categorical { cardinality } => Some(cardinality),
            VariableSpec::Real { .. } => None,
        }
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        match &self.column {
            Column::Real(v) => {
                let d = self.dim().unwrap_or(1);
                Sample::Real(&v[i * d..(i + 1) * d])
            }
            Column::Categorical(v) => Sample::Categorical(v[i]),
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    /// Row-major values of a real variable.
    pub fn real_values(&self) -> Option<&[f64]> {
        match &self.column {
            Column::Real(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn symbols(&self) -> Option<&[usize]> {
        match &self.column {
            Column::Categorical(v) => Some(v),
            Column::Real(_) => None,
        }
    }

    /// Rows at the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> Variable {
        let column = match &self.column {
            Column::Real(v) => {
                let d = self.dim().unwrap_or(1);
                Column::Real(
                    indices
                        .iter()
                        .flat_map(|&i| v[i * d..(i + 1) * d].iter().copied())
                        .collect(),
                )
            }
            Column::Categorical(v) => Column::Categorical(indices.iter().map(|&i| v[i]).collect()),
        };
        Variable {
            spec: self.spec,
            column,
        }
    }

    /// Applies `f` elementwise to a real variable.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Variable> {
        match &self.column {
            Column::Real(v) => Variable::real(self.dim().unwrap_or(1), v.iter().map(|&x| f(x)).collect()),
            Column::Categorical(_) => Err(Error::unsupported("categorical variable", "elementwise maps")),
        }
    }
}

/// `m` variables with aligned samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    variables: Vec<Variable>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        let n = variables.first().ok_or(Error::EmptySamples)?.len();
        for v in &variables {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: v.len(),
                });
            }
        }
        Ok(Self { variables })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_samples(&self) -> usize {
        self.variables[0].len()
    }

    /// Column headers in CSV order.
    pub fn headers(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, v) in self.variables.iter().enumerate() {
            match v.spec() {
                VariableSpec::Real { dim } => out.extend((0..dim).map(|k| format!("var{i}_{k}"))),
                VariableSpec::Categorical { cardinality } => out.push(format!("var{i}_0:cat{cardinality}")),
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.headers().join(","))?;
        let mut line = String::new();
        for row in 0..self.num_samples() {
            line.clear();
            for (i, v) in self.variables.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                match v.sample(row) {
                    Sample::Real(xs) => {
                        for (k, x) in xs.iter().enumerate() {
                            if k > 0 {
                                line.push(',');
                            }
                            line.push_str(&format!("{x:.16e}"));
                        }
                    }
                    Sample::Categorical(s) => line.push_str(&s.to_string()),
                }
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(h) => h?,
            None => return Err(parse_err(1, "missing header row")),
        };
        let columns = parse_header(&header)?;

        let mut real: Vec<Vec<f64>> = vec![Vec::new(); columns.len()];
        let mut cat: Vec<Vec<usize>> = vec![Vec::new(); columns.len()];
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let lineno = idx + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let expected: usize = columns.iter().map(|c| c.width()).sum();
            if fields.len() != expected {
                return Err(parse_err(
                    lineno,
                    format!("expected {expected} fields, found {}", fields.len()),
                ));
            }
            let mut pos = 0;
            for (vi, col) in columns.iter().enumerate() {
                match *col {
                    HeaderVar::Real(dim) => {
                        for f in &fields[pos..pos + dim] {
                            let x: f64 = f
                                .trim()
                                .parse()
                                .map_err(|_| parse_err(lineno, format!("not a number: {f:?}")))?;
                            if !x.is_finite() {
                                return Err(parse_err(lineno, format!("non-finite value {f:?}")));
                            }
                            real[vi].push(x);
                        }
                        pos += dim;
                    }
                    HeaderVar::Categorical(c) => {
                        let f = fields[pos];
                        let s: usize = f
                            .trim()
                            .parse()
                            .map_err(|_| parse_err(lineno, format!("not a symbol: {f:?}")))?;
                        if s >= c {
                            return Err(parse_err(lineno, format!("symbol {s} out of range for cat{c}")));
                        }
                        cat[vi].push(s);
                        pos += 1;
                    }
                }
            }
        }

        let variables = columns
            .iter()
            .enumerate()
            .map(|(vi, col)| match *col {
                HeaderVar::Real(dim) => Variable::real(dim, std::mem::take(&mut real[vi])),
                HeaderVar::Categorical(c) => Variable::categorical(c, std::mem::take(&mut cat[vi])),
            })
            .collect::<Result<Vec<_>>>()?;
        if variables[0].is_empty() {
            return Err(Error::EmptySamples);
        }
        Dataset::new(variables)
    }

    /// Gathers a set of columns into one variable.
    ///
    /// Each name is either a full column header (`var3_1`) or a variable
    /// prefix (`var3`) selecting all of its coordinates. Real columns are
    /// concatenated; a categorical column must be selected alone.
    pub fn gather(&self, names: &[&str]) -> Result<Variable> {
        let mut picks: Vec<(usize, Option<usize>)> = Vec::new();
        for name in names {
            let name = name.trim();
            let (var, coord) = parse_column_name(name)
                .ok_or_else(|| Error::invalid(format!("unknown column {name:?}")))?;
            if var >= self.num_variables() {
                return Err(Error::invalid(format!("unknown column {name:?}")));
            }
            picks.push((var, coord));
        }
        if picks.is_empty() {
            return Err(Error::invalid("no columns selected"));
        }

        if let [(var, coord)] = picks[..] {
            if let VariableSpec::Categorical { .. } = self.variables[var].spec() {
                if coord.unwrap_or(0) != 0 {
                    return Err(Error::invalid("categorical variables have a single column"));
                }
                return Ok(self.variables[var].clone());
            }
        }

        let mut cols: Vec<(usize, usize)> = Vec::new();
        for (var, coord) in picks {
            let v = &self.variables[var];
            let dim = v
                .dim()
                .ok_or_else(|| Error::invalid("categorical columns cannot be mixed with others"))?;
            match coord {
                Some(k) if k < dim => cols.push((var, k)),
                Some(k) => return Err(Error::invalid(format!("var{var} has no coordinate {k}"))),
                None => cols.extend((0..dim).map(|k| (var, k))),
            }
        }
        let n = self.num_samples();
        let mut values = Vec::with_capacity(n * cols.len());
        for row in 0..n {
            for &(var, k) in &cols {
                if let Sample::Real(xs) = self.variables[var].sample(row) {
                    values.push(xs[k]);
                }
            }
        }
        Variable::real(cols.len(), values)
    }
}

#[derive(Clone, Copy, Debug)]
enum HeaderVar {
    Real(usize),
    Categorical(usize),
}

impl HeaderVar {
    fn width(&self) -> usize {
        match *self {
            HeaderVar::Real(d) => d,
            HeaderVar::Categorical(_) => 1,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// `var3_1` → (3, Some(1)); `var3` → (3, None).
fn parse_column_name(name: &str) -> Option<(usize, Option<usize>)> {
    let name = name.split(':').next()?;
    let rest = name.strip_prefix("var")?;
    match rest.split_once('_') {
        Some((v, k)) => Some((v.parse().ok()?, Some(k.parse().ok()?))),
        None => Some((rest.parse().ok()?, None)),
    }
}

fn parse_header(header: &str) -> Result<Vec<HeaderVar>> {
    let mut vars: BTreeMap<usize, HeaderVar> = BTreeMap::new();
    let mut last: Option<(usize, usize)> = None;
    for field in header.trim_end_matches('\r').split(',') {
        let field = field.trim();
        let (name, cat) = match field.split_once(':') {
            Some((n, c)) => {
                let card = c
                    .strip_prefix("cat")
                    .and_then(|c| c.parse::<usize>().ok())
                    .filter(|&c| c >= 2)
                    .ok_or_else(|| parse_err(1, format!("bad column suffix in {field:?}")))?;
                (n, Some(card))
            }
            None => (field, None),
        };
        let (var, coord) = match parse_column_name(name) {
            Some((v, Some(k))) => (v, k),
            _ => return Err(parse_err(1, format!("bad column name {field:?}"))),
        };
        let expected = match last {
            None => (0, 0),
            Some((v, k)) if var == v => (v, k + 1),
            Some((v, _)) => (v + 1, 0),
        };
        if (var, coord) != expected {
            return Err(parse_err(1, format!("column {field:?} out of order")));
        }
        match (cat, vars.get_mut(&var)) {
            (Some(c), None) => {
                vars.insert(var, HeaderVar::Categorical(c));
            }
            (None, None) => {
                vars.insert(var, HeaderVar::Real(1));
            }
            (None, Some(HeaderVar::Real(d))) => *d += 1,
            _ => return Err(parse_err(1, format!("categorical var{var} must be a single column"))),
        }
        last = Some((var, coord));
    }
    if vars.is_empty() {
        return Err(parse_err(1, "no columns"));
    }
    Ok(vars.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> Dataset {
        Dataset::new(vec![
            Variable::real(2, vec![0.1, 1.0 / 3.0, -2.5e-300, 7.0]).unwrap(),
            Variable::categorical(3, vec![2, 0]).unwrap(),
            Variable::scalars(&[std::f64::consts::PI, -0.0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn headers_follow_naming_scheme() {
        assert_eq!(mixed().headers(), ["var0_0", "var0_1", "var1_0:cat3", "var2_0"]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = mixed();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let csv = "var0_0,var1_0\n1.0,2.0\n3.0\n";
        match Dataset::read_csv(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let csv = "var0_0,var1_0\n1.0,abc\n";
        assert!(matches!(
            Dataset::read_csv(csv.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn out_of_order_header_is_rejected() {
        assert!(Dataset::read_csv("var0_1,var0_0\n1,2\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("var1_0\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn gather_selects_columns() {
        let ds = mixed();
        let v = ds.gather(&["var0_1", "var2"]).unwrap();
        assert_eq!(v.dim(), Some(2));
        assert_eq!(v.real_values().unwrap(), &[1.0 / 3.0, std::f64::consts::PI, 7.0, -0.0]);
        let c = ds.gather(&["var1"]).unwrap();
        assert_eq!(c.cardinality(), Some(3));
        assert!(ds.gather(&["var1", "var0"]).is_err());
        assert!(ds.gather(&["var9"]).is_err());
    }

    #[test]
    fn invariants_on_construction() {
        assert!(Variable::categorical(1, vec![0]).is_err());
        assert!(matches!(
            Variable::categorical(2, vec![0, 2]),
            Err(Error::SymbolOutOfRange { symbol: 2, .. })
        ));
        assert!(Variable::real(0, vec![]).is_err());
        assert!(Variable::real(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Variable::scalars(&[f64::NAN]).is_err());
        assert!(Dataset::new(vec![
            Variable::scalars(&[1.0]).unwrap(),
            Variable::scalars(&[1.0, 2.0]).unwrap()
        ])
        .is_err());
    }
}
