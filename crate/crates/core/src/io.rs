//! Plain-text file formats.
//!
//! * `.ten`: `tensor v1`, a line of extents, then every value in linear
//!   (mode-1 fastest) order.
//! * `.obs`: `obs v1`, a line of extents, then one `i1 .. iK value` line per
//!   observation with 1-based indices.
//! * `.fac`: one `factor k rows cols` block per mode (1-based `k`, values
//!   column-major), preceded by a `weights R` block for CP models or a
//!   `core` block for Tucker models.
//!
//! Numbers are written with 17 significant digits, so a write/read cycle
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::factorize::{CpModel, Model, TuckerModel};
use crate::matrix::Matrix;
use crate::tensor::{DenseTensor, ObservationSet};

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

fn push_values(out: &mut String, values: &[f64]) {
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        num(out, v);
    }
    out.push('\n');
}

fn push_extents(out: &mut String, shape: &[usize]) {
    let s: Vec<String> = shape.iter().map(ToString::to_string).collect();
    out.push_str(&s.join(" "));
    out.push('\n');
}

pub fn format_tensor(x: &DenseTensor) -> String {
    let mut out = String::from("tensor v1\n");
    push_extents(&mut out, x.shape());
    push_values(&mut out, x.values());
    out
}

pub fn format_observations(obs: &ObservationSet) -> String {
    let mut out = String::from("obs v1\n");
    push_extents(&mut out, obs.shape());
    for (j, &v) in obs.values().iter().enumerate() {
        for i in obs.multi_index(j) {
            write!(out, "{} ", i + 1).expect("writing to a String");
        }
        num(&mut out, v);
        out.push('\n');
    }
    out
}

fn push_matrix(out: &mut String, header: &str, m: &Matrix) {
    writeln!(out, "{header} {} {}", m.rows(), m.cols()).expect("writing to a String");
    for j in 0..m.cols() {
        push_values(out, m.column(j));
    }
}

pub fn format_model(model: &Model) -> String {
    let mut out = String::new();
    let factors = match model {
        Model::Cp(cp) => {
            writeln!(out, "weights {}", cp.components()).expect("writing to a String");
            push_values(&mut out, cp.weights());
            cp.factors()
        }
        Model::Tucker(t) => {
            out.push_str("core\n");
            push_extents(&mut out, t.core().shape());
            push_values(&mut out, t.core().values());
            t.factors()
        }
    };
    for (k, f) in factors.iter().enumerate() {
        push_matrix(&mut out, &format!("factor {}", k + 1), f);
    }
    out
}

/// Raw factor matrices (for example, solver components), one block per mode.
pub fn format_factors(factors: &[Matrix]) -> String {
    let mut out = String::new();
    for (k, f) in factors.iter().enumerate() {
        push_matrix(&mut out, &format!("factor {}", k + 1), f);
    }
    out
}

/// Whitespace tokens tagged with their 1-based line numbers.
struct Tokens<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .flat_map(|(n, l)| l.split_whitespace().map(move |t| (n + 1, t)))
            .collect();
        Self { lines, pos: 0 }
    }

    fn line(&self) -> usize {
        self.lines.get(self.pos).or(self.lines.last()).map_or(1, |t| t.0)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line(), msg: msg.into() }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.lines.get(self.pos) {
            Some(&(_, t)) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(self.err(format!("unexpected end of input, expected {what}"))),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|t| t.1)
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next(word)?;
        if t != word {
            self.pos -= 1;
            return Err(self.err(format!("expected `{word}`, found `{t}`")));
        }
        Ok(())
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let t = self.next(what)?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("invalid {what} `{t}`"))
        })
    }

    fn f64(&mut self) -> Result<f64> {
        let t = self.next("value")?;
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.err(format!("invalid value `{t}`")))
            }
        }
    }

    /// Extents on the line of the current token.
    fn extents(&mut self) -> Result<Vec<usize>> {
        let line = self.line();
        let mut shape = Vec::new();
        while self.lines.get(self.pos).is_some_and(|t| t.0 == line) {
            let n = self.usize("extent")?;
            if n == 0 {
                self.pos -= 1;
                return Err(self.err("extents must be positive"));
            }
            shape.push(n);
        }
        if shape.is_empty() {
            return Err(self.err("missing extents"));
        }
        Ok(shape)
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn end(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected trailing token `{t}`"))),
        }
    }
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let mut t = Tokens::new(text);
    t.expect("tensor")?;
    t.expect("v1")?;
    let shape = t.extents()?;
    let n = shape.iter().product();
    let values = t.values(n)?;
    t.end()?;
    DenseTensor::new(shape, values)
}

pub fn parse_observations(text: &str) -> Result<ObservationSet> {
    let mut t = Tokens::new(text);
    t.expect("obs")?;
    t.expect("v1")?;
    let shape = t.extents()?;
    let mut indices = Vec::new();
    let mut values = Vec::new();
    while t.peek().is_some() {
        let line = t.line();
        let mut idx = Vec::with_capacity(shape.len());
        for (k, &n) in shape.iter().enumerate() {
            let i = t.usize("index")?;
            if i == 0 || i > n {
                t.pos -= 1;
                return Err(t.err(format!("index {i} out of range 1..={n} in mode {}", k + 1)));
            }
            idx.push(i - 1);
        }
        values.push(t.f64()?);
        if t.lines.get(t.pos.saturating_sub(1)).map(|x| x.0) != Some(line) {
            return Err(Error::Parse { line, msg: "observation split across lines".into() });
        }
        indices.push(idx);
    }
    ObservationSet::new(shape, &indices, values)
}

fn parse_matrix_block(t: &mut Tokens<'_>, expected_mode: usize) -> Result<Matrix> {
    t.expect("factor")?;
    let k = t.usize("mode")?;
    if k != expected_mode {
        t.pos -= 1;
        return Err(t.err(format!("expected factor {expected_mode}, found {k}")));
    }
    let rows = t.usize("rows")?;
    let cols = t.usize("cols")?;
    let values = t.values(rows * cols)?;
    Matrix::from_col_major(rows, cols, values)
}

/// Reads a `.fac` file: a CP model when it starts with `weights`, a Tucker
/// model when it starts with `core`.
pub fn parse_model(text: &str) -> Result<Model> {
    let mut t = Tokens::new(text);
    match t.peek() {
        Some("weights") => {
            t.expect("weights")?;
            let r = t.usize("component count")?;
            let weights = t.values(r)?;
            let mut factors = Vec::new();
            while t.peek().is_some() {
                factors.push(parse_matrix_block(&mut t, factors.len() + 1)?);
            }
            Ok(Model::Cp(CpModel::new(weights, factors)?))
        }
        Some("core") => {
            t.expect("core")?;
            let shape = t.extents()?;
            let n = shape.iter().product();
            let core = DenseTensor::new(shape.clone(), t.values(n)?)?;
            let factors = (0..shape.len())
                .map(|k| parse_matrix_block(&mut t, k + 1))
                .collect::<Result<Vec<_>>>()?;
            t.end()?;
            Ok(Model::Tucker(TuckerModel::new(core, factors)?))
        }
        _ => Err(t.err("expected `weights` or `core`")),
    }
}

/// Reads bare `factor` blocks.
pub fn parse_factors(text: &str) -> Result<Vec<Matrix>> {
    let mut t = Tokens::new(text);
    let mut factors = Vec::new();
    while t.peek().is_some() {
        factors.push(parse_matrix_block(&mut t, factors.len() + 1)?);
    }
    Ok(factors)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    parse_tensor(&fs::read_to_string(path)?)
}

pub fn write_tensor(path: impl AsRef<Path>, x: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, format_tensor(x))?)
}

pub fn read_observations(path: impl AsRef<Path>) -> Result<ObservationSet> {
    parse_observations(&fs::read_to_string(path)?)
}

pub fn write_observations(path: impl AsRef<Path>, obs: &ObservationSet) -> Result<()> {
    Ok(fs::write(path, format_observations(obs))?)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model> {
    parse_model(&fs::read_to_string(path)?)
}

pub fn write_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    Ok(fs::write(path, format_model(model))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_roundtrip_is_exact() {
        let x = DenseTensor::from_fn(vec![3, 2, 2], |i| {
            (i[0] as f64 + 0.1) / 3.0 - (i[1] * i[2]) as f64 * std::f64::consts::PI * 1e-7
        })
        .unwrap();
        let back = parse_tensor(&format_tensor(&x)).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn observation_file_uses_one_based_indices() {
        let x = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let obs = ObservationSet::sample(&x, vec![1, 2]).unwrap();
        let text = format_observations(&obs);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("obs v1"));
        assert_eq!(lines.next(), Some("2 2"));
        assert!(lines.next().unwrap().starts_with("2 1 "));
        assert!(lines.next().unwrap().starts_with("1 2 "));
        assert_eq!(parse_observations(&text).unwrap(), obs);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_tensor("tensor v1\n2 2\n1 2 x 4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_observations("obs v1\n2 2\n1 1 0.5\n3 1 0.5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_tensor("tensor v2\n1\n0\n").is_err());
        assert!(parse_tensor("tensor v1\n2\n1\n").is_err());
        assert!(parse_tensor("tensor v1\n1\n1 2\n").is_err());
        assert!(parse_observations("obs v1\n2\n1 1.0\n1 2.0\n").is_err());
    }

    #[test]
    fn model_roundtrip() {
        let a = Matrix::from_rows(&[vec![0.6, 0.0], vec![0.8, 1.0]]).unwrap();
        let cp = Model::Cp(CpModel::new(vec![2.5, 1.0 / 3.0], vec![a.clone(), a]).unwrap());
        assert_eq!(parse_model(&format_model(&cp)).unwrap(), cp);
        let core = DenseTensor::new(vec![1, 2], vec![1.0 / 7.0, -2.0]).unwrap();
        let t = Model::Tucker(
            TuckerModel::new(core, vec![Matrix::from_rows(&[vec![0.6], vec![0.8]]).unwrap(), Matrix::identity(2)])
                .unwrap(),
        );
        assert_eq!(parse_model(&format_model(&t)).unwrap(), t);
    }
}
