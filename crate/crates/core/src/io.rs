//! Text formats for measurement sets and Stiefel points.
//!
//! * `edge_measurements`: header `r <r> field <real|complex>`, then one row per edge
//!   `i j m11 m12 ... mrr [w]` holding `R_ij` row-major (complex entries as `re im`
//!   pairs) and an optional trailing weight.
//! * `g2o_2d`: `EDGE_SE2 i j dx dy dtheta ...` records; only the rotation angle is used.
//!
//! Writers use shortest round-trip float formatting, so `edge_measurements` and point
//! files survive write-then-parse bit for bit. g2o stores an angle, so rotations come
//! back within a few ulps.

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::graphs::Graph;
use crate::instance::Measurements;
use crate::stiefel::StiefelProductPoint;
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

/// Largest `||R R^* - I||_F` accepted silently when reading measurement blocks.
pub const ORTHOGONALITY_WARN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFormat {
    EdgeMeasurements,
    #[serde(rename = "g2o_2d", alias = "g2o")]
    G2o2d,
}

impl std::str::FromStr for InstanceFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "edge_measurements" => Ok(Self::EdgeMeasurements),
            "g2o_2d" | "g2o" => Ok(Self::G2o2d),
            other => Err(format!("unknown instance format `{other}`")),
        }
    }
}

/// Measurements of either field.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMeasurements {
    Real(Measurements<f64>),
    Complex(Measurements<Complex<f64>>),
}

impl AnyMeasurements {
    pub fn field(&self) -> Field {
        match self {
            Self::Real(_) => Field::Real,
            Self::Complex(_) => Field::Complex,
        }
    }

    pub fn r(&self) -> usize {
        match self {
            Self::Real(m) => m.r(),
            Self::Complex(m) => m.r(),
        }
    }

    pub fn graph(&self) -> &Graph {
        match self {
            Self::Real(m) => m.graph(),
            Self::Complex(m) => m.graph(),
        }
    }
}

/// Result of reading an instance file: the data plus non-fatal validation warnings.
#[derive(Debug, Clone)]
pub struct ParsedInstance {
    pub measurements: AnyMeasurements,
    pub warnings: Vec<String>,
}

pub fn parse_instance(path: &Path, format: InstanceFormat) -> Result<ParsedInstance> {
    parse_instance_str(&crate::error::read_file(path)?, format)
}

pub fn parse_instance_str(text: &str, format: InstanceFormat) -> Result<ParsedInstance> {
    let parsed = match format {
        InstanceFormat::EdgeMeasurements => parse_edge_measurements(text)?,
        InstanceFormat::G2o2d => parse_g2o(text)?,
    };
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    Ok(parsed)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((k + 1, line))
    })
}

fn parse_num<F: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<F> {
    tok.parse::<F>()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

fn parse_edge_measurements(text: &str) -> Result<ParsedInstance> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(0, "empty file: missing `r <r> field <real|complex>` header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "r" || h[2] != "field" {
        return Err(Error::parse(hline, "expected header `r <r> field <real|complex>`"));
    }
    let r: usize = parse_num(h[1], hline, "block size")?;
    if r == 0 {
        return Err(Error::parse(hline, "block size must be positive"));
    }
    let field: Field = h[3].parse().map_err(|e: String| Error::parse(hline, e))?;
    let per_entry = match field {
        Field::Real => 1,
        Field::Complex => 2,
    };
    let width = per_entry * r * r;

    let mut rows: Vec<(usize, usize, f64, Vec<f64>, usize)> = Vec::new();
    let mut max_index = 0usize;
    for (line, content) in lines {
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 2 + width && toks.len() != 3 + width {
            return Err(Error::parse(
                line,
                format!(
                    "expected `i j` followed by {width} values and an optional weight, got {} tokens",
                    toks.len()
                ),
            ));
        }
        let i: usize = parse_num(toks[0], line, "vertex index")?;
        let j: usize = parse_num(toks[1], line, "vertex index")?;
        let vals = toks[2..2 + width]
            .iter()
            .map(|t| parse_num::<f64>(t, line, "matrix entry"))
            .collect::<Result<Vec<_>>>()?;
        let w = match toks.get(2 + width) {
            Some(t) => parse_num(t, line, "weight")?,
            None => 1.0,
        };
        max_index = max_index.max(i).max(j);
        rows.push((i, j, w, vals, line));
    }
    if rows.is_empty() {
        return Err(Error::parse(hline, "no measurement rows"));
    }
    let n = max_index + 1;

    let measurements = match field {
        Field::Real => AnyMeasurements::Real(assemble::<f64>(n, r, &rows)?),
        Field::Complex => AnyMeasurements::Complex(assemble::<Complex<f64>>(n, r, &rows)?),
    };
    let warnings = orthogonality_warnings(&measurements);
    Ok(ParsedInstance { measurements, warnings })
}

fn assemble<T: Scalar>(n: usize, r: usize, rows: &[(usize, usize, f64, Vec<f64>, usize)]) -> Result<Measurements<T>> {
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(rows.len());
    let mut blocks = Vec::with_capacity(rows.len());
    for (i, j, w, vals, line) in rows {
        let (i, j, line) = (*i, *j, *line);
        if i == j {
            return Err(Error::parse(line, format!("self-loop at vertex {i}")));
        }
        if !(*w > 0.0) || !w.is_finite() {
            return Err(Error::parse(line, format!("non-positive weight {w}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::parse(line, format!("duplicate edge ({i}, {j})")));
        }
        let m = DMatrix::from_fn(r, r, |a, b| match T::FIELD {
            Field::Real => T::from_real(vals[a * r + b]),
            Field::Complex => T::from_parts(vals[2 * (a * r + b)], vals[2 * (a * r + b) + 1]),
        });
        edges.push((i, j, *w));
        blocks.push(if i < j { m } else { m.adjoint() });
    }
    let graph = Graph::new(n, edges.iter().copied())?;
    // Graph::new sorts edges; reorder blocks to match.
    let mut keyed: Vec<((usize, usize), DMatrix<T>)> = edges
        .iter()
        .zip(blocks)
        .map(|(&(i, j, _), b)| ((i.min(j), i.max(j)), b))
        .collect();
    keyed.sort_by_key(|(k, _)| *k);
    Measurements::new(graph, r, keyed.into_iter().map(|(_, b)| b).collect())
}

fn orthogonality_warnings(m: &AnyMeasurements) -> Vec<String> {
    fn count<T: Scalar>(m: &Measurements<T>) -> usize {
        let eye = DMatrix::<T>::identity(m.r(), m.r());
        m.blocks()
            .iter()
            .filter(|b| crate::linalg::fro(&(*b * b.adjoint() - &eye)) > ORTHOGONALITY_WARN_TOL)
            .count()
    }
    let bad = match m {
        AnyMeasurements::Real(m) => count(m),
        AnyMeasurements::Complex(m) => count(m),
    };
    if bad > 0 {
        vec![format!(
            "{bad} measurement block(s) deviate from orthogonality by more than {ORTHOGONALITY_WARN_TOL:e}"
        )]
    } else {
        Vec::new()
    }
}

fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn parse_g2o(text: &str) -> Result<ParsedInstance> {
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    let mut edges: Vec<(usize, usize, DMatrix<f64>)> = Vec::new();
    let mut max_index: Option<usize> = None;
    for (line, content) in content_lines(text) {
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "VERTEX_SE2" => {
                let id: usize = parse_num(
                    toks.get(1).ok_or_else(|| Error::parse(line, "VERTEX_SE2 without id"))?,
                    line,
                    "vertex id",
                )?;
                max_index = Some(max_index.map_or(id, |m| m.max(id)));
            }
            "FIX" => {}
            "EDGE_SE2" => {
                if toks.len() < 6 {
                    return Err(Error::parse(line, "EDGE_SE2 needs `i j dx dy dtheta`"));
                }
                let i: usize = parse_num(toks[1], line, "vertex id")?;
                let j: usize = parse_num(toks[2], line, "vertex id")?;
                let theta: f64 = parse_num(toks[5], line, "rotation angle")?;
                max_index = Some(max_index.map_or(i.max(j), |m| m.max(i).max(j)));
                if i == j {
                    warnings.push(format!("line {line}: self-loop edge at vertex {i} ignored"));
                    continue;
                }
                if !seen.insert((i.min(j), i.max(j))) {
                    warnings.push(format!(
                        "line {line}: duplicate edge ({i}, {j}) ignored, keeping the first"
                    ));
                    continue;
                }
                let rot = rotation(theta);
                if i < j {
                    edges.push((i, j, rot));
                } else {
                    edges.push((j, i, rot.transpose()));
                }
            }
            other => return Err(Error::parse(line, format!("unknown record tag `{other}`"))),
        }
    }
    let n = max_index.ok_or_else(|| Error::parse(0, "no vertices or edges in g2o file"))? + 1;
    edges.sort_by_key(|(i, j, _)| (*i, *j));
    let graph = Graph::new(n, edges.iter().map(|(i, j, _)| (*i, *j, 1.0)))?;
    let blocks = edges.into_iter().map(|(_, _, b)| b).collect();
    Ok(ParsedInstance {
        measurements: AnyMeasurements::Real(Measurements::new(graph, 2, blocks)?),
        warnings,
    })
}

/// Serializes measurements in the `edge_measurements` format.
pub fn write_edge_measurements<T: Scalar>(m: &Measurements<T>) -> String {
    let r = m.r();
    let mut s = format!("r {} field {}\n", r, T::FIELD);
    for (e, b) in m.graph().edges().iter().zip(m.blocks()) {
        let _ = write!(s, "{} {}", e.i, e.j);
        for a in 0..r {
            for c in 0..r {
                let v = b[(a, c)];
                match T::FIELD {
                    Field::Real => {
                        let _ = write!(s, " {:?}", v.re());
                    }
                    Field::Complex => {
                        let _ = write!(s, " {:?} {:?}", v.re(), v.im());
                    }
                }
            }
        }
        if e.w != 1.0 {
            let _ = write!(s, " {:?}", e.w);
        }
        s.push('\n');
    }
    s
}

pub fn write_any_edge_measurements(m: &AnyMeasurements) -> String {
    match m {
        AnyMeasurements::Real(m) => write_edge_measurements(m),
        AnyMeasurements::Complex(m) => write_edge_measurements(m),
    }
}

fn is_rotation(b: &DMatrix<f64>) -> bool {
    (b.transpose() * b - DMatrix::identity(2, 2)).norm() <= ORTHOGONALITY_WARN_TOL && b.determinant() > 0.0
}

/// Serializes planar rotation measurements as g2o `EDGE_SE2` records (zero
/// translation, identity information). Requires `r = 2`, unit weights and blocks in SO(2).
pub fn write_g2o(m: &Measurements<f64>) -> Result<String> {
    if m.r() != 2 {
        return Err(Error::param("g2o output requires r = 2"));
    }
    if m.graph().edges().iter().any(|e| e.w != 1.0) {
        return Err(Error::param("g2o output does not carry edge weights"));
    }
    if let Some(k) = m.blocks().iter().position(|b| !is_rotation(b)) {
        let e = m.graph().edges()[k];
        return Err(Error::param(format!(
            "measurement on edge ({}, {}) is not a rotation and cannot be written as a g2o angle",
            e.i, e.j
        )));
    }
    let mut s = String::new();
    for i in 0..m.n() {
        let _ = writeln!(s, "VERTEX_SE2 {i} 0 0 0");
    }
    for (e, b) in m.graph().edges().iter().zip(m.blocks()) {
        let theta = b[(1, 0)].atan2(b[(0, 0)]);
        let _ = writeln!(s, "EDGE_SE2 {} {} 0 0 {:?} 1 0 0 1 0 1", e.i, e.j, theta);
    }
    Ok(s)
}

/// Serializes a point as `point n <n> r <r> p <p> field <f>` followed by one row per
/// block: `i` and the `r x p` entries row-major.
pub fn write_point<T: Scalar>(y: &StiefelProductPoint<T>) -> String {
    let (n, r, p) = (y.n(), y.r(), y.p());
    let mut s = format!("point n {n} r {r} p {p} field {}\n", T::FIELD);
    for i in 0..n {
        let b = y.block(i);
        let _ = write!(s, "{i}");
        for a in 0..r {
            for c in 0..p {
                let v = b[(a, c)];
                match T::FIELD {
                    Field::Real => {
                        let _ = write!(s, " {:?}", v.re());
                    }
                    Field::Complex => {
                        let _ = write!(s, " {:?} {:?}", v.re(), v.im());
                    }
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Parses the format written by [`write_point`]; blocks are validated as Stiefel points.
pub fn parse_point<T: Scalar>(text: &str) -> Result<StiefelProductPoint<T>> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "empty point file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 9 || h[0] != "point" || h[1] != "n" || h[3] != "r" || h[5] != "p" || h[7] != "field" {
        return Err(Error::parse(hline, "expected `point n <n> r <r> p <p> field <f>`"));
    }
    let n: usize = parse_num(h[2], hline, "n")?;
    let r: usize = parse_num(h[4], hline, "r")?;
    let p: usize = parse_num(h[6], hline, "p")?;
    let field: Field = h[8].parse().map_err(|e: String| Error::parse(hline, e))?;
    if field != T::FIELD {
        return Err(Error::parse(hline, format!("point is {field}, expected {}", T::FIELD)));
    }
    let per = if field == Field::Real { 1 } else { 2 };
    let mut data = DMatrix::<T>::zeros(n * r, p);
    let mut filled = vec![false; n];
    for (line, content) in lines {
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 1 + per * r * p {
            return Err(Error::parse(line, "wrong number of entries in point row"));
        }
        let i: usize = parse_num(toks[0], line, "block index")?;
        if i >= n || filled[i] {
            return Err(Error::parse(line, format!("block index {i} out of range or repeated")));
        }
        filled[i] = true;
        let vals = toks[1..]
            .iter()
            .map(|t| parse_num::<f64>(t, line, "entry"))
            .collect::<Result<Vec<_>>>()?;
        for a in 0..r {
            for c in 0..p {
                let k = a * p + c;
                data[(i * r + a, c)] = match field {
                    Field::Real => T::from_real(vals[k]),
                    Field::Complex => T::from_parts(vals[2 * k], vals[2 * k + 1]),
                };
            }
        }
    }
    if let Some(i) = filled.iter().position(|f| !f) {
        return Err(Error::parse(0, format!("missing block {i}")));
    }
    StiefelProductPoint::from_stacked(data, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{NoiseModel, SyncInstance};
    use crate::linalg::fro;

    type C = Complex<f64>;

    fn real(p: ParsedInstance) -> Measurements<f64> {
        match p.measurements {
            AnyMeasurements::Real(m) => m,
            _ => panic!("expected real measurements"),
        }
    }

    #[test]
    fn g2o_zero_and_quarter_turns() {
        let m = real(parse_instance_str("EDGE_SE2 0 1 1.0 0.0 0.0 1 0 0 1 0 1\n", InstanceFormat::G2o2d).unwrap());
        assert_eq!(m.get(0, 1).unwrap(), DMatrix::identity(2, 2));
        let m = real(parse_instance_str("EDGE_SE2 0 1 0 0 1.5707963 1 0 0 1 0 1\n", InstanceFormat::G2o2d).unwrap());
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(fro(&(m.get(0, 1).unwrap() - expect)) < 1e-7);
    }

    #[test]
    fn g2o_reverse_orientation_and_duplicates() {
        let text = "VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 0 0 0\nVERTEX_SE2 2 0 0 0\n\
                    EDGE_SE2 2 1 0 0 0.5\nEDGE_SE2 1 2 0 0 0.9\nEDGE_SE2 0 1 0 0 0.1\n";
        let parsed = parse_instance_str(text, InstanceFormat::G2o2d).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        let m = real(parsed);
        assert_eq!(m.n(), 3);
        assert_eq!(m.graph().num_edges(), 2);
        // Stored as R_12 = R(0.5)^T, so R_21 = R(0.5).
        assert!(fro(&(m.get(2, 1).unwrap() - rotation(0.5))) < 1e-15);
    }

    #[test]
    fn g2o_unknown_tag_reports_line() {
        match parse_instance_str("VERTEX_SE2 0 0 0 0\n\nEDGE_SE3:QUAT 0 1\n", InstanceFormat::G2o2d) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn edge_measurements_errors_and_warnings() {
        match parse_instance_str("r 1 field real\n0 1 1.0\n1 2 x\n", InstanceFormat::EdgeMeasurements) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_instance_str("r 1 field quaternion\n0 1 1\n", InstanceFormat::EdgeMeasurements).is_err());
        let noisy = parse_instance_str("r 1 field real\n0 1 0.7\n", InstanceFormat::EdgeMeasurements).unwrap();
        assert_eq!(noisy.warnings.len(), 1);
        let clean = parse_instance_str("r 1 field real\n0 1 -1\n", InstanceFormat::EdgeMeasurements).unwrap();
        assert!(clean.warnings.is_empty());
    }

    #[test]
    fn edge_measurements_round_trip_real_and_complex() {
        let g = Graph::erdos_renyi(8, 0.5, 3).unwrap();
        let inst = SyncInstance::<f64>::generate(&g, 2, NoiseModel::Gaussian { sigma: 0.3 }, 1).unwrap();
        let text = write_edge_measurements(inst.measurements());
        let back = real(parse_instance_str(&text, InstanceFormat::EdgeMeasurements).unwrap());
        assert_eq!(&back, inst.measurements());
        assert_eq!(write_edge_measurements(&back), text);

        let inst = SyncInstance::<C>::generate(&g, 3, NoiseModel::Gaussian { sigma: 0.3 }, 1).unwrap();
        let text = write_edge_measurements(inst.measurements());
        match parse_instance_str(&text, InstanceFormat::EdgeMeasurements)
            .unwrap()
            .measurements
        {
            AnyMeasurements::Complex(m) => assert_eq!(&m, inst.measurements()),
            _ => panic!("expected complex"),
        }
    }

    #[test]
    fn weighted_rows_round_trip() {
        let text = "r 1 field real\n0 1 1.0 2.5\n1 2 -1.0\n";
        let parsed = parse_instance_str(text, InstanceFormat::EdgeMeasurements).unwrap();
        assert_eq!(parsed.measurements.graph().edges()[0].w, 2.5);
        assert_eq!(write_any_edge_measurements(&parsed.measurements), text);
    }

    #[test]
    fn g2o_round_trip_ten_edges() {
        let g = Graph::circulant(10, 2).unwrap();
        assert_eq!(g.num_edges(), 10);
        let truth: Vec<DMatrix<f64>> = (0..10).map(|i| rotation(0.7 * i as f64 - 2.0)).collect();
        let inst = SyncInstance::with_truth(&g, truth, NoiseModel::None, 0).unwrap();
        let text = write_g2o(inst.measurements()).unwrap();
        let back = real(parse_instance_str(&text, InstanceFormat::G2o2d).unwrap());
        assert_eq!(back.graph(), inst.graph());
        for (a, b) in back.blocks().iter().zip(inst.measurements().blocks()) {
            assert!(fro(&(a - b)) <= 1e-12);
        }
    }

    #[test]
    fn point_round_trip() {
        let y = StiefelProductPoint::<C>::random(4, 2, 3, 8);
        let back: StiefelProductPoint<C> = parse_point(&write_point(&y)).unwrap();
        assert_eq!(back, y);
        assert!(parse_point::<f64>(&write_point(&y)).is_err());
    }
}
