//! JSON with fixed float formatting, CSV point clouds and binary field dumps.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::geometry::StarViolation;
use crate::solver::{DiscreteField, GridSpec, KindCounts, NodeKind, SolveStats};

/// Pretty JSON whose floats always carry 17 significant digits.
struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

fn coord_header(n: usize) -> String {
    (0..n)
        .map(|i| format!("u{i}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Columns `u0..u{N-1},lambda,margin`.
pub fn write_violations_csv(path: &Path, dim: usize, violations: &[StarViolation]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&coord_header(dim));
    out.push_str(",lambda,margin\n");
    for v in violations {
        for x in &v.point {
            out.push_str(&format!("{x:.16e},"));
        }
        out.push_str(&format!("{:.16e},{:.16e}\n", v.lambda, v.margin));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Node coordinates, classification and value for every node.
pub fn write_field_csv(path: &Path, field: &DiscreteField) -> Result<()> {
    let n = field.grid.dim();
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{},kind,value", coord_header(n))?;
    let mut p = vec![0.0; n];
    for i in 0..field.grid.len() {
        field.grid.node_coords(i, &mut p);
        for x in &p {
            write!(w, "{x:.16e},")?;
        }
        let kind = match field.kinds[i] {
            NodeKind::Interior => "interior",
            NodeKind::Dirichlet0 => "dirichlet0",
            NodeKind::Dirichlet1 => "dirichlet1",
            NodeKind::Exterior => "exterior",
        };
        writeln!(w, "{kind},{:.16e}", field.values[i])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FieldMeta<'a> {
    format: &'static str,
    grid: &'a GridSpec,
    spacing: Vec<f64>,
    counts: KindCounts,
    condenser: &'a crate::geometry::CondenserSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<&'a SolveStats>,
}

/// Row-major little-endian `f64` values plus a JSON sidecar `<stem>.meta.json`.
pub fn write_field_binary(
    dir: &Path,
    stem: &str,
    field: &DiscreteField,
    stats: Option<&SolveStats>,
) -> Result<()> {
    let mut bytes = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(format!("{stem}.bin")), bytes)?;
    let meta = FieldMeta {
        format: "f64-le row-major, axis 0 slowest",
        grid: &field.grid,
        spacing: field.grid.spacing(),
        counts: field.counts(),
        condenser: &field.condenser.spec,
        stats,
    };
    write_json(&dir.join(format!("{stem}.meta.json")), &meta)
}

pub fn read_field_values(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}
