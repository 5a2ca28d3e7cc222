//! Text artifacts: reports, CSV tables, mesh and matrix dumps.

use std::fmt::Write as _;

use transmission_core::fem::CsrMatrix;
use transmission_core::geometry::Point;
use transmission_core::mesh::{InterfaceEdge, Triangle};
use transmission_core::TriMesh;

/// Fixed-width scientific notation used in every CSV and report value.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.12e}")
    }
}

pub fn nums(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

/// `key: value` lines followed by `[csv name]` blocks.
#[derive(Debug, Default, Clone)]
pub struct Document {
    lines: Vec<(String, String)>,
    tables: Vec<Table>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

impl Document {
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn set_num(&mut self, key: impl Into<String>, v: f64) {
        self.set(key, num(v));
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}: {v}");
        }
        for t in &self.tables {
            let _ = write!(s, "\n[csv {}]\n{}", t.name, t.csv());
        }
        s
    }
}

/// Header `N T E`, then node lines `x y`, triangle lines `i j k tag` and
/// interface lines `i j curve inner_tag`, with 1-based curve ids and
/// 17 significant digits.
pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", mesh.nodes.len(), mesh.triangles.len(), mesh.interface_edges.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.16e} {:.16e}", p.x, p.y);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {} {}", t.nodes[0], t.nodes[1], t.nodes[2], t.tag);
    }
    for e in &mesh.interface_edges {
        let _ = writeln!(s, "{} {} {} {}", e.nodes[0], e.nodes[1], e.curve + 1, e.inner_tag);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub nodes: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub interface_edges: Vec<InterfaceEdge>,
}

/// Reads [`write_mesh`] output; errors carry the 1-based line.
pub fn read_mesh(text: &str) -> Result<MeshFile, String> {
    let mut lines = text.lines().enumerate();
    let bad = |i: usize, what: &str| format!("line {}: {what}", i + 1);
    let (i0, header) = lines.next().ok_or("empty mesh file")?;
    let counts: Vec<usize> = header.split_whitespace().map(|w| w.parse().map_err(|_| bad(i0, "bad header"))).collect::<Result<_, _>>()?;
    let [n, t, e] = counts[..] else {
        return Err(bad(i0, "header needs three counts"));
    };
    let mut out = MeshFile { nodes: Vec::with_capacity(n), triangles: Vec::with_capacity(t), interface_edges: Vec::with_capacity(e) };
    for k in 0..n + t + e {
        let (i, line) = lines.next().ok_or_else(|| format!("truncated mesh file after {} records", k))?;
        let w: Vec<&str> = line.split_whitespace().collect();
        if k < n {
            let [x, y] = w[..] else { return Err(bad(i, "node needs x y")) };
            out.nodes.push(Point::new(x.parse().map_err(|_| bad(i, "bad x"))?, y.parse().map_err(|_| bad(i, "bad y"))?));
            continue;
        }
        let ints: Vec<usize> = w.iter().map(|v| v.parse().map_err(|_| bad(i, "bad index"))).collect::<Result<_, _>>()?;
        if k < n + t {
            let [a, b, c, tag] = ints[..] else { return Err(bad(i, "triangle needs i j k tag")) };
            out.triangles.push(Triangle { nodes: [a, b, c], tag });
        } else {
            let [a, b, curve, inner_tag] = ints[..] else { return Err(bad(i, "interface edge needs i j curve inner_tag")) };
            if curve == 0 {
                return Err(bad(i, "curve ids start at 1"));
            }
            out.interface_edges.push(InterfaceEdge { nodes: [a, b], curve: curve - 1, inner_tag });
        }
    }
    Ok(out)
}

/// `row col value` per stored entry, row-major.
pub fn write_triplets(k: &CsrMatrix) -> String {
    let mut s = String::new();
    for (r, c, v) in k.triplets() {
        let _ = writeln!(s, "{r} {c} {v:.16e}");
    }
    s
}
