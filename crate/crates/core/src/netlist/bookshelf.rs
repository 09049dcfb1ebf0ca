// SPDX-License-Identifier: Apache-2.0

//! Reader and writer for the subset of the Bookshelf placement format used by
//! the ISPD 2005 benchmarks: `.aux`, `.nodes`, `.nets`, `.pl` and `.scl`.
//! `.wts` and `.shapes` are accepted in the `.aux` list and ignored.
//!
//! See `docs/bookshelf.md` for the grammar.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Netlist, NetlistBuilder, Placement, Region, Violation};
use crate::num::Scalar;

#[derive(Debug, Error)]
pub enum BookshelfError {
    #[error("i/o error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {msg}")]
    Syntax {
        file: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{file}:{line}: unknown node \"{name}\"")]
    UnknownNode {
        file: PathBuf,
        line: usize,
        name: String,
    },
    #[error("aux file lists no {0} file")]
    MissingFile(&'static str),
    #[error("invalid netlist: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

type Result<T> = std::result::Result<T, BookshelfError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| BookshelfError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| BookshelfError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-empty, non-comment lines with their 1-based line number.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = match l.find('#') {
            Some(c) => &l[..c],
            None => l,
        }
        .trim();
        if l.is_empty() || l.starts_with("UCLA") {
            None
        } else {
            Some((i + 1, l))
        }
    })
}

struct Ctx<'a> {
    file: &'a Path,
}

impl Ctx<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> BookshelfError {
        BookshelfError::Syntax {
            file: self.file.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn num<T: Scalar>(&self, line: usize, tok: Option<&str>, what: &str) -> Result<T> {
        let tok = tok.ok_or_else(|| self.err(line, format!("missing {what}")))?;
        tok.parse::<T>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(line, format!("bad {what} \"{tok}\"")))
    }
}

/// `Key : value` header value, if `line` starts with `key`.
fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(key)?;
    let rest = rest.trim_start();
    Some(rest.strip_prefix(':').unwrap_or(rest).trim())
}

#[derive(Debug, Default)]
struct AuxFiles {
    nodes: Option<PathBuf>,
    nets: Option<PathBuf>,
    pl: Option<PathBuf>,
    scl: Option<PathBuf>,
}

fn parse_aux(path: &Path) -> Result<AuxFiles> {
    let text = read(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let ctx = Ctx { file: path };
    let mut files = AuxFiles::default();
    for (ln, line) in content_lines(&text) {
        let Some((_, list)) = line.split_once(':') else {
            return Err(ctx.err(ln, "expected \"<Kind> : <files...>\""));
        };
        for name in list.split_whitespace() {
            let p = dir.join(name);
            match Path::new(name).extension().and_then(|e| e.to_str()) {
                Some("nodes") => files.nodes = Some(p),
                Some("nets") => files.nets = Some(p),
                Some("pl") => files.pl = Some(p),
                Some("scl") => files.scl = Some(p),
                _ => {}
            }
        }
    }
    Ok(files)
}

struct RawNode<T> {
    name: String,
    width: T,
    height: T,
    terminal: bool,
}

fn parse_nodes<T: Scalar>(path: &Path) -> Result<Vec<RawNode<T>>> {
    let text = read(path)?;
    let ctx = Ctx { file: path };
    let mut out = Vec::new();
    let mut declared = None;
    for (ln, line) in content_lines(&text) {
        if let Some(v) = header_value(line, "NumNodes") {
            declared = Some(v.parse::<usize>().map_err(|_| ctx.err(ln, "bad NumNodes"))?);
            continue;
        }
        if header_value(line, "NumTerminals").is_some() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let name = toks.next().unwrap().to_string();
        let width: T = ctx.num(ln, toks.next(), "node width")?;
        let height: T = ctx.num(ln, toks.next(), "node height")?;
        let terminal = match toks.next() {
            None => false,
            Some("terminal") | Some("terminal_NI") => true,
            Some(other) => return Err(ctx.err(ln, format!("unexpected token \"{other}\""))),
        };
        out.push(RawNode {
            name,
            width,
            height,
            terminal,
        });
    }
    if let Some(n) = declared {
        if n != out.len() {
            return Err(ctx.err(0, format!("NumNodes says {n}, file lists {}", out.len())));
        }
    }
    Ok(out)
}

struct RawNet<T> {
    name: String,
    pins: Vec<(String, Option<(T, T)>, usize)>,
}

fn parse_nets<T: Scalar>(path: &Path) -> Result<Vec<RawNet<T>>> {
    let text = read(path)?;
    let ctx = Ctx { file: path };
    let mut nets: Vec<RawNet<T>> = Vec::new();
    let mut remaining = 0usize;
    for (ln, line) in content_lines(&text) {
        if header_value(line, "NumNets").is_some() || header_value(line, "NumPins").is_some() {
            continue;
        }
        if let Some(v) = header_value(line, "NetDegree") {
            if remaining != 0 {
                return Err(ctx.err(ln, format!("previous net is missing {remaining} pins")));
            }
            let mut toks = v.split_whitespace();
            let degree: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| ctx.err(ln, "bad NetDegree"))?;
            let name = toks
                .next()
                .map(str::to_string)
                .unwrap_or_else(|| format!("net{}", nets.len()));
            nets.push(RawNet {
                name,
                pins: Vec::with_capacity(degree),
            });
            remaining = degree;
            continue;
        }
        if remaining == 0 {
            return Err(ctx.err(ln, "pin line outside a net"));
        }
        // node [I|O|B] [: xoff yoff]
        let (head, offsets) = match line.split_once(':') {
            Some((h, o)) => (h, Some(o)),
            None => (line, None),
        };
        let node = head
            .split_whitespace()
            .next()
            .ok_or_else(|| ctx.err(ln, "empty pin line"))?
            .to_string();
        let offset = match offsets {
            Some(o) => {
                let mut t = o.split_whitespace();
                Some((ctx.num(ln, t.next(), "pin x offset")?, ctx.num(ln, t.next(), "pin y offset")?))
            }
            None => None,
        };
        nets.last_mut().unwrap().pins.push((node, offset, ln));
        remaining -= 1;
    }
    if remaining != 0 {
        return Err(ctx.err(0, format!("last net is missing {remaining} pins")));
    }
    Ok(nets)
}

fn parse_pl<T: Scalar>(path: &Path) -> Result<Vec<(String, T, T, usize)>> {
    let text = read(path)?;
    let ctx = Ctx { file: path };
    let mut out = Vec::new();
    for (ln, line) in content_lines(&text) {
        let mut toks = line.split_whitespace();
        let name = toks.next().unwrap().to_string();
        let x: T = ctx.num(ln, toks.next(), "x coordinate")?;
        let y: T = ctx.num(ln, toks.next(), "y coordinate")?;
        out.push((name, x, y, ln));
    }
    Ok(out)
}

/// Row bounding box `(x_lo, y_lo, x_hi, y_hi)` and the tallest row height.
fn parse_scl<T: Scalar>(path: &Path) -> Result<Option<((T, T, T, T), T)>> {
    let text = read(path)?;
    let ctx = Ctx { file: path };
    let mut bbox: Option<(T, T, T, T)> = None;
    let mut row_h = T::zero();
    let (mut y, mut h, mut spacing, mut site_w) = (T::zero(), T::zero(), T::one(), T::one());
    let (mut x0, mut sites) = (T::zero(), T::zero());
    for (ln, line) in content_lines(&text) {
        if line.starts_with("CoreRow") {
            (y, h, spacing, site_w, x0, sites) =
                (T::zero(), T::zero(), T::one(), T::one(), T::zero(), T::zero());
        } else if let Some(v) = header_value(line, "Coordinate") {
            y = ctx.num(ln, Some(v), "row coordinate")?;
        } else if let Some(v) = header_value(line, "Height") {
            h = ctx.num(ln, Some(v), "row height")?;
        } else if let Some(v) = header_value(line, "Sitewidth") {
            site_w = ctx.num(ln, Some(v), "site width")?;
        } else if let Some(v) = header_value(line, "Sitespacing") {
            spacing = ctx.num(ln, Some(v), "site spacing")?;
        } else if let Some(v) = header_value(line, "SubrowOrigin") {
            let mut t = v.split_whitespace();
            x0 = ctx.num(ln, t.next(), "subrow origin")?;
            if t.next() == Some("NumSites") {
                let rest = t.collect::<Vec<_>>();
                let tok = rest.iter().copied().find(|s| *s != ":");
                sites = ctx.num(ln, tok, "NumSites")?;
            }
        } else if line == "End" {
            let x1 = x0 + sites * spacing.max(site_w);
            let r = (x0, y, x1, y + h);
            row_h = row_h.max(h);
            bbox = Some(match bbox {
                None => r,
                Some(b) => (b.0.min(r.0), b.1.min(r.1), b.2.max(r.2), b.3.max(r.3)),
            });
        }
    }
    Ok(bbox.map(|b| (b, row_h)))
}

/// Parses a Bookshelf design from its `.aux` file.
///
/// Nets with fewer than two pins are dropped. Terminals are marked
/// non-movable. Without an `.scl` file the region is the bounding box of
/// the `.pl` placement.
pub fn parse_bookshelf<T: Scalar>(aux: impl AsRef<Path>) -> Result<(Netlist<T>, Placement<T>)> {
    let files = parse_aux(aux.as_ref())?;
    let nodes_path = files.nodes.ok_or(BookshelfError::MissingFile("nodes"))?;
    let nets_path = files.nets.ok_or(BookshelfError::MissingFile("nets"))?;
    let pl_path = files.pl.ok_or(BookshelfError::MissingFile("pl"))?;

    let raw_nodes = parse_nodes::<T>(&nodes_path)?;
    let raw_nets = parse_nets::<T>(&nets_path)?;
    let raw_pl = parse_pl::<T>(&pl_path)?;
    let scl = match &files.scl {
        Some(p) => parse_scl::<T>(p)?,
        None => None,
    };

    let index: HashMap<&str, usize> = raw_nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.as_str(), i))
        .collect();

    let mut placement = Placement::zeros(raw_nodes.len());
    for (name, x, y, ln) in &raw_pl {
        let &i = index.get(name.as_str()).ok_or_else(|| BookshelfError::UnknownNode {
            file: pl_path.clone(),
            line: *ln,
            name: name.clone(),
        })?;
        placement.x[i] = *x;
        placement.y[i] = *y;
    }

    let movable_heights: Vec<T> = raw_nodes.iter().filter(|n| !n.terminal).map(|n| n.height).collect();
    let (region, row_height) = match scl {
        Some(((x0, y0, x1, y1), rh)) => (Region::new(x0, y0, x1 - x0, y1 - y0), rh),
        None => {
            let mut b = (T::infinity(), T::infinity(), T::neg_infinity(), T::neg_infinity());
            for (i, n) in raw_nodes.iter().enumerate() {
                b.0 = b.0.min(placement.x[i]);
                b.1 = b.1.min(placement.y[i]);
                b.2 = b.2.max(placement.x[i] + n.width);
                b.3 = b.3.max(placement.y[i] + n.height);
            }
            let rh = movable_heights.iter().copied().fold(T::zero(), T::max);
            if raw_nodes.is_empty() {
                (Region::new(T::zero(), T::zero(), T::zero(), T::zero()), T::one())
            } else {
                (Region::new(b.0, b.1, b.2 - b.0, b.3 - b.1), rh)
            }
        }
    };

    let mut b = NetlistBuilder::new(region).row_height(if row_height > T::zero() {
        row_height
    } else {
        T::one()
    });
    for n in &raw_nodes {
        b.add_node(n.name.clone(), n.width, n.height, !n.terminal);
    }
    let mut dropped = 0usize;
    for net in raw_nets {
        if net.pins.len() < 2 {
            dropped += 1;
            continue;
        }
        let mut pins = Vec::with_capacity(net.pins.len());
        for (name, off, ln) in net.pins {
            let &i = index.get(name.as_str()).ok_or_else(|| BookshelfError::UnknownNode {
                file: nets_path.clone(),
                line: ln,
                name: name.clone(),
            })?;
            let n = &raw_nodes[i];
            let (cx, cy) = (n.width * T::half(), n.height * T::half());
            let (ox, oy) = off.unwrap_or((T::zero(), T::zero()));
            pins.push((i, cx + ox, cy + oy));
        }
        b.add_net(net.name, &pins);
    }
    if dropped > 0 {
        log::info!("dropped {dropped} nets with fewer than two pins");
    }
    let netlist = b.build();
    netlist.validate().map_err(BookshelfError::Invalid)?;
    Ok((netlist, placement))
}

/// Renders a Bookshelf `.pl` file.
pub fn placement_text<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>) -> String {
    let mut s = String::from("UCLA pl 1.0\n\n");
    for (i, n) in netlist.nodes.iter().enumerate() {
        let _ = write!(s, "{}\t{}\t{}\t: N", n.name, placement.x[i], placement.y[i]);
        if !n.movable {
            s.push_str(" /FIXED");
        }
        s.push('\n');
    }
    s
}

/// Writes a Bookshelf `.pl` file.
pub fn write_placement<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write(path.as_ref(), &placement_text(netlist, placement))
}

/// Writes a complete design (`<name>.aux` plus nodes/nets/pl/scl) into
/// `dir` and returns the `.aux` path.
pub fn write_design<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    dir: impl AsRef<Path>,
    name: &str,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| BookshelfError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut nodes = String::from("UCLA nodes 1.0\n\n");
    let terminals = netlist.nodes.iter().filter(|n| !n.movable).count();
    let _ = writeln!(nodes, "NumNodes : {}", netlist.nodes.len());
    let _ = writeln!(nodes, "NumTerminals : {terminals}\n");
    for n in &netlist.nodes {
        let _ = write!(nodes, "\t{}\t{}\t{}", n.name, n.width, n.height);
        if !n.movable {
            nodes.push_str("\tterminal");
        }
        nodes.push('\n');
    }

    let mut nets = String::from("UCLA nets 1.0\n\n");
    let _ = writeln!(nets, "NumNets : {}", netlist.nets.len());
    let _ = writeln!(nets, "NumPins : {}\n", netlist.pins.len());
    for net in &netlist.nets {
        let _ = writeln!(nets, "NetDegree : {} {}", net.pins.len(), net.name);
        for &p in &net.pins {
            let pin = &netlist.pins[p];
            let node = &netlist.nodes[pin.node];
            let ox = pin.offset_x - node.width * T::half();
            let oy = pin.offset_y - node.height * T::half();
            let _ = writeln!(nets, "\t{}\tB : {} {}", node.name, ox, oy);
        }
    }

    let r = &netlist.region;
    let rh = netlist.row_height;
    let mut rows = Vec::new();
    let mut y = r.y_lo;
    while y < r.y_hi() {
        let h = rh.min(r.y_hi() - y);
        rows.push((y, h));
        y += h;
    }
    let mut scl = String::from("UCLA scl 1.0\n\n");
    let _ = writeln!(scl, "NumRows : {}\n", rows.len());
    for (y, h) in rows {
        let _ = writeln!(scl, "CoreRow Horizontal");
        let _ = writeln!(scl, "  Coordinate : {y}");
        let _ = writeln!(scl, "  Height : {h}");
        let _ = writeln!(scl, "  Sitewidth : 1");
        let _ = writeln!(scl, "  Sitespacing : 1");
        let _ = writeln!(scl, "  Siteorient : 1");
        let _ = writeln!(scl, "  Sitesymmetry : 1");
        let _ = writeln!(scl, "  SubrowOrigin : {} NumSites : {}", r.x_lo, r.width);
        let _ = writeln!(scl, "End");
    }

    let aux = format!("RowBasedPlacement : {name}.nodes {name}.nets {name}.pl {name}.scl\n");
    write(&dir.join(format!("{name}.nodes")), &nodes)?;
    write(&dir.join(format!("{name}.nets")), &nets)?;
    write_placement(netlist, placement, dir.join(format!("{name}.pl")))?;
    write(&dir.join(format!("{name}.scl")), &scl)?;
    let aux_path = dir.join(format!("{name}.aux"));
    write(&aux_path, &aux)?;
    Ok(aux_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES: &str = "UCLA nodes 1.0\n# toy\nNumNodes : 3\nNumTerminals : 1\n  a 2 1\n  b 4 1\n  p 1 1 terminal\n";
    const NETS: &str = "UCLA nets 1.0\nNumNets : 2\nNumPins : 5\nNetDegree : 2 n0\n a I : 0.5 0\n b O\nNetDegree : 3 n1\n a I\n b I : -1 0\n p O : 0 0\n";
    const PL: &str = "UCLA pl 1.0\na 1 2 : N\nb 5 2 : N\np 0 0 : N /FIXED\n";
    const SCL: &str = "UCLA scl 1.0\nNumRows : 2\nCoreRow Horizontal\n Coordinate : 0\n Height : 1\n Sitewidth : 1\n Sitespacing : 1\n SubrowOrigin : 0 NumSites : 10\nEnd\nCoreRow Horizontal\n Coordinate : 1\n Height : 1\n Sitewidth : 1\n Sitespacing : 1\n SubrowOrigin : 0 NumSites : 10\nEnd\n";

    fn toy(dir: &Path, nets: &str) -> PathBuf {
        fs::write(dir.join("t.nodes"), NODES).unwrap();
        fs::write(dir.join("t.nets"), nets).unwrap();
        fs::write(dir.join("t.pl"), PL).unwrap();
        fs::write(dir.join("t.scl"), SCL).unwrap();
        let aux = dir.join("t.aux");
        fs::write(&aux, "RowBasedPlacement : t.nodes t.nets t.wts t.pl t.scl\n").unwrap();
        aux
    }

    #[test]
    fn parses_toy_design() {
        let dir = tempfile::tempdir().unwrap();
        let (nl, pl) = parse_bookshelf::<f64>(toy(dir.path(), NETS)).unwrap();
        assert_eq!(nl.nodes.len(), 3);
        assert_eq!(nl.nets.len(), 2);
        assert_eq!(nl.pins.len(), 5);
        assert!(!nl.nodes[2].movable);
        assert_eq!(nl.region, Region::new(0.0, 0.0, 10.0, 2.0));
        // center-relative 0.5 on a width-2 node -> 1.5 from the lower-left.
        assert_eq!(nl.pins[0].offset_x, 1.5);
        assert_eq!(nl.pins[1].offset_x, 2.0);
        assert_eq!((pl.x[1], pl.y[1]), (5.0, 2.0));
    }

    #[test]
    fn empty_nets_section() {
        let dir = tempfile::tempdir().unwrap();
        let (nl, _) = parse_bookshelf::<f64>(toy(dir.path(), "UCLA nets 1.0\nNumNets : 0\nNumPins : 0\n")).unwrap();
        assert_eq!(nl.nets.len(), 0);
        assert!(nl.validate().is_ok());
    }

    #[test]
    fn unknown_node_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let nets = "NetDegree : 2\n a I\n o999 O\n";
        let err = parse_bookshelf::<f64>(toy(dir.path(), nets)).unwrap_err();
        assert!(err.to_string().contains("o999"), "{err}");
    }

    #[test]
    fn malformed_line_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let aux = toy(dir.path(), NETS);
        fs::write(dir.path().join("t.pl"), "UCLA pl 1.0\na one 2 : N\n").unwrap();
        match parse_bookshelf::<f64>(aux).unwrap_err() {
            BookshelfError::Syntax { line, file, .. } => {
                assert_eq!(line, 2);
                assert!(file.ends_with("t.pl"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn terminals_written_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let (nl, pl) = parse_bookshelf::<f64>(toy(dir.path(), NETS)).unwrap();
        let text = placement_text(&nl, &pl);
        let fixed: Vec<_> = text.lines().filter(|l| l.contains("/FIXED")).collect();
        assert_eq!(fixed.len(), 1);
        assert!(fixed[0].starts_with("p\t"));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let (nl, pl) = parse_bookshelf::<f64>(toy(dir.path(), NETS)).unwrap();
        let err = write_placement(&nl, &pl, dir.path().join("missing/dir/out.pl")).unwrap_err();
        assert!(matches!(err, BookshelfError::Io { .. }));
    }

    #[test]
    fn design_round_trip_is_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let (nl, mut pl) = parse_bookshelf::<f64>(toy(dir.path(), NETS)).unwrap();
        pl.x[0] = 1.0 / 3.0;
        pl.y[1] = 0.1 + 0.2;
        let out = tempfile::tempdir().unwrap();
        let aux = write_design(&nl, &pl, out.path(), "rt").unwrap();
        let (nl2, pl2) = parse_bookshelf::<f64>(&aux).unwrap();
        assert_eq!(nl, nl2);
        assert_eq!(pl, pl2);
    }
}
