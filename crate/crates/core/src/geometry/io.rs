//! PGM bitmaps for GridSets and `cx,cy,r` CSV files for disk lists.
//!
//! Bitmaps are written row-major with the first row holding the cells of
//! lowest `y`; a value of 1 marks an included cell.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Disk, Domain, GridSet, Point};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmFormat {
    /// ASCII, magic `P2`.
    Plain,
    /// Binary, magic `P5`.
    Raw,
}

pub fn write_pgm<W: Write>(set: &GridSet, format: PgmFormat, mut out: W) -> Result<()> {
    let d = set.domain();
    let (w, h) = (d.width(), d.height());
    match format {
        PgmFormat::Plain => {
            writeln!(out, "P2\n{w} {h}\n1")?;
            for row in set.bits().chunks(w) {
                let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        PgmFormat::Raw => {
            write!(out, "P5\n{w} {h}\n1\n")?;
            let bytes: Vec<u8> = set.bits().iter().map(|&b| b as u8).collect();
            out.write_all(&bytes)?;
        }
    }
    Ok(())
}

pub fn save_pgm(set: &GridSet, format: PgmFormat, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_pgm(set, format, &mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_err(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        message: message.into(),
    }
}

/// Header tokens, skipping `#` comments; leaves the reader positioned right
/// after the single whitespace byte that ends the header.
fn header_tokens<R: BufRead>(r: &mut R, count: usize) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut byte = [0u8; 1];
    let mut in_comment = false;
    while tokens.len() < count {
        if r.read(&mut byte)? == 0 {
            return Err(parse_err("truncated PGM header"));
        }
        let c = byte[0] as char;
        if in_comment {
            in_comment = c != '\n';
            continue;
        }
        if c == '#' {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else {
            current.push(c);
        }
    }
    Ok(tokens)
}

/// Read a PGM bitmap onto `domain`, whose dimensions must match the image.
pub fn read_pgm<R: Read>(domain: &Domain, input: R) -> Result<GridSet> {
    let mut r = BufReader::new(input);
    let head = header_tokens(&mut r, 4)?;
    let dims: Vec<usize> = head[1..]
        .iter()
        .map(|t| t.parse().map_err(|_| parse_err(format!("bad PGM header token {t:?}"))))
        .collect::<Result<_>>()?;
    let (w, h, maxval) = (dims[0], dims[1], dims[2]);
    if maxval != 1 {
        return Err(parse_err(format!("maxval must be 1, got {maxval}")));
    }
    if w != domain.width() || h != domain.height() {
        return Err(Error::Resolution(format!(
            "image is {w}x{h}, domain expects {}x{}",
            domain.width(),
            domain.height()
        )));
    }
    let bits: Vec<bool> = match head[0].as_str() {
        "P2" => {
            let mut text = String::new();
            r.read_to_string(&mut text)?;
            let vals: Vec<bool> = text
                .split_ascii_whitespace()
                .map(|t| match t {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(parse_err(format!("pixel value {other:?} not 0 or 1"))),
                })
                .collect::<Result<_>>()?;
            vals
        }
        "P5" => {
            let mut bytes = vec![0u8; w * h];
            r.read_exact(&mut bytes)?;
            bytes
                .into_iter()
                .map(|b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    other => Err(parse_err(format!("pixel value {other} not 0 or 1"))),
                })
                .collect::<Result<_>>()?
        }
        magic => return Err(parse_err(format!("unsupported PGM magic {magic:?}"))),
    };
    GridSet::from_bits(domain, bits)
}

pub fn load_pgm(domain: &Domain, path: impl AsRef<Path>) -> Result<GridSet> {
    read_pgm(domain, std::fs::File::open(path)?)
}

/// Image dimensions of a PGM file without reading its pixels.
pub fn pgm_dimensions(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let head = header_tokens(&mut r, 3)?;
    let w = head[1].parse().map_err(|_| parse_err("bad PGM width"))?;
    let h = head[2].parse().map_err(|_| parse_err("bad PGM height"))?;
    Ok((w, h))
}

#[derive(Debug, Serialize, Deserialize)]
struct DiskRow {
    cx: f64,
    cy: f64,
    r: f64,
}

pub fn write_disks<W: Write>(disks: &[Disk], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in disks {
        w.serialize(DiskRow {
            cx: d.center.x,
            cy: d.center.y,
            r: d.radius,
        })?;
    }
    if disks.is_empty() {
        w.write_record(["cx", "cy", "r"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_disks<R: Read>(input: R) -> Result<Vec<Disk>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["cx", "cy", "r"] {
        return Err(parse_err(format!(
            "disk CSV header must be cx,cy,r, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize::<DiskRow>()
        .map(|row| {
            let row = row?;
            Disk::new(Point::new(row.cx, row.cy), row.r)
        })
        .collect()
}

/// Cell centers of a set as a `x,y` CSV point cloud.
pub fn write_point_cloud<W: Write>(set: &GridSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y"])?;
    for p in set.centers() {
        w.write_record([p.x.to_string(), p.y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridSet {
        let d = Domain::rect(0.0, 1.0, 0.0, 1.0, 16).unwrap();
        GridSet::from_predicate(&d, |p| (p.x - 0.4).hypot(p.y - 0.6) < 0.3)
    }

    #[test]
    fn pgm_round_trip_both_formats() {
        let s = sample();
        for fmt in [PgmFormat::Plain, PgmFormat::Raw] {
            let mut buf = Vec::new();
            write_pgm(&s, fmt, &mut buf).unwrap();
            let back = read_pgm(s.domain(), buf.as_slice()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn plain_header_is_exact() {
        let d = Domain::circle(16).unwrap();
        let s = GridSet::from_cells(&d, [0, 3]);
        let mut buf = Vec::new();
        write_pgm(&s, PgmFormat::Plain, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("P2\n16 1\n1\n1 0 0 1 0"));
    }

    #[test]
    fn pgm_with_comment_and_bad_values() {
        let d = Domain::circle(16).unwrap();
        let ok = "P2\n# comment\n16 1\n1\n0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 1\n";
        assert_eq!(read_pgm(&d, ok.as_bytes()).unwrap().count(), 1);
        let bad = "P2\n16 1\n1\n0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 2\n";
        assert!(read_pgm(&d, bad.as_bytes()).is_err());
        let maxval = "P2\n16 1\n255\n";
        assert!(read_pgm(&d, maxval.as_bytes()).is_err());
        let wrong = "P2\n8 2\n1\n";
        assert!(matches!(
            read_pgm(&d, wrong.as_bytes()),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn disk_csv_round_trip() {
        let disks = vec![
            Disk::new(Point::new(0.5, -1.25), 0.125).unwrap(),
            Disk::new(Point::new(2.0, 3.0), 1.0).unwrap(),
        ];
        let mut buf = Vec::new();
        write_disks(&disks, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("cx,cy,r\n"));
        assert_eq!(read_disks(buf.as_slice()).unwrap(), disks);
        let mut empty = Vec::new();
        write_disks(&[], &mut empty).unwrap();
        assert!(read_disks(empty.as_slice()).unwrap().is_empty());
        assert!(read_disks("x,y,r\n1,2,3\n".as_bytes()).is_err());
        assert!(read_disks("cx,cy,r\n1,2,-3\n".as_bytes()).is_err());
    }
}
