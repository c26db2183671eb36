//! PLY point clouds: ascii and binary_little_endian, xyz plus an optional
//! confidence property, all values double precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::numkit::vec3::Vec3;

pub fn write_cloud(
    path: &Path,
    points: &[Vec3],
    confidence: Option<&[f64]>,
    binary: bool,
) -> Result<()> {
    if let Some(c) = confidence {
        if c.len() != points.len() {
            return Err(CoreError::shape(format!(
                "{} confidences for {} points",
                c.len(),
                points.len()
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(
        w,
        "format {} 1.0",
        if binary { "binary_little_endian" } else { "ascii" }
    )?;
    writeln!(w, "element vertex {}", points.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    if confidence.is_some() {
        writeln!(w, "property double confidence")?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in points.iter().enumerate() {
        if binary {
            for v in p {
                w.write_all(&v.to_bits().to_le_bytes())?;
            }
            if let Some(c) = confidence {
                w.write_all(&c[i].to_bits().to_le_bytes())?;
            }
        } else {
            match confidence {
                Some(c) => writeln!(w, "{} {} {} {}", p[0], p[1], p[2], c[i])?,
                None => writeln!(w, "{} {} {}", p[0], p[1], p[2])?,
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    F32,
    F64,
}

impl Scalar {
    fn size(self) -> usize {
        match self {
            Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

pub fn read_cloud(path: &Path) -> Result<(Vec<Vec3>, Option<Vec<f64>>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line_no = 0usize;
    let mut format: Option<Format> = None;
    let mut count: Option<usize> = None;
    // (name, scalar) in declaration order.
    let mut properties: Vec<(String, Scalar)> = Vec::new();

    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(CoreError::parse(line_no, "unexpected end of header"));
        }
        line_no += 1;
        let body = line.trim();
        if line_no == 1 {
            if body != "ply" {
                return Err(CoreError::parse(1, "missing 'ply' magic"));
            }
            continue;
        }
        if body == "end_header" {
            break;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields.first().copied() {
            Some("comment") | Some("obj_info") => {}
            Some("format") => {
                format = Some(match fields.get(1).copied() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLe,
                    other => {
                        return Err(CoreError::parse(
                            line_no,
                            format!("unsupported format {other:?}"),
                        ))
                    }
                });
            }
            Some("element") => {
                if fields.get(1).copied() != Some("vertex") {
                    return Err(CoreError::parse(
                        line_no,
                        format!("only vertex elements supported, got {:?}", fields.get(1)),
                    ));
                }
                count = Some(
                    fields
                        .get(2)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| CoreError::parse(line_no, "bad vertex count"))?,
                );
            }
            Some("property") => {
                let scalar = match fields.get(1).copied() {
                    Some("double") | Some("float64") => Scalar::F64,
                    Some("float") | Some("float32") => Scalar::F32,
                    other => {
                        return Err(CoreError::parse(
                            line_no,
                            format!("unsupported property type {other:?}"),
                        ))
                    }
                };
                let name = fields
                    .get(2)
                    .ok_or_else(|| CoreError::parse(line_no, "property missing a name"))?;
                properties.push((name.to_string(), scalar));
            }
            other => return Err(CoreError::parse(line_no, format!("unknown header entry {other:?}"))),
        }
    }

    let format = format.ok_or_else(|| CoreError::parse(line_no, "header missing format"))?;
    let count = count.ok_or_else(|| CoreError::parse(line_no, "header missing vertex element"))?;
    let col = |name: &str| properties.iter().position(|(n, _)| n == name);
    let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(CoreError::parse(line_no, "need x, y, z properties")),
    };
    let iconf = col("confidence");

    let mut points = Vec::with_capacity(count);
    let mut confidence = iconf.map(|_| Vec::with_capacity(count));
    match format {
        Format::Ascii => {
            for _ in 0..count {
                let mut line = String::new();
                if reader.read_line(&mut line)? == 0 {
                    return Err(CoreError::parse(line_no + 1, "truncated vertex data"));
                }
                line_no += 1;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != properties.len() {
                    return Err(CoreError::parse(
                        line_no,
                        format!("expected {} values, got {}", properties.len(), fields.len()),
                    ));
                }
                let parse = |idx: usize| -> Result<f64> {
                    fields[idx]
                        .parse()
                        .map_err(|_| CoreError::parse(line_no, format!("bad float '{}'", fields[idx])))
                };
                points.push([parse(ix)?, parse(iy)?, parse(iz)?]);
                if let (Some(conf), Some(ci)) = (confidence.as_mut(), iconf) {
                    conf.push(parse(ci)?);
                }
            }
        }
        Format::BinaryLe => {
            let stride: usize = properties.iter().map(|(_, s)| s.size()).sum();
            let mut record = vec![0u8; stride];
            for v in 0..count {
                reader.read_exact(&mut record).map_err(|_| {
                    CoreError::parse(line_no, format!("truncated binary data at vertex {v}"))
                })?;
                let read_at = |idx: usize| -> f64 {
                    let offset: usize = properties[..idx].iter().map(|(_, s)| s.size()).sum();
                    match properties[idx].1 {
                        Scalar::F64 => f64::from_bits(u64::from_le_bytes(
                            record[offset..offset + 8].try_into().expect("8 bytes"),
                        )),
                        Scalar::F32 => f32::from_le_bytes(
                            record[offset..offset + 4].try_into().expect("4 bytes"),
                        ) as f64,
                    }
                };
                points.push([read_at(ix), read_at(iy), read_at(iz)]);
                if let (Some(conf), Some(ci)) = (confidence.as_mut(), iconf) {
                    conf.push(read_at(ci));
                }
            }
        }
    }
    Ok((points, confidence))
}
