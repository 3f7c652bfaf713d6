//! Binary netpbm I/O: P5 (PGM) and P6 (PPM), maxval 255 only.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plane::{ColorImage, GrayPlane};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::parse("not a netpbm file"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and `#` comments may separate header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse("truncated netpbm header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse("bad netpbm header value"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::parse("missing separator after netpbm header"));
    }
    pos += 1;
    if fields[2] != 255 {
        return Err(Error::parse(format!("unsupported maxval {}", fields[2])));
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        data_offset: pos,
    })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayPlane> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P5" {
        return Err(Error::parse("expected binary PGM (P5)"));
    }
    let n = h.width * h.height;
    let raster = bytes
        .get(h.data_offset..h.data_offset + n)
        .ok_or_else(|| Error::parse("truncated PGM raster"))?;
    GrayPlane::from_vec(h.width, h.height, raster.to_vec())
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ColorImage> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P6" {
        return Err(Error::parse("expected binary PPM (P6)"));
    }
    let n = 3 * h.width * h.height;
    let raster = bytes
        .get(h.data_offset..h.data_offset + n)
        .ok_or_else(|| Error::parse("truncated PPM raster"))?;
    ColorImage::from_interleaved(h.width, h.height, raster)
}

pub fn encode_pgm(plane: &GrayPlane) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", plane.width(), plane.height()).into_bytes();
    out.extend_from_slice(plane.as_bytes());
    out
}

pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(&img.to_interleaved());
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayPlane> {
    decode_pgm(&fs::read(path)?)
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<ColorImage> {
    decode_ppm(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, plane: &GrayPlane) -> Result<()> {
    fs::File::create(path)?.write_all(&encode_pgm(plane))?;
    Ok(())
}

pub fn write_ppm(path: impl AsRef<Path>, img: &ColorImage) -> Result<()> {
    fs::File::create(path)?.write_all(&encode_ppm(img))?;
    Ok(())
}
