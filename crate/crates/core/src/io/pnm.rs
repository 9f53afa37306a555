//! Portable anymap readers/writers for 8-bit LDR rasters (P5/P6, and P7 PAM
//! for rasters with alpha) plus the 16-bit P6 and PFM payload helpers the
//! normal-map codec builds on.

use crate::error::Error;
use crate::raster::LdrImage;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str, Error> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, "unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::parse(start, "non-ASCII header token"))
    }

    fn number(&mut self) -> Result<usize, Error> {
        let start = self.pos;
        self.token()?
            .parse()
            .map_err(|_| Error::parse(start, "expected a number"))
    }

    fn payload(&mut self, len: usize) -> Result<&'a [u8], Error> {
        // Exactly one whitespace byte separates header and payload.
        self.pos += 1;
        if self.pos + len > self.bytes.len() {
            return Err(Error::parse(
                self.bytes.len(),
                format!(
                    "payload truncated: need {len} bytes, have {}",
                    self.bytes.len().saturating_sub(self.pos)
                ),
            ));
        }
        let p = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(p)
    }
}

pub fn read_ldr(bytes: &[u8]) -> Result<LdrImage, Error> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.token()?;
    match magic {
        "P5" | "P6" => {
            let width = cur.number()?;
            let height = cur.number()?;
            let maxval = cur.number()?;
            if maxval != 255 {
                return Err(Error::parse(cur.pos, format!("unsupported maxval {maxval}")));
            }
            let channels = if magic == "P5" { 1 } else { 3 };
            let mut img = LdrImage::new(width, height, channels)?;
            img.codes
                .copy_from_slice(cur.payload(width * height * channels)?);
            Ok(img)
        }
        "P7" => read_pam(&mut cur),
        other => Err(Error::parse(0, format!("unknown magic {other:?}"))),
    }
}

fn read_pam(cur: &mut Cursor) -> Result<LdrImage, Error> {
    let (mut width, mut height, mut depth, mut maxval) = (0, 0, 0, 0);
    loop {
        let at = cur.pos;
        match cur.token()? {
            "WIDTH" => width = cur.number()?,
            "HEIGHT" => height = cur.number()?,
            "DEPTH" => depth = cur.number()?,
            "MAXVAL" => maxval = cur.number()?,
            "TUPLTYPE" => {
                cur.token()?;
            }
            "ENDHDR" => break,
            other => return Err(Error::parse(at, format!("unknown PAM field {other:?}"))),
        }
    }
    if maxval != 255 {
        return Err(Error::parse(cur.pos, format!("unsupported maxval {maxval}")));
    }
    let mut img = LdrImage::new(width, height, depth)?;
    img.codes.copy_from_slice(cur.payload(width * height * depth)?);
    Ok(img)
}

pub fn write_ldr(img: &LdrImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.codes.len() + 64);
    match img.channels {
        1 => out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes()),
        3 => out.extend_from_slice(format!("P6\n{} {}\n255\n", img.width, img.height).as_bytes()),
        4 => out.extend_from_slice(
            format!(
                "P7\nWIDTH {}\nHEIGHT {}\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n",
                img.width, img.height
            )
            .as_bytes(),
        ),
        _ => unreachable!("LdrImage validates channel count"),
    }
    out.extend_from_slice(&img.codes);
    out
}

/// 16-bit P6; samples big-endian per the PNM convention.
pub fn read_p6_16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>), Error> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.token()? != "P6" {
        return Err(Error::parse(0, "expected P6 magic"));
    }
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if maxval != 65535 {
        return Err(Error::parse(cur.pos, format!("expected maxval 65535, got {maxval}")));
    }
    let raw = cur.payload(width * height * 6)?;
    let samples = raw
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok((width, height, samples))
}

pub fn write_p6_16(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    debug_assert_eq!(samples.len(), width * height * 3);
    let mut out = Vec::with_capacity(samples.len() * 2 + 32);
    out.extend_from_slice(format!("P6\n{width} {height}\n65535\n").as_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Color PFM. Negative scale marks little-endian; rows run bottom-to-top per
/// the format convention. Returns rows top-first like every other raster here.
pub fn read_pfm(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>), Error> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.token()? != "PF" {
        return Err(Error::parse(0, "expected PF magic"));
    }
    let width = cur.number()?;
    let height = cur.number()?;
    let at = cur.pos;
    let scale: f32 = cur
        .token()?
        .parse()
        .map_err(|_| Error::parse(at, "bad scale line"))?;
    let raw = cur.payload(width * height * 12)?;
    let le = scale < 0.0;
    let mut data = vec![0.0f32; width * height * 3];
    for (i, b) in raw.chunks_exact(4).enumerate() {
        let bits = [b[0], b[1], b[2], b[3]];
        let v = if le {
            f32::from_le_bytes(bits)
        } else {
            f32::from_be_bytes(bits)
        };
        // Flip bottom-to-top storage back to top-first.
        let row = height - 1 - i / (width * 3);
        let col = i % (width * 3);
        data[row * width * 3 + col] = v;
    }
    Ok((width, height, data))
}

pub fn write_pfm(width: usize, height: usize, data: &[f32]) -> Vec<u8> {
    debug_assert_eq!(data.len(), width * height * 3);
    let mut out = Vec::with_capacity(data.len() * 4 + 32);
    out.extend_from_slice(format!("PF\n{width} {height}\n-1.0\n").as_bytes());
    for row in (0..height).rev() {
        for v in &data[row * width * 3..(row + 1) * width * 3] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}
