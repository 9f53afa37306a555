//! Radiance RGBE (.hdr) reader and writer.
//!
//! Decodes flat, old-style and new-style RLE scanlines. Only the default
//! `-Y h +X w` orientation is supported. Exponent decoding follows the
//! shared-exponent convention (mantissa/256)·2^(e−128).

use crate::error::Error;
use crate::raster::HdrImage;

const SIGNATURES: [&str; 2] = ["#?RADIANCE", "#?RGBE"];

#[inline]
fn decode_rgbe(rgbe: [u8; 4]) -> [f32; 3] {
    if rgbe[3] == 0 {
        return [0.0; 3];
    }
    let f = (2.0f32).powi(rgbe[3] as i32 - 128) / 256.0;
    [
        rgbe[0] as f32 * f,
        rgbe[1] as f32 * f,
        rgbe[2] as f32 * f,
    ]
}

#[inline]
fn encode_rgbe(rgb: [f32; 3]) -> [u8; 4] {
    let v = rgb[0].max(rgb[1]).max(rgb[2]);
    if v < 1e-32 {
        return [0, 0, 0, 0];
    }
    // Exponent such that v/2^e lands in [0.5, 1).
    let mut e = v.log2().floor() as i32 + 1;
    loop {
        let scale = (2.0f32).powi(-e) * 256.0;
        let m: Vec<i32> = rgb.iter().map(|&c| (c * scale).round() as i32).collect();
        if m.iter().any(|&c| c > 255) {
            e += 1;
            continue;
        }
        return [m[0] as u8, m[1] as u8, m[2] as u8, (e + 128) as u8];
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn byte(&mut self) -> Result<u8, Error> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.pos, "unexpected end of file"))?;
        self.pos += 1;
        Ok(b)
    }

    fn line(&mut self) -> Result<String, Error> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return Err(Error::parse(start, "header line not terminated"));
        }
        let line = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::parse(start, "header line is not valid ASCII"))?
            .to_string();
        self.pos += 1;
        Ok(line)
    }
}

pub fn read_radiance_hdr(bytes: &[u8]) -> Result<HdrImage, Error> {
    let mut cur = Cursor { bytes, pos: 0 };
    let sig = cur.line()?;
    if !SIGNATURES.iter().any(|s| sig.starts_with(s)) {
        return Err(Error::parse(0, "missing Radiance signature (#?RADIANCE)"));
    }
    // Header variables until the blank line.
    loop {
        let start = cur.pos;
        let line = cur.line()?;
        if line.is_empty() {
            break;
        }
        if line.starts_with("FORMAT=") && line != "FORMAT=32-bit_rle_rgbe" {
            return Err(Error::parse(start, format!("unsupported format: {line}")));
        }
    }
    let res_offset = cur.pos;
    let res = cur.line()?;
    let parts: Vec<&str> = res.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "-Y" || parts[2] != "+X" {
        return Err(Error::parse(
            res_offset,
            format!("unsupported orientation or malformed resolution line: {res}"),
        ));
    }
    let height: usize = parts[1]
        .parse()
        .map_err(|_| Error::parse(res_offset, "bad height in resolution line"))?;
    let width: usize = parts[3]
        .parse()
        .map_err(|_| Error::parse(res_offset, "bad width in resolution line"))?;
    if width == 0 || height == 0 {
        return Err(Error::parse(res_offset, "zero image dimension"));
    }

    let mut img = HdrImage::new(width, height)?;
    let mut scanline = vec![[0u8; 4]; width];
    for y in 0..height {
        read_scanline(&mut cur, &mut scanline)?;
        for (x, rgbe) in scanline.iter().enumerate() {
            img.set(x, y, decode_rgbe(*rgbe));
        }
    }
    Ok(img)
}

fn read_scanline(cur: &mut Cursor, out: &mut [[u8; 4]]) -> Result<(), Error> {
    let width = out.len();
    let start = cur.pos;
    let b0 = cur.byte()?;
    let b1 = cur.byte()?;
    let b2 = cur.byte()?;
    let b3 = cur.byte()?;
    if b0 == 2 && b1 == 2 && (b2 as usize) < 128 {
        let len = ((b2 as usize) << 8) | b3 as usize;
        if len != width {
            return Err(Error::parse(
                start,
                format!("RLE scanline length {len} does not match width {width}"),
            ));
        }
        // Four component planes, each run-length encoded.
        for c in 0..4 {
            let mut x = 0;
            while x < width {
                let count = cur.byte()? as usize;
                if count > 128 {
                    let value = cur.byte()?;
                    let run = count - 128;
                    if x + run > width {
                        return Err(Error::parse(cur.pos, "RLE run overflows scanline"));
                    }
                    for px in &mut out[x..x + run] {
                        px[c] = value;
                    }
                    x += run;
                } else if count == 0 {
                    return Err(Error::parse(cur.pos, "zero-length RLE literal"));
                } else {
                    if x + count > width {
                        return Err(Error::parse(cur.pos, "RLE literal overflows scanline"));
                    }
                    for px in &mut out[x..x + count] {
                        px[c] = cur.byte()?;
                    }
                    x += count;
                }
            }
        }
        return Ok(());
    }

    // Flat scanline, with old-style (1,1,1,count) repeat markers.
    out[0] = [b0, b1, b2, b3];
    let mut x = 1;
    let mut shift = 0u32;
    while x < width {
        let rgbe = [cur.byte()?, cur.byte()?, cur.byte()?, cur.byte()?];
        if rgbe[0] == 1 && rgbe[1] == 1 && rgbe[2] == 1 {
            let run = (rgbe[3] as usize) << shift;
            if x + run > width {
                return Err(Error::parse(cur.pos, "old-style run overflows scanline"));
            }
            let prev = out[x - 1];
            for px in &mut out[x..x + run] {
                *px = prev;
            }
            x += run;
            shift += 8;
        } else {
            out[x] = rgbe;
            x += 1;
            shift = 0;
        }
    }
    Ok(())
}

pub fn write_radiance_hdr(img: &HdrImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.width * img.height * 4 + 64);
    out.extend_from_slice(b"#?RADIANCE\n");
    out.extend_from_slice(b"FORMAT=32-bit_rle_rgbe\n\n");
    out.extend_from_slice(format!("-Y {} +X {}\n", img.height, img.width).as_bytes());

    let rle = (8..=32767).contains(&img.width);
    let mut scanline = vec![[0u8; 4]; img.width];
    for y in 0..img.height {
        for (x, px) in scanline.iter_mut().enumerate() {
            *px = encode_rgbe(img.get(x, y));
        }
        if rle {
            out.push(2);
            out.push(2);
            out.push((img.width >> 8) as u8);
            out.push((img.width & 0xff) as u8);
            for c in 0..4 {
                write_rle_component(&mut out, &scanline, c);
            }
        } else {
            for px in &scanline {
                out.extend_from_slice(px);
            }
        }
    }
    out
}

fn write_rle_component(out: &mut Vec<u8>, scanline: &[[u8; 4]], c: usize) {
    let n = scanline.len();
    let mut x = 0;
    while x < n {
        // Measure the run starting here.
        let v = scanline[x][c];
        let mut run = 1;
        while x + run < n && run < 127 && scanline[x + run][c] == v {
            run += 1;
        }
        if run >= 4 {
            out.push(128 + run as u8);
            out.push(v);
            x += run;
        } else {
            // Collect literals until a run of >= 4 starts.
            let lit_start = x;
            let mut lit = 0;
            while x < n && lit < 128 {
                let v = scanline[x][c];
                let mut r = 1;
                while x + r < n && r < 4 && scanline[x + r][c] == v {
                    r += 1;
                }
                if r >= 4 {
                    break;
                }
                x += 1;
                lit += 1;
            }
            out.push(lit as u8);
            for px in &scanline[lit_start..lit_start + lit] {
                out.push(px[c]);
            }
        }
    }
}
