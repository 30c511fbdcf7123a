//! Portable graymap (PGM) images, plain `P2` and binary `P5`, maxval 255.
//! Pixel values map linearly to [0,1].

use thiserror::Error;

use crate::render::Image;

#[derive(Error, Debug, Clone, PartialEq)]
#[error("pgm: {0}")]
pub struct PgmError(pub String);

/// Serializes an image, quantized to 8 bits. `binary` selects `P5` over
/// `P2`.
pub fn write_pgm(img: &Image, binary: bool) -> Vec<u8> {
    let header = format!(
        "{}\n{} {}\n255\n",
        if binary { "P5" } else { "P2" },
        img.width,
        img.height
    );
    let quant = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut out = header.into_bytes();
    if binary {
        out.extend(img.data.iter().map(|&v| quant(v)));
    } else {
        for y in 0..img.height {
            let row: Vec<String> = (0..img.width)
                .map(|x| quant(img.get(x, y)).to_string())
                .collect();
            out.extend(row.join(" ").into_bytes());
            out.push(b'\n');
        }
    }
    out
}

pub fn read_pgm(bytes: &[u8]) -> Result<Image, PgmError> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or(PgmError("missing magic".into()))?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        m => return Err(PgmError(format!("unsupported magic '{m}'"))),
    };
    let width: usize = parse_header_int(bytes, &mut pos, "width")?;
    let height: usize = parse_header_int(bytes, &mut pos, "height")?;
    let maxval: usize = parse_header_int(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError(format!("unsupported maxval {maxval}")));
    }
    let mut img = Image::zeros(width, height);
    if binary {
        // Exactly one whitespace byte separates the header from raster data.
        pos += 1;
        if bytes.len() < pos + width * height {
            return Err(PgmError("truncated raster".into()));
        }
        for (i, &b) in bytes[pos..pos + width * height].iter().enumerate() {
            img.data[i] = b as f64 / maxval as f64;
        }
    } else {
        for i in 0..width * height {
            let v: usize = parse_header_int(bytes, &mut pos, "pixel")?;
            if v > maxval {
                return Err(PgmError(format!("pixel {v} exceeds maxval")));
            }
            img.data[i] = v as f64 / maxval as f64;
        }
    }
    Ok(img)
}

/// Whitespace- and comment-aware token scan over the header region.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    while *pos < bytes.len() {
        let b = bytes[*pos];
        if b == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else if b.is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    } else {
        None
    }
}

fn parse_header_int(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, PgmError> {
    // Binary raster must start right after the maxval token's single
    // whitespace, so tokens never consume it; scanning stops at the token.
    let tok = next_token(bytes, pos).ok_or_else(|| PgmError(format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| PgmError(format!("bad {what} '{tok}'")))
}
