//! Page codecs, synthetic page content and tier characterization.

mod calibration;
mod datagen;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use flate2::Compression;
use serde::{Deserialize, Serialize};

pub use calibration::{characterize, CalibrationRow, CalibrationTable, CharacterizeOptions};
pub(crate) use datagen::splitmix;
pub use datagen::{generate_pages, DataKind, DataProfile};

use crate::{Error, Result, PAGE_SIZE};

/// Compression algorithm family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecKind {
    Lz4,
    Lzo,
    Deflate,
}

impl CodecKind {
    pub const ALL: [CodecKind; 3] = [CodecKind::Lz4, CodecKind::Lzo, CodecKind::Deflate];

    pub fn name(self) -> &'static str {
        match self {
            CodecKind::Lz4 => "lz4",
            CodecKind::Lzo => "lzo",
            CodecKind::Deflate => "deflate",
        }
    }

    /// Two-letter tag used in tier names (`L4`, `LO`, `DE`).
    pub fn tag(self) -> &'static str {
        match self {
            CodecKind::Lz4 => "L4",
            CodecKind::Lzo => "LO",
            CodecKind::Deflate => "DE",
        }
    }

    pub fn default_level(self) -> u8 {
        match self {
            CodecKind::Lz4 | CodecKind::Lzo => 1,
            CodecKind::Deflate => 6,
        }
    }
}

impl fmt::Display for CodecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lz4" => Ok(CodecKind::Lz4),
            "lzo" | "lzo-rle" => Ok(CodecKind::Lzo),
            "deflate" => Ok(CodecKind::Deflate),
            other => Err(Error::Config(format!("unknown codec `{other}`"))),
        }
    }
}

/// A codec together with its effort level.
///
/// `level` is only meaningful for deflate (0..=9). The lz4 and lzo
/// implementations expose a single effort level and accept `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Codec {
    pub kind: CodecKind,
    pub level: u8,
}

impl Codec {
    pub fn new(kind: CodecKind, level: u8) -> Result<Self> {
        let ok = match kind {
            CodecKind::Lz4 | CodecKind::Lzo => level == 1,
            CodecKind::Deflate => level <= 9,
        };
        if !ok {
            return Err(Error::Config(format!(
                "level {level} is not supported by {kind}"
            )));
        }
        Ok(Self { kind, level })
    }

    pub const fn lz4() -> Self {
        Self {
            kind: CodecKind::Lz4,
            level: 1,
        }
    }

    pub const fn lzo() -> Self {
        Self {
            kind: CodecKind::Lzo,
            level: 1,
        }
    }

    pub const fn deflate() -> Self {
        Self {
            kind: CodecKind::Deflate,
            level: 6,
        }
    }

    pub fn of(kind: CodecKind) -> Self {
        Self {
            kind,
            level: kind.default_level(),
        }
    }

    /// Compresses an arbitrary byte string.
    pub fn compress(&self, data: &[u8]) -> Result<Vec<u8>> {
        match self.kind {
            CodecKind::Lz4 => Ok(lz4_flex::block::compress(data)),
            CodecKind::Lzo => lzokay_native::compress(data).map_err(|e| self.fail(e)),
            CodecKind::Deflate => {
                let mut enc = flate2::write::DeflateEncoder::new(
                    Vec::with_capacity(data.len() / 2 + 64),
                    Compression::new(u32::from(self.level)),
                );
                enc.write_all(data).map_err(|e| self.fail(e))?;
                enc.finish().map_err(|e| self.fail(e))
            }
        }
    }

    /// Inverse of [`Codec::compress`]; `original_len` is the uncompressed size.
    pub fn decompress(&self, data: &[u8], original_len: usize) -> Result<Vec<u8>> {
        let out = match self.kind {
            CodecKind::Lz4 => {
                lz4_flex::block::decompress(data, original_len).map_err(|e| self.fail(e))?
            }
            CodecKind::Lzo => {
                lzokay_native::decompress_all(data, Some(original_len)).map_err(|e| self.fail(e))?
            }
            CodecKind::Deflate => {
                let mut out = Vec::with_capacity(original_len);
                flate2::read::DeflateDecoder::new(data)
                    .read_to_end(&mut out)
                    .map_err(|e| self.fail(e))?;
                out
            }
        };
        if out.len() != original_len {
            return Err(self.fail(format!(
                "decoded {} bytes, expected {original_len}",
                out.len()
            )));
        }
        Ok(out)
    }

    fn fail(&self, reason: impl fmt::Display) -> Error {
        Error::Codec {
            codec: self.kind.name(),
            reason: reason.to_string(),
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.level)
    }
}

fn check_page(page: &[u8]) -> Result<()> {
    if page.len() != PAGE_SIZE {
        return Err(Error::PageSize {
            expected: PAGE_SIZE,
            got: page.len(),
        });
    }
    Ok(())
}

/// Compresses one 4 KiB page. Output may be larger than the input for
/// incompressible data; the tier layer decides whether to store it raw.
pub fn compress_page(codec: Codec, page: &[u8]) -> Result<Vec<u8>> {
    check_page(page)?;
    codec.compress(page)
}

/// Restores a page produced by [`compress_page`].
pub fn decompress_page(codec: Codec, compressed: &[u8]) -> Result<Vec<u8>> {
    codec.decompress(compressed, PAGE_SIZE)
}
