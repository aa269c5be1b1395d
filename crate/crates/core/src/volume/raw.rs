//! Raw CT slice stacks: one headerless (or fixed-header) file per z-slice,
//! row-major 16-bit words with x fastest.

use super::{Volume, VolumeError, MAX_12BIT};
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

impl std::fmt::Display for Endianness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Endianness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "little" | "le" => Ok(Endianness::Little),
            "big" | "be" => Ok(Endianness::Big),
            other => Err(format!("unknown endianness {other:?} (expected little or big)")),
        }
    }
}

impl Endianness {
    pub fn name(self) -> &'static str {
        match self {
            Endianness::Little => "little",
            Endianness::Big => "big",
        }
    }

    fn decode(self, b: [u8; 2]) -> u16 {
        match self {
            Endianness::Little => u16::from_le_bytes(b),
            Endianness::Big => u16::from_be_bytes(b),
        }
    }

    fn encode(self, v: u16) -> [u8; 2] {
        match self {
            Endianness::Little => v.to_le_bytes(),
            Endianness::Big => v.to_be_bytes(),
        }
    }
}

/// Layout of a slice stack on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFormat {
    pub width: usize,
    pub height: usize,
    pub count: usize,
    pub endianness: Endianness,
    /// Index substituted for the first slice (z = 0).
    pub first_index: usize,
    /// Bytes skipped at the start of every file.
    pub header_bytes: u64,
    /// Reject samples above 4095.
    pub strict_12bit: bool,
}

impl SliceFormat {
    pub fn new(width: usize, height: usize, count: usize) -> Self {
        SliceFormat {
            width,
            height,
            count,
            endianness: Endianness::Little,
            first_index: 0,
            header_bytes: 0,
            strict_12bit: false,
        }
    }

    fn slice_bytes(&self) -> u64 {
        (self.width * self.height * 2) as u64
    }
}

/// Substitutes `index` into the first run of `#` characters, zero-padded to
/// the run length (`slice_###.raw` → `slice_007.raw`).
pub fn expand_pattern(pattern: &str, index: usize) -> Result<String, VolumeError> {
    let start = pattern
        .find('#')
        .ok_or_else(|| VolumeError::Pattern(pattern.to_owned()))?;
    let width = pattern[start..].chars().take_while(|&c| c == '#').count();
    Ok(format!(
        "{}{:0width$}{}",
        &pattern[..start],
        index,
        &pattern[start + width..],
        width = width
    ))
}

/// Loads `format.count` slice files into a volume with dims
/// `(width, height, count)`; slice `k` becomes the plane `z = k`.
pub fn load_raw_slices(pattern: &str, format: &SliceFormat) -> Result<Volume, VolumeError> {
    let dims = [format.width, format.height, format.count];
    if dims.iter().any(|&d| d == 0) {
        return Err(VolumeError::EmptyDims(dims));
    }
    let plane = format.width * format.height;
    let mut data = Vec::with_capacity(plane * format.count);
    let mut buf = vec![0u8; plane * 2];
    for k in 0..format.count {
        let path = PathBuf::from(expand_pattern(pattern, format.first_index + k)?);
        let io = |source| VolumeError::Io {
            path: path.clone(),
            source,
        };
        let actual = fs::metadata(&path).map_err(io)?.len();
        let expected = format.header_bytes + format.slice_bytes();
        if actual != expected {
            return Err(VolumeError::SliceSize {
                path,
                expected,
                actual,
            });
        }
        let mut file = fs::File::open(&path).map_err(io)?;
        if format.header_bytes > 0 {
            std::io::copy(&mut (&mut file).take(format.header_bytes), &mut std::io::sink())
                .map_err(io)?;
        }
        file.read_exact(&mut buf).map_err(io)?;
        for word in buf.chunks_exact(2) {
            let v = format.endianness.decode([word[0], word[1]]);
            if format.strict_12bit && v > MAX_12BIT {
                return Err(VolumeError::Not12Bit { path, value: v });
            }
            data.push(v);
        }
    }
    Volume::new(dims, data)
}

/// Writes one file per z-slice using the same pattern syntax as
/// [`load_raw_slices`]. Returns the written paths.
pub fn write_raw_slices(
    volume: &Volume,
    pattern: &str,
    endianness: Endianness,
    first_index: usize,
) -> Result<Vec<PathBuf>, VolumeError> {
    let [nx, ny, nz] = volume.dims();
    let plane = nx * ny;
    let mut paths = Vec::with_capacity(nz);
    let mut buf = Vec::with_capacity(plane * 2);
    for (k, slice) in volume.data().chunks_exact(plane).enumerate() {
        let path = PathBuf::from(expand_pattern(pattern, first_index + k)?);
        buf.clear();
        for &v in slice {
            buf.extend_from_slice(&endianness.encode(v));
        }
        let io = |source| VolumeError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(io)?;
        paths.push(path);
    }
    Ok(paths)
}
