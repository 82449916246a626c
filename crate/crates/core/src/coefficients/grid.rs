//! Voxel coefficient grids with trilinear interpolation.
//!
//! File layout: ASCII header lines
//!
//! ```text
//! coefgrid 1
//! dims nx ny nz
//! bbox xmin ymin zmin xmax ymax zmax
//! components c
//! data
//! ```
//!
//! followed by `nx*ny*nz*c` little-endian f32 values, x slowest, then y,
//! then z, then component. A potential grid has one component; a tensor
//! grid has six (xx, yy, zz, xy, xz, yz).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct CoefGrid {
    dims: [usize; 3],
    lower: Vec3,
    upper: Vec3,
    components: usize,
    data: Vec<f32>,
}

impl CoefGrid {
    pub fn new(dims: [usize; 3], lower: Vec3, upper: Vec3, components: usize, data: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Coefficient("grid needs at least 2 nodes per axis".into()));
        }
        if (0..3).any(|i| !(upper[i] > lower[i])) {
            return Err(Error::Coefficient("grid bounding box is empty".into()));
        }
        if components != 1 && components != 6 {
            return Err(Error::Coefficient(format!("grid components must be 1 or 6, got {components}")));
        }
        let expected = dims.iter().product::<usize>() * components;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Coefficient("grid contains non-finite values".into()));
        }
        Ok(Self {
            dims,
            lower,
            upper,
            components,
            data,
        })
    }

    /// Sample `f` at the grid nodes.
    pub fn from_fn(
        dims: [usize; 3],
        lower: Vec3,
        upper: Vec3,
        components: usize,
        f: impl Fn(&Vec3) -> Vec<f64>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.iter().product::<usize>() * components);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let x = Vec3::new(
                        lower.x + (upper.x - lower.x) * i as f64 / (dims[0] - 1) as f64,
                        lower.y + (upper.y - lower.y) * j as f64 / (dims[1] - 1) as f64,
                        lower.z + (upper.z - lower.z) * k as f64 / (dims[2] - 1) as f64,
                    );
                    let v = f(&x);
                    assert_eq!(v.len(), components);
                    data.extend(v.iter().map(|&c| c as f32));
                }
            }
        }
        Self::new(dims, lower, upper, components, data)
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Bounding box corners.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        (self.lower, self.upper)
    }

    /// Node records, `components` values each.
    pub fn nodes(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks(self.components)
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    /// Trilinear interpolation; `None` outside the bounding box.
    pub fn sample(&self, x: &Vec3) -> Option<Vec<f64>> {
        if !self.contains(x) {
            return None;
        }
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..3 {
            let t = (x[i] - self.lower[i]) / (self.upper[i] - self.lower[i]) * (self.dims[i] - 1) as f64;
            let b = (t.floor() as usize).min(self.dims[i] - 2);
            base[i] = b;
            frac[i] = t - b as f64;
        }
        let mut out = vec![0.0; self.components];
        for corner in 0..8 {
            let o = [corner >> 2 & 1, corner >> 1 & 1, corner & 1];
            let w: f64 = (0..3)
                .map(|i| if o[i] == 1 { frac[i] } else { 1.0 - frac[i] })
                .product();
            if w == 0.0 {
                continue;
            }
            let idx = ((base[0] + o[0]) * self.dims[1] + base[1] + o[1]) * self.dims[2] + base[2] + o[2];
            for (c, slot) in out.iter_mut().enumerate() {
                *slot += w * self.data[idx * self.components + c] as f64;
            }
        }
        Some(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let [nx, ny, nz] = self.dims;
        let (l, u) = (self.lower, self.upper);
        write!(
            out,
            "coefgrid 1\ndims {nx} {ny} {nz}\nbbox {} {} {} {} {} {}\ncomponents {}\ndata\n",
            l.x, l.y, l.z, u.x, u.y, u.z, self.components
        )
        .expect("writing to a Vec cannot fail");
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut line_no = 0;
        let mut next_line = |pos: &mut usize| -> Result<(usize, String)> {
            line_no += 1;
            let rest = &bytes[*pos..];
            let end = rest.iter().position(|&b| b == b'\n').ok_or(Error::Parse {
                line: line_no,
                message: "unexpected end of header".into(),
            })?;
            let text = std::str::from_utf8(&rest[..end]).map_err(|_| Error::Parse {
                line: line_no,
                message: "header is not UTF-8".into(),
            })?;
            *pos += end + 1;
            Ok((line_no, text.trim().to_string()))
        };
        let perr = |line: usize, m: &str| Error::Parse {
            line,
            message: m.to_string(),
        };
        let (l, header) = next_line(&mut pos)?;
        if header != "coefgrid 1" {
            return Err(perr(l, "expected header `coefgrid 1`"));
        }
        let numbers = |line: usize, text: &str, key: &str, count: usize| -> Result<Vec<f64>> {
            let mut it = text.split_whitespace();
            if it.next() != Some(key) {
                return Err(perr(line, &format!("expected `{key}`")));
            }
            let v: Vec<f64> = it
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(line, &format!("invalid number in `{key}`")))?;
            if v.len() != count {
                return Err(perr(line, &format!("`{key}` needs {count} values")));
            }
            Ok(v)
        };
        let (l, t) = next_line(&mut pos)?;
        let d = numbers(l, &t, "dims", 3)?;
        let (l, t) = next_line(&mut pos)?;
        let b = numbers(l, &t, "bbox", 6)?;
        let (l, t) = next_line(&mut pos)?;
        let c = numbers(l, &t, "components", 1)?;
        let (l, t) = next_line(&mut pos)?;
        if t != "data" {
            return Err(perr(l, "expected `data`"));
        }
        let dims = [d[0] as usize, d[1] as usize, d[2] as usize];
        let components = c[0] as usize;
        let payload = &bytes[pos..];
        let count = dims.iter().product::<usize>() * components;
        if payload.len() != 4 * count {
            return Err(Error::DimensionMismatch {
                expected: 4 * count,
                got: payload.len(),
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(
            dims,
            Vec3::new(b[0], b[1], b[2]),
            Vec3::new(b[3], b[4], b[5]),
            components,
            data,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trilinear_is_exact_for_affine_data() {
        let f = |x: &Vec3| vec![1.0 + 0.5 * x.x - 0.25 * x.y + 2.0 * x.z];
        let g = CoefGrid::from_fn([4, 5, 6], Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 2.0, 1.5), 1, f).unwrap();
        for x in [Vec3::new(0.3, 0.1, -0.7), Vec3::new(-1.0, 2.0, 1.5), Vec3::new(0.99, 1.3, 0.2)] {
            assert!((g.sample(&x).unwrap()[0] - f(&x)[0]).abs() < 1e-5);
        }
        assert!(g.sample(&Vec3::new(1.1, 0.0, 0.0)).is_none());
    }

    #[test]
    fn byte_round_trip() {
        let g = CoefGrid::from_fn([2, 3, 2], Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), 6, |x| {
            vec![1.0, 2.0, 3.0, x.x, 0.0, x.z]
        })
        .unwrap();
        assert_eq!(CoefGrid::from_bytes(&g.to_bytes()).unwrap(), g);
        let mut truncated = g.to_bytes();
        truncated.pop();
        assert!(CoefGrid::from_bytes(&truncated).is_err());
        assert!(matches!(
            CoefGrid::from_bytes(b"coefgrid 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
