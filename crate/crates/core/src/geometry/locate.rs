use nalgebra::Matrix3;

use super::Vec3;

/// Tolerance on barycentric coordinates when deciding containment; points
/// this close to a face are clamped into the cell.
const BARY_TOL: f64 = 1e-9;

/// Uniform bucket grid over cell bounding boxes.
#[derive(Debug)]
pub struct PointLocator {
    origin: Vec3,
    spacing: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<u32>,
    base: Vec<Vec3>,
    inverse: Vec<Matrix3<f64>>,
}

impl PointLocator {
    pub fn new(vertices: &[Vec3], cells: &[[usize; 4]]) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi - lo).max().max(1e-12);
        let per_axis = ((cells.len() as f64 / 2.0).cbrt().ceil() as usize).clamp(1, 256);
        let spacing = extent / per_axis as f64 * (1.0 + 1e-9);
        let origin = lo - Vec3::repeat(1e-9 * extent);
        let dims = [0, 1, 2].map(|a| (((hi[a] - origin[a]) / spacing).floor() as usize + 1).max(1));

        let mut base = Vec::with_capacity(cells.len());
        let mut inverse = Vec::with_capacity(cells.len());
        let mut ranges = Vec::with_capacity(cells.len());
        let mut counts = vec![0usize; dims[0] * dims[1] * dims[2] + 1];
        for cell in cells {
            let p = cell.map(|i| vertices[i]);
            let t = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
            base.push(p[0]);
            inverse.push(t.try_inverse().unwrap_or_else(Matrix3::zeros));
            let mut clo = p[0];
            let mut chi = p[0];
            for q in &p[1..] {
                clo = clo.inf(q);
                chi = chi.sup(q);
            }
            let a = [0, 1, 2].map(|ax| bucket_coord(clo[ax], origin[ax], spacing, dims[ax]));
            let b = [0, 1, 2].map(|ax| bucket_coord(chi[ax], origin[ax], spacing, dims[ax]));
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        counts[(i * dims[1] + j) * dims[2] + k] += 1;
                    }
                }
            }
            ranges.push((a, b));
        }
        let mut starts = vec![0usize; counts.len()];
        let mut acc = 0;
        for (s, c) in starts.iter_mut().zip(&counts) {
            *s = acc;
            acc += c;
        }
        let mut fill = starts.clone();
        let mut items = vec![0u32; acc];
        for (c, (a, b)) in ranges.into_iter().enumerate() {
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        let bucket = (i * dims[1] + j) * dims[2] + k;
                        items[fill[bucket]] = c as u32;
                        fill[bucket] += 1;
                    }
                }
            }
        }
        Self {
            origin,
            spacing,
            dims,
            starts,
            items,
            base,
            inverse,
        }
    }

    /// Barycentric coordinates of `x` with respect to cell `c`.
    pub fn barycentric(&self, c: usize, x: &Vec3) -> [f64; 4] {
        let l = self.inverse[c] * (x - self.base[c]);
        [1.0 - l.x - l.y - l.z, l.x, l.y, l.z]
    }

    /// Containing cell and barycentric coordinates (clamped to the cell).
    pub fn locate(&self, x: &Vec3) -> Option<(usize, [f64; 4])> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let t = (x[a] - self.origin[a]) / self.spacing;
            if !(t >= 0.0) || t >= self.dims[a] as f64 {
                return None;
            }
            idx[a] = t as usize;
        }
        let bucket = (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2];
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for &c in &self.items[self.starts[bucket]..self.starts[bucket + 1]] {
            let c = c as usize;
            let lam = self.barycentric(c, x);
            let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((c, lam));
            }
            if worst >= -BARY_TOL && best.map_or(true, |b| worst > b.2) {
                best = Some((c, lam, worst));
            }
        }
        best.map(|(c, lam, _)| {
            let clamped = lam.map(|l| l.max(0.0));
            let s: f64 = clamped.iter().sum();
            (c, clamped.map(|l| l / s))
        })
    }
}

fn bucket_coord(v: f64, origin: f64, spacing: f64, dim: usize) -> usize {
    (((v - origin) / spacing).floor().max(0.0) as usize).min(dim - 1)
}
