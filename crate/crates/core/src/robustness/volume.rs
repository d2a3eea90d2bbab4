//! Simplex volumes of point clouds.
//!
//! The volume of the simplex with vertices `P_1 … P_d` is
//! `sqrt(det(P̄ᵀ P̄)) / (d − 1)!` with `P̄ = [P_1 − P_d, …, P_{d−1} − P_d]`.
//! The Gram determinant is evaluated as `det(R)²` from a Gram-Schmidt QR
//! factorization of `P̄`, which avoids squaring the condition number of
//! near-flat simplices.
//!
//! For a cloud of points the enclosed volume is that of a large simplex
//! spanned by cloud points inside the cloud's affine hull: vertices come from
//! column-pivoted orthogonalization of the difference vectors, then vertex
//! swaps that grow the volume are applied until none is left. Small problems
//! are searched exhaustively instead, which gives the true maximum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which a pivot residual counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;
const MAX_SWAPS: usize = 10_000;
/// Up to this many candidate simplices the largest one is found exhaustively.
pub const EXACT_SEARCH_LIMIT: u64 = 20_000;
const SWAP_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexVolume {
    pub volume: f64,
    /// Natural log of the volume; finite even where `volume` underflows.
    pub ln_volume: f64,
    /// Dimension of the simplex (vertex count − 1).
    pub dim: usize,
}

impl SimplexVolume {
    fn zero(dim: usize) -> Self {
        Self {
            volume: 0.0,
            ln_volume: f64::NEG_INFINITY,
            dim,
        }
    }
}

/// Volume of the simplex spanned by `vertices` (any ambient dimension at
/// least `vertices.len() − 1`).
pub fn simplex_volume(vertices: &[&[f64]]) -> Result<SimplexVolume> {
    if vertices.len() < 2 {
        return Err(Error::InvalidInput("a simplex needs at least 2 vertices".into()));
    }
    let ambient = vertices[0].len();
    if vertices.iter().any(|v| v.len() != ambient) {
        return Err(Error::InvalidInput("simplex vertices differ in dimension".into()));
    }
    let k = vertices.len() - 1;
    if k > ambient {
        return Ok(SimplexVolume::zero(k));
    }
    let last = vertices[k];
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut volume = 1.0;
    let mut ln_volume = 0.0;
    for (i, v) in vertices[..k].iter().enumerate() {
        let mut col: Vec<f64> = v.iter().zip(last).map(|(a, b)| a - b).collect();
        for _ in 0..2 {
            for axis in &q {
                let c: f64 = axis.iter().zip(&col).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(axis).for_each(|(x, a)| *x -= c * a);
            }
        }
        let d = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if d == 0.0 {
            return Ok(SimplexVolume::zero(k));
        }
        volume *= d / (i + 1) as f64;
        ln_volume += d.ln() - ((i + 1) as f64).ln();
        col.iter_mut().for_each(|x| *x /= d);
        q.push(col);
    }
    Ok(SimplexVolume {
        volume,
        ln_volume,
        dim: k,
    })
}

/// An orthonormal frame for the affine hull of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFrame {
    pub origin: Vec<f64>,
    /// Orthonormal axes, one per independent direction.
    pub axes: Vec<Vec<f64>>,
    /// Index of the origin point followed by the pivot points, in selection order.
    pub vertices: Vec<usize>,
}

impl AffineFrame {
    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    /// Coordinates of `x − origin` along the axes.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| a.iter().zip(x).zip(&self.origin).map(|((a, x), o)| a * (x - o)).sum())
            .collect()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Rank-revealing frame of `points` by column-pivoted modified Gram-Schmidt on
/// the differences to an origin point. The origin is the point farthest from
/// the centroid (lowest index on ties); each step then takes the point with
/// the largest residual. Pivoting stops once the largest residual drops to
/// `tol` times the largest initial difference norm.
pub fn affine_frame(points: &[&[f64]], tol: f64) -> Result<AffineFrame> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidInput("no points".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points differ in dimension".into()));
    }
    let mut centroid = vec![0.0; dim];
    for p in points {
        for (c, x) in centroid.iter_mut().zip(p.iter()) {
            *c += x / n as f64;
        }
    }
    let mut origin_idx = 0;
    let mut far = f64::NEG_INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = dist2(p, &centroid);
        if d > far {
            far = d;
            origin_idx = i;
        }
    }
    let origin = points[origin_idx].to_vec();
    let mut resid: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&origin).map(|(x, o)| x - o).collect())
        .collect();
    let mut norms: Vec<f64> = resid.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    let mut axes: Vec<Vec<f64>> = Vec::new();
    let mut vertices = vec![origin_idx];
    let mut used = vec![false; n];
    used[origin_idx] = true;

    while axes.len() < dim && scale > 0.0 {
        let mut pick = None;
        let mut best = tol * scale;
        for i in 0..n {
            if !used[i] && norms[i] > best {
                best = norms[i];
                pick = Some(i);
            }
        }
        let Some(p) = pick else { break };
        used[p] = true;
        vertices.push(p);
        let mut axis = resid[p].clone();
        // re-orthogonalize against earlier axes before normalizing
        for a in &axes {
            let c: f64 = a.iter().zip(&axis).map(|(x, y)| x * y).sum();
            axis.iter_mut().zip(a).for_each(|(y, x)| *y -= c * x);
        }
        let len = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len <= tol * scale {
            break;
        }
        axis.iter_mut().for_each(|x| *x /= len);
        for (r, nrm) in resid.iter_mut().zip(norms.iter_mut()) {
            let c: f64 = axis.iter().zip(r.iter()).map(|(x, y)| x * y).sum();
            r.iter_mut().zip(&axis).for_each(|(y, x)| *y -= c * x);
            *nrm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        axes.push(axis);
    }
    Ok(AffineFrame {
        origin,
        axes,
        vertices,
    })
}

fn coords_volume(coords: &[Vec<f64>], simplex: &[usize]) -> Result<SimplexVolume> {
    let verts: Vec<&[f64]> = simplex.iter().map(|&i| coords[i].as_slice()).collect();
    simplex_volume(&verts)
}

/// Grows a full-dimensional simplex over `coords` by vertex swaps.
///
/// Replacing vertex `i` by point `p` scales the volume by `|λ_i(p)|`, the
/// barycentric coordinate of `p`; the largest such factor is applied while it
/// exceeds one. Returns the final vertex indices and volume.
fn grow_simplex(coords: &[Vec<f64>], mut simplex: Vec<usize>) -> Result<(Vec<usize>, SimplexVolume)> {
    let r = simplex.len() - 1;
    let mut current = coords_volume(coords, &simplex)?;
    if r == 0 || current.volume == 0.0 && current.ln_volume == f64::NEG_INFINITY {
        return Ok((simplex, current));
    }
    for _ in 0..MAX_SWAPS {
        let v0 = &coords[simplex[0]];
        let b = DMatrix::from_fn(r, r, |i, j| coords[simplex[j + 1]][i] - v0[i]);
        let Some(lu) = Some(b.lu()).filter(|lu| lu.is_invertible()) else {
            break;
        };
        let rhs = DMatrix::from_fn(r, coords.len(), |i, j| coords[j][i] - v0[i]);
        let Some(lam) = lu.solve(&rhs) else { break };
        let mut best = (1.0 + SWAP_GAIN, usize::MAX, usize::MAX);
        for p in 0..coords.len() {
            let col = lam.column(p);
            let l0 = 1.0 - col.sum();
            if l0.abs() > best.0 {
                best = (l0.abs(), 0, p);
            }
            for i in 0..r {
                if col[i].abs() > best.0 {
                    best = (col[i].abs(), i + 1, p);
                }
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        let mut candidate = simplex.clone();
        candidate[best.1] = best.2;
        let vol = coords_volume(coords, &candidate)?;
        // barycentric factors can be inaccurate on thin simplices; only keep
        // swaps that really enlarge the simplex
        if !(vol.ln_volume > current.ln_volume + SWAP_GAIN) {
            break;
        }
        simplex = candidate;
        current = vol;
    }
    Ok((simplex, current))
}

fn binomial_capped(n: usize, k: usize, cap: u64) -> Option<u64> {
    let k = k.min(n.saturating_sub(k));
    let mut c: u64 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u64)? / (i as u64 + 1);
        if c > cap {
            return None;
        }
    }
    Some(c)
}

/// Largest simplex over all `(r+1)`-subsets of `coords`; the first subset in
/// lexicographic order wins ties.
fn exhaustive_simplex(coords: &[Vec<f64>], r: usize) -> Result<(Vec<usize>, SimplexVolume)> {
    let n = coords.len();
    let k = r + 1;
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = (idx.clone(), coords_volume(coords, &idx)?);
    while let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) {
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
        let v = coords_volume(coords, &idx)?;
        if v.ln_volume > best.1.ln_volume {
            best = (idx.clone(), v);
        }
    }
    Ok(best)
}

fn largest_simplex(coords: &[Vec<f64>], start: Vec<usize>) -> Result<(Vec<usize>, SimplexVolume)> {
    let r = start.len() - 1;
    if binomial_capped(coords.len(), r + 1, EXACT_SEARCH_LIMIT).is_some() {
        exhaustive_simplex(coords, r)
    } else {
        grow_simplex(coords, start)
    }
}

/// Enclosed volumes of a gated subset and of the whole cloud, measured in
/// the affine hull of the gated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosedVolume {
    pub v_t: f64,
    pub v_tot: f64,
    pub ln_v_t: f64,
    pub ln_v_tot: f64,
    /// Rank of the gated points' affine hull.
    pub d_effective: usize,
    pub gated: usize,
    /// Indices (into the cloud) of the gated simplex vertices.
    pub simplex: Vec<usize>,
}

impl EnclosedVolume {
    fn empty(gated: usize) -> Self {
        Self {
            v_t: 0.0,
            v_tot: 0.0,
            ln_v_t: f64::NEG_INFINITY,
            ln_v_tot: f64::NEG_INFINITY,
            d_effective: 0,
            gated,
            simplex: Vec::new(),
        }
    }

    /// `v_t / v_tot`, computed in log space; zero when either is zero.
    pub fn ratio(&self) -> f64 {
        if self.ln_v_t == f64::NEG_INFINITY || self.ln_v_tot == f64::NEG_INFINITY {
            0.0
        } else {
            (self.ln_v_t - self.ln_v_tot).exp()
        }
    }
}

/// Volume of the simplex grown over the `gated` points (`v_t`) and over all
/// `points` (`v_tot`), both in the `r`-dimensional affine hull of the gated
/// points. The cloud search covers the gated simplex (exhaustively or as its
/// starting point), so `v_t ≤ v_tot`.
pub fn enclosed_volume(points: &[&[f64]], gated: &[usize], tol: f64) -> Result<EnclosedVolume> {
    if gated.iter().any(|&i| i >= points.len()) {
        return Err(Error::InvalidInput("gated index out of range".into()));
    }
    if gated.len() < 2 {
        return Ok(EnclosedVolume::empty(gated.len()));
    }
    let gated_points: Vec<&[f64]> = gated.iter().map(|&i| points[i]).collect();
    let frame = affine_frame(&gated_points, tol)?;
    let r = frame.rank();
    if r == 0 {
        return Ok(EnclosedVolume::empty(gated.len()));
    }
    let gated_coords: Vec<Vec<f64>> = gated_points.iter().map(|p| frame.project(p)).collect();
    let (local, vt) = largest_simplex(&gated_coords, frame.vertices.clone())?;
    let simplex: Vec<usize> = local.iter().map(|&i| gated[i]).collect();

    let all_coords: Vec<Vec<f64>> = points.iter().map(|p| frame.project(p)).collect();
    let (_, vtot) = if binomial_capped(all_coords.len(), r + 1, EXACT_SEARCH_LIMIT).is_some() {
        exhaustive_simplex(&all_coords, r)?
    } else {
        grow_simplex(&all_coords, simplex.clone())?
    };
    Ok(EnclosedVolume {
        v_t: vt.volume,
        v_tot: vtot.volume,
        ln_v_t: vt.ln_volume,
        ln_v_tot: vtot.ln_volume,
        d_effective: r,
        gated: gated.len(),
        simplex,
    })
}
