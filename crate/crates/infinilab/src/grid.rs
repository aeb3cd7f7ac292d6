//! Lattice geometry: uniform grids, implicit shapes, node masks, sampled fields.
//!
//! Solves live on a uniform axis-aligned lattice that covers a smooth shape
//! (ball, annulus, axis box). Nodes strictly inside the shape are `Interior`.
//! Walking outward from an interior node along any stencil ray, the first node
//! on or outside the surface is `Boundary`; everything else is `Exterior` and
//! is never read. Stencil rays are clipped at the exact geometric surface, not
//! at the lattice, so Dirichlet data enters at true surface points.

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Hard cap on total lattice nodes, to catch misconfigured spacings early.
pub const MAX_NODES: usize = 100_000_000;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("dimension must be 1, 2, or 3 (got {0})")]
    BadDim(usize),
    #[error("grid spacing must be positive and finite (got {0})")]
    BadSpacing(f64),
    #[error("axis {axis} needs at least 3 nodes (got {n})")]
    TooFewNodes { axis: usize, n: usize },
    #[error("stencil radius must be at least 1")]
    BadStencilRadius,
    #[error("grid would hold {0} nodes, beyond the supported budget")]
    TooManyNodes(usize),
}

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("shape leaves the grid bounding box on axis {axis}: shape [{shape_lo}, {shape_hi}] vs grid [{grid_lo}, {grid_hi}]")]
    ShapeOutOfBounds {
        axis: usize,
        shape_lo: f64,
        shape_hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },
    #[error("stencil ray from interior node {node} leaves the grid while still inside the shape; widen the grid margin")]
    RayLeavesGrid { node: usize },
    #[error("no lattice node lies strictly inside the shape")]
    EmptyInterior,
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
}

#[derive(Debug, Error)]
#[error("sampler '{label}' returned a non-finite value at node {node}, x = {coords:?}")]
pub struct SampleError {
    pub label: String,
    pub node: usize,
    pub coords: Vec<f64>,
}

/// Uniform lattice. Inactive axes have extent 1 and coordinate 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub h: f64,
    pub origin: [f64; 3],
    pub extents: [usize; 3],
    pub stencil_radius: usize,
}

impl Grid {
    pub fn new(
        dim: usize,
        h: f64,
        origin: [f64; 3],
        extents: [usize; 3],
        stencil_radius: usize,
    ) -> Result<Self, GridError> {
        if !(1..=3).contains(&dim) {
            return Err(GridError::BadDim(dim));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::BadSpacing(h));
        }
        if stencil_radius == 0 {
            return Err(GridError::BadStencilRadius);
        }
        let mut ext = extents;
        for (a, e) in ext.iter_mut().enumerate() {
            if a < dim {
                if *e < 3 {
                    return Err(GridError::TooFewNodes { axis: a, n: *e });
                }
            } else {
                *e = 1;
            }
        }
        let total: usize = ext.iter().product();
        if total > MAX_NODES {
            return Err(GridError::TooManyNodes(total));
        }
        let mut org = origin;
        for a in dim..3 {
            org[a] = 0.0;
        }
        Ok(Grid {
            dim,
            h,
            origin: org,
            extents: ext,
            stencil_radius,
        })
    }

    /// Smallest grid covering `shape` with at least a stencil-radius margin on
    /// every side, with a lattice node placed exactly at the shape's center.
    pub fn covering(shape: &Shape, dim: usize, h: f64, stencil_radius: usize) -> Result<Self, GridError> {
        let (lo, hi) = shape.bounding_box();
        let c = shape.anchor();
        let margin = (stencil_radius as f64 + 1.0) * h;
        let mut origin = [0.0; 3];
        let mut extents = [1usize; 3];
        for a in 0..dim {
            let below = (((c[a] - (lo[a] - margin)) / h).ceil()).max(1.0) as usize;
            let above = ((((hi[a] + margin) - c[a]) / h).ceil()).max(1.0) as usize;
            origin[a] = c[a] - below as f64 * h;
            extents[a] = below + above + 1;
        }
        Grid::new(dim, h, origin, extents, stencil_radius)
    }

    pub fn total_nodes(&self) -> usize {
        self.extents.iter().product()
    }

    #[inline]
    pub fn flat_index(&self, i: [usize; 3]) -> usize {
        (i[2] * self.extents[1] + i[1]) * self.extents[0] + i[0]
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let nx = self.extents[0];
        let ny = self.extents[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn node_coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        [
            self.origin[0] + m[0] as f64 * self.h,
            self.origin[1] + m[1] as f64 * self.h,
            self.origin[2] + m[2] as f64 * self.h,
        ]
    }

    /// Flat index of the node `steps`-many lattice steps of `dir` away, if it
    /// stays inside the grid.
    #[inline]
    pub fn offset(&self, idx: usize, dir: [i64; 3], steps: i64) -> Option<usize> {
        let m = self.multi_index(idx);
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = m[a] as i64 + dir[a] * steps;
            if v < 0 || v >= self.extents[a] as i64 {
                return None;
            }
            out[a] = v as usize;
        }
        Some(self.flat_index(out))
    }

    pub fn axis_bounds(&self, a: usize) -> (f64, f64) {
        (
            self.origin[a],
            self.origin[a] + (self.extents[a] - 1) as f64 * self.h,
        )
    }

    /// Flat index of the lattice node at position `x`, if `x` lies on the
    /// lattice (up to rounding slack) and inside the grid.
    pub fn node_at(&self, x: &[f64; 3]) -> Option<usize> {
        let mut m = [0usize; 3];
        for a in 0..self.dim {
            let t = (x[a] - self.origin[a]) / self.h;
            let i = t.round();
            if (t - i).abs() > 1e-9 * (1.0 + t.abs()) || i < 0.0 || i >= self.extents[a] as f64 {
                return None;
            }
            m[a] = i as usize;
        }
        Some(self.flat_index(m))
    }
}

/// Implicit smooth shapes. `Rect` is an axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball { center: [f64; 3], radius: f64 },
    Annulus { center: [f64; 3], inner: f64, outer: f64 },
    Rect { lo: [f64; 3], hi: [f64; 3] },
}

impl Shape {
    pub fn validate(&self, dim: usize) -> Result<(), MaskError> {
        match self {
            Shape::Ball { radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(MaskError::DegenerateShape(format!("ball radius {radius}")));
                }
            }
            Shape::Annulus { inner, outer, .. } => {
                if !(*inner >= 0.0 && *outer > *inner && outer.is_finite()) {
                    return Err(MaskError::DegenerateShape(format!(
                        "annulus radii inner {inner}, outer {outer}"
                    )));
                }
            }
            Shape::Rect { lo, hi } => {
                for a in 0..dim {
                    if !(hi[a] > lo[a]) {
                        return Err(MaskError::DegenerateShape(format!(
                            "box axis {a}: [{}, {}]",
                            lo[a], hi[a]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Center for balls/annuli, midpoint for boxes; used to anchor grids.
    pub fn anchor(&self) -> [f64; 3] {
        match self {
            Shape::Ball { center, .. } | Shape::Annulus { center, .. } => *center,
            Shape::Rect { lo, hi } => [
                0.5 * (lo[0] + hi[0]),
                0.5 * (lo[1] + hi[1]),
                0.5 * (lo[2] + hi[2]),
            ],
        }
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            Shape::Ball { center, radius } => (
                [center[0] - radius, center[1] - radius, center[2] - radius],
                [center[0] + radius, center[1] + radius, center[2] + radius],
            ),
            Shape::Annulus { center, outer, .. } => (
                [center[0] - outer, center[1] - outer, center[2] - outer],
                [center[0] + outer, center[1] + outer, center[2] + outer],
            ),
            Shape::Rect { lo, hi } => (*lo, *hi),
        }
    }

    pub fn diameter(&self, dim: usize) -> f64 {
        let (lo, hi) = self.bounding_box();
        let mut d: f64 = 0.0;
        for a in 0..dim {
            d = d.max(hi[a] - lo[a]);
        }
        d
    }

    #[inline]
    pub fn contains_strict(&self, x: &[f64; 3], dim: usize) -> bool {
        match self {
            Shape::Ball { center, radius } => dist2(x, center, dim) < radius * radius,
            Shape::Annulus { center, inner, outer } => {
                let d2 = dist2(x, center, dim);
                d2 > inner * inner && d2 < outer * outer
            }
            Shape::Rect { lo, hi } => {
                (0..dim).all(|a| x[a] > lo[a] && x[a] < hi[a])
            }
        }
    }

    /// Euclidean distance from `x` to the shape's boundary (positive inside).
    pub fn boundary_distance(&self, x: &[f64; 3], dim: usize) -> f64 {
        match self {
            Shape::Ball { center, radius } => radius - dist2(x, center, dim).sqrt(),
            Shape::Annulus { center, inner, outer } => {
                let r = dist2(x, center, dim).sqrt();
                (r - inner).min(outer - r)
            }
            Shape::Rect { lo, hi } => {
                let mut d = f64::INFINITY;
                for a in 0..dim {
                    d = d.min(x[a] - lo[a]).min(hi[a] - x[a]);
                }
                d
            }
        }
    }

    /// First `t > 0` at which the ray `x + t·unit` leaves the open shape,
    /// provided it happens within `max_dist`. `x` must lie strictly inside.
    pub fn first_exit(&self, x: &[f64; 3], unit: &[f64; 3], max_dist: f64, dim: usize) -> Option<f64> {
        let t = match self {
            Shape::Ball { center, radius } => sphere_exit(x, unit, center, *radius, dim),
            Shape::Annulus { center, inner, outer } => {
                let t_out = sphere_exit(x, unit, center, *outer, dim);
                let t_in = sphere_entry(x, unit, center, *inner, dim);
                match t_in {
                    Some(ti) => t_out.min(ti),
                    None => t_out,
                }
            }
            Shape::Rect { lo, hi } => {
                let mut t = f64::INFINITY;
                for a in 0..dim {
                    let u = unit[a];
                    if u > 1e-300 {
                        t = t.min((hi[a] - x[a]) / u);
                    } else if u < -1e-300 {
                        t = t.min((lo[a] - x[a]) / u);
                    }
                }
                t
            }
        };
        if t <= max_dist * (1.0 + 1e-12) {
            Some(t.min(max_dist))
        } else {
            None
        }
    }
}

#[inline]
fn dist2(x: &[f64; 3], c: &[f64; 3], dim: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..dim {
        let d = x[a] - c[a];
        s += d * d;
    }
    s
}

/// Positive root of |x - c + t·u| = r for x strictly inside the sphere.
fn sphere_exit(x: &[f64; 3], unit: &[f64; 3], c: &[f64; 3], r: f64, dim: usize) -> f64 {
    let mut b = 0.0;
    let mut d2 = 0.0;
    for a in 0..dim {
        let d = x[a] - c[a];
        b += d * unit[a];
        d2 += d * d;
    }
    let disc = (b * b + r * r - d2).max(0.0);
    -b + disc.sqrt()
}

/// Smallest positive t with |x - c + t·u| = r when the ray meets the inner
/// sphere from outside it; None if it misses.
fn sphere_entry(x: &[f64; 3], unit: &[f64; 3], c: &[f64; 3], r: f64, dim: usize) -> Option<f64> {
    if r == 0.0 {
        return None;
    }
    let mut b = 0.0;
    let mut d2 = 0.0;
    for a in 0..dim {
        let d = x[a] - c[a];
        b += d * unit[a];
        d2 += d * d;
    }
    let disc = b * b + r * r - d2;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    if t > 0.0 {
        Some(t)
    } else {
        None
    }
}

/// Symmetric lattice direction set: all nonzero vectors in {-1,0,1}^dim,
/// arranged so each direction is immediately followed by its negation.
pub fn cube_directions(dim: usize) -> Vec<[i64; 3]> {
    directions_of_order(dim, 1)
}

/// All coprime lattice vectors with Chebyshev norm <= order, in +/- pairs.
/// Order 1 reproduces the axis+diagonal set (2 in 1D, 8 in 2D, 26 in 3D).
pub fn directions_of_order(dim: usize, order: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let r = order.max(1);
    let range = |active: bool| if active { (-r, r) } else { (0, 0) };
    let (zl, zh) = range(dim >= 3);
    let (yl, yh) = range(dim >= 2);
    for z in zl..=zh {
        for y in yl..=yh {
            for x in -r..=r {
                let v = [x, y, z];
                if v == [0, 0, 0] || !canonical_half(&v) {
                    continue;
                }
                let g = gcd3(x.unsigned_abs(), y.unsigned_abs(), z.unsigned_abs());
                if g != 1 {
                    continue;
                }
                out.push(v);
                out.push([-x, -y, -z]);
            }
        }
    }
    out
}

fn canonical_half(v: &[i64; 3]) -> bool {
    for &c in v.iter().rev() {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

fn gcd3(a: u64, b: u64, c: u64) -> u64 {
    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    gcd(gcd(a, b), c).max(1)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// Node classification of a grid against a shape, plus the flat lists the
/// solvers iterate over.
#[derive(Clone, Debug)]
pub struct DomainMask {
    grid: Arc<Grid>,
    shape: Shape,
    kinds: Vec<NodeKind>,
    interior: Vec<u32>,
    boundary: Vec<u32>,
}

/// Classifies nodes by walking stencil rays outward from every node strictly
/// inside the shape, using the default direction set for the grid's dimension.
pub fn build_mask(grid: Grid, shape: Shape) -> Result<Arc<DomainMask>, MaskError> {
    shape.validate(grid.dim)?;
    let dirs = cube_directions(grid.dim);
    let (slo, shi) = shape.bounding_box();
    for a in 0..grid.dim {
        let (glo, ghi) = grid.axis_bounds(a);
        let eps = 1e-12 * (1.0 + shi[a].abs() + slo[a].abs());
        if slo[a] < glo - eps || shi[a] > ghi + eps {
            return Err(MaskError::ShapeOutOfBounds {
                axis: a,
                shape_lo: slo[a],
                shape_hi: shi[a],
                grid_lo: glo,
                grid_hi: ghi,
            });
        }
    }

    let n = grid.total_nodes();
    let mut kinds = vec![NodeKind::Exterior; n];
    let mut interior = Vec::new();
    for idx in 0..n {
        let x = grid.node_coords(idx);
        if shape.contains_strict(&x, grid.dim) {
            kinds[idx] = NodeKind::Interior;
            interior.push(idx as u32);
        }
    }
    if interior.is_empty() {
        return Err(MaskError::EmptyInterior);
    }

    let k = grid.stencil_radius as i64;
    for &iu in &interior {
        let idx = iu as usize;
        for d in &dirs {
            for j in 1..=k {
                match grid.offset(idx, *d, j) {
                    None => {
                        // Ran off the lattice while the previous node was
                        // still inside the shape: the margin is too small.
                        return Err(MaskError::RayLeavesGrid { node: idx });
                    }
                    Some(t) => {
                        if kinds[t] == NodeKind::Interior {
                            continue;
                        }
                        kinds[t] = NodeKind::Boundary;
                        break;
                    }
                }
            }
        }
    }

    let boundary: Vec<u32> = (0..n)
        .filter(|&i| kinds[i] == NodeKind::Boundary)
        .map(|i| i as u32)
        .collect();

    Ok(Arc::new(DomainMask {
        grid: Arc::new(grid),
        shape,
        kinds,
        interior,
        boundary,
    }))
}

impl DomainMask {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn shape(&self) -> &Shape {
        &self.shape
    }
    #[inline]
    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }
    pub fn interior(&self) -> &[u32] {
        &self.interior
    }
    pub fn boundary(&self) -> &[u32] {
        &self.boundary
    }
    /// Interior and boundary nodes in flat (row-major) order.
    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k != NodeKind::Exterior)
            .map(|(i, _)| i)
    }
}

/// Closed-form scalar function of position.
#[derive(Clone)]
pub struct Sampler {
    label: String,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl Sampler {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Sampler {
            label: label.into(),
            f: Arc::new(f),
        }
    }
    pub fn constant(v: f64) -> Self {
        Sampler::new(format!("const({v})"), move |_| v)
    }
    pub fn zero() -> Self {
        Sampler::constant(0.0)
    }
    /// g(|x - center|).
    pub fn radial(
        label: impl Into<String>,
        center: [f64; 3],
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Sampler::new(label, move |x| {
            let mut s = 0.0;
            for (a, xa) in x.iter().enumerate() {
                let d = xa - center[a];
                s += d * d;
            }
            g(s.sqrt())
        })
    }
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sampler({})", self.label)
    }
}

/// Closed-form vector field of position (drift coefficients).
#[derive(Clone)]
pub struct VectorSampler {
    label: String,
    f: Arc<dyn Fn(&[f64], &mut [f64; 3]) + Send + Sync>,
}

impl VectorSampler {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64], &mut [f64; 3]) + Send + Sync + 'static,
    ) -> Self {
        VectorSampler {
            label: label.into(),
            f: Arc::new(f),
        }
    }
    pub fn zero() -> Self {
        VectorSampler::new("zero", |_, out| *out = [0.0; 3])
    }
    pub fn constant(v: [f64; 3]) -> Self {
        VectorSampler::new(format!("const({v:?})"), move |_, out| *out = v)
    }
    /// g(|x|)·x/|x|, zero at the origin.
    pub fn radial_outward(label: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        VectorSampler::new(label, move |x, out| {
            let mut r2 = 0.0;
            for &xa in x {
                r2 += xa * xa;
            }
            let r = r2.sqrt();
            *out = [0.0; 3];
            if r > 0.0 {
                let s = g(r) / r;
                for (a, &xa) in x.iter().enumerate() {
                    out[a] = s * xa;
                }
            }
        })
    }
    #[inline]
    pub fn eval(&self, x: &[f64], out: &mut [f64; 3]) {
        *out = [0.0; 3];
        (self.f)(x, out)
    }
    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for VectorSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorSampler({})", self.label)
    }
}

/// Node values over a mask. Exterior entries are held at zero and never read.
/// The optional boundary sampler supplies Dirichlet values at exact ray-surface
/// intersection points; without it, clipped rays interpolate linearly between
/// the bracketing node values.
#[derive(Clone, Debug)]
pub struct ScalarField {
    mask: Arc<DomainMask>,
    values: Vec<f64>,
    boundary_data: Option<Sampler>,
}

impl ScalarField {
    pub fn constant(mask: &Arc<DomainMask>, v: f64) -> Self {
        let n = mask.grid().total_nodes();
        let mut values = vec![0.0; n];
        for idx in mask.active_nodes() {
            values[idx] = v;
        }
        ScalarField {
            mask: mask.clone(),
            values,
            boundary_data: None,
        }
    }

    pub fn from_values(mask: &Arc<DomainMask>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mask.grid().total_nodes());
        ScalarField {
            mask: mask.clone(),
            values,
            boundary_data: None,
        }
    }

    pub fn mask(&self) -> &Arc<DomainMask> {
        &self.mask
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }
    pub fn boundary_data(&self) -> Option<&Sampler> {
        self.boundary_data.as_ref()
    }
    pub fn with_boundary_data(mut self, g: Sampler) -> Self {
        self.boundary_data = Some(g);
        self
    }

    /// Overwrites boundary-node values with g at the node coordinates and
    /// attaches g for exact surface clipping.
    pub fn pin_boundary(&mut self, g: &Sampler) {
        let grid = self.mask.grid().clone();
        let dim = grid.dim;
        for &b in self.mask.boundary() {
            let x = grid.node_coords(b as usize);
            self.values[b as usize] = g.eval(&x[..dim]);
        }
        self.boundary_data = Some(g.clone());
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for idx in self.mask.active_nodes() {
            m = m.max(self.values[idx].abs());
        }
        m
    }

    pub fn interior_min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in self.mask.interior() {
            let v = self.values[i as usize];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// max - min over interior and boundary nodes.
    pub fn oscillation(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for idx in self.mask.active_nodes() {
            let v = self.values[idx];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Evaluates a sampler at every interior and boundary node and attaches it as
/// the field's boundary data.
pub fn sample(sampler: &Sampler, mask: &Arc<DomainMask>) -> Result<ScalarField, SampleError> {
    let grid = mask.grid();
    let dim = grid.dim;
    let mut values = vec![0.0; grid.total_nodes()];
    for idx in mask.active_nodes() {
        let x = grid.node_coords(idx);
        let v = sampler.eval(&x[..dim]);
        if !v.is_finite() {
            return Err(SampleError {
                label: sampler.label().to_string(),
                node: idx,
                coords: x[..dim].to_vec(),
            });
        }
        values[idx] = v;
    }
    Ok(ScalarField {
        mask: mask.clone(),
        values,
        boundary_data: Some(sampler.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(lo: f64, h: f64, n: usize) -> Grid {
        Grid::new(1, h, [lo, 0.0, 0.0], [n, 1, 1], 1).unwrap()
    }

    #[test]
    fn ball_mask_1d_counts() {
        let g = grid_1d(-1.0, 0.5, 5);
        let m = build_mask(
            g,
            Shape::Ball {
                center: [0.0; 3],
                radius: 1.0,
            },
        )
        .unwrap();
        let ints: Vec<f64> = m
            .interior()
            .iter()
            .map(|&i| m.grid().node_coords(i as usize)[0])
            .collect();
        assert_eq!(ints, vec![-0.5, 0.0, 0.5]);
        let bds: Vec<f64> = m
            .boundary()
            .iter()
            .map(|&i| m.grid().node_coords(i as usize)[0])
            .collect();
        assert_eq!(bds, vec![-1.0, 1.0]);
    }

    #[test]
    fn rect_mask_2d_counts() {
        let shape = Shape::Rect {
            lo: [0.0, 0.0, 0.0],
            hi: [1.0, 1.0, 0.0],
        };
        let g = Grid::covering(&shape, 2, 0.25, 1).unwrap();
        let m = build_mask(g, shape).unwrap();
        assert_eq!(m.interior().len(), 9);
        assert_eq!(m.boundary().len(), 16);
    }

    #[test]
    fn annulus_mask_1d_is_two_segments() {
        let g = grid_1d(-2.0, 0.5, 9);
        let m = build_mask(
            g,
            Shape::Annulus {
                center: [0.0; 3],
                inner: 0.5,
                outer: 1.5,
            },
        )
        .unwrap();
        let ints: Vec<f64> = m
            .interior()
            .iter()
            .map(|&i| m.grid().node_coords(i as usize)[0])
            .collect();
        assert_eq!(ints, vec![-1.0, 1.0]);
        let bds: Vec<f64> = m
            .boundary()
            .iter()
            .map(|&i| m.grid().node_coords(i as usize)[0])
            .collect();
        assert_eq!(bds, vec![-1.5, -0.5, 0.5, 1.5]);
    }

    #[test]
    fn kinds_partition_node_set() {
        let shape = Shape::Ball {
            center: [0.0; 3],
            radius: 0.93,
        };
        let g = Grid::covering(&shape, 2, 0.17, 2).unwrap();
        let total = g.total_nodes();
        let m = build_mask(g, shape).unwrap();
        let mut counts = [0usize; 3];
        for i in 0..total {
            counts[match m.kind(i) {
                NodeKind::Interior => 0,
                NodeKind::Boundary => 1,
                NodeKind::Exterior => 2,
            }] += 1;
        }
        assert_eq!(counts[0], m.interior().len());
        assert_eq!(counts[1], m.boundary().len());
        assert_eq!(counts.iter().sum::<usize>(), total);
        assert!(counts[0] > 0 && counts[1] > 0);
    }

    #[test]
    fn empty_interior_is_an_error() {
        let g = grid_1d(-1.0, 0.5, 5);
        let err = build_mask(
            g,
            Shape::Ball {
                center: [0.25, 0.0, 0.0],
                radius: 0.1,
            },
        )
        .unwrap_err();
        assert!(matches!(err, MaskError::EmptyInterior));
    }

    #[test]
    fn oversized_shape_is_an_error() {
        let g = grid_1d(-1.0, 0.5, 5);
        let err = build_mask(
            g,
            Shape::Ball {
                center: [0.0; 3],
                radius: 2.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, MaskError::ShapeOutOfBounds { .. }));
    }

    #[test]
    fn non_finite_sample_names_the_node() {
        let g = grid_1d(-1.0, 0.5, 5);
        let m = build_mask(
            g,
            Shape::Ball {
                center: [0.0; 3],
                radius: 1.0,
            },
        )
        .unwrap();
        let s = Sampler::new("inv", |x| 1.0 / x[0]);
        let err = sample(&s, &m).unwrap_err();
        assert_eq!(err.coords, vec![0.0]);
        assert_eq!(err.label, "inv");
    }

    #[test]
    fn quadratic_second_difference_is_exact_for_exact_spacing() {
        // h = 0.25 is exactly representable, so the centered second
        // difference of x^2 is exactly 2 in floating point.
        let g = grid_1d(-1.0, 0.25, 9);
        let m = build_mask(
            g,
            Shape::Ball {
                center: [0.0; 3],
                radius: 1.0,
            },
        )
        .unwrap();
        let f = sample(&Sampler::new("x^2", |x| x[0] * x[0]), &m).unwrap();
        let grid = m.grid();
        let c = grid.flat_index([4, 0, 0]);
        let l = grid.flat_index([3, 0, 0]);
        let r = grid.flat_index([5, 0, 0]);
        let dd = (f.get(l) + f.get(r) - 2.0 * f.get(c)) / (0.25 * 0.25);
        assert_eq!(dd, 2.0);
    }

    #[test]
    fn ball_first_exit_matches_geometry() {
        let shape = Shape::Ball {
            center: [0.0; 3],
            radius: 1.0,
        };
        let t = shape
            .first_exit(&[0.5, 0.0, 0.0], &[1.0, 0.0, 0.0], 10.0, 1)
            .unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        // Pointing inward: exits through the far side.
        let t = shape
            .first_exit(&[0.5, 0.0, 0.0], &[-1.0, 0.0, 0.0], 10.0, 1)
            .unwrap();
        assert!((t - 1.5).abs() < 1e-15);
        // Within a short arm the ray stays inside.
        assert!(shape
            .first_exit(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 0.25, 1)
            .is_none());
    }

    #[test]
    fn annulus_first_exit_sees_the_inner_sphere() {
        let shape = Shape::Annulus {
            center: [0.0; 3],
            inner: 0.5,
            outer: 2.0,
        };
        let t = shape
            .first_exit(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0], 10.0, 2)
            .unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        // A 2D chord that dips through the hole between two inside points:
        // from (-1, 0.3) along +x, the inner circle is first met where
        // x = -sqrt(0.25 - 0.09) = -0.4.
        let x = [-1.0, 0.3, 0.0];
        let u = [1.0, 0.0, 0.0];
        let t = shape.first_exit(&x, &u, 2.0, 2).unwrap();
        assert!((t - 0.6).abs() < 1e-12, "t = {t}");
        // Raising the chord above the hole clears the inner circle.
        assert!(shape
            .first_exit(&[-1.0, 0.6, 0.0], &[1.0, 0.0, 0.0], 1.5, 2)
            .is_none());
    }

    #[test]
    fn direction_sets_have_expected_sizes_and_pairing() {
        assert_eq!(cube_directions(1).len(), 2);
        assert_eq!(cube_directions(2).len(), 8);
        assert_eq!(cube_directions(3).len(), 26);
        for dim in 1..=3 {
            let d = cube_directions(dim);
            for p in (0..d.len()).step_by(2) {
                for a in 0..3 {
                    assert_eq!(d[p][a], -d[p + 1][a]);
                }
            }
        }
        // Extended set keeps only coprime vectors.
        let d2 = directions_of_order(2, 2);
        assert!(d2.contains(&[2, 1, 0]));
        assert!(!d2.contains(&[2, 2, 0]));
    }
}
