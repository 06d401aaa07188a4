//! Cell-centered scalar fields on a uniform rectangular grid.
//!
//! Every differential operator here realizes homogeneous Neumann data by
//! even reflection: the ghost value beyond a wall equals the boundary cell
//! itself, so the normal difference across the wall is zero. All operators
//! are written in face-flux form, which makes the discrete divergence
//! theorem hold to round-off.

use std::io::{self, BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid must have at least 4 cells per axis, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize },
    #[error("domain side lengths must be positive and finite, got {lx} x {ly}")]
    BadExtent { lx: f64, ly: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains a non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("malformed field file: {0}")]
    Format(String),
}

/// Rectangle `[0, lx] x [0, ly]` split into `nx x ny` equal cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain2D {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Domain2D {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self, FieldError> {
        if nx < 4 || ny < 4 {
            return Err(FieldError::GridTooSmall { nx, ny });
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(FieldError::BadExtent { lx, ly });
        }
        Ok(Self { lx, ly, nx, ny })
    }

    /// Unit square with `n x n` cells.
    pub fn unit_square(n: usize) -> Result<Self, FieldError> {
        Self::new(1.0, 1.0, n, n)
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// |Ω|
    pub fn measure(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Center of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Lebesgue exponent accepted by [`Field2D::norm_lp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    L3,
    L4,
    Inf,
}

/// Scalar field stored row-major: value at `(i, j)` lives at `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    domain: Domain2D,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(domain: Domain2D, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != domain.len() {
            return Err(FieldError::LengthMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite { index });
        }
        Ok(Self { domain, values })
    }

    pub fn constant(domain: Domain2D, c: f64) -> Self {
        Self {
            domain,
            values: vec![c; domain.len()],
        }
    }

    pub fn zeros(domain: Domain2D) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(domain: Domain2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(domain.len());
        for j in 0..domain.ny {
            for i in 0..domain.nx {
                let (x, y) = domain.center(i, j);
                values.push(f(x, y));
            }
        }
        Self { domain, values }
    }

    /// Wraps raw values without the finiteness scan. Used on hot paths
    /// where the caller performs its own check.
    pub(crate) fn from_raw(domain: Domain2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain2D {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut_vec(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D {
            domain: self.domain,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Field2D {
        self.map(|x| a * x)
    }

    pub fn zip_with(
        &self,
        other: &Field2D,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Field2D, FieldError> {
        self.check_same_domain(other)?;
        Ok(Field2D {
            domain: self.domain,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn check_same_domain(&self, other: &Field2D) -> Result<(), FieldError> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(FieldError::DomainMismatch)
        }
    }

    /// Midpoint quadrature: sum of values times cell area.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.cell_area()
    }

    pub fn norm_lp(&self, p: Norm) -> f64 {
        let area = self.domain.cell_area();
        match p {
            Norm::L1 => self.values.iter().map(|x| x.abs()).sum::<f64>() * area,
            Norm::L2 => (self.values.iter().map(|x| x * x).sum::<f64>() * area).sqrt(),
            Norm::L3 => (self.values.iter().map(|x| x.abs().powi(3)).sum::<f64>() * area).cbrt(),
            Norm::L4 => (self.values.iter().map(|x| (x * x) * (x * x)).sum::<f64>() * area)
                .sqrt()
                .sqrt(),
            Norm::Inf => self.values.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// Five-point Laplacian with reflecting ghosts.
    pub fn laplacian(&self) -> Field2D {
        let d = self.domain;
        let (nx, ny) = (d.nx, d.ny);
        let (ax, ay) = (1.0 / (d.hx() * d.hx()), 1.0 / (d.hy() * d.hy()));
        let f = &self.values;
        let mut out = vec![0.0; f.len()];
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx - 1 {
                let flux = (f[row + i + 1] - f[row + i]) * ax;
                out[row + i] += flux;
                out[row + i + 1] -= flux;
            }
        }
        for j in 0..ny - 1 {
            let (row, up) = (j * nx, (j + 1) * nx);
            for i in 0..nx {
                let flux = (f[up + i] - f[row + i]) * ay;
                out[row + i] += flux;
                out[up + i] -= flux;
            }
        }
        Field2D::from_raw(d, out)
    }

    /// Discrete `∇·(χ u ∇v)` with `u` upwinded at each face from the cell the
    /// flux leaves. Wall fluxes are zero, so the cell sum vanishes.
    pub fn chemo_flux_divergence(u: &Field2D, v: &Field2D, chi: f64) -> Result<Field2D, FieldError> {
        u.check_same_domain(v)?;
        let d = u.domain;
        let (nx, ny) = (d.nx, d.ny);
        let (ax, ay) = (chi / (d.hx() * d.hx()), chi / (d.hy() * d.hy()));
        let (uu, vv) = (&u.values, &v.values);
        let mut out = vec![0.0; uu.len()];
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx - 1 {
                let (a, b) = (row + i, row + i + 1);
                let gv = vv[b] - vv[a];
                let donor = if gv > 0.0 { uu[a] } else { uu[b] };
                let flux = donor * gv * ax;
                out[a] += flux;
                out[b] -= flux;
            }
        }
        for j in 0..ny - 1 {
            let (row, up) = (j * nx, (j + 1) * nx);
            for i in 0..nx {
                let (a, b) = (row + i, up + i);
                let gv = vv[b] - vv[a];
                let donor = if gv > 0.0 { uu[a] } else { uu[b] };
                let flux = donor * gv * ay;
                out[a] += flux;
                out[b] -= flux;
            }
        }
        Ok(Field2D::from_raw(d, out))
    }

    /// `‖∇f‖²_{L²}` from face differences over interior faces.
    pub fn grad_norm_l2_sq(&self) -> f64 {
        let d = self.domain;
        let (nx, ny) = (d.nx, d.ny);
        let (hx, hy) = (d.hx(), d.hy());
        let f = &self.values;
        let mut sx = 0.0;
        for j in 0..ny {
            let row = &f[j * nx..(j + 1) * nx];
            sx += row.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>();
        }
        let mut sy = 0.0;
        for j in 0..ny - 1 {
            let (lo, hi) = (&f[j * nx..(j + 1) * nx], &f[(j + 1) * nx..(j + 2) * nx]);
            sy += lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>();
        }
        // (Δ/h)² · hx·hy per face
        sx * hy / hx + sy * hx / hy
    }

    /// Largest face-difference gradient component, `max |Δf| / h`.
    pub fn grad_linf(&self) -> f64 {
        let d = self.domain;
        let (nx, ny) = (d.nx, d.ny);
        let f = &self.values;
        let mut gx: f64 = 0.0;
        for j in 0..ny {
            let row = &f[j * nx..(j + 1) * nx];
            gx = row.windows(2).fold(gx, |m, w| m.max((w[1] - w[0]).abs()));
        }
        let mut gy: f64 = 0.0;
        for j in 0..ny - 1 {
            let (lo, hi) = (&f[j * nx..(j + 1) * nx], &f[(j + 1) * nx..(j + 2) * nx]);
            gy = lo.iter().zip(hi).fold(gy, |m, (a, b)| m.max((b - a).abs()));
        }
        (gx / d.hx()).max(gy / d.hy())
    }

    pub fn laplacian_l2_sq(&self) -> f64 {
        let n = self.laplacian().norm_lp(Norm::L2);
        n * n
    }

    /// Plain-text grid: a header line `nx ny lx ly`, then `ny` rows of `nx`
    /// values each, row `j = 0` first.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.domain;
        writeln!(w, "{} {} {} {}", d.nx, d.ny, crate::output::fmt17(d.lx), crate::output::fmt17(d.ly))?;
        for row in self.values.chunks(d.nx) {
            let line: Vec<String> = row.iter().map(|&x| crate::output::fmt17(x)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, FieldError> {
        let mut tokens = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| FieldError::Format(e.to_string()))?;
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        let mut next = |what: &str| it.next().ok_or_else(|| FieldError::Format(format!("missing {what}")));
        let nx: usize = parse_tok(&next("nx")?)?;
        let ny: usize = parse_tok(&next("ny")?)?;
        let lx: f64 = parse_tok(&next("lx")?)?;
        let ly: f64 = parse_tok(&next("ly")?)?;
        let domain = Domain2D::new(lx, ly, nx, ny)?;
        let mut values = Vec::with_capacity(domain.len());
        for _ in 0..domain.len() {
            values.push(parse_tok(&next("value")?)?);
        }
        if next("end").is_ok() {
            return Err(FieldError::Format("trailing data".into()));
        }
        Field2D::new(domain, values)
    }

    /// Little-endian binary grid: `u64 nx, u64 ny, f64 lx, f64 ly`, then the
    /// row-major values as `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.domain;
        w.write_all(&(d.nx as u64).to_le_bytes())?;
        w.write_all(&(d.ny as u64).to_le_bytes())?;
        w.write_all(&d.lx.to_le_bytes())?;
        w.write_all(&d.ly.to_le_bytes())?;
        for x in &self.values {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, FieldError> {
        let mut buf = [0u8; 8];
        let mut word = |r: &mut R| -> Result<[u8; 8], FieldError> {
            r.read_exact(&mut buf).map_err(|e| FieldError::Format(e.to_string()))?;
            Ok(buf)
        };
        let nx = u64::from_le_bytes(word(&mut r)?) as usize;
        let ny = u64::from_le_bytes(word(&mut r)?) as usize;
        let lx = f64::from_le_bytes(word(&mut r)?);
        let ly = f64::from_le_bytes(word(&mut r)?);
        let domain = Domain2D::new(lx, ly, nx, ny)?;
        let mut values = Vec::with_capacity(domain.len());
        for _ in 0..domain.len() {
            values.push(f64::from_le_bytes(word(&mut r)?));
        }
        Field2D::new(domain, values)
    }
}

fn parse_tok<T: std::str::FromStr>(s: &str) -> Result<T, FieldError> {
    s.parse()
        .map_err(|_| FieldError::Format(format!("cannot parse {s:?}")))
}
