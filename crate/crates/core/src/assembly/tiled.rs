//! Square dense matrix stored in fixed-size tiles; tiles that never receive
//! a nonzero value are not allocated.

use rayon::prelude::*;

use crate::scalar::{Real, C};

pub const TILE: usize = 64;

#[derive(Debug, Clone)]
pub struct TiledMatrix<T> {
    dim: usize,
    nt: usize,
    tiles: Vec<Option<Box<[C<T>]>>>,
}

impl<T: Real> TiledMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        let nt = dim.div_ceil(TILE);
        Self {
            dim,
            nt,
            tiles: vec![None; nt * nt],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn allocated_tiles(&self) -> usize {
        self.tiles.iter().filter(|t| t.is_some()).count()
    }

    pub fn total_tiles(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_zero(&self) -> bool {
        self.allocated_tiles() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        let (p, q) = (i / TILE, j / TILE);
        match &self.tiles[p * self.nt + q] {
            Some(t) => t[(i % TILE) * TILE + j % TILE],
            None => C::new(T::zero(), T::zero()),
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C<T>) {
        if v.re == T::zero() && v.im == T::zero() {
            return;
        }
        let idx = (i / TILE) * self.nt + j / TILE;
        let tile = self.tiles[idx]
            .get_or_insert_with(|| vec![C::new(T::zero(), T::zero()); TILE * TILE].into_boxed_slice());
        tile[(i % TILE) * TILE + j % TILE] += v;
    }

    /// Adds a row segment `values[k]` at columns `k`.
    pub fn add_row(&mut self, i: usize, values: &[C<T>]) {
        debug_assert_eq!(values.len(), self.dim);
        for (q, chunk) in values.chunks(TILE).enumerate() {
            if chunk.iter().all(|v| v.re == T::zero() && v.im == T::zero()) {
                continue;
            }
            let idx = (i / TILE) * self.nt + q;
            let tile = self.tiles[idx].get_or_insert_with(|| {
                vec![C::new(T::zero(), T::zero()); TILE * TILE].into_boxed_slice()
            });
            let row = &mut tile[(i % TILE) * TILE..(i % TILE) * TILE + chunk.len()];
            for (a, b) in row.iter_mut().zip(chunk) {
                *a += *b;
            }
        }
    }

    /// `y += A x`.
    pub fn matvec_add(&self, x: &[C<T>], y: &mut [C<T>]) {
        let nt = self.nt;
        let dim = self.dim;
        y.par_chunks_mut(TILE).enumerate().for_each(|(p, yblock)| {
            for q in 0..nt {
                if let Some(t) = &self.tiles[p * nt + q] {
                    let cols = (dim - q * TILE).min(TILE);
                    let xs = &x[q * TILE..q * TILE + cols];
                    for (r, yv) in yblock.iter_mut().enumerate() {
                        let row = &t[r * TILE..r * TILE + cols];
                        let mut acc = C::new(T::zero(), T::zero());
                        for (a, b) in row.iter().zip(xs) {
                            acc += *a * *b;
                        }
                        *yv += acc;
                    }
                }
            }
        });
    }

    /// Visits every stored entry as `(i, j, value)`.
    pub fn for_each_stored(&self, mut f: impl FnMut(usize, usize, C<T>)) {
        for p in 0..self.nt {
            for q in 0..self.nt {
                if let Some(t) = &self.tiles[p * self.nt + q] {
                    for r in 0..TILE.min(self.dim - p * TILE) {
                        for c in 0..TILE.min(self.dim - q * TILE) {
                            f(p * TILE + r, q * TILE + c, t[r * TILE + c]);
                        }
                    }
                }
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tiles
            .iter()
            .flatten()
            .all(|t| t.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    pub fn max_abs(&self) -> T {
        self.tiles
            .iter()
            .flatten()
            .flat_map(|t| t.iter())
            .map(|v| v.norm())
            .fold(T::zero(), T::max)
    }
}
