//! Uniform 3-D hash grid for near-neighbour queries on the sphere.

use crate::Point;
use std::collections::HashMap;

pub(crate) type Cell = (i64, i64, i64);

#[derive(Clone, Debug)]
pub(crate) struct Grid {
    pub size: f64,
    cells: HashMap<Cell, Vec<u32>>,
}

impl Grid {
    pub fn new(size: f64) -> Self {
        Grid { size, cells: HashMap::new() }
    }

    pub fn cell(&self, p: Point) -> Cell {
        ((p.x / self.size).floor() as i64, (p.y / self.size).floor() as i64, (p.z / self.size).floor() as i64)
    }

    pub fn insert_point(&mut self, p: Point, id: u32) {
        let c = self.cell(p);
        self.cells.entry(c).or_default().push(id);
    }

    /// Insert into every cell meeting the axis-aligned box `center +- half`.
    pub fn insert_box(&mut self, center: Point, half: f64, id: u32) {
        let lo = self.cell(center - Point::new(half, half, half));
        let hi = self.cell(center + Point::new(half, half, half));
        for i in lo.0..=hi.0 {
            for j in lo.1..=hi.1 {
                for k in lo.2..=hi.2 {
                    self.cells.entry((i, j, k)).or_default().push(id);
                }
            }
        }
    }

    pub fn at(&self, c: Cell) -> &[u32] {
        self.cells.get(&c).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Ids in all cells within `rings` cells of `p` in each axis.
    pub fn around(&self, p: Point, rings: i64, mut f: impl FnMut(u32)) {
        let c = self.cell(p);
        for i in -rings..=rings {
            for j in -rings..=rings {
                for k in -rings..=rings {
                    for &id in self.at((c.0 + i, c.1 + j, c.2 + k)) {
                        f(id);
                    }
                }
            }
        }
    }

    /// Ids in the cells at Chebyshev distance exactly `ring` from the cell of `p`.
    pub fn shell(&self, p: Point, ring: i64, mut f: impl FnMut(u32)) {
        let c = self.cell(p);
        let r = ring;
        for i in -r..=r {
            for j in -r..=r {
                let edge = i.abs() == r || j.abs() == r;
                let mut visit = |k: i64| {
                    for &id in self.at((c.0 + i, c.1 + j, c.2 + k)) {
                        f(id);
                    }
                };
                if edge {
                    for k in -r..=r {
                        visit(k);
                    }
                } else if r > 0 {
                    visit(-r);
                    visit(r);
                } else {
                    visit(0);
                }
            }
        }
    }
}
