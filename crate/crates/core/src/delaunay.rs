//! Incremental Bowyer–Watson Delaunay triangulation with a visibility walk.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::Point;
use crate::math::{ceil, sqrt};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Tri {
    v: [usize; 3],
    /// `nb[i]` is across the edge opposite `v[i]`.
    nb: [usize; 3],
    alive: bool,
}

pub(crate) fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn in_circle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

struct Builder {
    pts: Vec<Point>,
    tris: Vec<Tri>,
    free: Vec<usize>,
    mark: Vec<u32>,
    generation: u32,
    last: usize,
}

impl Builder {
    fn alloc(&mut self, t: Tri) -> usize {
        if let Some(i) = self.free.pop() {
            self.tris[i] = t;
            i
        } else {
            self.tris.push(t);
            self.mark.push(0);
            self.tris.len() - 1
        }
    }

    fn locate(&self, p: Point) -> usize {
        let mut t = self.last;
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > 4 * self.tris.len() + 16 {
                break;
            }
            let tri = &self.tris[t];
            for k in 0..3 {
                let i = (k + steps) % 3;
                let a = self.pts[tri.v[(i + 1) % 3]];
                let b = self.pts[tri.v[(i + 2) % 3]];
                if orient(a, b, p) < 0.0 && tri.nb[i] != NONE {
                    t = tri.nb[i];
                    continue 'walk;
                }
            }
            return t;
        }
        // Fallback: linear scan.
        for (i, tri) in self.tris.iter().enumerate() {
            if !tri.alive {
                continue;
            }
            let [a, b, c] = tri.v.map(|v| self.pts[v]);
            if orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0 {
                return i;
            }
        }
        self.last
    }

    fn insert(&mut self, pi: usize) {
        let p = self.pts[pi];
        let start = self.locate(p);
        self.generation += 1;
        let gen = self.generation;
        let mut cavity = vec![start];
        self.mark[start] = gen;
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let n = self.tris[t].nb[i];
                if n == NONE || self.mark[n] == gen {
                    continue;
                }
                let [a, b, c] = self.tris[n].v.map(|v| self.pts[v]);
                if in_circle(a, b, c, p) > 0.0 {
                    self.mark[n] = gen;
                    cavity.push(n);
                    stack.push(n);
                }
            }
        }
        // Boundary of the cavity as (a, b, outside triangle).
        let mut boundary = Vec::with_capacity(cavity.len() + 2);
        for &t in &cavity {
            let tri = self.tris[t];
            for i in 0..3 {
                let n = tri.nb[i];
                if n == NONE || self.mark[n] != gen {
                    boundary.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], n, t));
                }
            }
        }
        for &t in &cavity {
            self.tris[t].alive = false;
            self.free.push(t);
        }
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outside, _) in &boundary {
            let id = self.alloc(Tri { v: [a, b, pi], nb: [NONE, NONE, outside], alive: true });
            self.mark[id] = 0;
            if outside != NONE {
                let ov = self.tris[outside].v;
                for k in 0..3 {
                    let (x, y) = (ov[(k + 1) % 3], ov[(k + 2) % 3]);
                    if x == b && y == a {
                        self.tris[outside].nb[k] = id;
                    }
                }
            }
            created.push(id);
        }
        for &id in &created {
            let [a, b, _] = self.tris[id].v;
            // Edge (b, p) is shared with the new triangle starting at b;
            // edge (p, a) with the one ending at a.
            for &other in &created {
                if other == id {
                    continue;
                }
                let ov = self.tris[other].v;
                if ov[0] == b {
                    self.tris[id].nb[0] = other;
                }
                if ov[1] == a {
                    self.tris[id].nb[1] = other;
                }
            }
        }
        self.last = *created.last().unwrap_or(&self.last);
    }
}

/// Delaunay triangles (counter-clockwise vertex triples) of `points`.
pub(crate) fn triangulate(points: &[Point]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let span = (hi - lo).norm().max(1e-12);
    let mid = lo.midpoint(hi);
    let mut pts = points.to_vec();
    pts.push(mid + Point::new(-20.0 * span, -20.0 * span));
    pts.push(mid + Point::new(20.0 * span, -20.0 * span));
    pts.push(mid + Point::new(0.0, 20.0 * span));
    let mut b = Builder {
        pts,
        tris: vec![Tri { v: [n, n + 1, n + 2], nb: [NONE; 3], alive: true }],
        free: Vec::new(),
        mark: vec![0],
        generation: 0,
        last: 0,
    };
    for i in spatial_order(points, lo, hi) {
        b.insert(i);
    }
    b.tris
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect()
}

/// Boustrophedon strip order keeps successive points close for the walk.
fn spatial_order(points: &[Point], lo: Point, hi: Point) -> Vec<usize> {
    let n = points.len();
    let strips = (ceil(sqrt(n as f64 / 4.0)) as usize).max(1);
    let height = ((hi.y - lo.y) / strips as f64).max(1e-300);
    let mut keyed: Vec<(usize, f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = (((p.y - lo.y) / height) as usize).min(strips - 1);
            let x = if s % 2 == 0 { p.x } else { -p.x };
            (s, x, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|k| k.2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_points_satisfy_empty_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..300).map(|_| Point::new(rng.random(), rng.random())).collect();
        let tris = triangulate(&pts);
        // Euler: for points in general position, T = 2n - 2 - hull.
        assert!(tris.len() > 2 * pts.len() - 2 - 60 && tris.len() < 2 * pts.len());
        for t in &tris {
            let [a, b, c] = t.map(|v| pts[v]);
            assert!(orient(a, b, c) > 0.0);
            for (i, &p) in pts.iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                assert!(in_circle(a, b, c, p) <= 1e-12);
            }
        }
    }

    #[test]
    fn square_grid_area_is_covered() {
        let mut pts = Vec::new();
        for i in 0..11 {
            for j in 0..11 {
                pts.push(Point::new(i as f64 * 0.1 + 1e-7 * j as f64, j as f64 * 0.1));
            }
        }
        let tris = triangulate(&pts);
        let area: f64 = tris.iter().map(|t| 0.5 * orient(pts[t[0]], pts[t[1]], pts[t[2]])).sum();
        assert!((area - 1.0).abs() < 1e-5, "area {area}");
    }
}
