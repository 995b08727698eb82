//! Broad-phase neighbor search on a uniform cell grid and the persistent
//! contact table holding tangential histories.
//!
//! The grid is rebuilt from scratch every step; with the step-size bound in
//! place particles move a tiny fraction of a cell per step, so no skin or
//! Verlet list is kept. Candidate pairs come out sorted by (i, j), which
//! pins the force accumulation order and keeps runs bit-reproducible (and
//! comparable against a brute-force all-pairs oracle).

use crate::core::Particle;
use crate::forces::PairContactState;
use crate::math::Vec3;

/// Uniform linked-cell grid in CSR layout. Cell size must be at least the
/// largest interaction cut-off (max diameter plus adhesion reach) so every
/// interacting pair lies in the same or adjacent cells.
#[derive(Clone, Debug, Default)]
pub struct CellGrid {
    pub cell_size: f64,
    pub origin: Vec3,
    pub dims: [usize; 3],
    starts: Vec<u32>,
    entries: Vec<u32>,
    cursor: Vec<u32>,
}

impl CellGrid {
    pub fn new() -> Self {
        CellGrid::default()
    }

    /// Rebuild the grid over the current particle positions. Deterministic:
    /// the origin is the particle AABB corner and entries within a cell stay
    /// sorted by particle index.
    pub fn rebuild(&mut self, particles: &[Particle], cell_size: f64) {
        assert!(cell_size > 0.0, "cell size must be positive");
        self.cell_size = cell_size;
        if particles.is_empty() {
            self.dims = [0, 0, 0];
            self.starts.clear();
            self.entries.clear();
            return;
        }
        let mut lo = particles[0].position;
        let mut hi = lo;
        for p in particles {
            let q = p.position;
            lo.x = lo.x.min(q.x);
            lo.y = lo.y.min(q.y);
            lo.z = lo.z.min(q.z);
            hi.x = hi.x.max(q.x);
            hi.y = hi.y.max(q.y);
            hi.z = hi.z.max(q.z);
        }
        self.origin = lo;
        let span = hi - lo;
        let dims = [
            (span.x / cell_size).floor() as usize + 1,
            (span.y / cell_size).floor() as usize + 1,
            (span.z / cell_size).floor() as usize + 1,
        ];
        self.dims = dims;
        let ncells = dims[0] * dims[1] * dims[2];

        // Counting sort into CSR; all buffers are reused across rebuilds.
        self.cursor.clear();
        self.cursor.resize(ncells, 0);
        for p in particles {
            let c = self.cell_index_of(p.position);
            self.cursor[c] += 1;
        }
        self.starts.clear();
        self.starts.resize(ncells + 1, 0);
        let mut acc = 0u32;
        for c in 0..ncells {
            self.starts[c] = acc;
            acc += self.cursor[c];
            self.cursor[c] = self.starts[c];
        }
        self.starts[ncells] = acc;

        self.entries.clear();
        self.entries.resize(particles.len(), 0);
        for (idx, p) in particles.iter().enumerate() {
            let c = self.cell_index_of(p.position);
            self.entries[self.cursor[c] as usize] = idx as u32;
            self.cursor[c] += 1;
        }
    }

    #[inline]
    fn cell_coords(&self, pos: Vec3) -> [usize; 3] {
        // rel is non-negative by construction (origin is the position AABB
        // corner), so as-cast truncation is the floor.
        let rel = pos - self.origin;
        [
            ((rel.x / self.cell_size) as usize).min(self.dims[0] - 1),
            ((rel.y / self.cell_size) as usize).min(self.dims[1] - 1),
            ((rel.z / self.cell_size) as usize).min(self.dims[2] - 1),
        ]
    }

    #[inline]
    fn cell_index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    #[inline]
    fn cell_index_of(&self, pos: Vec3) -> usize {
        self.cell_index(self.cell_coords(pos))
    }

    /// Candidate partners of particle `idx` with a higher index, within
    /// center distance `r_i + r_j + reach`. Appends to `out` in ascending
    /// index order.
    pub fn candidates_of(&self, particles: &[Particle], idx: usize, reach: f64, out: &mut Vec<u32>) {
        let p = &particles[idx];
        let c = self.cell_coords(p.position);
        // The three x-adjacent cells are contiguous in the CSR layout, so
        // each (y, z) row contributes one contiguous entry range.
        let x_lo = c[0].saturating_sub(1);
        let x_hi = (c[0] + 1).min(self.dims[0] - 1);
        for z in c[2].saturating_sub(1)..=(c[2] + 1).min(self.dims[2] - 1) {
            for y in c[1].saturating_sub(1)..=(c[1] + 1).min(self.dims[1] - 1) {
                let row = (z * self.dims[1] + y) * self.dims[0];
                let a = self.starts[row + x_lo] as usize;
                let b = self.starts[row + x_hi + 1] as usize;
                for &j in &self.entries[a..b] {
                    if (j as usize) <= idx {
                        continue;
                    }
                    let q = &particles[j as usize];
                    let cutoff = p.radius + q.radius + reach;
                    if (q.position - p.position).norm_squared() < cutoff * cutoff {
                        out.push(j);
                    }
                }
            }
        }
        out.sort_unstable();
    }

    /// All candidate pairs, each unordered pair once, sorted by (i, j).
    pub fn candidate_pairs(&self, particles: &[Particle], reach: f64, out: &mut Vec<(u32, u32)>) {
        out.clear();
        let mut buf: Vec<u32> = Vec::with_capacity(32);
        for i in 0..particles.len() {
            buf.clear();
            self.candidates_of(particles, i, reach, &mut buf);
            for &j in &buf {
                out.push((i as u32, j));
            }
        }
    }

    /// Parallel gather over fixed particle chunks; chunk order is preserved
    /// on concatenation, so the output is identical to [`candidate_pairs`].
    #[cfg(feature = "parallel")]
    pub fn candidate_pairs_par(&self, particles: &[Particle], reach: f64, out: &mut Vec<(u32, u32)>) {
        use rayon::prelude::*;
        const CHUNK: usize = 512;
        let n = particles.len();
        let nchunks = n.div_ceil(CHUNK);
        let lists: Vec<Vec<(u32, u32)>> = (0..nchunks)
            .into_par_iter()
            .map(|c| {
                let mut local = Vec::with_capacity(CHUNK * 8);
                let mut buf: Vec<u32> = Vec::with_capacity(32);
                for i in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
                    buf.clear();
                    self.candidates_of(particles, i, reach, &mut buf);
                    for &j in &buf {
                        local.push((i as u32, j));
                    }
                }
                local
            })
            .collect();
        out.clear();
        for list in lists {
            out.extend(list);
        }
    }
}

/// Brute-force all-pairs candidate list with the same cut-off criterion;
/// oracle for the grid.
pub fn brute_force_pairs(particles: &[Particle], reach: f64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for i in 0..particles.len() {
        for j in (i + 1)..particles.len() {
            let cutoff = particles[i].radius + particles[j].radius + reach;
            if (particles[j].position - particles[i].position).norm_squared() < cutoff * cutoff {
                out.push((i as u32, j as u32));
            }
        }
    }
    out
}

/// Persistent tangential histories, keyed by particle id pairs (low id
/// first) and kept sorted by key. Entries exist exactly for the pairs that
/// were touching at the most recent step.
#[derive(Clone, Debug, Default)]
pub struct ContactTable {
    pub entries: Vec<((u32, u32), PairContactState)>,
}

impl ContactTable {
    pub fn new() -> Self {
        ContactTable::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: (u32, u32)) -> Option<&PairContactState> {
        self.entries
            .binary_search_by_key(&key, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Lifecycle sync: keep state for keys still touching, create fresh
    /// state for new touches, drop everything else. `touching` must be
    /// sorted by key.
    pub fn sync(
        &self,
        touching: &[(u32, u32)],
        mut fresh: impl FnMut((u32, u32)) -> PairContactState,
    ) -> ContactTable {
        debug_assert!(touching.windows(2).all(|w| w[0] < w[1]));
        let mut out = Vec::with_capacity(touching.len());
        let mut cursor = 0usize;
        for &key in touching {
            while cursor < self.entries.len() && self.entries[cursor].0 < key {
                cursor += 1;
            }
            if cursor < self.entries.len() && self.entries[cursor].0 == key {
                out.push((key, self.entries[cursor].1));
                cursor += 1;
            } else {
                out.push((key, fresh(key)));
            }
        }
        ContactTable { entries: out }
    }
}

/// Wall contact table: one tangential history per (particle id, wall).
/// Sorted by particle id; every wall owns one table.
#[derive(Clone, Debug, Default)]
pub struct WallContactTable {
    pub entries: Vec<(u32, PairContactState)>,
}

impl WallContactTable {
    pub fn get(&self, particle_id: u32) -> Option<&PairContactState> {
        self.entries
            .binary_search_by_key(&particle_id, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Particle;
    use crate::math::Vec3;
    use crate::rng::Rng;

    const UM: f64 = 1e-6;

    fn random_cloud(n: usize, span: f64, seed: u64) -> Vec<Particle> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|i| {
                let pos = Vec3::new(
                    rng.uniform_in(0.0, span),
                    rng.uniform_in(0.0, span),
                    rng.uniform_in(0.0, span),
                );
                let r = rng.uniform_in(10.0 * UM, 22.0 * UM);
                Particle::new(i as u32, pos, r, 4430.0)
            })
            .collect()
    }

    #[test]
    fn empty_set_gives_empty_grid() {
        let mut grid = CellGrid::new();
        grid.rebuild(&[], 45.0 * UM);
        let mut pairs = Vec::new();
        grid.candidate_pairs(&[], 0.0, &mut pairs);
        assert!(pairs.is_empty());
    }

    #[test]
    fn single_particle_no_pairs() {
        let p = vec![Particle::new(0, Vec3::zero(), 17.0 * UM, 4430.0)];
        let mut grid = CellGrid::new();
        grid.rebuild(&p, 45.0 * UM);
        let mut pairs = Vec::new();
        grid.candidate_pairs(&p, 0.0, &mut pairs);
        assert!(pairs.is_empty());
    }

    #[test]
    fn touching_pair_reported_once() {
        let p = vec![
            Particle::new(0, Vec3::zero(), 17.0 * UM, 4430.0),
            Particle::new(1, Vec3::new(33.0 * UM, 0.0, 0.0), 17.0 * UM, 4430.0),
        ];
        let mut grid = CellGrid::new();
        grid.rebuild(&p, 45.0 * UM);
        let mut pairs = Vec::new();
        grid.candidate_pairs(&p, 0.0, &mut pairs);
        assert_eq!(pairs, vec![(0, 1)]);
    }

    #[test]
    fn distant_particles_not_candidates() {
        let p = vec![
            Particle::new(0, Vec3::zero(), 17.0 * UM, 4430.0),
            Particle::new(1, Vec3::new(200.0 * UM, 0.0, 0.0), 17.0 * UM, 4430.0),
        ];
        let mut grid = CellGrid::new();
        grid.rebuild(&p, 45.0 * UM);
        let mut pairs = Vec::new();
        grid.candidate_pairs(&p, 1.0 * UM, &mut pairs);
        assert!(pairs.is_empty());
    }

    #[test]
    fn grid_matches_brute_force_oracle() {
        for seed in 0..5 {
            let particles = random_cloud(1000, 400.0 * UM, seed);
            let reach = 7.3e-8 * 10.0;
            let mut grid = CellGrid::new();
            grid.rebuild(&particles, 44.0 * UM + reach);
            let mut pairs = Vec::new();
            grid.candidate_pairs(&particles, reach, &mut pairs);
            let brute = brute_force_pairs(&particles, reach);
            assert_eq!(pairs, brute, "seed {seed}");
        }
    }

    #[test]
    fn rebuild_is_idempotent() {
        let particles = random_cloud(500, 300.0 * UM, 9);
        let mut grid = CellGrid::new();
        grid.rebuild(&particles, 45.0 * UM);
        let mut a = Vec::new();
        grid.candidate_pairs(&particles, 1e-7, &mut a);
        grid.rebuild(&particles, 45.0 * UM);
        let mut b = Vec::new();
        grid.candidate_pairs(&particles, 1e-7, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn contact_table_lifecycle() {
        let fresh = |_| PairContactState::fresh(0.017);
        let table = ContactTable::new();
        // First touch creates zeroed state.
        let t1 = table.sync(&[(0, 1), (2, 5)], fresh);
        assert_eq!(t1.len(), 2);
        assert_eq!(t1.get((0, 1)).unwrap().tangential_gap, Vec3::zero());
        // Persistent contact keeps its evolving state.
        let mut t2 = t1.clone();
        t2.entries[0].1.tangential_gap = Vec3::new(1e-9, 0.0, 0.0);
        let t3 = t2.sync(&[(0, 1)], fresh);
        assert_eq!(t3.len(), 1);
        assert_eq!(t3.get((0, 1)).unwrap().tangential_gap, Vec3::new(1e-9, 0.0, 0.0));
        // Separation removes history; re-contact starts from zero.
        let t4 = t3.sync(&[], fresh);
        assert!(t4.is_empty());
        let t5 = t4.sync(&[(0, 1)], fresh);
        assert_eq!(t5.get((0, 1)).unwrap().tangential_gap, Vec3::zero());
    }

    #[test]
    fn shaken_table_matches_brute_force_touching_set() {
        // Random positions re-drawn each iteration; the synced table keys
        // must always equal the brute-force set of touching pairs.
        let mut rng = Rng::new(31);
        let mut particles = random_cloud(120, 150.0 * UM, 32);
        let mut table = ContactTable::new();
        for _ in 0..200 {
            for p in &mut particles {
                p.position += Vec3::new(
                    rng.uniform_in(-4.0 * UM, 4.0 * UM),
                    rng.uniform_in(-4.0 * UM, 4.0 * UM),
                    rng.uniform_in(-4.0 * UM, 4.0 * UM),
                );
            }
            let mut touching: Vec<(u32, u32)> = Vec::new();
            for i in 0..particles.len() {
                for j in (i + 1)..particles.len() {
                    let gap = (particles[j].position - particles[i].position).norm()
                        - (particles[i].radius + particles[j].radius);
                    if gap <= 0.0 {
                        touching.push((particles[i].id, particles[j].id));
                    }
                }
            }
            table = table.sync(&touching, |_| PairContactState::fresh(0.0));
            let keys: Vec<(u32, u32)> = table.entries.iter().map(|e| e.0).collect();
            assert_eq!(keys, touching);
        }
    }
}
