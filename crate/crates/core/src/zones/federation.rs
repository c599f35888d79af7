use crate::scalar::ClockValue;

use super::{ClockId, Constraint, Zone};

/// A finite union of zones over the same clocks.
///
/// Members may overlap; `reduce` only drops members subsumed by another.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Federation {
    clocks: usize,
    zones: Vec<Zone>,
}

impl Federation {
    pub fn empty(clocks: usize) -> Federation {
        Federation { clocks, zones: Vec::new() }
    }

    pub fn universe(clocks: usize) -> Federation {
        Federation::from_zone(Zone::universe(clocks))
    }

    pub fn from_zone(z: Zone) -> Federation {
        let clocks = z.clocks();
        let zones = if z.is_empty() { Vec::new() } else { vec![z] };
        Federation { clocks, zones }
    }

    pub fn from_zones(clocks: usize, zones: impl IntoIterator<Item = Zone>) -> Federation {
        let zones = zones.into_iter().filter(|z| !z.is_empty()).collect();
        Federation { clocks, zones }
    }

    pub fn from_constraints(clocks: usize, cs: &[Constraint]) -> Federation {
        Federation::from_zone(Zone::from_constraints(clocks, cs))
    }

    pub fn clocks(&self) -> usize {
        self.clocks
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn into_zones(self) -> Vec<Zone> {
        self.zones
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn add_zone(&mut self, z: Zone) {
        if !z.is_empty() && !self.zones.iter().any(|m| z.is_subset(m)) {
            self.zones.retain(|m| !m.is_subset(&z));
            self.zones.push(z);
        }
    }

    pub fn union(&self, other: &Federation) -> Federation {
        let mut out = self.clone();
        for z in &other.zones {
            out.add_zone(z.clone());
        }
        out
    }

    pub fn intersect(&self, other: &Federation) -> Federation {
        let mut out = Federation::empty(self.clocks);
        for a in &self.zones {
            for b in &other.zones {
                out.add_zone(a.intersect(b));
            }
        }
        out
    }

    pub fn intersect_zone(&self, z: &Zone) -> Federation {
        self.map(|m| m.intersect(z))
    }

    pub fn subtract_zone(&self, z: &Zone) -> Federation {
        let mut out = Federation::empty(self.clocks);
        for m in &self.zones {
            for piece in m.subtract(z).zones {
                out.add_zone(piece);
            }
        }
        out
    }

    pub fn subtract(&self, other: &Federation) -> Federation {
        let mut out = self.clone();
        for z in &other.zones {
            if out.is_empty() {
                break;
            }
            out = out.subtract_zone(z);
        }
        out
    }

    pub fn complement(&self) -> Federation {
        Federation::universe(self.clocks).subtract(self)
    }

    pub fn up(&self) -> Federation {
        self.map(Zone::up)
    }

    pub fn down(&self) -> Federation {
        self.map(Zone::down)
    }

    pub fn reset(&self, clocks: &[ClockId]) -> Federation {
        self.map(|z| z.reset(clocks))
    }

    pub fn reset_preimage(&self, clocks: &[ClockId]) -> Federation {
        self.map(|z| z.reset_preimage(clocks))
    }

    pub fn free(&self, clocks: &[ClockId]) -> Federation {
        self.map(|z| z.free(clocks))
    }

    pub fn permute(&self, sigma: &[usize]) -> Federation {
        self.map(|z| z.permute(sigma))
    }

    pub fn extrapolate(&self, k: &[i64]) -> Federation {
        self.map(|z| z.extrapolate(k))
    }

    pub fn future_interior(&self) -> Federation {
        self.map(Zone::future_interior)
    }

    pub fn constrain_all(&self, cs: &[Constraint]) -> Federation {
        self.map(|z| z.constrain_all(cs))
    }

    fn map(&self, f: impl Fn(&Zone) -> Zone) -> Federation {
        let mut out = Federation::empty(self.clocks);
        for z in &self.zones {
            out.add_zone(f(z));
        }
        out
    }

    pub fn contains<T: ClockValue>(&self, v: &[T]) -> bool {
        self.zones.iter().any(|z| z.contains(v))
    }

    pub fn is_subset(&self, other: &Federation) -> bool {
        self.subtract(other).is_empty()
    }

    pub fn set_eq(&self, other: &Federation) -> bool {
        self.is_subset(other) && other.is_subset(self)
    }

    /// Drops members that are contained in the union of the others,
    /// and merges pairs whose union is convex.
    pub fn reduce(&self) -> Federation {
        let mut zones = self.zones.clone();
        let mut i = 0;
        while i < zones.len() {
            let others = Federation {
                clocks: self.clocks,
                zones: zones.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, z)| z.clone()).collect(),
            };
            if Federation::from_zone(zones[i].clone()).is_subset(&others) {
                zones.remove(i);
            } else {
                i += 1;
            }
        }
        let mut merged = true;
        while merged {
            merged = false;
            'outer: for a in 0..zones.len() {
                for b in a + 1..zones.len() {
                    let hull = zones[a].convex_hull(&zones[b]);
                    let pair = Federation { clocks: self.clocks, zones: vec![zones[a].clone(), zones[b].clone()] };
                    if Federation::from_zone(hull.clone()).is_subset(&pair) {
                        zones[a] = hull;
                        zones.remove(b);
                        merged = true;
                        break 'outer;
                    }
                }
            }
        }
        zones.sort();
        Federation { clocks: self.clocks, zones }
    }

    /// Largest finite constant over all members.
    pub fn max_constant(&self) -> i64 {
        self.zones.iter().map(Zone::max_constant).max().unwrap_or(0)
    }
}

impl std::fmt::Debug for Federation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.zones.is_empty() {
            return f.write_str("{}");
        }
        f.debug_list().entries(&self.zones).finish()
    }
}

impl Federation {
    pub fn embed(&self, clocks: usize, offset: usize) -> Federation {
        Federation::from_zones(clocks, self.zones.iter().map(|z| z.embed(clocks, offset)))
    }
}
