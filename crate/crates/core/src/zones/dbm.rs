use std::fmt;

use crate::scalar::{ClockValue, DelayWindow};

use super::{Bound, ClockId, Constraint, Federation, Rel};

/// A convex set of clock valuations kept as a canonical difference-bound
/// matrix over `dim = clocks + 1` variables (index 0 is the reference clock).
///
/// Every operation returns a new canonical zone. Empty zones share one
/// representation per dimension, so structural equality is semantic equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Zone {
    dim: usize,
    m: Vec<Bound>,
}

impl Zone {
    /// The zone holding exactly the all-zero valuation.
    pub fn zero(clocks: usize) -> Zone {
        let dim = clocks + 1;
        Zone { dim, m: vec![Bound::LE_ZERO; dim * dim] }
    }

    /// All non-negative valuations.
    pub fn universe(clocks: usize) -> Zone {
        let dim = clocks + 1;
        let mut m = vec![Bound::INF; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Bound::LE_ZERO;
            m[i] = Bound::LE_ZERO;
        }
        Zone { dim, m }
    }

    pub fn empty(clocks: usize) -> Zone {
        let dim = clocks + 1;
        let mut m = vec![Bound::LE_ZERO; dim * dim];
        m[0] = Bound::LT_ZERO;
        Zone { dim, m }
    }

    /// Builds and canonicalises a zone from raw matrix rows.
    pub fn from_rows(rows: &[Vec<Bound>]) -> Option<Zone> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        let mut z = Zone { dim, m: rows.concat() };
        z.close();
        Some(z)
    }

    pub fn rows(&self) -> Vec<Vec<Bound>> {
        self.m.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn from_constraints(clocks: usize, cs: &[Constraint]) -> Zone {
        Zone::universe(clocks).constrain_all(cs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn clocks(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.dim + j] = b;
    }

    pub fn is_empty(&self) -> bool {
        self.m[0] < Bound::LE_ZERO
    }

    fn make_empty(&mut self) {
        *self = Zone::empty(self.clocks());
    }

    /// Floyd–Warshall tightening; detects emptiness.
    pub(crate) fn close(&mut self) {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik.is_inf() {
                    continue;
                }
                for j in 0..n {
                    let cand = ik.add(self.m[k * n + j]);
                    if cand < self.m[i * n + j] {
                        self.m[i * n + j] = cand;
                    }
                }
            }
            for i in 0..n {
                if self.m[i * n + i] < Bound::LE_ZERO {
                    self.make_empty();
                    return;
                }
            }
        }
    }

    /// Delay closure: `{v + d | v ∈ z, d ≥ 0}`.
    pub fn up(&self) -> Zone {
        if self.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        for i in 1..z.dim {
            z.set(i, 0, Bound::INF);
        }
        z
    }

    /// Past closure: `{v ≥ 0 | ∃ d ≥ 0. v + d ∈ z}`.
    pub fn down(&self) -> Zone {
        if self.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        for i in 1..z.dim {
            let mut b = Bound::LE_ZERO;
            for j in 1..z.dim {
                b = b.min(z.get(j, i));
            }
            z.set(0, i, b);
        }
        z.close();
        z
    }

    pub fn constrain(&self, c: &Constraint) -> Zone {
        self.constrain_all(std::slice::from_ref(c))
    }

    pub fn constrain_all(&self, cs: &[Constraint]) -> Zone {
        if self.is_empty() || cs.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        for c in cs {
            let (i, j, b) = c.entry();
            assert!(i < z.dim && j < z.dim, "constraint clock outside zone");
            if b < z.get(i, j) {
                z.set(i, j, b);
            }
        }
        z.close();
        z
    }

    pub fn intersect(&self, other: &Zone) -> Zone {
        debug_assert_eq!(self.dim, other.dim);
        if self.is_empty() {
            return self.clone();
        }
        if other.is_empty() {
            return other.clone();
        }
        let mut z = self.clone();
        let mut changed = false;
        for (a, b) in z.m.iter_mut().zip(&other.m) {
            if *b < *a {
                *a = *b;
                changed = true;
            }
        }
        if changed {
            z.close();
        }
        z
    }

    /// Image of resetting `clocks` to zero.
    pub fn reset(&self, clocks: &[ClockId]) -> Zone {
        if self.is_empty() || clocks.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        let n = z.dim;
        for &ClockId(x) in clocks {
            for j in 0..n {
                let zj = z.get(0, j);
                let jz = z.get(j, 0);
                z.set(x, j, zj);
                z.set(j, x, jz);
            }
            z.set(x, x, Bound::LE_ZERO);
        }
        z
    }

    /// Removes every constraint on `clocks` (the preimage of a reset once
    /// intersected with `clocks = 0`).
    pub fn free(&self, clocks: &[ClockId]) -> Zone {
        if self.is_empty() || clocks.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        let n = z.dim;
        for &ClockId(x) in clocks {
            for j in 0..n {
                if j != x {
                    z.set(x, j, Bound::INF);
                    let jz = z.get(j, 0);
                    z.set(j, x, jz);
                }
            }
        }
        z
    }

    /// `{v | v[clocks := 0] ∈ self}`.
    pub fn reset_preimage(&self, clocks: &[ClockId]) -> Zone {
        if clocks.is_empty() {
            return self.clone();
        }
        let mut at_zero = Vec::with_capacity(clocks.len() * 2);
        for &c in clocks {
            at_zero.extend(Constraint::equal(c, 0));
        }
        self.constrain_all(&at_zero).free(clocks)
    }

    /// Moves the value of clock `i` to clock `sigma[i]`; `sigma[0]` must be 0.
    pub fn permute(&self, sigma: &[usize]) -> Zone {
        debug_assert_eq!(sigma.len(), self.dim);
        if self.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                z.set(sigma[i], sigma[j], self.get(i, j));
            }
        }
        z
    }

    pub fn inverse_permutation(sigma: &[usize]) -> Vec<usize> {
        let mut inv = vec![0; sigma.len()];
        for (i, &s) in sigma.iter().enumerate() {
            inv[s] = i;
        }
        inv
    }

    /// Classic max-constant normalisation; `k[i]` bounds clock `i`
    /// (`k[0]` is ignored).
    pub fn extrapolate(&self, k: &[i64]) -> Zone {
        if self.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        let n = z.dim;
        let kk = |i: usize| if i == 0 { 0 } else { k[i] };
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = z.get(i, j);
                if i != 0 && !b.is_inf() && b > Bound::le(kk(i)) {
                    z.set(i, j, Bound::INF);
                    changed = true;
                } else if b < Bound::lt(-kk(j)) {
                    z.set(i, j, Bound::lt(-kk(j)));
                    changed = true;
                }
            }
        }
        if changed {
            z.close();
        }
        z
    }

    pub fn is_subset(&self, other: &Zone) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        self.m.iter().zip(&other.m).all(|(a, b)| a <= b)
    }

    /// `self \ other` as a list of disjoint non-empty zones.
    pub fn subtract(&self, other: &Zone) -> Federation {
        let clocks = self.clocks();
        if self.is_empty() {
            return Federation::empty(clocks);
        }
        if other.is_empty() || self.intersect(other).is_empty() {
            return Federation::from_zone(self.clone());
        }
        // Splitting on a minimal set of bounds keeps the number of pieces low.
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        for (i, j) in other.split_cells() {
            let b = other.get(i, j);
            if b >= rest.get(i, j) {
                continue;
            }
            let mut outside = rest.clone();
            if b.negate() < outside.get(j, i) {
                outside.set(j, i, b.negate());
                outside.close();
            }
            if !outside.is_empty() {
                pieces.push(outside);
            }
            rest.set(i, j, b);
            rest.close();
            if rest.is_empty() {
                return Federation::from_zones(clocks, pieces);
            }
        }
        Federation::from_zones(clocks, pieces)
    }

    /// Points whose immediate future (all sufficiently small positive delays)
    /// lies inside this zone.
    pub fn future_interior(&self) -> Zone {
        if self.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        for i in 1..z.dim {
            let up = z.get(i, 0);
            if !up.is_inf() && !up.is_strict() {
                z.set(i, 0, Bound::lt(up.constant()));
            }
            let lo = z.get(0, i);
            if lo.is_strict() {
                z.set(0, i, Bound::le(lo.constant()));
            }
        }
        z.close();
        z
    }

    pub fn contains<T: ClockValue>(&self, v: &[T]) -> bool {
        debug_assert_eq!(v.len() + 1, self.dim);
        if self.is_empty() {
            return false;
        }
        let val = |i: usize| if i == 0 { T::zero() } else { v[i - 1].clone() };
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if b.is_inf() {
                    continue;
                }
                let diff = val(i) - val(j);
                if !b.admits(&diff, &T::from_int(b.constant())) {
                    return false;
                }
            }
        }
        true
    }

    /// Delays `d ≥ 0` with `v + d` inside the zone, or `None` if there are none.
    pub fn delay_window<T: ClockValue>(&self, v: &[T]) -> Option<DelayWindow<T>> {
        if self.is_empty() {
            return None;
        }
        let mut w = DelayWindow { lo: T::zero(), lo_strict: false, hi: None, hi_strict: false };
        for i in 1..self.dim {
            let vi = v[i - 1].clone();
            let up = self.get(i, 0);
            if !up.is_inf() {
                let h = T::from_int(up.constant()) - vi.clone();
                let tighter = match &w.hi {
                    None => true,
                    Some(cur) => h < *cur || (h == *cur && up.is_strict()),
                };
                if tighter {
                    w.hi = Some(h);
                    w.hi_strict = up.is_strict();
                }
            }
            let lo = self.get(0, i);
            let l = T::from_int(-lo.constant()) - vi;
            if l > w.lo || (l == w.lo && lo.is_strict()) {
                w.lo = l;
                w.lo_strict = lo.is_strict();
            }
            for j in 1..self.dim {
                if i != j {
                    let b = self.get(i, j);
                    if !b.is_inf() {
                        let diff = v[i - 1].clone() - v[j - 1].clone();
                        if !b.admits(&diff, &T::from_int(b.constant())) {
                            return None;
                        }
                    }
                }
            }
        }
        if w.is_empty() {
            None
        } else {
            Some(w)
        }
    }

    /// Largest finite constant appearing in the matrix.
    pub fn max_constant(&self) -> i64 {
        self.m
            .iter()
            .filter(|b| !b.is_inf())
            .map(|b| b.constant().abs())
            .max()
            .unwrap_or(0)
    }

    /// Human-readable conjunction, e.g. `x-y<=2 & y<3`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ZoneDisplay<'a> {
        ZoneDisplay { z: self, names }
    }
}

pub struct ZoneDisplay<'a> {
    z: &'a Zone,
    names: &'a [String],
}

impl fmt::Display for ZoneDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.z.is_empty() {
            return f.write_str("false");
        }
        let cs = self.z.minimal_constraints();
        if cs.is_empty() {
            return f.write_str("true");
        }
        let mut parts = Vec::new();
        let mut i = 0;
        while i < cs.len() {
            let c = &cs[i];
            // Collapse `x<=c & x>=c` into `x==c`.
            if let Some(n) = cs.get(i + 1) {
                if c.minus.is_none()
                    && n.minus.is_none()
                    && c.clock == n.clock
                    && c.bound == n.bound
                    && c.rel == Rel::Ge
                    && n.rel == Rel::Le
                {
                    let name = c.display(self.names).to_string();
                    let name = name.split(">=").next().unwrap_or_default().to_string();
                    parts.push(format!("{name}=={}", c.bound));
                    i += 2;
                    continue;
                }
            }
            parts.push(c.display(self.names).to_string());
            i += 1;
        }
        f.write_str(&parts.join(" & "))
    }
}

impl fmt::Debug for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&[]))
    }
}

impl Zone {
    /// Smallest zone containing both operands.
    pub fn convex_hull(&self, other: &Zone) -> Zone {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let mut z = self.clone();
        for (a, b) in z.m.iter_mut().zip(&other.m) {
            if *b > *a {
                *a = *b;
            }
        }
        z
    }
}

impl Zone {
    /// A non-redundant list of constraints whose conjunction (with all
    /// clocks non-negative) is this zone. Simple bounds come first per clock
    /// (lower before upper), diagonals last. Diagonals are dropped in
    /// preference to simple bounds when either would do.
    pub fn minimal_constraints(&self) -> Vec<Constraint> {
        if self.is_empty() {
            let mut cs = vec![Constraint::new(ClockId(1.min(self.clocks())), Rel::Lt, 0)];
            if self.clocks() == 0 {
                cs.clear();
            }
            return cs;
        }
        let n = self.dim;
        let mut out: Vec<(usize, usize, Constraint)> = Vec::new();
        for (i, j) in self.minimal_cells() {
            let b = self.get(i, j);
            let c = if j == 0 {
                Constraint::new(ClockId(i), if b.is_strict() { Rel::Lt } else { Rel::Le }, b.constant())
            } else if i == 0 {
                Constraint::new(ClockId(j), if b.is_strict() { Rel::Gt } else { Rel::Ge }, -b.constant())
            } else {
                Constraint::diagonal(ClockId(i), ClockId(j), if b.is_strict() { Rel::Lt } else { Rel::Le }, b.constant())
            };
            let key = if i == 0 || j == 0 { (0, i.max(j) * 2 + usize::from(j == 0)) } else { (1, i * n + j) };
            out.push((key.0, key.1, c));
        }
        out.sort_by_key(|t| (t.0, t.1));
        out.into_iter().map(|t| t.2).collect()
    }

    /// Cells of a non-redundant set of bounds whose closure is this zone
    /// (trivial `x >= 0` bounds left out).
    fn minimal_cells(&self) -> Vec<(usize, usize)> {
        let n = self.dim;
        let mut cells: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.get(i, j).is_inf() && !(i == 0 && self.get(i, j) == Bound::LE_ZERO) {
                    cells.push((i, j));
                }
            }
        }
        let diagonal = |&(i, j): &(usize, usize)| i != 0 && j != 0;
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by_key(|&k| !diagonal(&cells[k]));
        let mut keep = vec![true; cells.len()];
        for k in order {
            keep[k] = false;
            let mut probe = Zone::universe(self.clocks());
            for (idx, &(i, j)) in cells.iter().enumerate() {
                if keep[idx] {
                    probe.set(i, j, self.get(i, j));
                }
            }
            probe.close();
            let (i, j) = cells[k];
            if probe.get(i, j) > self.get(i, j) {
                keep[k] = true;
            }
        }
        cells.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect()
    }

    /// Cells whose bounds, together with `x >= 0`, close to this zone. Cheap
    /// and small but not always irredundant; used to split subtractions.
    pub(crate) fn split_cells(&self) -> Vec<(usize, usize)> {
        let n = self.dim;
        let d = |i: usize, j: usize| self.get(i, j);
        // Clocks on a zero-weight cycle are tied by equalities; each class is
        // represented by its smallest member.
        let rep: Vec<usize> =
            (0..n).map(|i| (0..i).find(|&j| d(i, j).add(d(j, i)) == Bound::LE_ZERO).unwrap_or(i)).collect();
        let mut cells = Vec::new();
        for r in (0..n).filter(|&r| rep[r] == r) {
            let class: Vec<usize> = (r..n).filter(|&i| rep[i] == r).collect();
            if class.len() > 1 {
                for k in 0..class.len() {
                    cells.push((class[k], class[(k + 1) % class.len()]));
                }
            }
        }
        let reps: Vec<usize> = (0..n).filter(|&r| rep[r] == r).collect();
        for &a in &reps {
            for &b in &reps {
                if a == b || d(a, b).is_inf() {
                    continue;
                }
                if !reps.iter().any(|&c| c != a && c != b && d(a, c).add(d(c, b)) <= d(a, b)) {
                    cells.push((a, b));
                }
            }
        }
        cells.retain(|&(i, j)| !(i == 0 && d(i, j) == Bound::LE_ZERO));
        cells
    }
}

impl Zone {
    /// Places this zone's clocks at `offset + 1 ..` inside a zone over
    /// `clocks` clocks; the other clocks are unconstrained.
    pub fn embed(&self, clocks: usize, offset: usize) -> Zone {
        if self.is_empty() {
            return Zone::empty(clocks);
        }
        let mut z = Zone::universe(clocks);
        let at = |i: usize| if i == 0 { 0 } else { offset + i };
        for i in 0..self.dim {
            for j in 0..self.dim {
                z.set(at(i), at(j), self.get(i, j));
            }
        }
        z.close();
        z
    }

    /// Projects onto clocks `offset + 1 ..= offset + n` (the inverse of `embed`).
    pub fn project(&self, n: usize, offset: usize) -> Zone {
        if self.is_empty() {
            return Zone::empty(n);
        }
        let mut z = Zone::universe(n);
        let at = |i: usize| if i == 0 { 0 } else { offset + i };
        for i in 0..=n {
            for j in 0..=n {
                z.set(i, j, self.get(at(i), at(j)));
            }
        }
        z
    }
}
