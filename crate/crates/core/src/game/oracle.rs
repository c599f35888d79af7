//! Brute-force safety games in discrete time.
//!
//! Both players act only at grid instants (multiples of `1/den`) and time
//! advances by one grid step per delay. Clock values above a clock's largest
//! constant are capped one step above it. Used to cross-check the symbolic
//! solver.

use crate::error::{Error, Result};
use crate::tioa::Discrete;

use super::{Arena, GameNet, Solution};

/// Grid points per arena state above which the oracle refuses to run.
pub const MAX_GRID_POINTS: usize = 20_000_000;

pub struct GridGame {
    den: i64,
    /// Largest grid value per clock, in grid steps.
    caps: Vec<i64>,
    radix: usize,
    states: usize,
    /// Whether each point exists (satisfies its invariant) and is not bad.
    safe: Vec<bool>,
    exists: Vec<bool>,
    /// Move targets of point `i` are `targets[start[i]..start[i + 1]]`, the
    /// first `split[i]` of them controllable.
    start: Vec<u32>,
    split: Vec<u8>,
    targets: Vec<u32>,
    delay: Vec<u32>,
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub locations: Discrete,
    pub valuation: Vec<f64>,
    pub oracle: bool,
    pub symbolic: bool,
}

impl GridGame {
    fn decode(&self, mut i: usize) -> (usize, Vec<i64>) {
        let s = i / self.radix;
        i %= self.radix;
        let mut v = vec![0; self.caps.len()];
        for (c, cap) in self.caps.iter().enumerate().rev() {
            let r = (*cap + 1) as usize;
            v[c] = (i % r) as i64;
            i /= r;
        }
        (s, v)
    }

    fn encode(&self, s: usize, v: &[i64]) -> usize {
        let mut i = 0usize;
        for (c, cap) in self.caps.iter().enumerate() {
            i = i * (*cap + 1) as usize + v[c].min(*cap) as usize;
        }
        s * self.radix + i
    }

    fn value(&self, v: &[i64]) -> Vec<f64> {
        v.iter().map(|&h| h as f64 / self.den as f64).collect()
    }

    pub fn build(game: &GameNet, arena: &Arena, den: i64) -> Result<GridGame> {
        let net = &game.network;
        let k = net.max_constants();
        let caps: Vec<i64> = k[1..].iter().map(|c| den * c + 1).collect();
        let radix = caps.iter().try_fold(1usize, |acc, c| acc.checked_mul((*c + 1) as usize));
        let radix = match radix {
            Some(r) if r <= MAX_GRID_POINTS => r,
            _ => return Err(Error::NoConvergence(MAX_GRID_POINTS)),
        };
        let n = arena.len().checked_mul(radix).filter(|&n| n < NONE as usize);
        let Some(n) = n else {
            return Err(Error::NoConvergence(MAX_GRID_POINTS));
        };
        let mut g = GridGame {
            den,
            caps,
            radix,
            states: arena.len(),
            safe: vec![false; n],
            exists: vec![false; n],
            start: Vec::with_capacity(n + 1),
            split: vec![0; n],
            targets: Vec::new(),
            delay: vec![NONE; n],
        };
        for s in 0..arena.len() {
            let bad = net.eval(&game.bad, &arena.states[s]);
            let inv = &arena.inv[s];
            for j in 0..radix {
                let i = s * radix + j;
                g.start.push(g.targets.len() as u32);
                let (_, v) = g.decode(i);
                let x = g.value(&v);
                if !inv.contains(&x) {
                    continue;
                }
                g.exists[i] = true;
                g.safe[i] = !bad.contains(&x);
                let next: Vec<i64> = v.iter().map(|h| h + 1).collect();
                if inv.contains(&g.value(&next)) {
                    g.delay[i] = g.encode(s, &next) as u32;
                }
                let mut own = Vec::new();
                let mut env = Vec::new();
                for m in arena.moves[s].iter().filter(|m| !m.stutter) {
                    let mut w = x.clone();
                    let mut enabled = true;
                    for st in &m.mv.steps {
                        if !st.guard.contains(&w) {
                            enabled = false;
                            break;
                        }
                        w = st.apply(&w, 0.0);
                    }
                    if !enabled {
                        continue;
                    }
                    let wh: Vec<i64> = w.iter().map(|f| (f * den as f64).round() as i64).collect();
                    let t = g.encode(m.target, &wh) as u32;
                    if m.controllable {
                        own.push(t);
                    } else {
                        env.push(t);
                    }
                }
                g.split[i] = u8::try_from(own.len()).map_err(|_| Error::NoConvergence(own.len()))?;
                g.targets.extend(own);
                g.targets.extend(env);
            }
        }
        g.start.push(g.targets.len() as u32);
        Ok(g)
    }

    /// Greatest fixpoint: safe, every uncontrollable move stays winning, and
    /// some controllable move or the half-unit delay stays winning (a delay
    /// that changes nothing counts, which covers waiting forever).
    pub fn solve_safety(&self) -> Vec<bool> {
        let mut w: Vec<bool> = (0..self.safe.len()).map(|i| self.exists[i] && self.safe[i]).collect();
        loop {
            let mut changed = false;
            for i in 0..w.len() {
                if !w[i] {
                    continue;
                }
                let ts = &self.targets[self.start[i] as usize..self.start[i + 1] as usize];
                let (own, env) = ts.split_at(self.split[i] as usize);
                let env_ok = env.iter().all(|&t| w[t as usize]);
                let d = self.delay[i];
                let own_ok = own.iter().any(|&t| w[t as usize]) || (d != NONE && w[d as usize]);
                let ok = env_ok && own_ok;
                if !ok {
                    w[i] = false;
                    changed = true;
                }
            }
            if !changed {
                return w;
            }
        }
    }

    /// Points of the coarser grid `1/every` where the oracle and `solution`
    /// disagree.
    pub fn compare(&self, arena: &Arena, solution: &Solution, winning: &[bool], every: i64) -> Vec<Mismatch> {
        let step = self.den / every;
        let mut out = Vec::new();
        for i in 0..winning.len() {
            if !self.exists[i] {
                continue;
            }
            let (s, v) = self.decode(i);
            debug_assert!(s < self.states);
            if v.iter().any(|h| h % step != 0) {
                continue;
            }
            let x = self.value(&v);
            let sym = solution.winning[s].contains(&x);
            if sym != winning[i] {
                out.push(Mismatch { locations: arena.states[s].clone(), valuation: x, oracle: winning[i], symbolic: sym });
            }
        }
        out
    }

    /// Existing points on the grid `1/every`.
    pub fn points(&self, every: i64) -> usize {
        let step = self.den / every;
        (0..self.exists.len()).filter(|&i| self.exists[i] && self.decode(i).1.iter().all(|h| h % step == 0)).count()
    }
}

/// Solves the safety game of `game` at resolution `1/den` and lists the
/// points of the half-unit grid where the symbolic `solution` (over the same
/// arena) disagrees. Returns the number of compared points too.
pub fn check_safety(game: &GameNet, solution: &Solution, den: i64) -> Result<(usize, Vec<Mismatch>)> {
    if den < 2 || den % 2 != 0 {
        return Err(Error::Validation { model: "oracle".into(), reason: "resolution must be an even number of steps per unit".into() });
    }
    let g = GridGame::build(game, &solution.arena, den)?;
    let w = g.solve_safety();
    Ok((g.points(2), g.compare(&solution.arena, solution, &w, 2)))
}
