//! Brute-force membership oracle for zone operations over one or two clocks.
//!
//! Every constant is an integer in `[-4, 4]`. Points whose coordinates are
//! multiples of 1/3 up to 9 meet every cell cut out by such bounds and
//! diagonals (a diagonal can push a face 4 past the largest bound). The
//! existential quantifiers (delays, reset values) only change truth value at
//! multiples of 1/3, so sampling them at multiples of 1/6 is exact.

use std::ops::{Add, Sub};

use num_traits::Zero;
use proptest::prelude::*;
use tshield::{ClockId, ClockValue, Constraint, Federation, Rational64, Rel, Zone};

pub const MAX_CONST: i64 = 4;

/// A clock value counted in sixths of a time unit.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Sixths(pub i64);

impl Add for Sixths {
    type Output = Sixths;
    fn add(self, o: Sixths) -> Sixths {
        Sixths(self.0 + o.0)
    }
}

impl Sub for Sixths {
    type Output = Sixths;
    fn sub(self, o: Sixths) -> Sixths {
        Sixths(self.0 - o.0)
    }
}

impl Zero for Sixths {
    fn zero() -> Sixths {
        Sixths(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl ClockValue for Sixths {
    fn from_int(i: i64) -> Sixths {
        Sixths(6 * i)
    }
}

type Point = Vec<Sixths>;

/// Named checks; each random case exercises one of them.
pub const CHECKS: [&str; 27] = [
    "is_empty",
    "up",
    "down",
    "reset",
    "free",
    "reset_preimage",
    "future_interior",
    "permute",
    "extrapolate",
    "minimal_constraints",
    "contains",
    "delay_window",
    "intersect",
    "is_subset",
    "convex_hull",
    "subtract",
    "federation up",
    "federation down",
    "federation reset",
    "federation free",
    "union",
    "federation intersect",
    "federation subtract",
    "complement",
    "reduce",
    "federation is_subset",
    "set_eq",
];

#[derive(Clone, Debug)]
pub struct Case {
    pub check: usize,
    pub clocks: usize,
    pub zones: Vec<Vec<Constraint>>,
    /// Number of leading zones forming the first federation; the rest form the second.
    pub split: usize,
    pub k: Vec<i64>,
}

impl Case {
    pub fn name(&self) -> &'static str {
        CHECKS[self.check]
    }
}

fn constraint(clocks: usize) -> impl Strategy<Value = Constraint> {
    let rel = prop_oneof![Just(Rel::Lt), Just(Rel::Le), Just(Rel::Ge), Just(Rel::Gt)];
    (1..=clocks, 1..=clocks, rel, -MAX_CONST..=MAX_CONST).prop_map(|(x, y, rel, c)| {
        if x == y {
            Constraint::new(ClockId(x), rel, c.abs())
        } else {
            Constraint::diagonal(ClockId(x), ClockId(y), rel, c)
        }
    })
}

pub fn case() -> impl Strategy<Value = Case> {
    (0..CHECKS.len(), 1usize..=2)
        .prop_flat_map(|(check, clocks)| {
            let zone = prop::collection::vec(constraint(clocks), 0..4);
            (
                Just(check),
                Just(clocks),
                prop::collection::vec(zone, 2..=4),
                prop::collection::vec(0..=MAX_CONST, clocks),
            )
        })
        .prop_flat_map(|(check, clocks, zones, k)| {
            let n = zones.len();
            (Just(check), Just(clocks), Just(zones), 1..n, Just(k))
        })
        .prop_map(|(check, clocks, zones, split, mut k)| {
            k.insert(0, 0);
            Case { check, clocks, zones, split, k }
        })
}

fn grid(clocks: usize) -> Vec<Point> {
    let axis: Vec<Sixths> = (0..=27).map(|i| Sixths(2 * i)).collect();
    if clocks == 1 {
        axis.iter().map(|&a| vec![a]).collect()
    } else {
        axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect()
    }
}

/// Multiples of 1/6 in `[0, max]`.
fn samples(max: i64) -> impl Iterator<Item = Sixths> {
    (0..=6 * max).map(Sixths)
}

/// Forward delays past every constant change nothing.
const DELAYS: i64 = 5;
/// Backward delays may reach the origin from the far end of the grid.
const PAST: i64 = 9;
/// Reset values: a diagonal can add 4 to a grid coordinate.
const VALUES: i64 = 14;

fn shift(p: &Point, d: Sixths) -> Point {
    p.iter().map(|&x| x + d).collect()
}

fn back(p: &Point, d: Sixths) -> Option<Point> {
    p.iter().all(|&x| x >= d).then(|| p.iter().map(|&x| x - d).collect())
}

fn with(p: &Point, clock: usize, v: Sixths) -> Point {
    let mut q = p.clone();
    q[clock - 1] = v;
    q
}

trait Set {
    fn has(&self, p: &Point) -> bool;
}

impl Set for Zone {
    fn has(&self, p: &Point) -> bool {
        self.contains(p)
    }
}

impl Set for Federation {
    fn has(&self, p: &Point) -> bool {
        self.contains(p)
    }
}

struct Checker {
    points: Vec<Point>,
}

impl Checker {
    fn agree(&self, what: &str, got: &impl Set, want: impl Fn(&Point) -> bool) -> Result<(), String> {
        match self.points.iter().find(|p| got.has(p) != want(p)) {
            None => Ok(()),
            Some(p) => Err(format!("{what}: disagreement at {p:?} (operation says {})", got.has(p))),
        }
    }

    fn check_bool(&self, what: &str, got: bool, want: impl Fn(&Point) -> bool) -> Result<(), String> {
        let want = self.points.iter().all(want);
        if got == want {
            Ok(())
        } else {
            Err(format!("{what}: operation says {got}, grid says {want}"))
        }
    }
}

fn up(s: &impl Set, p: &Point) -> bool {
    samples(PAST).any(|d| back(p, d).is_some_and(|q| s.has(&q)))
}

fn down(s: &impl Set, p: &Point) -> bool {
    samples(DELAYS).any(|d| s.has(&shift(p, d)))
}

fn free(s: &impl Set, x: usize, p: &Point) -> bool {
    samples(VALUES).any(|v| s.has(&with(p, x, v)))
}

/// Checks the operation selected by `case.check` against the grid.
pub fn check(case: &Case) -> Result<(), String> {
    let n = case.clocks;
    let c = Checker { points: grid(n) };
    let zones: Vec<Zone> = case.zones.iter().map(|cs| Zone::from_constraints(n, cs)).collect();
    let (a, b) = (&zones[0], &zones[1]);
    let f = Federation::from_zones(n, zones[..case.split].iter().cloned());
    let g = Federation::from_zones(n, zones[case.split..].iter().cloned());
    let clocks = || (1..=n).map(|x| (x, ClockId(x)));
    match case.name() {
        "is_empty" => c.check_bool("is_empty", a.is_empty(), |p| !a.has(p)),
        "up" => c.agree("up", &a.up(), |p| up(a, p)),
        "down" => c.agree("down", &a.down(), |p| down(a, p)),
        "reset" => clocks().try_for_each(|(x, id)| {
            c.agree("reset", &a.reset(&[id]), |p| p[x - 1].is_zero() && free(a, x, p))
        }),
        "free" => clocks().try_for_each(|(x, id)| c.agree("free", &a.free(&[id]), |p| free(a, x, p))),
        "reset_preimage" => clocks().try_for_each(|(x, id)| {
            c.agree("reset_preimage", &a.reset_preimage(&[id]), |p| a.has(&with(p, x, Sixths(0))))
        }),
        // Membership is constant on (p, p + 1/3) for grid points p.
        "future_interior" => c.agree("future_interior", &a.future_interior(), |p| a.has(&shift(p, Sixths(1)))),
        "permute" => {
            let sigma: Vec<usize> = if n == 2 { vec![0, 2, 1] } else { vec![0, 1] };
            c.agree("permute", &a.permute(&sigma), |p| a.has(&p.iter().rev().copied().collect()))
        }
        "extrapolate" => {
            let e = a.extrapolate(&case.k);
            c.agree("extrapolate keeps the zone", &e, |p| e.has(p) || a.has(p))?;
            let below_k = |p: &Point| p.iter().enumerate().all(|(i, &x)| x <= Sixths::from_int(case.k[i + 1]));
            c.agree("extrapolate is exact below k", &e, |p| if below_k(p) { a.has(p) } else { e.has(p) })
        }
        "minimal_constraints" => {
            c.agree("minimal_constraints", &Zone::from_constraints(n, &a.minimal_constraints()), |p| a.has(p))
        }
        "contains" => match c.points.iter().find(|p| {
            let exact: Vec<Rational64> = p.iter().map(|x| Rational64::new(x.0, 6)).collect();
            a.contains(&exact) != a.has(p)
        }) {
            Some(p) => Err(format!("contains over rationals disagrees at {p:?}")),
            None => Ok(()),
        },
        "delay_window" => c.points.iter().try_for_each(|p| {
            let w = a.delay_window(p);
            match samples(DELAYS).find(|d| w.as_ref().is_some_and(|w| w.contains(d)) != a.has(&shift(p, *d))) {
                Some(d) => Err(format!("delay_window at {p:?}, delay {d:?}: {w:?}")),
                None => Ok(()),
            }
        }),
        "intersect" => c.agree("intersect", &a.intersect(b), |p| a.has(p) && b.has(p)),
        "is_subset" => c.check_bool("is_subset", a.is_subset(b), |p| !a.has(p) || b.has(p)),
        "convex_hull" => {
            let h = a.convex_hull(b);
            c.agree("convex_hull covers", &h, |p| h.has(p) || a.has(p) || b.has(p))?;
            // Smallest: any zone holding both operands holds the hull.
            zones[2..].iter().try_for_each(|z| {
                if a.is_subset(z) && b.is_subset(z) {
                    c.agree("convex_hull is least", &h, |p| h.has(p) && z.has(p))
                } else {
                    Ok(())
                }
            })
        }
        "subtract" => {
            let diff = a.subtract(b);
            c.agree("subtract", &diff, |p| a.has(p) && !b.has(p))?;
            match c.points.iter().find(|p| diff.zones().iter().filter(|z| z.has(p)).count() > 1) {
                Some(p) => Err(format!("subtract pieces overlap at {p:?}")),
                None => Ok(()),
            }
        }
        "federation up" => c.agree("federation up", &f.up(), |p| up(&f, p)),
        "federation down" => c.agree("federation down", &f.down(), |p| down(&f, p)),
        "federation reset" => clocks().try_for_each(|(x, id)| {
            c.agree("federation reset", &f.reset(&[id]), |p| p[x - 1].is_zero() && free(&f, x, p))
        }),
        "federation free" => clocks().try_for_each(|(x, id)| c.agree("federation free", &f.free(&[id]), |p| free(&f, x, p))),
        "union" => c.agree("union", &f.union(&g), |p| f.has(p) || g.has(p)),
        "federation intersect" => c.agree("federation intersect", &f.intersect(&g), |p| f.has(p) && g.has(p)),
        "federation subtract" => c.agree("federation subtract", &f.subtract(&g), |p| f.has(p) && !g.has(p)),
        "complement" => c.agree("complement", &f.complement(), |p| !f.has(p)),
        "reduce" => c.agree("reduce", &f.reduce(), |p| f.has(p)),
        "federation is_subset" => c.check_bool("federation is_subset", f.is_subset(&g), |p| !f.has(p) || g.has(p)),
        "set_eq" => c.check_bool("set_eq", f.set_eq(&g), |p| f.has(p) == g.has(p)),
        other => unreachable!("unknown check {other}"),
    }
}
