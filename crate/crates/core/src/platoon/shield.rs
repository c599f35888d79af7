use crate::error::{Error, Result};

/// Parameters of the finite safety game between two neighbouring cars.
#[derive(Clone, Debug, PartialEq)]
pub struct PairConfig {
    /// Distances at or below this are crashes (m).
    pub d_min: i64,
    /// Distances at or above this lose the connection (m); `None` for none.
    pub d_max: Option<i64>,
    pub v_max: i64,
    /// Accelerations per step, in ascending order (m/s²).
    pub accs: Vec<i64>,
    /// Grid points per metre of distance.
    pub cells_per_meter: i64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig { d_min: 5, d_max: Some(200), v_max: 20, accs: vec![-2, 0, 2], cells_per_meter: 1 }
    }
}

/// Allowed rear-car accelerations over (distance, front speed, rear speed).
///
/// Distances are looked up by rounding down to the grid. The one-step
/// dynamics shift distances by whole metres, so a real distance behaves like
/// its grid point except that it is strictly further from a crash; for the
/// upper limit the open cell above a grid point is safe whenever the point is.
#[derive(Clone, Debug)]
pub struct PairShield {
    pub config: PairConfig,
    k_lo: i64,
    k_hi: i64,
    /// Without an upper limit the top grid point stands for every larger
    /// distance.
    saturate: bool,
    /// Bit `i` allows `accs[i]`; zero marks a losing state.
    allowed: Vec<u8>,
}

fn clamp_v(v: i64, vmax: i64) -> i64 {
    v.clamp(0, vmax)
}

impl PairShield {
    fn speeds(&self) -> usize {
        (self.config.v_max + 1) as usize
    }

    fn index(&self, k: i64, vf: i64, vr: i64) -> usize {
        let s = self.speeds();
        ((k - self.k_lo) as usize * s + vf as usize) * s + vr as usize
    }

    fn grid(&self, d: f64) -> Option<i64> {
        if !d.is_finite() {
            return None;
        }
        let mut k = (d * self.config.cells_per_meter as f64).floor() as i64;
        if self.saturate {
            k = k.min(self.k_hi);
        }
        (self.k_lo..=self.k_hi).contains(&k).then_some(k)
    }

    fn succ(&self, k: i64, vf: i64, vr: i64, a: i64, b: i64) -> Option<(i64, i64, i64)> {
        let vm = self.config.v_max;
        let (vf2, vr2) = (clamp_v(vf + b, vm), clamp_v(vr + a, vm));
        let mut k2 = k + (vf2 - vr2) * self.config.cells_per_meter;
        if self.saturate {
            k2 = k2.min(self.k_hi);
        }
        (self.k_lo..=self.k_hi).contains(&k2).then_some((k2, vf2, vr2))
    }

    fn mask(&self, k: i64, vf: i64, vr: i64) -> u8 {
        if !(0..=self.config.v_max).contains(&vf) || !(0..=self.config.v_max).contains(&vr) {
            return 0;
        }
        self.allowed[self.index(k, vf, vr)]
    }

    /// Allowed accelerations at a real state, empty when losing.
    pub fn allowed(&self, d: f64, vf: i64, vr: i64) -> Vec<i64> {
        let m = self.grid(d).map_or(0, |k| self.mask(k, vf, vr));
        self.config.accs.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &a)| a).collect()
    }

    pub fn is_winning(&self, d: f64, vf: i64, vr: i64) -> bool {
        self.grid(d).is_some_and(|k| self.mask(k, vf, vr) != 0)
    }

    /// Number of winning grid states.
    pub fn winning_count(&self) -> usize {
        self.allowed.iter().filter(|&&m| m != 0).count()
    }

    /// Every grid state as (distance, front speed, rear speed, allowed mask).
    pub fn grid_states(&self) -> impl Iterator<Item = (f64, i64, i64, u8)> + '_ {
        let vm = self.config.v_max;
        (self.k_lo..=self.k_hi).flat_map(move |k| {
            (0..=vm).flat_map(move |vf| {
                (0..=vm).map(move |vr| (k as f64 / self.config.cells_per_meter as f64, vf, vr, self.mask(k, vf, vr)))
            })
        })
    }

    /// Grid successor of a grid state, `None` when it leaves the safe range.
    pub fn grid_succ(&self, d: f64, vf: i64, vr: i64, a: i64, b: i64) -> Option<f64> {
        let k = self.grid(d)?;
        self.succ(k, vf, vr, a, b).map(|(k2, _, _)| k2 as f64 / self.config.cells_per_meter as f64)
    }
}

/// Greatest fixpoint of the states where some rear acceleration keeps the
/// pair safe against every front acceleration.
pub fn synth_pair_shield(config: PairConfig) -> Result<PairShield> {
    let r = config.cells_per_meter;
    if r <= 0 || config.v_max < 0 || config.accs.is_empty() || config.accs.len() > 8 {
        return Err(Error::EmptyWinningRegion);
    }
    let k_lo = config.d_min * r + 1;
    let (k_hi, saturate) = match config.d_max {
        Some(m) => (m * r - 1, false),
        None => {
            let stop = config.v_max * (config.v_max / 2 + 2);
            ((config.d_min + stop) * r, true)
        }
    };
    if k_hi < k_lo {
        return Err(Error::EmptyWinningRegion);
    }
    let full = ((1u16 << config.accs.len()) - 1) as u8;
    let s = (config.v_max + 1) as usize;
    let n = (k_hi - k_lo + 1) as usize * s * s;
    let mut sh = PairShield { config, k_lo, k_hi, saturate, allowed: vec![full; n] };
    let accs = sh.config.accs.clone();
    let vm = sh.config.v_max;
    loop {
        let mut changed = false;
        for k in k_lo..=k_hi {
            for vf in 0..=vm {
                for vr in 0..=vm {
                    let i = sh.index(k, vf, vr);
                    if sh.allowed[i] == 0 {
                        continue;
                    }
                    let mut m = 0u8;
                    for (ai, &a) in accs.iter().enumerate() {
                        let ok = accs.iter().all(|&b| match sh.succ(k, vf, vr, a, b) {
                            Some((k2, vf2, vr2)) => sh.allowed[sh.index(k2, vf2, vr2)] != 0,
                            None => false,
                        });
                        if ok {
                            m |= 1 << ai;
                        }
                    }
                    if m != sh.allowed[i] {
                        sh.allowed[i] = m;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    if sh.winning_count() == 0 {
        return Err(Error::EmptyWinningRegion);
    }
    Ok(sh)
}
