use crate::zones::Federation;

/// Safe timed predecessor: valuations that can delay into `g` without
/// touching `b` on the way (the point reached in `g` must avoid `b` too).
pub fn pred_t(g: &Federation, b: &Federation) -> Federation {
    let n = g.clocks();
    if b.is_empty() {
        return g.down();
    }
    let b_down: Vec<Federation> = b.zones().iter().map(|z| Federation::from_zone(z.down())).collect();
    let mut out = Federation::empty(n);
    for gz in g.zones() {
        let g_down = Federation::from_zone(gz.down());
        let mut acc = g_down.clone();
        for (bz, bd) in b.zones().iter().zip(&b_down) {
            if acc.is_empty() {
                break;
            }
            // Reaching gz strictly before entering bz, or reaching the part of
            // gz lying before bz.
            let before = g_down.subtract(bd);
            let inside = Federation::from_zone(gz.clone()).intersect(bd).subtract_zone(bz).down();
            acc = acc.intersect(&before.union(&inside));
        }
        out = out.union(&acc);
    }
    out
}

/// Points from which every sufficiently small positive delay stays in `f`.
pub fn delay_interior(f: &Federation) -> Federation {
    f.intersect(&f.future_interior())
}
