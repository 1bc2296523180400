//! Piecewise-linear blue -> green -> red colormap.
//!
//! For t in [0, 1]: below 0.5 blend blue (0,0,255) into green (0,255,0); from
//! 0.5 blend green into red (255,0,0). Channel values round half up. The
//! 256-entry table (`t = i / 255`) is checked into `docs/colormap.txt`.

fn to_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    if t < 0.5 {
        let s = t / 0.5;
        [0, to_u8(s), to_u8(1.0 - s)]
    } else {
        let s = (t - 0.5) / 0.5;
        [to_u8(s), to_u8(1.0 - s), 0]
    }
}

pub fn colormap_table() -> Vec<[u8; 3]> {
    (0..256).map(|i| colormap(i as f64 / 255.0)).collect()
}

/// Table lookup for a value in [0, 1].
pub fn colorize(t: f64) -> [u8; 3] {
    let i = (t.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as usize;
    colormap(i as f64 / 255.0)
}
