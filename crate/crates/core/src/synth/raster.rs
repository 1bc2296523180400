//! Integer rasterization onto an 8-bit grayscale canvas.

use crate::imageio::Image;

pub type Point = (i32, i32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn white(width: usize, height: usize) -> Self {
        Canvas {
            width,
            height,
            pixels: vec![255; width * height],
        }
    }

    #[inline]
    pub fn set(&mut self, x: i32, y: i32, v: u8) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.pixels[y as usize * self.width + x as usize] = v;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn fill_rect(&mut self, x: i32, y: i32, w: i32, h: i32, v: u8) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.set(xx, yy, v);
            }
        }
    }

    /// Outline with the stroke laid inside the rectangle.
    pub fn rect(&mut self, x: i32, y: i32, w: i32, h: i32, v: u8, width: i32) {
        self.fill_rect(x, y, w, width, v);
        self.fill_rect(x, y + h - width, w, width, v);
        self.fill_rect(x, y, width, h, v);
        self.fill_rect(x + w - width, y, width, h, v);
    }

    /// Bresenham line; extra stroke width grows down for shallow lines and
    /// right for steep ones. `dash` = (on, off) run lengths in steps.
    pub fn line(&mut self, a: Point, b: Point, v: u8, width: i32, dash: Option<(usize, usize)>) {
        let steep = (b.1 - a.1).abs() > (b.0 - a.0).abs();
        for (step, (x, y)) in bresenham(a, b).into_iter().enumerate() {
            if let Some((on, off)) = dash {
                if step % (on + off) >= on {
                    continue;
                }
            }
            for t in 0..width {
                if steep {
                    self.set(x + t, y, v);
                } else {
                    self.set(x, y + t, v);
                }
            }
        }
    }

    /// Even-odd scanline fill sampling pixel centres.
    pub fn fill_polygon(&mut self, pts: &[Point], v: u8) {
        if pts.len() < 3 {
            return;
        }
        let ymin = pts.iter().map(|p| p.1).min().unwrap();
        let ymax = pts.iter().map(|p| p.1).max().unwrap();
        let mut xs = Vec::new();
        for y in ymin..=ymax {
            let yc = y as f64 + 0.5;
            xs.clear();
            for i in 0..pts.len() {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                let (y0, y1) = (p.1 as f64 + 0.5, q.1 as f64 + 0.5);
                if (y0 <= yc && yc < y1) || (y1 <= yc && yc < y0) {
                    let t = (yc - y0) / (y1 - y0);
                    xs.push(p.0 as f64 + 0.5 + t * (q.0 - p.0) as f64);
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let x0 = (pair[0] - 0.5).ceil() as i32;
                let x1 = (pair[1] - 0.5).ceil() as i32 - 1;
                for x in x0..=x1 {
                    self.set(x, y, v);
                }
            }
        }
    }

    /// Midpoint circle outline; wider strokes add concentric rings inward.
    pub fn circle(&mut self, c: Point, r: i32, v: u8, width: i32) {
        for rr in (r - width + 1).max(0)..=r {
            let (mut x, mut y, mut d) = (rr, 0, 1 - rr);
            while x >= y {
                for (dx, dy) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
                    self.set(c.0 + dx, c.1 + dy, v);
                }
                y += 1;
                if d < 0 {
                    d += 2 * y + 1;
                } else {
                    x -= 1;
                    d += 2 * (y - x) + 1;
                }
            }
        }
    }

    pub fn into_image(self) -> Image {
        Image::new(self.width, self.height, 1, self.pixels).expect("canvas length matches")
    }
}

pub fn bresenham(a: Point, b: Point) -> Vec<Point> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if x == b.0 && y == b.1 {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bresenham_endpoints_and_connectivity() {
        for &(a, b) in &[((0, 0), (7, 3)), ((5, 9), (1, 0)), ((3, 3), (3, 3)), ((0, 4), (9, 4))] {
            let pts = bresenham(a, b);
            assert_eq!(pts[0], a);
            assert_eq!(*pts.last().unwrap(), b);
            for w in pts.windows(2) {
                assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
            }
            let n = (a.0 - b.0).abs().max((a.1 - b.1).abs()) + 1;
            assert_eq!(pts.len() as i32, n);
        }
    }

    #[test]
    fn dashes_are_four_on_four_off() {
        let mut c = Canvas::white(20, 1);
        c.line((0, 0), (19, 0), 0, 1, Some((4, 4)));
        let row: String = c.pixels.iter().map(|&p| if p == 0 { '#' } else { '.' }).collect();
        assert_eq!(row, "####....####....####");
    }

    #[test]
    fn polygon_fill_covers_pixel_centres() {
        let mut c = Canvas::white(6, 6);
        c.fill_polygon(&[(1, 1), (5, 1), (5, 5), (1, 5)], 0);
        let dark = c.pixels.iter().filter(|&&p| p == 0).count();
        assert_eq!(dark, 16);
        let mut t = Canvas::white(10, 10);
        t.fill_polygon(&[(0, 0), (9, 0), (0, 9)], 0);
        assert_eq!(t.get(0, 0), 0);
        assert_eq!(t.get(9, 9), 255);
    }

    #[test]
    fn circle_is_symmetric() {
        let mut c = Canvas::white(21, 21);
        c.circle((10, 10), 7, 0, 1);
        for y in 0..21 {
            for x in 0..21 {
                assert_eq!(c.get(x, y), c.get(20 - x, y));
                assert_eq!(c.get(x, y), c.get(y, x));
            }
        }
        assert_eq!(c.get(17, 10), 0);
        assert_eq!(c.get(10, 10), 255);
    }
}
