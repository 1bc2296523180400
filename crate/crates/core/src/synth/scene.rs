//! Scene descriptions and their rendering.

use super::raster::{Canvas, Point};
use crate::error::{Error, Result};
use crate::imageio::{area_resize, bilinear_resize, Image};
use crate::rng::SeededRng;

/// Scenes are drawn at this size and resized afterwards.
pub const RENDER_SIZE: usize = 256;
pub const DEFAULT_NOISE: f64 = 0.01;
pub const DASH: (usize, usize) = (4, 4);
pub const ARROW_LEN: f64 = 8.0;
pub const ARROW_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    ClassDiagram,
    SequenceDiagram,
    /// Source-task class 0..=3.
    Source(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stroke {
    pub value: u8,
    pub width: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrowHead {
    /// Two barbs.
    Open,
    /// Closed, unfilled triangle.
    Hollow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Checker,
    Diagonal,
    CrossHatch,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Outlined rectangle; `dividers` are absolute rows of full-width
    /// horizontal rules drawn with the same stroke.
    Box {
        x: i32,
        y: i32,
        w: i32,
        h: i32,
        dividers: Vec<i32>,
        stroke: Stroke,
        fill: Option<u8>,
    },
    Line {
        from: Point,
        to: Point,
        stroke: Stroke,
    },
    DashedLine {
        from: Point,
        to: Point,
        stroke: Stroke,
    },
    Arrow {
        from: Point,
        to: Point,
        head: ArrowHead,
        dashed: bool,
        stroke: Stroke,
    },
    FilledPolygon {
        points: Vec<Point>,
        value: u8,
    },
    Circle {
        center: Point,
        radius: i32,
        stroke: Stroke,
    },
    Polyline {
        points: Vec<Point>,
        stroke: Stroke,
    },
    Texture {
        x: i32,
        y: i32,
        w: i32,
        h: i32,
        cell: i32,
        pattern: Pattern,
        value: u8,
    },
}

/// Barb/corner points of an arrowhead at `to`: `[tip, left, right]`.
pub fn arrow_head(from: Point, to: Point) -> [Point; 3] {
    let (dx, dy) = ((to.0 - from.0) as f64, (to.1 - from.1) as f64);
    let len = dx.hypot(dy).max(1e-9);
    let (ux, uy) = (dx / len, dy / len);
    let bx = to.0 as f64 - ARROW_LEN * ux;
    let by = to.1 as f64 - ARROW_LEN * uy;
    let p = |s: f64| {
        (
            (bx - s * ARROW_HALF_WIDTH * uy).round() as i32,
            (by + s * ARROW_HALF_WIDTH * ux).round() as i32,
        )
    };
    [to, p(1.0), p(-1.0)]
}

impl Element {
    /// Every point the element touches must lie inside this bounding box.
    fn extent(&self) -> (i32, i32, i32, i32) {
        let bbox = |pts: &[Point], pad: i32| {
            let x0 = pts.iter().map(|p| p.0).min().unwrap_or(0);
            let x1 = pts.iter().map(|p| p.0).max().unwrap_or(0);
            let y0 = pts.iter().map(|p| p.1).min().unwrap_or(0);
            let y1 = pts.iter().map(|p| p.1).max().unwrap_or(0);
            (x0, y0, x1 + pad, y1 + pad)
        };
        match self {
            Element::Box { x, y, w, h, .. } | Element::Texture { x, y, w, h, .. } => (*x, *y, x + w - 1, y + h - 1),
            Element::Line { from, to, stroke } | Element::DashedLine { from, to, stroke } => {
                bbox(&[*from, *to], stroke.width - 1)
            }
            Element::Arrow { from, to, stroke, .. } => {
                let [_, l, r] = arrow_head(*from, *to);
                bbox(&[*from, *to, l, r], stroke.width - 1)
            }
            Element::FilledPolygon { points, .. } => bbox(points, 0),
            Element::Circle { center, radius, .. } => (
                center.0 - radius,
                center.1 - radius,
                center.0 + radius,
                center.1 + radius,
            ),
            Element::Polyline { points, stroke } => bbox(points, stroke.width - 1),
        }
    }

    fn draw(&self, c: &mut Canvas) {
        match self {
            Element::Box {
                x,
                y,
                w,
                h,
                dividers,
                stroke,
                fill,
            } => {
                if let Some(f) = fill {
                    c.fill_rect(*x, *y, *w, *h, *f);
                }
                c.rect(*x, *y, *w, *h, stroke.value, stroke.width);
                for &d in dividers {
                    c.fill_rect(*x, d, *w, stroke.width, stroke.value);
                }
            }
            Element::Line { from, to, stroke } => c.line(*from, *to, stroke.value, stroke.width, None),
            Element::DashedLine { from, to, stroke } => c.line(*from, *to, stroke.value, stroke.width, Some(DASH)),
            Element::Arrow {
                from,
                to,
                head,
                dashed,
                stroke,
            } => {
                c.line(*from, *to, stroke.value, stroke.width, dashed.then_some(DASH));
                let [tip, l, r] = arrow_head(*from, *to);
                c.line(tip, l, stroke.value, stroke.width, None);
                c.line(tip, r, stroke.value, stroke.width, None);
                if *head == ArrowHead::Hollow {
                    c.line(l, r, stroke.value, stroke.width, None);
                }
            }
            Element::FilledPolygon { points, value } => c.fill_polygon(points, *value),
            Element::Circle { center, radius, stroke } => c.circle(*center, *radius, stroke.value, stroke.width),
            Element::Polyline { points, stroke } => {
                for w in points.windows(2) {
                    c.line(w[0], w[1], stroke.value, stroke.width, None);
                }
            }
            Element::Texture {
                x,
                y,
                w,
                h,
                cell,
                pattern,
                value,
            } => {
                for yy in 0..*h {
                    for xx in 0..*w {
                        let dark = match pattern {
                            Pattern::Checker => ((xx / cell) + (yy / cell)) % 2 == 0,
                            Pattern::Diagonal => (xx + yy) % cell < 2,
                            Pattern::CrossHatch => (xx + yy) % cell < 2 || (xx - yy).rem_euclid(*cell) < 2,
                        };
                        if dark {
                            c.set(x + xx, y + yy, *value);
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    pub elements: Vec<Element>,
    /// Salt-and-pepper probability per pixel.
    pub noise: f64,
    pub noise_seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.elements.iter().enumerate() {
            let (x0, y0, x1, y1) = e.extent();
            if x0 < 0 || y0 < 0 || x1 >= self.width as i32 || y1 >= self.height as i32 {
                return Err(Error::invalid(format!("element {i} ({x0},{y0})-({x1},{y1}) leaves the canvas")));
            }
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::invalid(format!("noise probability {}", self.noise)));
        }
        Ok(())
    }

    /// A rectangle split into three compartments.
    pub fn has_compartment_box(&self) -> bool {
        self.elements
            .iter()
            .any(|e| matches!(e, Element::Box { dividers, .. } if dividers.len() == 2))
    }

    pub fn has_vertical_dashed_line(&self) -> bool {
        self.elements.iter().any(|e| match e {
            Element::DashedLine { from, to, .. } | Element::Arrow { from, to, dashed: true, .. } => {
                from.0 == to.0 && from.1 != to.1
            }
            _ => false,
        })
    }

    pub fn render(&self) -> Image {
        let mut c = Canvas::white(self.width, self.height);
        for e in &self.elements {
            e.draw(&mut c);
        }
        if self.noise > 0.0 {
            let mut rng = SeededRng::new(self.noise_seed);
            for p in c.pixels.iter_mut() {
                if rng.bernoulli(self.noise) {
                    *p = if rng.bernoulli(0.5) { 0 } else { 255 };
                }
            }
        }
        c.into_image()
    }

    /// Render and resize to `canvas` = (width, height): area averaging when
    /// shrinking so 1-px strokes survive, bilinear when enlarging.
    pub fn render_to(&self, canvas: (usize, usize)) -> Result<Image> {
        let img = self.render();
        if canvas.0 <= self.width && canvas.1 <= self.height {
            area_resize(&img, canvas.0, canvas.1)
        } else {
            bilinear_resize(&img, canvas.0, canvas.1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrow_head_geometry() {
        let [tip, l, r] = arrow_head((0, 10), (20, 10));
        assert_eq!(tip, (20, 10));
        assert_eq!(l, (12, 14));
        assert_eq!(r, (12, 6));
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let s = SceneSpec {
            kind: SceneKind::Source(0),
            width: 32,
            height: 32,
            elements: vec![Element::Circle {
                center: (5, 5),
                radius: 6,
                stroke: Stroke { value: 0, width: 1 },
            }],
            noise: 0.0,
            noise_seed: 0,
        };
        assert!(s.validate().is_err());
    }
}
