//! Class and sequence diagram generators.

use super::raster::{bresenham, Point};
use super::scene::{ArrowHead, Element, SceneKind, SceneSpec, Stroke, DEFAULT_NOISE, RENDER_SIZE};
use crate::rng::SeededRng;

pub(crate) fn stroke(rng: &mut SeededRng) -> Stroke {
    Stroke {
        value: rng.int_range(0, 96) as u8,
        width: rng.int_range(1, 2) as i32,
    }
}

fn r(rng: &mut SeededRng, lo: i32, hi: i32) -> i32 {
    rng.int_range(lo as i64, hi as i64) as i32
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x: i32,
    y: i32,
    w: i32,
    h: i32,
}

impl Rect {
    fn contains(&self, p: Point, pad: i32) -> bool {
        p.0 >= self.x - pad && p.0 < self.x + self.w + pad && p.1 >= self.y - pad && p.1 < self.y + self.h + pad
    }
}

/// Horizontal pseudo-text strokes inside rows `top..bottom` of a box interior.
fn text_strokes(rng: &mut SeededRng, b: Rect, inner: i32, top: i32, bottom: i32, max: i32, out: &mut Vec<Element>) {
    let room = bottom - top - 4;
    let n = r(rng, 1, max).min((room / 4).max(1));
    let spacing = (room / n).max(1);
    let iw = b.w - 2 * inner;
    for k in 0..n {
        let y = top + 2 + k * spacing + spacing / 2 - 1;
        let x0 = b.x + inner + r(rng, 2, 5);
        let len = r(rng, iw / 4, iw - 10);
        out.push(Element::Line {
            from: (x0, y),
            to: (x0 + len, y),
            stroke: Stroke {
                value: rng.int_range(0, 96) as u8,
                width: 1,
            },
        });
    }
}

/// 2–6 three-compartment boxes in distinct cells of a 3×2 grid, joined by
/// 1–3 straight connectors.
pub fn class_scene(seed: u64) -> SceneSpec {
    let mut rng = SeededRng::new(seed);
    let size = RENDER_SIZE as i32;
    let (cols, rows) = (3, 2);
    let mut cells: Vec<i32> = (0..cols * rows).collect();
    rng.shuffle(&mut cells);
    let n = r(&mut rng, 2, 6) as usize;
    let mut boxes = Vec::new();
    let mut elements = Vec::new();
    for &cell in &cells[..n] {
        let (cx, cy) = ((cell % cols) * size / cols, (cell / cols) * size / rows);
        let (cw, ch) = (size / cols, size / rows);
        let w = r(&mut rng, 44, cw - 10);
        let h = r(&mut rng, 56, ch - 10);
        let b = Rect {
            x: cx + r(&mut rng, 5, cw - 5 - w),
            y: cy + r(&mut rng, 5, ch - 5 - h),
            w,
            h,
        };
        let s = stroke(&mut rng);
        let name_h = r(&mut rng, 12, 20);
        let attr_h = r(&mut rng, 14, h - name_h - 14);
        let d1 = b.y + name_h;
        let d2 = d1 + attr_h;
        elements.push(Element::Box {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
            dividers: vec![d1, d2],
            stroke: s,
            fill: None,
        });
        text_strokes(&mut rng, b, s.width, b.y + s.width, d1, 1, &mut elements);
        text_strokes(&mut rng, b, s.width, d1 + s.width, d2, 4, &mut elements);
        text_strokes(&mut rng, b, s.width, d2 + s.width, b.y + b.h - s.width, 4, &mut elements);
        boxes.push(b);
    }

    let target = r(&mut rng, 1, 3) as usize;
    let mut made: Vec<(usize, usize)> = Vec::new();
    for _ in 0..30 {
        if made.len() == target {
            break;
        }
        let i = rng.below(n);
        let j = rng.below(n);
        if i == j || made.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i)) {
            continue;
        }
        let (a, b) = (boxes[i], boxes[j]);
        let (from, to) = if a.x + a.w < b.x {
            ((a.x + a.w, a.y + a.h / 2), (b.x - 1, b.y + b.h / 2))
        } else if b.x + b.w < a.x {
            ((a.x - 1, a.y + a.h / 2), (b.x + b.w, b.y + b.h / 2))
        } else if a.y + a.h < b.y {
            ((a.x + a.w / 2, a.y + a.h), (b.x + b.w / 2, b.y - 1))
        } else {
            ((a.x + a.w / 2, a.y - 1), (b.x + b.w / 2, b.y + b.h))
        };
        let crosses = bresenham(from, to)
            .iter()
            .any(|&p| boxes.iter().enumerate().any(|(k, bx)| k != i && k != j && bx.contains(p, 3)));
        if crosses {
            continue;
        }
        let s = stroke(&mut rng);
        elements.push(if rng.bernoulli(0.5) {
            Element::Arrow {
                from,
                to,
                head: ArrowHead::Hollow,
                dashed: false,
                stroke: s,
            }
        } else {
            Element::Line { from, to, stroke: s }
        });
        made.push((i, j));
    }

    SceneSpec {
        kind: SceneKind::ClassDiagram,
        width: RENDER_SIZE,
        height: RENDER_SIZE,
        elements,
        noise: DEFAULT_NOISE,
        noise_seed: rng.next_u64(),
    }
}

/// Lifeline geometry emitted by [`sequence_scene`], for checks against the
/// rendered pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lifeline {
    pub x: i32,
    pub top: i32,
    pub bottom: i32,
}

/// The dashed vertical lifelines of a sequence scene.
pub fn lifelines(spec: &SceneSpec) -> Vec<Lifeline> {
    spec.elements
        .iter()
        .filter_map(|e| match e {
            Element::DashedLine { from, to, .. } if from.0 == to.0 => Some(Lifeline {
                x: from.0,
                top: from.1,
                bottom: to.1,
            }),
            _ => None,
        })
        .collect()
}

/// 2–5 lifelines with header boxes, 0–3 activation bars, 1–6 messages.
pub fn sequence_scene(seed: u64) -> SceneSpec {
    let mut rng = SeededRng::new(seed);
    let size = RENDER_SIZE as i32;
    let n = r(&mut rng, 2, 5);
    let margin = 12;
    let spacing = (size - 2 * margin) / n;
    let mut elements = Vec::new();
    let mut lines = Vec::new();
    let line_stroke = stroke(&mut rng);
    for i in 0..n {
        let cx = margin + i * spacing + spacing / 2 + r(&mut rng, -4, 4);
        let hw = r(&mut rng, 12, (spacing / 2 - 4).min(30));
        let hh = r(&mut rng, 16, 26);
        let top = r(&mut rng, 6, 18);
        let s = stroke(&mut rng);
        let b = Rect {
            x: cx - hw,
            y: top,
            w: 2 * hw,
            h: hh,
        };
        elements.push(Element::Box {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
            dividers: vec![],
            stroke: s,
            fill: None,
        });
        text_strokes(&mut rng, b, s.width, b.y + s.width, b.y + b.h - s.width, 1, &mut elements);
        let start = top + hh;
        let end = size - 1 - r(&mut rng, 6, 18);
        elements.push(Element::DashedLine {
            from: (cx, start),
            to: (cx, end),
            stroke: Stroke {
                value: line_stroke.value,
                width: line_stroke.width,
            },
        });
        lines.push(Lifeline {
            x: cx,
            top: start,
            bottom: end,
        });
    }
    let lo = lines.iter().map(|l| l.top).max().unwrap() + 10;
    let hi = lines.iter().map(|l| l.bottom).min().unwrap() - 10;

    for _ in 0..r(&mut rng, 0, 3) {
        let l = lines[rng.below(lines.len())];
        let h = r(&mut rng, 20, 60);
        let y = r(&mut rng, lo, hi - h);
        let half = r(&mut rng, 4, 5);
        elements.push(Element::Box {
            x: l.x - half,
            y,
            w: 2 * half + 1,
            h,
            dividers: vec![],
            stroke: stroke(&mut rng),
            fill: Some(255),
        });
    }
    for _ in 0..r(&mut rng, 1, 6) {
        let i = rng.below(lines.len());
        let j = (i + 1 + rng.below(lines.len() - 1)) % lines.len();
        let y = r(&mut rng, lo, hi);
        let reply = rng.bernoulli(0.3);
        elements.push(Element::Arrow {
            from: (lines[i].x, y),
            to: (lines[j].x, y),
            head: ArrowHead::Open,
            dashed: reply,
            stroke: stroke(&mut rng),
        });
    }

    SceneSpec {
        kind: SceneKind::SequenceDiagram,
        width: RENDER_SIZE,
        height: RENDER_SIZE,
        elements,
        noise: DEFAULT_NOISE,
        noise_seed: rng.next_u64(),
    }
}
