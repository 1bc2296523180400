//! Source-task scenes: four classes of simple geometry with nothing in
//! common with box-and-line diagrams.

use std::f64::consts::TAU;

use super::raster::Point;
use super::scene::{Element, Pattern, SceneKind, SceneSpec, DEFAULT_NOISE, RENDER_SIZE};
use super::uml::stroke;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const SOURCE_CLASSES: [&str; 4] = ["circles", "triangles", "textures", "polylines"];

fn clamp_pt(x: f64, y: f64) -> Point {
    let hi = RENDER_SIZE as f64 - 3.0;
    (x.clamp(2.0, hi).round() as i32, y.clamp(2.0, hi).round() as i32)
}

fn circles(rng: &mut SeededRng, out: &mut Vec<Element>) {
    for _ in 0..rng.int_range(3, 8) {
        let radius = rng.int_range(6, 40) as i32;
        let lim = RENDER_SIZE as i64 - 3 - radius as i64;
        let center = (
            rng.int_range(radius as i64 + 2, lim) as i32,
            rng.int_range(radius as i64 + 2, lim) as i32,
        );
        out.push(Element::Circle {
            center,
            radius,
            stroke: stroke(rng),
        });
    }
}

fn triangles(rng: &mut SeededRng, out: &mut Vec<Element>) {
    for _ in 0..rng.int_range(2, 6) {
        let (cx, cy) = (rng.uniform_range(20.0, 236.0), rng.uniform_range(20.0, 236.0));
        let size = rng.uniform_range(15.0, 60.0);
        let phase = rng.uniform_range(0.0, TAU);
        let points = (0..3)
            .map(|k| {
                let a = phase + TAU * k as f64 / 3.0 + rng.uniform_range(-0.5, 0.5);
                let rad = size * rng.uniform_range(0.6, 1.0);
                clamp_pt(cx + rad * a.cos(), cy + rad * a.sin())
            })
            .collect();
        out.push(Element::FilledPolygon {
            points,
            value: rng.int_range(0, 96) as u8,
        });
    }
}

fn textures(rng: &mut SeededRng, out: &mut Vec<Element>) {
    for _ in 0..rng.int_range(1, 3) {
        let w = rng.int_range(40, 140) as i32;
        let h = rng.int_range(40, 140) as i32;
        let pattern = [Pattern::Checker, Pattern::Diagonal, Pattern::CrossHatch][rng.below(3)];
        out.push(Element::Texture {
            x: rng.int_range(0, RENDER_SIZE as i64 - w as i64) as i32,
            y: rng.int_range(0, RENDER_SIZE as i64 - h as i64) as i32,
            w,
            h,
            cell: rng.int_range(4, 16) as i32,
            pattern,
            value: rng.int_range(0, 96) as u8,
        });
    }
}

fn polylines(rng: &mut SeededRng, out: &mut Vec<Element>) {
    // Thin strokes carry the class; blobs are optional so the class cannot be
    // told from circles by fill alone.
    for _ in 0..rng.int_range(2, 5) {
        let (mut x, mut y) = (rng.uniform_range(20.0, 236.0), rng.uniform_range(20.0, 236.0));
        let mut points = vec![clamp_pt(x, y)];
        for _ in 0..rng.int_range(4, 12) {
            x += rng.uniform_range(-40.0, 40.0);
            y += rng.uniform_range(-40.0, 40.0);
            points.push(clamp_pt(x, y));
        }
        out.push(Element::Polyline {
            points,
            stroke: stroke(rng),
        });
    }
    for _ in 0..rng.int_range(0, 2) {
        let (x, y) = (rng.uniform_range(20.0, 236.0), rng.uniform_range(20.0, 236.0));
        let radius = rng.uniform_range(10.0, 35.0);
        let n = rng.int_range(10, 16);
        let points = (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                let rad = radius * (1.0 + 0.7 * (rng.uniform() - 0.5));
                clamp_pt(x + rad * a.cos(), y + rad * a.sin())
            })
            .collect();
        out.push(Element::FilledPolygon {
            points,
            value: rng.int_range(0, 96) as u8,
        });
    }
}

pub fn source_scene(class: u8, seed: u64) -> Result<SceneSpec> {
    let mut rng = SeededRng::new(seed);
    let mut elements = Vec::new();
    match class {
        0 => circles(&mut rng, &mut elements),
        1 => triangles(&mut rng, &mut elements),
        2 => textures(&mut rng, &mut elements),
        3 => polylines(&mut rng, &mut elements),
        c => return Err(Error::invalid(format!("source class {c} (expected 0..=3)"))),
    }
    Ok(SceneSpec {
        kind: SceneKind::Source(class),
        width: RENDER_SIZE,
        height: RENDER_SIZE,
        elements,
        noise: DEFAULT_NOISE,
        noise_seed: rng.next_u64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_scenes_are_in_bounds_and_free_of_diagram_motifs() {
        for class in 0..4 {
            for seed in 0..300 {
                let s = source_scene(class, seed).unwrap();
                s.validate().unwrap();
                assert!(!s.has_compartment_box() && !s.has_vertical_dashed_line());
                assert!(!s.elements.iter().any(|e| matches!(e, Element::Box { .. })));
            }
        }
        assert!(source_scene(4, 0).is_err());
    }

    #[test]
    fn circles_class_has_no_filled_polygons() {
        for seed in 0..300 {
            let s = source_scene(0, seed).unwrap();
            assert!(s.elements.iter().all(|e| matches!(e, Element::Circle { .. })));
        }
    }
}
