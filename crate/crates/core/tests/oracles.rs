use gbpd_core::clip::clip_to_window;
use gbpd_core::diagram::{build_diagram, Tolerances};
use gbpd_core::fit::fit_generators_from_labels;
use gbpd_core::measure::measure_all;
use gbpd_core::oracle::{compare_labels, rasterize, rasterize_analytic};
use gbpd_core::scene::{generate, Preset};
use gbpd_core::{Generator, Vec2, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Keeps the part of `poly` where `a·x + b·y + c ≤ 0`.
fn clip_half_plane(poly: &[Vec2], a: f64, b: f64, c: f64) -> Vec<Vec2> {
    let f = |p: Vec2| a * p.x + b * p.y + c;
    let mut out = Vec::new();
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let (fp, fq) = (f(p), f(q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            out.push(p + (q - p) * (fp / (fp - fq)));
        }
    }
    out
}

fn shoelace(poly: &[Vec2]) -> f64 {
    0.5 * (0..poly.len()).map(|k| poly[k].cross(poly[(k + 1) % poly.len()])).sum::<f64>()
}

fn polygon_perimeter(poly: &[Vec2]) -> f64 {
    (0..poly.len()).map(|k| poly[k].distance(poly[(k + 1) % poly.len()])).sum()
}

#[test]
fn laguerre_cells_match_polygon_clipping() {
    let win = Window::square(400.0);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scene: Vec<Generator> = generate(Preset::Isotropic, 25, seed, win)
            .into_iter()
            .map(|g| g.with_weight(rng.gen_range(0.0..900.0)))
            .collect();
        let measured = measure_all(&clip_to_window(&build_diagram(&scene, &Tolerances::default()), win)).unwrap();
        for (i, gi) in scene.iter().enumerate() {
            let mut poly =
                vec![Vec2::new(0.0, 0.0), Vec2::new(400.0, 0.0), Vec2::new(400.0, 400.0), Vec2::new(0.0, 400.0)];
            // d_i ≤ d_j  ⇔  2(p_j − p_i)·x + |p_i|² − |p_j|² − w_i + w_j ≤ 0.
            for (j, gj) in scene.iter().enumerate() {
                if i != j && !poly.is_empty() {
                    let d = (gj.p - gi.p) * 2.0;
                    poly = clip_half_plane(&poly, d.x, d.y, gi.p.norm_sq() - gj.p.norm_sq() - gi.w + gj.w);
                }
            }
            let area = if poly.len() >= 3 { shoelace(&poly) } else { 0.0 };
            let perimeter = if poly.len() >= 3 { polygon_perimeter(&poly) } else { 0.0 };
            let m = &measured[i];
            assert!((m.area - area).abs() <= 1e-8 * area.max(1.0), "seed {seed} cell {i}: {} vs {area}", m.area);
            assert!(
                (m.perimeter - perimeter).abs() <= 1e-8 * perimeter.max(1.0),
                "seed {seed} cell {i}: {} vs {perimeter}",
                m.perimeter
            );
        }
    }
}

/// Length of the zero set of `f` inside the window by marching squares
/// with linear interpolation on an `n × n` grid of samples.
fn contour_length<F: Fn(Vec2) -> f64>(f: F, win: Window, n: usize) -> f64 {
    let h = win.width() / n as f64;
    let at = |i: usize, j: usize| Vec2::new(win.xmin + i as f64 * h, win.ymin + j as f64 * h);
    let values: Vec<f64> = (0..=n).flat_map(|j| (0..=n).map(move |i| (i, j))).map(|(i, j)| f(at(i, j))).collect();
    let v = |i: usize, j: usize| values[j * (n + 1) + i];
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut cuts = Vec::new();
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                let (fa, fb) = (v(a.0, a.1), v(b.0, b.1));
                if (fa < 0.0) != (fb < 0.0) {
                    let s = fa / (fa - fb);
                    cuts.push(at(a.0, a.1) + (at(b.0, b.1) - at(a.0, a.1)) * s);
                }
            }
            match cuts.len() {
                2 => total += cuts[0].distance(cuts[1]),
                4 => total += cuts[0].distance(cuts[1]) + cuts[2].distance(cuts[3]),
                _ => {}
            }
        }
    }
    total
}

#[test]
fn perimeters_match_contour_oracle() {
    let win = Window::square(400.0);
    let scene = generate(Preset::PaperRandom, 30, 11, win);
    let g = build_diagram(&scene, &Tolerances::default());
    let measured = measure_all(&clip_to_window(&g, win)).unwrap();
    let mut checked = 0;
    for (i, m) in measured.iter().enumerate() {
        if m.area < 2000.0 {
            continue;
        }
        // Signed gap to the nearest rival; zero exactly on the cell boundary.
        let gap = |x: Vec2| {
            let own = scene[i].distance(x);
            let rival = scene
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, g)| g.distance(x))
                .fold(f64::INFINITY, f64::min);
            own - rival
        };
        // Pad the window so that frame segments appear as contour too.
        let pad = 2.0;
        let outer = Window::new(-pad, -pad, 400.0 + pad, 400.0 + pad).unwrap();
        let inside = |x: Vec2| {
            let frame = (x.x).min(400.0 - x.x).min(x.y).min(400.0 - x.y);
            if frame < 0.0 {
                -frame
            } else {
                gap(x).max(-frame)
            }
        };
        let oracle = contour_length(inside, outer, 1010);
        checked += 1;
        assert!((m.perimeter - oracle).abs() <= 0.02 * oracle, "cell {i}: {} vs {oracle}", m.perimeter);
    }
    assert!(checked >= 10);
}

#[test]
fn fit_round_trip_reproduces_labels() {
    let win = Window::square(400.0);
    let scene = generate(Preset::PaperWeights, 16, 5, win);
    let img = rasterize(&scene, win, 400, 400);
    let fit = fit_generators_from_labels(&img, 1.0, 0.0).unwrap();
    assert_eq!(fit.generators.len(), 16);
    let rebuilt = clip_to_window(&build_diagram(&fit.generators, &Tolerances::default()), win);
    let stats = compare_labels(&img, &rasterize_analytic(&rebuilt, 400, 400)).unwrap();
    // The fit does not aim to reproduce the diagram; 0.121 at the time of
    // writing, tracked so that regressions show.
    println!("fit round trip mismatch fraction {:.4}", stats.fraction);
    assert!(stats.fraction < 0.15, "mismatch {}", stats.fraction);
    for (g, label) in fit.generators.iter().zip(0..) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for row in 0..400 {
            for col in 0..400 {
                if img.get(col, row) == label {
                    let c = img.pixel_center(col, row);
                    lo = Vec2::new(lo.x.min(c.x), lo.y.min(c.y));
                    hi = Vec2::new(hi.x.max(c.x), hi.y.max(c.y));
                }
            }
        }
        assert!(g.p.x >= lo.x && g.p.x <= hi.x && g.p.y >= lo.y && g.p.y <= hi.y);
    }
}

#[test]
fn pixel_counts_scale_with_resolution() {
    let win = Window::square(400.0);
    let scene = generate(Preset::PaperRandom, 40, 21, win);
    let measured = measure_all(&clip_to_window(&build_diagram(&scene, &Tolerances::default()), win)).unwrap();
    let coarse = gbpd_core::oracle::raster_cell_stats(&rasterize(&scene, win, 200, 200)).counts;
    let fine = gbpd_core::oracle::raster_cell_stats(&rasterize(&scene, win, 400, 400)).counts;
    for m in &measured {
        // Each count is off by at most about one pixel per unit of boundary.
        let slack = m.perimeter / 1.0 + 4.0 * m.perimeter / 2.0;
        let diff = fine[m.cell_id] as f64 - 4.0 * coarse[m.cell_id] as f64;
        assert!(diff.abs() <= slack, "cell {}: {diff} vs {slack}", m.cell_id);
    }
}
