use gbpd_core::clip::clip_to_window;
use gbpd_core::diagram::{build_diagram, Tolerances};
use gbpd_core::intersect::conic_conic_intersections;
use gbpd_core::measure::measure_all;
use gbpd_core::{ConicImplicit, Generator, SymMat2, Vec2, Window};
use proptest::prelude::*;

fn generator(id: i64) -> impl Strategy<Value = Generator> {
    (0.0..400.0f64, 0.0..400.0f64, 0.0..std::f64::consts::PI, 5.0..20.0f64, 1.0..20.0f64, 0.0..50.0f64)
        .prop_map(move |(x, y, theta, a, b, w)| Generator::from_axes(id, Vec2::new(x, y), theta, a.max(b), a.min(b), w))
}

fn scene(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Generator>> {
    n.prop_flat_map(|n| (0..n).map(|k| generator(k as i64)).collect::<Vec<_>>())
}

fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
    a.distance(b) <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn intersection_is_symmetric(gs in scene(4..5)) {
        let e1 = ConicImplicit::between(&gs[0], &gs[1]);
        let e2 = ConicImplicit::between(&gs[2], &gs[3]);
        let a = conic_conic_intersections(&e1, &e2).unwrap();
        let b = conic_conic_intersections(&e2, &e1).unwrap();
        prop_assert!(a.len() <= 4);
        prop_assert_eq!(a.len(), b.len());
        for p in &a {
            prop_assert!(b.iter().any(|q| close(*p, *q, 1e-9)), "{:?} missing from {:?}", p, b);
        }
    }

    #[test]
    fn edge_pairs_are_the_two_nearest(gs in scene(3..9)) {
        let g = build_diagram(&gs, &Tolerances::default());
        for e in &g.edges {
            let q = e.representative();
            let (i, j) = e.pair;
            let level = 0.5 * (gs[i].distance(q) + gs[j].distance(q));
            let scale = 1.0 + level.abs() + gs.iter().map(|g| g.w.abs()).fold(0.0, f64::max);
            prop_assert!((gs[i].distance(q) - gs[j].distance(q)).abs() <= 1e-8 * scale);
            for (k, g) in gs.iter().enumerate() {
                if k != i && k != j {
                    prop_assert!(g.distance(q) > level - 1e-8 * scale, "generator {} beats edge {:?}", k, e.pair);
                }
            }
        }
    }

    #[test]
    fn weight_shift_keeps_topology(gs in scene(3..9), shift in -40.0..40.0f64) {
        let shifted: Vec<Generator> = gs.iter().map(|g| g.with_weight(g.w + shift)).collect();
        let a = build_diagram(&gs, &Tolerances::default());
        let b = build_diagram(&shifted, &Tolerances::default());
        prop_assert_eq!(&a.adjacency, &b.adjacency);
        prop_assert_eq!(a.vertices.len(), b.vertices.len());
        for (u, v) in a.vertices.iter().zip(&b.vertices) {
            prop_assert_eq!(&u.gens, &v.gens);
            prop_assert!(close(u.pos, v.pos, 1e-9));
        }
    }

    #[test]
    fn clipped_cells_partition_the_window(gs in scene(2..9)) {
        let win = Window::square(400.0);
        let m = measure_all(&clip_to_window(&build_diagram(&gs, &Tolerances::default()), win)).unwrap();
        let total: f64 = m.iter().map(|c| c.area).sum();
        prop_assert!((total - win.area()).abs() <= 1e-6 * win.area(), "{}", total);
        prop_assert!(m.iter().all(|c| c.area >= -1e-9));
    }

    #[test]
    fn area_is_rigid_motion_invariant(gs in scene(2..7), dx in -100.0..100.0f64, dy in -100.0..100.0f64) {
        let win = Window::square(400.0);
        let centre = Vec2::new(200.0, 200.0);
        // A quarter turn about the window centre maps the window onto itself.
        let turn = |g: &Generator| {
            let p = centre + (g.p - centre).rotated(std::f64::consts::FRAC_PI_2);
            let m = SymMat2::new(g.m.m22, -g.m.m12, g.m.m11);
            Generator::new(g.id, p, m, g.w)
        };
        let moved: Vec<Generator> = gs.iter().map(|g| Generator::new(g.id, g.p + Vec2::new(dx, dy), g.m, g.w)).collect();
        let turned: Vec<Generator> = gs.iter().map(turn).collect();
        let moved_win = Window::new(dx, dy, 400.0 + dx, 400.0 + dy).unwrap();
        let base = measure_all(&clip_to_window(&build_diagram(&gs, &Tolerances::default()), win)).unwrap();
        let a = measure_all(&clip_to_window(&build_diagram(&moved, &Tolerances::default()), moved_win)).unwrap();
        let b = measure_all(&clip_to_window(&build_diagram(&turned, &Tolerances::default()), win)).unwrap();
        for ((c0, c1), c2) in base.iter().zip(&a).zip(&b) {
            let tol = 1e-8 * c0.area.max(1.0);
            prop_assert!((c0.area - c1.area).abs() <= tol, "translation {} vs {}", c0.area, c1.area);
            prop_assert!((c0.area - c2.area).abs() <= tol, "rotation {} vs {}", c0.area, c2.area);
        }
    }
}
