//! Fixtures shared by the benchmarks in `benches/`.

use gbpd_core::scene::{generate, Preset};
use gbpd_core::{Generator, Window};

pub fn window() -> Window {
    Window::square(400.0)
}

/// The 148-generator random scene used throughout the docs and tests.
pub fn paper_scene(n: usize) -> Vec<Generator> {
    generate(Preset::PaperRandom, n, 1, window())
}
