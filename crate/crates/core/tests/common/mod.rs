#![allow(dead_code)]

use modfri::sampler::dense_sup;
use modfri::{FriParams, Pulse, SamplingDesign, SosKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seed42_params() -> FriParams {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    FriParams::random(&mut rng, 3, 1.0, 2.0, |r| r.gen_range(0.5..2.0))
}

/// Design and unit kernel with `λ = fraction · sup`, the sup measured on the
/// dense grid.
pub fn design_for(
    p: &FriParams,
    pulse: &Pulse,
    k: usize,
    of: f64,
    n: usize,
    fraction: f64,
) -> (SamplingDesign, SosKernel) {
    let probe = SamplingDesign::new(k, p.td, pulse.support(), of, n, 1.0).unwrap();
    let kernel = probe.unit_kernel();
    let sup = dense_sup(p, pulse, &kernel).unwrap();
    let design = SamplingDesign::new(k, p.td, pulse.support(), of, n, fraction * sup).unwrap();
    (design, kernel)
}

/// Composite Simpson on `[a, b]`, doubling the panel count until two
/// successive estimates agree to `tol` relative.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = |n: usize| {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let mut n = 16;
    let mut prev = rule(n);
    loop {
        n *= 2;
        let cur = rule(n);
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) || n > 1 << 20 {
            return cur;
        }
        prev = cur;
    }
}
