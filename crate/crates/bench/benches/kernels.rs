//! Throughput of the inner kernels: spin updates, loop face flips, hard
//! hexagon sweeps, torus FFT and SAW enumeration.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use onmodel::lattice::{HexDomain, TorusLattice};
use onmodel::loop_core::{surrounding_loop_lengths, Fugacity, LoopConfig};
use onmodel::loop_samplers::LoopChain;
use onmodel::representations::{HardHexLattice, HardHexState};
use onmodel::rng::make_rng;
use onmodel::saw::enumerate_saw;
use onmodel::spin_core::{Potential, SpinConfig};
use onmodel::spin_observables::{fourier_modes, TorusFft};
use onmodel::spin_samplers::{metropolis_sweep, Wolff};
use std::hint::black_box;

fn spin_kernels(c: &mut Criterion) {
    let lat = TorusLattice::new(2, 32).unwrap();
    let mut rng = make_rng(1, 0);
    let mut cfg = SpinConfig::random(2, lat.len(), &mut rng);
    let pot = Potential::Ferromagnetic(1.0);
    c.bench_function("xy metropolis sweep 64x64", |b| {
        b.iter(|| black_box(metropolis_sweep(&mut cfg, &lat, &pot, &mut rng, 1.0)))
    });
    let mut wolff = Wolff::new(lat.len());
    c.bench_function("xy wolff cluster 64x64 beta=1", |b| b.iter(|| black_box(wolff.step(&mut cfg, &lat, 1.0, &mut rng))));
    let mut fft = TorusFft::new(&lat);
    c.bench_function("fourier modes 64x64 n=2", |b| b.iter(|| black_box(fourier_modes(&cfg, &lat, &mut fft))));
}

fn loop_kernels(c: &mut Criterion) {
    let d = HexDomain::hexagon(20).unwrap();
    let mut rng = make_rng(2, 0);
    let mut chain = LoopChain::new(&d, &LoopConfig::empty(), 1.5, Fugacity::Finite(0.6)).unwrap();
    for _ in 0..100_000 {
        chain.step(&mut rng);
    }
    c.bench_function("loop face flip hexagon(20)", |b| b.iter(|| black_box(chain.step(&mut rng))));
    let centre = d.center_vertex();
    let mask = chain.mask().to_vec();
    c.bench_function("surrounding loops hexagon(20)", |b| {
        b.iter(|| black_box(surrounding_loop_lengths(&d, &mask, centre)))
    });
}

fn hardhex_kernels(c: &mut Criterion) {
    let lat = HardHexLattice::torus(18).unwrap();
    let mut rng = make_rng(3, 0);
    c.bench_function("hard hexagon sweep 18x18", |b| {
        b.iter_batched(
            || HardHexState::empty(&lat, 5.0).unwrap(),
            |mut s| {
                s.sweep(&lat, &mut rng);
                s
            },
            BatchSize::SmallInput,
        )
    });
}

fn saw_kernels(c: &mut Criterion) {
    c.bench_function("saw enumeration k=14", |b| b.iter(|| black_box(enumerate_saw(14).unwrap())));
}

criterion_group!(benches, spin_kernels, loop_kernels, hardhex_kernels, saw_kernels);
criterion_main!(benches);
