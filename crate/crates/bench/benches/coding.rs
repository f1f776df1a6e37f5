use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use owc_rlnc_noma::gf256::{self, Gf256};
use owc_rlnc_noma::rlnc::{draw_coefficients, encode, make_random_frame, Decoder};

fn bench_gf256(c: &mut Criterion) {
    let src: Vec<u8> = (0..=255).cycle().take(4096).collect();
    let mut dst = vec![0u8; 4096];
    let mut group = c.benchmark_group("gf256");
    group.throughput(Throughput::Bytes(4096));
    group.bench_function("mul_add_slice", |b| {
        b.iter(|| gf256::mul_add_slice(black_box(&mut dst), black_box(&src), Gf256(0x53)))
    });
    group.finish();
}

fn bench_rlnc(c: &mut Criterion) {
    let mut group = c.benchmark_group("rlnc");
    for &(k, l) in &[(10usize, 128usize), (10, 1500), (32, 1024)] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frame = make_random_frame(&mut rng, k, l).unwrap();
        let packets: Vec<_> = (0..k + 2)
            .map(|_| encode(&frame, &draw_coefficients(&mut rng, k)).unwrap())
            .collect();
        group.throughput(Throughput::Bytes((k * l) as u64));
        group.bench_with_input(BenchmarkId::new("encode", format!("{k}x{l}")), &frame, |b, f| {
            let coeffs = draw_coefficients(&mut rng, k);
            b.iter(|| encode(black_box(f), black_box(&coeffs)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("decode", format!("{k}x{l}")), &packets, |b, pkts| {
            b.iter(|| {
                let mut d = Decoder::new(k, l).unwrap();
                for p in pkts {
                    if d.is_complete() {
                        break;
                    }
                    d.receive(p).unwrap();
                }
                d.recover()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gf256, bench_rlnc);
criterion_main!(benches);
