use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use oneshotstl::synth::random_stream;
use oneshotstl::{joint_stl, BatchParams, Config};

fn joint(c: &mut Criterion) {
    let mut group = c.benchmark_group("joint_stl");
    group.sample_size(10);
    for period in [50, 200, 800] {
        let n = 4 * period;
        let y = random_stream(n, period, 0.1, 1).values;
        let params = BatchParams::from_config(&Config::new(period), n);
        group.bench_with_input(BenchmarkId::from_parameter(period), &y, |b, y| {
            b.iter(|| black_box(joint_stl(black_box(y), &params).expect("solvable")))
        });
    }
    group.finish();
}

criterion_group!(benches, joint);
criterion_main!(benches);
