use criterion::{criterion_group, criterion_main, Criterion};
use pbs_lex::colgen::{self, ColgenParams};
use pbs_lex::{generate, lex_solve, GeneratorOptions};
use pbs_lex_bench::{scale_instance, warm_master};

fn master(c: &mut Criterion) {
    let inst = scale_instance();
    let (master, _) = warm_master(&inst, 10);
    let mut group = c.benchmark_group("master");
    group.sample_size(10);
    group.bench_function(format!("lex_solve {} columns", master.columns().len()), |b| {
        b.iter(|| lex_solve(master.llp()).unwrap())
    });
    group.finish();

    let small = generate(3, 6, 24, 30, &GeneratorOptions::default()).unwrap();
    let mut group = c.benchmark_group("end to end");
    group.sample_size(10);
    group.bench_function("6 pilots, 24 pairings", |b| {
        b.iter(|| colgen::run(&small, &ColgenParams::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, master);
criterion_main!(benches);
