use criterion::{black_box, criterion_group, criterion_main, Criterion};
use wesnet_core::{detector_flops, DetectorKind, FlopExtras};

fn bench_formulas(c: &mut Criterion) {
    c.bench_function("detector_flops_all", |b| {
        b.iter(|| {
            let nt = black_box(30u64);
            let mut acc = 0u64;
            acc += detector_flops(DetectorKind::Zf, nt, &FlopExtras::default()).unwrap();
            acc += detector_flops(
                DetectorKind::Mmse,
                nt,
                &FlopExtras::default(),
            )
            .unwrap();
            acc += detector_flops(
                DetectorKind::Sdr,
                nt,
                &FlopExtras { n_iterations: Some(100), ..Default::default() },
            )
            .unwrap();
            acc += detector_flops(
                DetectorKind::DetNet,
                nt,
                &FlopExtras { layers: Some(90), ..Default::default() },
            )
            .unwrap();
            acc += detector_flops(
                DetectorKind::WeSNet,
                nt,
                &FlopExtras { keep_fraction: Some(0.5), layers: Some(90), ..Default::default() },
            )
            .unwrap();
            acc
        })
    });
}

criterion_group!(benches, bench_formulas);
criterion_main!(benches);
