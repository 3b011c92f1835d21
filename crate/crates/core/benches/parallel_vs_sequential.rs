use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fdsic::evaluation::{run_grid, DatasetId, GridSpec, PremodelSelection};
use fdsic::harness::{build_dataset, ExperimentConfig};
use fdsic::neuralnet::{ModelArch, ModelKind};
use fdsic::par::available_jobs;

fn small_grid(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::default();
    cfg.ofdm.n_symbols = 25;
    for kind in ModelKind::ALL {
        let t = match kind {
            ModelKind::Linear => &mut cfg.training.linear,
            ModelKind::Hammerstein => &mut cfg.training.hammerstein,
            ModelKind::Wiener => &mut cfg.training.wiener,
            ModelKind::WienerHammerstein => &mut cfg.training.wiener_hammerstein,
            ModelKind::Ffnn => &mut cfg.training.ffnn,
        };
        t.epochs = 10;
        t.restarts = 1;
    }
    let data: Vec<_> = [DatasetId::Hammerstein, DatasetId::Wiener]
        .into_iter()
        .map(|id| (id, build_dataset(&cfg, id).unwrap()))
        .collect();
    let training = |k: ModelKind| cfg.cell_config(k);

    let mut group = c.benchmark_group("grid_20_cells");
    group.sample_size(10);
    let mut jobs = vec![1];
    if available_jobs() > 1 {
        jobs.push(available_jobs());
    }
    for j in jobs {
        let label = if j == 1 { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::new(label, j), &j, |b, &j| {
            b.iter(|| {
                run_grid(&GridSpec {
                    models: ModelKind::ALL.iter().map(|&k| ModelArch::default_for(k)).collect(),
                    datasets: data.iter().map(|(id, d)| (*id, d)).collect(),
                    premodel: PremodelSelection::Both,
                    training: &training,
                    seed: cfg.seed,
                    jobs: j,
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, small_grid);
criterion_main!(benches);
