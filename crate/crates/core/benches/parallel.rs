use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phylotorus::flow::FlowSpace;
use phylotorus::lattice::LatticeOptions;
use phylotorus::oracle::{oracle_kernel, verify_complete_intersection, OracleOptions};
use phylotorus::par::Execution;
use phylotorus::pipeline::{generate, GenerateOptions};
use phylotorus::{parse_group_spec, parse_newick};

const CASES: [(&str, &str); 3] = [
    ("Z2xZ3", "(1,(2,(3,(4,(5,6)))));"),
    ("Z4", "((1,2),3,(4,5));"),
    ("Z5", "(1,2,3,4,5,6);"),
];

fn strategies() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ]
}

fn bench_generate(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    group.sample_size(10);
    for (g, newick) in CASES {
        let spec = parse_group_spec(g).unwrap();
        let tree = parse_newick(newick).unwrap();
        for (name, execution) in strategies() {
            let opts = GenerateOptions {
                execution,
                ..GenerateOptions::default()
            };
            group.bench_with_input(
                BenchmarkId::new(name, format!("{g} {newick}")),
                &opts,
                |b, opts| b.iter(|| generate(&tree, &spec, opts).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify");
    group.sample_size(10);
    for (g, newick) in CASES {
        let spec = parse_group_spec(g).unwrap();
        let tree = parse_newick(newick).unwrap();
        let set = generate(&tree, &spec, &GenerateOptions::default()).unwrap();
        for (name, execution) in strategies() {
            let opts = OracleOptions {
                flow_cap: None,
                lattice: LatticeOptions {
                    cancel: None,
                    execution,
                },
            };
            group.bench_with_input(
                BenchmarkId::new(name, format!("{g} {newick}")),
                &opts,
                |b, opts| b.iter(|| verify_complete_intersection(&set, opts).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_kernel");
    group.sample_size(10);
    let spec = parse_group_spec("Z3").unwrap();
    let tree = parse_newick("((1,2),(3,4),(5,6));").unwrap();
    let space = FlowSpace::new(spec, &tree);
    for (name, execution) in strategies() {
        let opts = OracleOptions {
            flow_cap: None,
            lattice: LatticeOptions {
                cancel: None,
                execution,
            },
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| oracle_kernel(&space, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_generate, bench_verify, bench_kernel);
criterion_main!(benches);
