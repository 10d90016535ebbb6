//! Timing harness: specialized vs naive MTTKRP with a memory budget.
//!
//! cargo run --release --example benchmark

use sparse_parafac2::bench::{bench_mttkrp, BenchConfig, Kernel};
use sparse_parafac2::synth::{generate_synthetic, GeneratorSpec};

fn main() -> sparse_parafac2::Result<()> {
    let x = generate_synthetic(&GeneratorSpec {
        subjects: 5000,
        variables: 1000,
        max_rows: 50,
        true_rank: 10,
        density: 0.002,
        seed: 3,
        nonneg_factors: true,
    })?;
    println!(
        "K = {}, J = {}, nnz = {}",
        x.n_slices(),
        x.n_cols(),
        x.total_nnz()
    );

    for budget_mb in [4096u128, 100] {
        let config = BenchConfig {
            reps: 3,
            budget_bytes: budget_mb << 20,
            ..BenchConfig::new(10)
        };
        let result = bench_mttkrp(&x, &config)?;
        println!("budget {budget_mb} MB");
        for row in &result.rows {
            let mode = row
                .mode
                .map_or("sweep".to_string(), |m| format!("mode {m}"));
            let kernel = match row.kernel {
                Kernel::Specialized => "specialized",
                Kernel::Naive => "naive",
            };
            match row.median_ms {
                Some(ms) => println!("  {kernel:>11} {mode:>7}: median {ms:9.2} ms"),
                None if row.oom => println!("  {kernel:>11} {mode:>7}: OoM"),
                None => println!("  {kernel:>11} {mode:>7}: failed {:?}", row.error),
            }
        }
        for s in &result.speedups {
            let mode = s.mode.map_or("sweep".to_string(), |m| format!("mode {m}"));
            match s.speedup {
                Some(v) => println!("  speedup {mode}: {v:.1}x"),
                None => println!("  speedup {mode}: n/a"),
            }
        }
    }
    Ok(())
}
