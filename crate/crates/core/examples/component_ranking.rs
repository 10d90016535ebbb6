//! Fit a model and list each subject's dominant components by diag(S_k).
//!
//! cargo run --release --example component_ranking

use sparse_parafac2::report::rank_components;
use sparse_parafac2::synth::{generate_synthetic, GeneratorSpec};
use sparse_parafac2::{fit_parafac2, SolverConfig};

fn main() -> sparse_parafac2::Result<()> {
    let x = generate_synthetic(&GeneratorSpec {
        subjects: 8,
        variables: 40,
        max_rows: 25,
        true_rank: 4,
        density: 0.3,
        seed: 11,
        nonneg_factors: true,
    })?;
    let config = SolverConfig {
        rank: 4,
        max_iters: 300,
        ..SolverConfig::default()
    };
    let (factors, trace) = fit_parafac2(&x, &config)?;
    println!("fit {:.6}", trace.final_fit().unwrap_or(0.0));

    for k in 0..factors.n_subjects() {
        let top = rank_components(&factors.s, k, 2)?;
        let shown: Vec<String> = top.iter().map(|(c, w)| format!("#{c} ({w:.3})")).collect();
        println!("subject {k}: {}", shown.join(", "));
    }

    // the variables that define component 0
    let mut loading: Vec<(usize, f64)> = factors.v.column(0).into_iter().enumerate().collect();
    loading.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("component 0 top variables: {:?}", &loading[..5]);
    Ok(())
}
