//! Optimal one-to-one matching between predicted and gold list items.
//!
//!     cargo run --example list_matching

use extractbench::reward::{list_score, optimal_matching};

fn main() {
    let tau = 0.35;
    // rows: predicted items, columns: gold items
    let sim = vec![
        vec![0.90, 0.40, 0.10],
        vec![0.85, 0.80, 0.20],
        vec![0.05, 0.30, 0.34],
    ];
    let m = optimal_matching(&sim, tau);
    for p in &m.pairs {
        println!("predicted {} -> gold {} ({:.2})", p.predicted, p.gold, p.score);
    }
    println!("matched weight {:.2}, list score {:.4}", m.total(), list_score(&sim, tau));

    // equal totals: earliest columns win, row by row
    let tied = vec![vec![0.6, 0.6], vec![0.6, 0.6]];
    let m = optimal_matching(&tied, tau);
    let pairs: Vec<_> = m.pairs.iter().map(|p| (p.predicted, p.gold)).collect();
    println!("tied matrix pairs: {pairs:?}");

    let at_threshold = optimal_matching(&[vec![0.35]], tau);
    println!("a lone 0.35 entry matches {} pair(s)", at_threshold.len());
}
