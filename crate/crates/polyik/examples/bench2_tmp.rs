use polyik::groebner::{buchberger, select_degree_le, GroebnerOptions};
use polyik::poly::{parse_system, MonomialOrder};
use std::time::{Duration, Instant};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let path = &args[1];
    let text = std::fs::read_to_string(path).unwrap();
    let (n, polys) = parse_system(&text).unwrap();
    eprintln!("loaded {} polys in {n} vars", polys.len());
    let opts = GroebnerOptions {
        max_pair_reductions: 500_000,
        time_limit: Duration::from_secs(500),
        log_progress: true,
    };
    let t0 = Instant::now();
    match buchberger(&polys, MonomialOrder::GradedReverseLex, opts) {
        Ok(basis) => {
            let mut hist = std::collections::BTreeMap::new();
            for g in &basis.generators {
                *hist.entry(g.total_degree()).or_insert(0) += 1;
            }
            println!(
                "GB in {:?}: {} gens, degree histogram {:?}, deg2 subset {}",
                t0.elapsed(),
                basis.len(),
                hist,
                select_degree_le(&basis, 2).len()
            );
        }
        Err(e) => println!("FAILED after {:?}: {e}", t0.elapsed()),
    }
}
