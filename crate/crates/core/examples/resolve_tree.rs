//! Resolve S''_xy of a phase and classify every leaf against each reduced vertex.

use oscint::parser::parse_phase;
use oscint::polygon::reduced_polygon_of;
use oscint::resolution::{classify_region, resolve, ResolveConfig};

fn main() {
    let s = parse_phase("2*x*y^3 - 3*x^2*y^2 + 2*x^3*y").unwrap();
    let p = s.mixed_derivative(1, 1).unwrap();
    let tree = resolve(&p, &ResolveConfig::default()).unwrap();
    println!("{} nodes, {} leaves, ε = {:.4}", tree.nodes.len(), tree.leaves.len(), tree.epsilon);
    for (k, l) in &reduced_polygon_of(&s).unwrap().vertices {
        let (k, l) = (k.to_string().parse::<u32>().unwrap(), l.to_string().parse::<u32>().unwrap());
        for li in 0..tree.leaves.len() {
            if let Ok(c) = classify_region(&tree, li, k, l) {
                println!("vertex ({k}, {l}) leaf {li}: {} (ν = {}, μ = {})", c.classification.as_str(), c.nu, c.mu);
            }
        }
    }
}
