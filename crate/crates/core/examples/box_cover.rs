//! Cover the dyadic pieces of each resolved region of a curved phase by boxes and
//! report the worst projection overlap per leaf.

use oscint::parser::parse_phase;
use oscint::resolution::{box_cover, resolve, ResolveConfig, OVERLAP_CONSTANT};

fn main() {
    let p = parse_phase("(y - x)^3 + x^7").unwrap();
    let tree = resolve(&p, &ResolveConfig::default()).unwrap();
    for (li, leaf) in tree.leaves.iter().enumerate() {
        let (mut pieces, mut boxes, mut worst) = (0, 0, 0);
        for i in 1..=6 {
            for j in 0..6 {
                let c = box_cover(leaf, leaf.epsilon * 2f64.powi(-i), leaf.radius.min(1.0) * 2f64.powi(-j));
                if !c.boxes.is_empty() {
                    pieces += 1;
                    boxes += c.boxes.len();
                    worst = worst.max(c.overlap_x.max(c.overlap_y));
                }
            }
        }
        if pieces > 0 {
            println!("leaf {li} (stage {}): {pieces} pieces, {boxes} boxes, worst overlap {worst}", leaf.stage);
        }
    }
    println!("overlap constant {OVERLAP_CONSTANT}");
}
