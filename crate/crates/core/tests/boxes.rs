use oscint::parser::parse_phase;
use oscint::resolution::{box_cover, nominal_box, resolve, ResolveConfig};

#[test]
fn covers_reach_sampled_points() {
    for phase in ["(y-x)^2", "(y-x)^3 + x^7", "x^5*y - x^3*y^2 + x^2*y^4", "(y - 2*x - x^2)*(y^2 + x^4)"] {
        let t = resolve(&parse_phase(phase).unwrap(), &ResolveConfig::default()).unwrap();
        for (li, leaf) in t.leaves.iter().enumerate() {
            for i in [1, 3, 6] {
                for j in [0, 2, 5] {
                    let (sigma, rho) = (leaf.epsilon * 2f64.powi(-i), leaf.radius.min(1.0) * 2f64.powi(-j));
                    let c = box_cover(leaf, sigma, rho);
                    let f = c.coverage(leaf, 400, li as u64);
                    assert!(f >= 0.99, "{phase} leaf {li} σ = {sigma:e} ρ = {rho:e}: {f}");
                }
            }
        }
    }
}

#[test]
fn boxes_match_nominal_size_on_a_double_line() {
    // away from the cap the strips of (y-x)² are a fixed multiple of the nominal Δx
    let t = resolve(&parse_phase("(y-x)^2").unwrap(), &ResolveConfig::default()).unwrap();
    let leaf = t.leaves.iter().find(|l| l.stage == 1).unwrap();
    for i in 5..9 {
        let sigma = 2f64.powi(-i);
        let c = box_cover(leaf, sigma, 0.25);
        assert!(!c.capped);
        let (dx, dy) = nominal_box(leaf, sigma, 0.25);
        for b in &c.boxes {
            let (w, h) = (b.x1 - b.x0, b.y1 - b.y0);
            assert!(w <= 8.0 * dx && h <= 16.0 * dy, "σ = {sigma}: {w} × {h} vs {dx} × {dy}");
        }
    }
}
