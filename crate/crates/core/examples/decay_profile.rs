//! Sharp decay exponent α(p) along a grid of p, plus a single classification query.

use oscint::coeff::rat;
use oscint::decay::{p_grid, DecayProfile};
use oscint::parser::parse_phase;

fn main() {
    let s = parse_phase("x^5*y - x^3*y^2 + x^2*y^4").unwrap();
    let profile = DecayProfile::new(&s).unwrap();
    print!("{}", profile.alpha_csv(&p_grid(8, 6)).unwrap());
    let p = rat(3, 1);
    let alpha = profile.alpha(&p).unwrap();
    println!("p = 3: sharp α = {alpha}, α = 1/10 is {}", profile.classify(&p, &rat(1, 10)).unwrap().as_str());
}
