//! L² norm decay of T_λ for S = xy and S = x²y² on the unit square.

use oscint::lab::{dyadic_lambdas, run_l2_experiment, CutoffSpec};
use oscint::parser::parse_phase;

fn main() {
    let lambdas = dyadic_lambdas(4, 14);
    for (phase, alpha) in [("x*y", 0.5), ("x^2*y^2", 0.25)] {
        let s = parse_phase(phase).unwrap();
        let t = std::time::Instant::now();
        let r = run_l2_experiment(&s, CutoffSpec::unit_square(), 4096, &lambdas, alpha, 0.05).unwrap();
        print!("{}", r.to_csv());
        println!("{phase}: slope {:.4} (predicted {:.4}) {} in {:.1?}", r.fitted_slope, -alpha, r.verdict(), t.elapsed());
    }
}
