//! Box witnesses for the L^p → L^{p'} bound of xy² at p = 3.

use oscint::coeff::{int, rat, to_f64};
use oscint::lab::{dyadic_lambdas, run_witness_experiment, supporting_m, CutoffSpec};
use oscint::parser::parse_phase;
use oscint::polygon::reduced_polygon_of;

fn main() {
    let s = parse_phase("x*y^2").unwrap();
    let alpha = rat(1, 3);
    let m = supporting_m(&reduced_polygon_of(&s).unwrap(), &int(3), &alpha).unwrap();
    let lambdas = dyadic_lambdas(4, 14);
    let r = run_witness_experiment(&s, &CutoffSpec::unit_square(), m, 3.0, to_f64(&alpha), 1.0 / 64.0, &lambdas, 0.05).unwrap();
    print!("{}", r.to_csv());
    println!("m = {m}, slope {:.4}, {}", r.fitted_slope, r.verdict());
}
