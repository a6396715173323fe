//! Dyadic budget sums over a resolved region against their predicted decay.

use oscint::lab::{dyadic_lambdas, fit_decay};
use oscint::parser::parse_phase;
use oscint::resolution::{budget_sum, resolve, ResolveConfig};

fn main() {
    let tree = resolve(&parse_phase("9*x^2*y^2").unwrap(), &ResolveConfig::default()).unwrap();
    let lambdas = dyadic_lambdas(8, 40);
    for leaf in &tree.leaves {
        let values: Vec<f64> = lambdas.iter().map(|l| budget_sum(leaf, 3, 3, 2.0, *l)).collect();
        let (slope, resid) = fit_decay(&lambdas, &values).unwrap();
        println!("slope {slope:.4} (predicted {:.4}), residual {resid:.2e}", -1.0 / 6.0);
    }
}
