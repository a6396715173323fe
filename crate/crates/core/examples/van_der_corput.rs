//! Scalar van der Corput decay for t^k on [-1, 1].

use oscint::lab::{dyadic_lambdas, vdc_scalar};

fn main() {
    let lambdas = dyadic_lambdas(4, 14);
    for k in 2..=4u32 {
        let mut u = vec![0.0; k as usize + 1];
        u[k as usize] = 1.0;
        let r = vdc_scalar(&u, k, (-1.0, 1.0), &lambdas).unwrap();
        println!("t^{k}: slope {:.4} (expected {:.4}), constant {:.4}", r.slope, -1.0 / k as f64, r.constant);
    }
}
