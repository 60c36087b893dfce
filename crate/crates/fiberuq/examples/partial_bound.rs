//! Partial evaluation of a polynomial in its trailing coordinates and the
//! bound on the reduced norm.

use fiberuq::channel::{partial_evaluate, polynomial_partial_bound};
use fiberuq::poly::{IndexSet, ParamBox, Surrogate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let set = IndexSet::total_degree(4, 5);
    let coeffs: Vec<f64> = (0..set.len()).map(|k| ((k * 37 % 11) as f64 - 5.0) / (k + 1) as f64).collect();
    let domain = ParamBox::new(vec![550.0, 0.19, 0.0, 0.0], vec![580.0, 0.57, 5.0, 2.0])?;
    let f = Surrogate::new(domain, set, coeffs)?;
    println!("||f||^2 = {:.4}", f.norm_squared());
    for x in [[2.5, 1.0], [0.5, 0.2], [0.05, 0.02]] {
        let reduced = partial_evaluate(&f, &x)?;
        let (lhs, bound) = polynomial_partial_bound(&f, &x)?;
        let check = reduced.eval(&[560.0, 0.3])? - f.eval(&[560.0, 0.3, x[0], x[1]])?;
        println!("x = {x:?}: ||f_x||^2 = {lhs:.4} <= {bound:.4}  (pointwise identity residual {check:.1e})");
    }
    Ok(())
}
