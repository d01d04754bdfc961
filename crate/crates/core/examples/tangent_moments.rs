//! Monte Carlo check of the second moment of random tangent vectors, the quantity behind
//! the averaging proof of the benign landscape, against its closed form.
//!
//! ```bash
//! cargo run --release --example tangent_moments
//! ```

use nalgebra::{Complex, DMatrix};
use orthosync::field::Scalar;
use orthosync::linalg::{fro, seeded_rng};
use orthosync::stiefel::{tangent_second_moment, StiefelProductPoint, TangentConstruction};

fn compare<T: Scalar>(label: &str, r: usize, p: usize, construction: TangentConstruction) {
    let y = StiefelProductPoint::<T>::random(2, r, p, 3);
    let mut rng = seeded_rng(4);
    let draws = 100_000;
    let mut acc = DMatrix::<T>::zeros(r, r);
    for _ in 0..draws {
        let v = y.random_tangent_with(&mut rng, construction);
        acc += v.rows(0, r) * v.rows(r, r).adjoint();
    }
    acc /= T::from_real(draws as f64);
    let exact = tangent_second_moment(&y.block(0).into_owned(), &y.block(1).into_owned(), construction);
    println!(
        "{label:<28} r={r} p={p}: relative error {:.2e}",
        fro(&(&acc - &exact)) / fro(&exact)
    );
}

fn main() {
    compare::<f64>("real", 2, 4, TangentConstruction::Standard);
    compare::<f64>("real", 1, 3, TangentConstruction::Standard);
    compare::<Complex<f64>>("complex", 2, 3, TangentConstruction::Standard);
    compare::<Complex<f64>>("complex (plain Gaussian)", 1, 2, TangentConstruction::Plain);
}
