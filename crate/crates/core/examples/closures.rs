//! Cumulant-neglect closures, symbolic and numeric.
//!
//! ```sh
//! cargo run --release --example closures
//! ```

use parroll::moments::{
    close_moment, closure_polynomial, moments_to_cumulants, MomentSet, MultiIndex,
};

fn main() -> parroll::Result<()> {
    for t in [vec![3u8], vec![4], vec![6], vec![1, 3], vec![1, 1, 2]] {
        let idx = MultiIndex::new(t);
        println!("{} = {}", idx.key(), closure_polynomial(&idx, 2)?);
    }
    println!(
        "{} = {}",
        MultiIndex::new(vec![4]).key(),
        closure_polynomial(&MultiIndex::new(vec![4]), 3)?
    );

    // bivariate Gaussian with means (0.2, -0.1), variances (1, 0.5), covariance 0.3
    let (mu, var, cov) = ([0.2, -0.1], [1.0, 0.5], 0.3);
    let base = MomentSet::from_fn(2, 2, |i| match i.exponents() {
        [1, 0] => mu[0],
        [0, 1] => mu[1],
        [2, 0] => var[0] + mu[0] * mu[0],
        [0, 2] => var[1] + mu[1] * mu[1],
        _ => cov + mu[0] * mu[1],
    });
    let kappa = moments_to_cumulants(&base)?;
    println!("\ncumulants: {:?}", kappa.values());
    for t in [[4u8, 0], [2, 2], [3, 3]] {
        let idx = MultiIndex::new(t.to_vec());
        println!(
            "closed {} = {:.6}",
            idx.expectation(),
            close_moment(&idx, &base, 2)?
        );
    }
    Ok(())
}
