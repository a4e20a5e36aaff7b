//! AUROC, AUPR and average rank on small hand-made lists.

use hfi::metrics::{aupr, auroc, average_rank, Histogram};

fn main() -> hfi::Result<()> {
    let real = [0.9, 0.8, 0.8, 0.4];
    let generated = [0.8, 0.3, 0.2];
    println!("AUROC {:.4}", auroc(&real, &generated)?);
    println!("AUPR  {:.4}", aupr(&real, &generated)?);
    // Three methods on two tasks; the tie on task 2 shares ranks.
    let ranks = average_rank(&[vec![0.9, 0.7], vec![0.8, 0.7], vec![0.6, 0.9]])?;
    println!("average ranks {ranks:?}");
    let h = Histogram::new(&real, 4, 0.0, 1.0);
    println!("histogram edges {:?} counts {:?}", h.edges, h.counts);
    Ok(())
}
