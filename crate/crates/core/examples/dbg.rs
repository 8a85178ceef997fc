use ndarray::Array2;

fn main() {
    let n = 5;
    let a = Array2::from_shape_fn((n, n), |(i, j)| (i * n + j) as f64 * 0.1);
    let b = Array2::from_shape_fn((n, n), |(i, j)| ((i + 2) * (j + 1)) as f64 * 0.01);
    let c = a.dot(&b);
    // manual triple loop
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                m[[i, j]] += a[[i, k]] * b[[k, j]];
            }
        }
    }
    let err = (&c - &m).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    println!("dot err = {:e}", err);
    println!("c row0 = {:?}", c.row(0).to_vec());
    println!("m row0 = {:?}", m.row(0).to_vec());
}
