/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
///
/// # Panics
/// If `q == 0`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q > 0, "at least one node");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for k in 0..q {
        // Tricomi initial guess, then Newton on P_q
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre(q, x).1;
        nodes[q - 1 - k] = x;
        weights[q - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, q as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Lagrange basis polynomial `l_k(x)` through `nodes`.
pub(crate) fn lagrange_basis(nodes: &[f64], k: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != k)
        .map(|(_, xm)| (x - xm) / (nodes[k] - xm))
        .product()
}
