use ghost_elliptic::{
    classify_points, extend_source, sample_levelset, DomainSpec, GridSpec, NodeClass,
};

/// Extension error of `f` at the external nodes the box method reads.
pub fn extension_error(n: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let grid = GridSpec::new(n).unwrap();
    let phi = sample_levelset(&DomainSpec::circle(), grid).unwrap();
    let cls = classify_points(&phi, ghost_elliptic::StencilFamily::Box).unwrap();
    let values: Vec<f64> = grid
        .nodes()
        .map(|k| {
            if cls.label(k) == NodeClass::Internal {
                let (x, y) = grid.point(k);
                f(x, y)
            } else {
                0.0
            }
        })
        .collect();
    let mut needed = Vec::new();
    for k in cls.internal() {
        for (di, dj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
            let m = ((k.0 as isize + di) as usize, (k.1 as isize + dj) as usize);
            if cls.label(m) != NodeClass::Internal {
                needed.push(m);
            }
        }
    }
    needed.sort();
    needed.dedup();
    assert!(!needed.is_empty());
    extend_source(&values, &phi, &cls, &needed)
        .unwrap()
        .into_iter()
        .map(|(k, v)| {
            let (x, y) = grid.point(k);
            (v - f(x, y)).abs()
        })
        .fold(0.0, f64::max)
}
