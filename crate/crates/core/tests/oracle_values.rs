//! Hand-computed values frozen as regression oracles.

use approx::assert_relative_eq;
use jnspace::atoms::{dual_optimizer, hk_upper_bound, AtomKind, AtomParams, AtomicDecomposition, LocalAtom, Polymer};
use jnspace::cz::{cz_decompose, tail_bound_check, CzConfig};
use jnspace::norms::{
    big_jn_norm_dyadic, campanato_norm_dyadic, jn_norm_dyadic, lebesgue_norm, packing_oracle_detailed,
    weak_quasi_norm,
};
use jnspace::poly::sharp_constant;
use jnspace::{CubeField, DomainSpec, GridFunction, NormParams};

fn spike() -> GridFunction {
    GridFunction::new(DomainSpec::new(1, 0, 2).unwrap(), vec![4.0, 0.0, 0.0, 0.0]).unwrap()
}

#[test]
fn spike_norms() {
    let f = spike();
    let p = NormParams::new(2.0, 1.0, 0, 0.0, 1.0).unwrap();
    // root: avg |f| = 1, weight 1; left half: residual (2,-2), weight 1/2 * 4 = 2
    assert_relative_eq!(jn_norm_dyadic(&f, &p).unwrap().value, 2f64.sqrt(), max_relative = 1e-14);
    // plain root residual (3,-1,-1,-1): osc 3/2, weight 9/4
    assert_relative_eq!(big_jn_norm_dyadic(&f, &p).unwrap().value, 1.5, max_relative = 1e-14);
    assert_relative_eq!(campanato_norm_dyadic(&f, &p).unwrap().0, 2.0, max_relative = 1e-14);
    assert_relative_eq!(lebesgue_norm(&f, 2.0).unwrap(), 2.0, max_relative = 1e-14);
    let root = f.domain().root();
    assert_relative_eq!(weak_quasi_norm(&f, &root, 0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
    let jn = jn_norm_dyadic(&f, &p).unwrap();
    assert_eq!(jn.packing.len(), 1);
    assert_eq!(f.domain().dyadic_cube(&jn.packing.cubes[0]).unwrap().to_string(), "L1[0]");
}

#[test]
fn antichain_counts() {
    let p = NormParams::new(2.0, 1.0, 0, 0.0, 1.0).unwrap();
    for (n, k, count) in [(1, 1, 5), (1, 3, 677), (1, 4, 458330), (2, 1, 17), (2, 2, 83522)] {
        let d = DomainSpec::new(n, 0, k).unwrap();
        let f = GridFunction::from_fn(d, |x| x[0]).unwrap();
        assert_eq!(packing_oracle_detailed(&f, &p).unwrap().1, count, "n={n} K={k}");
    }
    let big = GridFunction::zeros(DomainSpec::new(1, 0, 5).unwrap());
    assert!(packing_oracle_detailed(&big, &p).is_err());
}

#[test]
fn sharp_constants() {
    assert_eq!(sharp_constant(0, 1), 1.0);
    assert_eq!(sharp_constant(0, 3), 1.0);
    assert_relative_eq!(sharp_constant(1, 1), 4.0, max_relative = 1e-12);
    assert_relative_eq!(sharp_constant(2, 1), 9.0, max_relative = 1e-12);
    assert_relative_eq!(sharp_constant(1, 2), 7.0, max_relative = 1e-12);
}

#[test]
fn spike_cz_and_tail() {
    let f = spike();
    let d = cz_decompose(&f, &f.domain().root(), &CzConfig::new(0, 3.0, 1.0)).unwrap();
    assert_eq!(d.levels.len(), 2);
    assert_eq!(d.levels[0][0].field.values(), &[3.0, -1.0, -1.0, -1.0]);
    assert_eq!(d.levels[1][0].field.values(), &[0.0]);
    let tb = tail_bound_check(&f, &f.domain().root(), 2.0, 1.0, 1.0).unwrap();
    assert_relative_eq!(tb.lhs, 0.5, max_relative = 1e-15);
    assert_relative_eq!(tb.rhs, 2.0, max_relative = 1e-15);
    assert!(tb.pass);
}

#[test]
fn budgets_and_dual_construction() {
    let d = DomainSpec::new(1, 1, 2).unwrap();
    let params = AtomParams::new(2.0, 2.0, 0, 0.0, 1.0).unwrap();
    let cubes: Vec<_> = d.cubes_at_level(1).map(|c| d.cell_cube(&c)).collect();
    let terms = vec![
        (3.0, LocalAtom::normalized_indicator(&d, cubes[0], &params)),
        (4.0, LocalAtom::new(CubeField::zeros(cubes[1]), AtomKind::Grid)),
    ];
    let dec = AtomicDecomposition::new(vec![Polymer::new(terms)], params);
    assert_relative_eq!(hk_upper_bound(&dec), 5.0, max_relative = 1e-15);

    let f = GridFunction::constant(d, -2.0);
    let np = params.dual_norm_params().unwrap();
    let jn = jn_norm_dyadic(&f, &np).unwrap();
    // unit tiling of [0,2): (2 * 4)^(1/2)
    assert_relative_eq!(jn.value, 8f64.sqrt(), max_relative = 1e-14);
    let r = dual_optimizer(&f, &jn.packing, &params).unwrap();
    assert_relative_eq!(r.ratio, jn.value, max_relative = 1e-14);
}
