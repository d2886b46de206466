//! Property checks shared by the `properties` and `acceptance` targets. Each
//! check takes a generated case and returns a proptest verdict, so it can run
//! under the `proptest!` macro or a hand-driven `TestRunner`.

#![allow(dead_code)]

use hiergap::cosets::build_h1;
use hiergap::csp::{collapse_local, Constraint, ConstraintType, CspInstance, StretchMap};
use hiergap::gf::FieldSpec;
use hiergap::lashier::{build_lasserre_solution, compute_h_s, instance_equations, resolve, verify_lasserre};
use hiergap::local::{all_assignments, marginalize, subsets_up_to, LocalDistributionFamily, Table};
use hiergap::pidist::{lift_atoms, AtomDistribution};
use hiergap::rational::{ratio, Rational};
use hiergap::rng::DetRng;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 200;

pub type Check = Result<(), TestCaseError>;

pub fn fields() -> impl Strategy<Value = (u32, u32)> {
    prop::sample::select(vec![(2u32, 1u32), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (5, 1), (7, 1)])
}

pub fn field_axioms((p, m): (u32, u32), a: u32, b: u32, c: u32) -> Check {
    let f = FieldSpec::new(p, m).unwrap();
    let q = f.order();
    let (a, b, c) = (a % q, b % q, c % q);
    prop_assert_eq!(f.add_raw(a, b), f.add_raw(b, a));
    prop_assert_eq!(f.mul_raw(a, b), f.mul_raw(b, a));
    prop_assert_eq!(f.add_raw(f.add_raw(a, b), c), f.add_raw(a, f.add_raw(b, c)));
    prop_assert_eq!(f.mul_raw(f.mul_raw(a, b), c), f.mul_raw(a, f.mul_raw(b, c)));
    prop_assert_eq!(f.mul_raw(a, f.add_raw(b, c)), f.add_raw(f.mul_raw(a, b), f.mul_raw(a, c)));
    prop_assert_eq!(f.add_raw(a, f.neg_raw(a)), 0);
    prop_assert_eq!(f.mul_raw(a, 1), a);
    if a != 0 {
        prop_assert_eq!(f.mul_raw(a, f.inv_raw(a).unwrap()), 1);
    }
    // The trace is GF(p)-linear.
    prop_assert_eq!(f.trace_raw(f.add_raw(a, b)), (f.trace_raw(a) + f.trace_raw(b)) % p);
    Ok(())
}

/// Random generators in `G^k`; the annihilator pairs to zero with each, has
/// complementary dimension, and its own annihilator spans the generators.
pub fn annihilator_duality((p, m): (u32, u32), k: usize, seed: u64, count: usize) -> Check {
    let f = FieldSpec::new(p, m).unwrap();
    let mut rng = DetRng::new(seed);
    let gens: Vec<Vec<u32>> = (0..count).map(|_| (0..k).map(|_| rng.below(f.order() as u64) as u32).collect()).collect();
    let ann = f.annihilator(k, &gens).unwrap();
    for h in &ann {
        for g in &gens {
            prop_assert_eq!(f.trace_pairing(h, g), 0);
        }
    }
    let total = k * m as usize;
    let rank = f.prime_rank(&gens, k);
    prop_assert_eq!(ann.len(), total - rank);
    let back = f.annihilator(k, &ann).unwrap();
    let mut both = gens.clone();
    both.extend(back.iter().cloned());
    prop_assert_eq!(f.prime_rank(&back, k), rank);
    prop_assert_eq!(f.prime_rank(&both, k), rank);
    Ok(())
}

/// Lifting a binary distribution to `q` symbols keeps every zero-pattern
/// marginal: the probability that a set of coordinates is zero.
pub fn lift_marginal_identity(k: usize, q: u32, raw: &[u32]) -> Check {
    let total: u32 = raw.iter().take(1 << k).sum::<u32>().max(1);
    let mut entries = Vec::new();
    let mut acc = 0u32;
    for mask in 0..(1u32 << k) {
        let w = if mask + 1 == 1 << k { total - acc } else { raw[mask as usize].min(total - acc) };
        acc += w;
        entries.push(((0..k).map(|i| (mask >> i) & 1).collect::<Vec<u32>>(), ratio(w as i64, total as i64)));
    }
    let x = AtomDistribution::new(2, k, entries).unwrap();
    let y = lift_atoms(&x, q).unwrap();
    for sub in 1u32..(1 << k) {
        let zero_on = |t: &Vec<u32>| (0..k).filter(|&i| sub >> i & 1 == 1).all(|i| t[i] == 0);
        let px: Rational = x.atoms().filter(|(t, _)| zero_on(t)).map(|(_, p)| p.clone()).sum();
        let py: Rational = y.atoms().filter(|(t, _)| zero_on(t)).map(|(_, p)| p.clone()).sum();
        prop_assert_eq!(px, py);
    }
    Ok(())
}

/// A random distribution on `{0..q}^n` averaged over constant shifts has
/// uniform singletons; the stored family of its marginals.
pub fn shift_balanced_family(q: u32, n: usize, seed: u64) -> LocalDistributionFamily {
    let mut rng = DetRng::new(seed);
    let points = all_assignments(q, n);
    let raw: Vec<u64> = points.iter().map(|_| rng.below(4)).collect();
    let sum: u64 = raw.iter().sum::<u64>().max(1);
    let mut joint = Table::new();
    for (a, &w) in points.iter().zip(&raw) {
        if w == 0 && sum > 0 {
            continue;
        }
        for c in 0..q {
            let shifted: Vec<u32> = a.iter().map(|&x| (x + c) % q).collect();
            *joint.entry(shifted).or_insert_with(Rational::zero) += ratio(w as i64, (sum * q as u64) as i64);
        }
    }
    if joint.is_empty() {
        let u = ratio(1, points.len() as i64);
        joint = points.iter().map(|a| (a.clone(), u.clone())).collect();
    }
    let vars: Vec<usize> = (0..n).collect();
    let mut family = LocalDistributionFamily::new(q, n);
    for s in subsets_up_to(&vars, n) {
        if s.is_empty() {
            continue;
        }
        family.insert(s.clone(), marginalize(&joint, &vars, &s));
    }
    family
}

/// Collapsing a balanced `q`-ary family gives `X_v(1) = 1/q` exactly.
pub fn collapse_bias_law(q: u32, n: usize, seed: u64) -> Check {
    let family = shift_balanced_family(q, n, seed);
    prop_assert!(family.check_consistency().ok());
    let collapsed = collapse_local(&family, &StretchMap { q }).unwrap();
    prop_assert!(collapsed.check_consistency().ok());
    for v in 0..n {
        prop_assert_eq!(collapsed.prob(&[v], &[1]).unwrap(), ratio(1, q as i64));
    }
    Ok(())
}

/// A small instance of H1 constraints over `q` symbols on random tuples.
pub fn random_h1_instance(q: u32, n: usize, m: usize, seed: u64) -> CspInstance {
    let h1 = build_h1(q).unwrap();
    let k = h1.arity();
    let mut rng = DetRng::new(seed);
    let mut inst = CspInstance::new(n, q, 0, vec![]).unwrap().with_coset("h1", h1).unwrap();
    for _ in 0..m {
        let mut vars = rng.sample_subset(n, k);
        rng.shuffle(&mut vars);
        inst.constraints.push(Constraint {
            ty: ConstraintType::Coset("h1".into()),
            vars,
        });
    }
    inst
}

fn restrict(assign: &[u32], from: &[usize], to: &[usize]) -> Vec<u32> {
    to.iter().map(|v| assign[from.iter().position(|x| x == v).unwrap()]).collect()
}

/// `S ⊆ T` implies `H_T|_S ⊆ H_S`.
pub fn h_s_monotone(q: u32, n: usize, m: usize, width: usize, seed: u64) -> Check {
    let inst = random_h1_instance(q, n, m, seed);
    let field = FieldSpec::of_order(q).unwrap();
    let Ok(rs) = resolve(&field, &instance_equations(&inst).unwrap(), width) else {
        return Ok(());
    };
    let mut rng = DetRng::new(seed).substream("sets");
    let t_set = {
        let mut t = rng.sample_subset(n, (width + 1).min(n));
        t.sort_unstable();
        t
    };
    let s_set: Vec<usize> = t_set.iter().copied().filter(|_| rng.bernoulli(1, 2)).collect();
    let h_t = compute_h_s(&rs, &t_set).unwrap();
    let h_s = compute_h_s(&rs, &s_set).unwrap();
    for a in h_t.elements() {
        prop_assert!(h_s.contains(&restrict(&a, &t_set, &s_set)));
    }
    Ok(())
}

/// Constructed moment matrices are symmetric, consistent, match the family
/// entry by entry, and are PSD exactly and numerically.
pub fn moment_consistency(q: u32, n: usize, m: usize, seed: u64) -> Check {
    let inst = random_h1_instance(q, n, m, seed);
    let Ok(sol) = build_lasserre_solution(&inst, 1) else {
        return Ok(());
    };
    let r = verify_lasserre(&sol.moment, &inst);
    prop_assert!(r.ok(), "{:?}", r);
    prop_assert!(r.balanced);
    Ok(())
}

/// One perturbed probability or one negated moment entry is always caught.
pub fn fault_injection(q: u32, n: usize, seed: u64) -> Check {
    let mut family = shift_balanced_family(q, n, seed);
    let mut rng = DetRng::new(seed).substream("fault");
    let sets: Vec<Vec<usize>> = family.sets().filter(|s| !s.is_empty()).cloned().collect();
    let s = sets[rng.index(sets.len())].clone();
    let table = family.table_mut(&s).unwrap();
    let keys: Vec<Vec<u32>> = table.keys().cloned().collect();
    let key = keys[rng.index(keys.len())].clone();
    *table.get_mut(&key).unwrap() += ratio(1, 1000);
    prop_assert!(!family.check_consistency().ok());

    let inst = random_h1_instance(q, n.max(build_h1(q).unwrap().arity()), 1, seed);
    let mut mm = build_lasserre_solution(&inst, 1).unwrap().moment;
    let nonzero: Vec<(usize, usize)> = (0..mm.dim())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .filter(|&(i, j)| !mm.entries[i][j].is_zero())
        .collect();
    let (i, j) = nonzero[rng.index(nonzero.len())];
    let x = -mm.entries[i][j].clone();
    mm.entries[i][j] = x.clone();
    mm.entries[j][i] = x;
    prop_assert!(!verify_lasserre(&mm, &inst).ok());
    Ok(())
}

fn run<S: Strategy>(strategy: S, check: impl Fn(S::Value) -> Check) -> Result<(), String> {
    let cfg = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(cfg).run(&strategy, check).map_err(|e| e.to_string())
}

/// Runs each suite for `CASES` cases; returns `(name, verdict)` pairs.
pub fn run_all() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        (
            "field axioms",
            run((fields(), any::<u32>(), any::<u32>(), any::<u32>()), |(f, a, b, c)| field_axioms(f, a, b, c)),
        ),
        (
            "annihilator duality",
            run((fields(), 1usize..5, any::<u64>(), 0usize..4), |(f, k, s, c)| annihilator_duality(f, k, s, c)),
        ),
        (
            "lift-marginal identity",
            run((2usize..5, 2u32..6, prop::collection::vec(0u32..6, 16)), |(k, q, raw)| lift_marginal_identity(k, q, &raw)),
        ),
        ("collapse bias law", run((2u32..6, 1usize..4, any::<u64>()), |(q, n, s)| collapse_bias_law(q, n, s))),
        (
            "H_S monotonicity",
            run(
                (prop::sample::select(vec![2u32, 3, 4]), 5usize..9, 1usize..4, 2usize..5, any::<u64>()),
                |(q, n, m, w, s)| h_s_monotone(q, n, m, w, s),
            ),
        ),
        (
            "moment-matrix consistency",
            run((prop::sample::select(vec![2u32, 3]), 4usize..7, 1usize..3, any::<u64>()), |(q, n, m, s)| {
                moment_consistency(q, n, m, s)
            }),
        ),
        (
            "fault injection",
            run((prop::sample::select(vec![2u32, 3]), 2usize..4, any::<u64>()), |(q, n, s)| fault_injection(q, n, s)),
        ),
    ]
}
