use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use super::*;
use crate::interp::{Heap, Value};
use crate::syntax::{compile, parse_type, Program, TypeExpr};

fn program(src: &str) -> Program {
    compile(src, "t.wys").unwrap_or_else(|d| panic!("{}", d.rendered))
}

fn ints(min: i64, max: i64) -> DomainParams {
    DomainParams {
        int_min: min,
        int_max: max,
        ..DomainParams::default()
    }
}

fn domain(src: &str, ty: &str, params: DomainParams) -> Arc<Domain> {
    build(&parse_type(ty).unwrap(), params, &program(src)).unwrap()
}

fn values(d: &Domain) -> Vec<Value> {
    let n = d.size().to_u64().unwrap();
    (0..n)
        .map(|i| d.at(&BigUint::from(i), &mut Heap::new()))
        .collect()
}

/// Direct enumeration, independent of index arithmetic.
fn brute(ty: &TypeExpr, p: &Program, params: &DomainParams, budget: i64) -> Vec<Value> {
    match ty {
        TypeExpr::Null => vec![Value::Null],
        TypeExpr::Bool => vec![Value::Bool(false), Value::Bool(true)],
        TypeExpr::Int => (params.int_min..=params.int_max).map(Value::int).collect(),
        TypeExpr::Array(e) => {
            let elems = brute(e, p, params, budget);
            let mut out = vec![];
            let mut layer: Vec<Vec<Value>> = vec![vec![]];
            for _ in 0..=params.max_array_len {
                out.extend(layer.iter().cloned().map(Value::Array));
                layer = layer
                    .iter()
                    .flat_map(|prefix| {
                        elems.iter().map(move |v| {
                            let mut next = prefix.clone();
                            next.push(v.clone());
                            next
                        })
                    })
                    .collect();
            }
            out
        }
        TypeExpr::Record { fields, .. } => {
            let mut rows: Vec<Vec<(String, Value)>> = vec![vec![]];
            for (n, t) in fields {
                let vs = brute(t, p, params, budget);
                rows = rows
                    .into_iter()
                    .flat_map(|row| {
                        vs.iter().map(move |v| {
                            let mut r = row.clone();
                            r.push((n.clone(), v.clone()));
                            r
                        })
                    })
                    .collect();
            }
            rows.into_iter().map(Value::Record).collect()
        }
        TypeExpr::Union(ms) => ms
            .iter()
            .flat_map(|m| brute(m, p, params, budget))
            .collect(),
        TypeExpr::Named(n) => {
            let decl = p.type_decl(n).unwrap();
            if p.is_recursive(n) {
                if budget < 0 {
                    vec![]
                } else {
                    brute(&decl.ty, p, params, budget - 1)
                }
            } else {
                brute(&decl.ty, p, params, budget)
            }
        }
        TypeExpr::Reference(_) | TypeExpr::Lambda { .. } => unimplemented!(),
    }
}

const LIST: &str = "type List is null | {int value, List next}\n";

#[test]
fn bool_array_has_fifteen_values() {
    let d = domain("", "bool[]", DomainParams::default());
    assert_eq!(d.size(), &BigUint::from(15u8));
    let got: HashSet<String> = values(&d).iter().map(ToString::to_string).collect();
    let mut want = HashSet::new();
    for len in 0..=3u32 {
        for bits in 0..(1u32 << len) {
            let items: Vec<String> = (0..len).map(|i| (bits >> i & 1 == 1).to_string()).collect();
            want.insert(format!("[{}]", items.join(",")));
        }
    }
    assert_eq!(got, want);
    assert!(
        got.contains("[]") && got.contains("[true,false]") && got.contains("[false,false,false]")
    );
}

#[test]
fn closed_record_is_cross_product() {
    let d = domain("", "{bool tag, int data}", ints(-2, 2));
    assert_eq!(d.size(), &BigUint::from(10u8));
    let got: HashSet<String> = values(&d).iter().map(ToString::to_string).collect();
    assert_eq!(got.len(), 10);
    assert!(got.contains("{tag=false, data=-2}"));
    assert!(got.contains("{tag=true, data=2}"));
}

#[test]
fn open_record_uses_minimal_instance() {
    let open = domain("", "{int x, int y, ...}", ints(-1, 1));
    let closed = domain("", "{int x, int y}", ints(-1, 1));
    assert_eq!(values(&open), values(&closed));
}

#[test]
fn union_concatenates_members() {
    let d = domain("", "bool|int", DomainParams::default());
    assert_eq!(d.size(), &BigUint::from(9u8));
    let strings: Vec<String> = values(&d).iter().map(ToString::to_string).collect();
    assert_eq!(
        strings,
        ["false", "true", "-3", "-2", "-1", "0", "1", "2", "3"]
    );
    // duplicates are kept
    assert_eq!(
        domain("", "int|int", DomainParams::default()).size(),
        &BigUint::from(14u8)
    );
}

#[test]
fn list_sizes_by_depth() {
    let p = program(LIST);
    let ty = parse_type("List").unwrap();
    let mut sizes = vec![];
    for depth in 0..=3 {
        let params = DomainParams {
            max_depth: depth,
            ..DomainParams::default()
        };
        sizes.push(build(&ty, params, &p).unwrap().size().to_u64().unwrap());
    }
    assert_eq!(sizes, [1, 8, 57, 400]);
    assert_eq!(sizes[3], 1 + 7 * (1 + 7 * (1 + 7)));
}

#[test]
fn brute_force_agrees_on_corpus_types() {
    let src = "type nat is (int n) where n >= 0\n\
               type Heap is {int[] data, int len}\n\
               type Vector is {int[] items, int length}\n\
               type Tree is null | {Tree left, int v, Tree right}\n"
        .to_string()
        + LIST;
    let p = program(&src);
    let types = [
        "bool[]",
        "{bool tag, int data}",
        "bool|int",
        "List",
        "nat",
        "Heap",
        "Vector",
        "Tree",
        "int[][]",
        "null|bool",
        "{int x, int y, ...}",
    ];
    for n in 0..=2 {
        let params = DomainParams::uniform(n);
        for t in types {
            let ty = parse_type(t).unwrap();
            let d = build(&ty, params, &p).unwrap();
            let expect = brute(&ty, &p, &params, params.max_depth as i64);
            assert_eq!(d.size(), &BigUint::from(expect.len()), "{t} at scope {n}");
            if expect.len() <= 5000 {
                let got: Vec<Value> = values(&d);
                let got_set: HashSet<String> = got.iter().map(ToString::to_string).collect();
                let want_set: HashSet<String> = expect.iter().map(ToString::to_string).collect();
                assert_eq!(got_set, want_set, "{t} at scope {n}");
            }
        }
    }
}

#[test]
fn lambda_rotation_zero_matches_listing() {
    let d = domain("", "function(int)->(bool)", ints(-1, 1));
    assert_eq!(d.size(), &BigUint::from(2u8));
    let Value::Lambda(l) = d.at(&BigUint::from(0u8), &mut Heap::new()) else {
        panic!()
    };
    assert_eq!(l.apply(&[Value::int(-1)]), Some(vec![Value::Bool(false)]));
    assert_eq!(l.apply(&[Value::int(0)]), Some(vec![Value::Bool(true)]));
    assert_eq!(l.apply(&[Value::int(1)]), Some(vec![Value::Bool(false)]));
    assert_eq!(l.to_string(), "fn{-1->false, 0->true, 1->false}");
    assert_eq!(l.apply(&[Value::int(5)]), None);
    let Value::Lambda(r1) = d.at(&BigUint::from(1u8), &mut Heap::new()) else {
        panic!()
    };
    assert_eq!(r1.to_string(), "fn{-1->true, 0->false, 1->true}");
}

#[test]
fn lambda_domain_size_is_capped_by_output() {
    let wide = domain("", "function(bool)->(int)", ints(-3, 3));
    assert_eq!(wide.size(), &BigUint::from(3u8));
    let params = DomainParams {
        max_rotation: 10,
        ..DomainParams::default()
    };
    assert_eq!(
        domain("", "function(int)->(bool)", params).size(),
        &BigUint::from(2u8)
    );
}

#[test]
fn index_of_examples() {
    let d = domain("", "int", DomainParams::default());
    assert_eq!(
        d.index_of(&Value::int(0), &Heap::new()),
        Some(BigUint::from(3u8))
    );
    assert_eq!(d.index_of(&Value::int(5), &Heap::new()), None);
    assert_eq!(d.index_of(&Value::int(-4), &Heap::new()), None);
    let b = domain("", "bool", DomainParams::default());
    assert_eq!(
        b.index_of(&Value::Bool(true), &Heap::new()),
        Some(BigUint::from(1u8))
    );
    let a = domain("", "int[]", DomainParams::default());
    assert_eq!(
        a.index_of(&Value::Array(vec![Value::int(0); 4]), &Heap::new()),
        None
    );
}

/// Cell contents per parameter plus the aliasing partition.
fn describe(args: &[Value], heap: &Heap) -> (Vec<String>, Vec<usize>) {
    let ids: Vec<usize> = args
        .iter()
        .map(|a| match a {
            Value::Ref(id) => id.0,
            _ => panic!(),
        })
        .collect();
    let contents = ids
        .iter()
        .map(|&i| heap.get(crate::interp::CellId(i)).unwrap().to_string())
        .collect();
    let partition = ids
        .iter()
        .map(|i| ids.iter().position(|j| j == i).unwrap())
        .collect();
    (contents, partition)
}

fn tuple_configs(src: &str, params: DomainParams) -> Vec<(Vec<String>, Vec<usize>)> {
    let p = program(src);
    let decl = p.functions().next().unwrap();
    let mut b = Builder::new(&p, params).unwrap();
    let t = TupleDomain::build(decl, &mut b).unwrap();
    let n = t.size().to_u64().unwrap();
    (0..n)
        .map(|i| {
            let (args, heap) = t.at(&BigUint::from(i));
            assert_eq!(t.index_of(&args, &heap), Some(BigUint::from(i)));
            describe(&args, &heap)
        })
        .collect()
}

#[test]
fn swap_has_six_configurations() {
    let src = "method swap(&bool x, &bool y):\n    skip\n";
    let got: HashSet<_> = tuple_configs(src, DomainParams::default())
        .into_iter()
        .collect();
    let (f, t) = ("false".to_string(), "true".to_string());
    let want: HashSet<_> = [
        (vec![f.clone(), f.clone()], vec![0, 1]),
        (vec![f.clone(), t.clone()], vec![0, 1]),
        (vec![t.clone(), f.clone()], vec![0, 1]),
        (vec![t.clone(), t.clone()], vec![0, 1]),
        (vec![f.clone(), f.clone()], vec![0, 0]),
        (vec![t.clone(), t.clone()], vec![0, 0]),
    ]
    .into_iter()
    .collect();
    assert_eq!(got, want);
}

#[test]
fn three_references_give_fourteen() {
    let src = "method m(&bool a, &bool b, &bool c):\n    skip\n";
    let configs = tuple_configs(src, DomainParams::default());
    assert_eq!(configs.len(), 14);
    assert_eq!(configs.iter().collect::<HashSet<_>>().len(), 14);
    let partitions: HashSet<Vec<usize>> = configs.iter().map(|(_, p)| p.clone()).collect();
    assert_eq!(
        partitions,
        [vec![0, 1, 2], vec![0, 1, 1], vec![0, 0, 0]]
            .into_iter()
            .collect()
    );
}

#[test]
fn alias_width_zero_forces_one_cell() {
    let src = "method swap(&bool x, &bool y):\n    skip\n";
    let params = DomainParams {
        alias_width: 0,
        ..DomainParams::default()
    };
    let configs: HashSet<_> = tuple_configs(src, params).into_iter().collect();
    let want: HashSet<_> = [
        (vec!["false".to_string(), "false".to_string()], vec![0, 0]),
        (vec!["true".to_string(), "true".to_string()], vec![0, 0]),
    ]
    .into_iter()
    .collect();
    assert_eq!(configs, want);
}

#[test]
fn mixed_parameters_follow_declaration_order() {
    let p = program("method m(int k, &bool a, bool f, &int b, &bool c):\n    skip\n");
    let decl = p.functions().next().unwrap();
    let mut b = Builder::new(&p, DomainParams::default()).unwrap();
    let t = TupleDomain::build(decl, &mut b).unwrap();
    // 7 * (4 + 2) * 2 * 7
    assert_eq!(t.size(), &BigUint::from(7u32 * 6 * 2 * 7));
    for i in [0u32, 1, 100, 587] {
        let (args, heap) = t.at(&BigUint::from(i));
        assert!(matches!(args[0], Value::Int(_)));
        assert!(matches!(args[1], Value::Ref(_)) && matches!(args[4], Value::Ref(_)));
        assert!(matches!(args[2], Value::Bool(_)));
        assert_eq!(t.index_of(&args, &heap), Some(BigUint::from(i)));
    }
}

#[test]
fn depth_zero_list_leaves_only_null() {
    let p = program(&format!(
        "{LIST}function f(int x, List l) -> (int r):\n    return x\n"
    ));
    let decl = p.functions().next().unwrap();
    let params = DomainParams {
        max_depth: 0,
        ..DomainParams::default()
    };
    let t = TupleDomain::build(decl, &mut Builder::new(&p, params).unwrap()).unwrap();
    assert_eq!(t.size(), &BigUint::from(7u8));
}

#[test]
fn empty_component_empties_product() {
    let empty = Arc::new(Domain::new(Kind::Empty));
    let int = Arc::new(Domain::int(-3, 3));
    let r = Domain::new(Kind::Record {
        names: vec!["x".into(), "e".into()],
        fields: Product::new(vec![int.clone(), empty.clone()]),
    });
    assert!(r.is_empty());
    let u = Domain::new(Kind::Union(vec![int, empty]));
    assert_eq!(u.size(), &BigUint::from(7u8));
}

#[test]
fn nested_references_are_rejected() {
    let p = program("");
    for t in ["(&int)[]", "{&int r}"] {
        let err = build(&parse_type(t).unwrap(), DomainParams::default(), &p).unwrap_err();
        assert!(matches!(err, DomainError::Unsupported(_)), "{t}");
    }
    let d = build(&parse_type("&bool").unwrap(), DomainParams::default(), &p).unwrap();
    assert_eq!(d.size(), &BigUint::from(2u8));
}

#[test]
fn inverted_bounds_rejected() {
    let p = program("");
    assert!(matches!(
        build(&TypeExpr::Int, ints(1, 0), &p),
        Err(DomainError::InvalidBounds(1, 0))
    ));
}

#[test]
fn huge_domains_are_lazy() {
    let d = domain("", "int[]", ints(-500, 500));
    // 1 + 1001 + 1001^2 + 1001^3
    let n: u128 = 1 + 1001 + 1001 * 1001 + 1001 * 1001 * 1001;
    assert_eq!(d.size(), &BigUint::from(n));
    let last = d.at(&BigUint::from(n - 1), &mut Heap::new());
    assert_eq!(last.to_string(), "[500,500,500]");
    assert_eq!(d.index_of(&last, &Heap::new()), Some(BigUint::from(n - 1)));
    let nested = domain("", "int[][][]", DomainParams::default());
    assert!(nested.size().bits() > 64);
}

proptest! {
    #[test]
    fn at_and_index_of_are_inverse(scope in 0usize..3, pick in 0usize..6, seed in any::<u64>()) {
        let p = program(&format!("type nat is (int n) where n >= 0\n{LIST}"));
        let t = ["bool[]", "{bool tag, int data}", "bool|int", "List", "nat[]", "function(int)->(bool)"][pick];
        let ty = parse_type(t).unwrap();
        let d = build(&ty, DomainParams::uniform(scope), &p).unwrap();
        let n = d.size().to_u64().unwrap();
        prop_assume!(n > 0);
        let mut seen = HashSet::new();
        for k in 0..n.min(64) {
            let i = (seed.wrapping_add(k * 0x9e37_79b9)) % n;
            let v = d.at(&BigUint::from(i), &mut Heap::new());
            prop_assert_eq!(d.index_of(&v, &Heap::new()), Some(BigUint::from(i)));
            seen.insert((i, v.to_string()));
        }
        let distinct_values: HashSet<&String> = seen.iter().map(|(_, v)| v).collect();
        let distinct_indices: HashSet<u64> = seen.iter().map(|(i, _)| *i).collect();
        prop_assert_eq!(distinct_values.len(), distinct_indices.len());
    }

    #[test]
    fn recursive_sizes_grow_with_depth(depth in 0usize..4, lo in -2i64..=0, hi in 0i64..=2) {
        let p = program(LIST);
        let ty = parse_type("List").unwrap();
        let at = |d| DomainParams { int_min: lo, int_max: hi, max_depth: d, ..DomainParams::default() };
        let small = build(&ty, at(depth), &p).unwrap();
        let big = build(&ty, at(depth + 1), &p).unwrap();
        prop_assert!(small.size() <= big.size());
        for v in values(&small) {
            prop_assert!(big.index_of(&v, &Heap::new()).is_some());
        }
    }

    #[test]
    fn rotations_disagree(rot_a in 0usize..3, rot_b in 0usize..3) {
        prop_assume!(rot_a != rot_b);
        let d = domain("", "function(int)->(int)", ints(-1, 1));
        let Value::Lambda(a) = d.at(&BigUint::from(rot_a), &mut Heap::new()) else { unreachable!() };
        let Value::Lambda(b) = d.at(&BigUint::from(rot_b), &mut Heap::new()) else { unreachable!() };
        let differs = (-1..=1).any(|x| a.apply(&[Value::int(x)]) != b.apply(&[Value::int(x)]));
        prop_assert!(differs);
    }
}
