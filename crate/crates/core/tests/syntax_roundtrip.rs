mod common;

use common::{corpus, corpus_names};
use proptest::prelude::*;
use speccheck::mutate::{apply, enumerate_sites};
use speccheck::syntax::{
    compile, erase_spans, parse_expr, print_expr, print_source, walk_exprs, Decl, Program,
};

fn erased(p: &Program) -> Vec<Decl> {
    let mut d = p.declarations().to_vec();
    erase_spans(&mut d);
    d
}

fn reprinted(p: &Program) -> Program {
    let text = print_source(p.declarations());
    compile(&text, p.path()).unwrap_or_else(|d| panic!("{}\n{text}", d.rendered))
}

#[test]
fn corpus_is_not_empty() {
    assert!(corpus_names().len() >= 15);
}

#[test]
fn printing_round_trips() {
    for name in corpus_names() {
        let p = corpus(&name);
        let q = reprinted(&p);
        assert_eq!(erased(&p), erased(&q), "{name}");
        // printing is a fixed point after one pass
        assert_eq!(
            print_source(q.declarations()),
            print_source(p.declarations()),
            "{name}"
        );
    }
}

#[test]
fn spans_start_at_first_token() {
    for name in corpus_names() {
        let p = corpus(&name);
        let text = &p.source.text;
        walk_exprs(p.declarations(), &mut |e| {
            let slice = &text[e.span.start as usize..e.span.end as usize];
            let again = parse_expr(slice)
                .unwrap_or_else(|err| panic!("{name}: `{slice}`: {}", err.message));
            assert_eq!(print_expr(&again), print_expr(e), "{name}: `{slice}`");
            let line_start = p.source.line_index[e.span.line as usize - 1];
            assert_eq!(
                line_start + e.span.column as usize - 1,
                e.span.start as usize,
                "{name}"
            );
        });
    }
}

#[test]
fn resolution_ignores_declaration_order() {
    for name in corpus_names() {
        let p = corpus(&name);
        let mut reversed = p.declarations().to_vec();
        reversed.reverse();
        let q = compile(&print_source(&reversed), &name)
            .unwrap_or_else(|d| panic!("{name}: {}", d.rendered));
        let mut a: Vec<String> = p
            .declarations()
            .iter()
            .map(|d| d.name().to_string())
            .collect();
        let mut b: Vec<String> = q
            .declarations()
            .iter()
            .map(|d| d.name().to_string())
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b, "{name}");
        for f in p.functions() {
            assert_eq!(
                p.overloads(&f.name, f.params.len()).count(),
                q.overloads(&f.name, f.params.len()).count(),
                "{name}"
            );
        }
    }
}

#[test]
fn compilation_is_deterministic() {
    for name in corpus_names() {
        assert_eq!(erased(&corpus(&name)), erased(&corpus(&name)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutants_round_trip(file in 0usize..64, site in 0usize..1024) {
        let names = corpus_names();
        let p = corpus(&names[file % names.len()]);
        let sites = enumerate_sites(&p);
        prop_assume!(!sites.is_empty());
        let m = apply(&p, &sites[site % sites.len()]).unwrap();
        prop_assert_eq!(erased(&m), erased(&reprinted(&m)));
    }
}
