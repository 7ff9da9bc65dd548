use epimc_core::logic::{parse_formula, print_formula, Formula, Implication, Literal};
use proptest::prelude::*;

const PROPS: &[&str] = &["p1", "p2", "p3", "p4", "p5", "p_bad", "q.x", "r_7"];
const AGENTS: &[&str] = &["h", "a", "env"];

fn formula(depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop::sample::select(PROPS).prop_map(Formula::prop);
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (prop::sample::select(AGENTS), inner.clone()).prop_map(|(i, f)| Formula::knows(i, f)),
            inner.prop_map(Formula::bknows),
        ]
    })
}

fn literal() -> impl Strategy<Value = Literal> {
    (prop::sample::select(PROPS), any::<bool>()).prop_map(|(p, n)| Literal {
        prop: p.to_string(),
        negated: n,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_then_parse_is_identity(f in formula(6)) {
        let text = print_formula(&f);
        prop_assert_eq!(parse_formula(&text).unwrap(), f);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,40}") {
        let _ = parse_formula(&text);
    }

    #[test]
    fn parser_never_panics_on_grammar_tokens(
        tokens in prop::collection::vec(
            prop::sample::select(&["p", "q", "!", "&", "|", "->", "(", ")", "K[h]", "K[", "]", "Khat", " "][..]),
            0..20,
        )
    ) {
        let text: String = tokens.concat();
        if let Err(e) = parse_formula(&text) {
            prop_assert!(e.column >= 1 && e.column <= text.chars().count() + 1);
        }
    }

    #[test]
    fn implication_round_trip(
        ants in prop::collection::vec(literal(), 1..4),
        conclusion in formula(3),
    ) {
        let d = Implication::new(ants, conclusion);
        prop_assert_eq!(Implication::parse(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn or_and_implies_are_sugar(a in formula(2), b in formula(2)) {
        let or = parse_formula(&format!("({a}) | ({b})")).unwrap();
        prop_assert_eq!(or, Formula::not(Formula::and(Formula::not(a.clone()), Formula::not(b.clone()))));
        let imp = parse_formula(&format!("({a}) -> ({b})")).unwrap();
        prop_assert_eq!(imp, Formula::not(Formula::and(a, Formula::not(b))));
    }
}

#[test]
fn subformula_examples() {
    let show = |f: &str| -> Vec<String> {
        epimc_core::subformulas(&parse_formula(f).unwrap())
            .iter()
            .map(print_formula)
            .collect()
    };
    assert_eq!(show("p"), ["p"]);
    assert_eq!(show("p & !p"), ["p", "!p", "p & !p"]);
    assert_eq!(show("K[h](p & q)"), ["p", "q", "p & q", "K[h](p & q)"]);
}
