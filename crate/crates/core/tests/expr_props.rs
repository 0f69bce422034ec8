use proptest::prelude::*;
use wso_core::expr::{parse, BinaryOp, Expr, Node, UnaryOp};

fn leaf(arity: usize) -> impl Strategy<Value = Node> {
    prop_oneof![
        (0u32..1000).prop_map(|v| Node::Const(v as f64 / 8.0)),
        (0..arity).prop_map(Node::Var),
    ]
}

fn tree(arity: usize) -> impl Strategy<Value = Node> {
    leaf(arity).prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (
                prop_oneof![
                    Just(UnaryOp::Neg),
                    Just(UnaryOp::Abs),
                    Just(UnaryOp::Exp),
                    Just(UnaryOp::Ln),
                    Just(UnaryOp::Sqrt)
                ],
                inner.clone()
            )
                .prop_map(|(op, a)| Node::Unary(op, Box::new(a))),
            (
                prop_oneof![
                    Just(BinaryOp::Add),
                    Just(BinaryOp::Sub),
                    Just(BinaryOp::Mul),
                    Just(BinaryOp::Div)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
            (inner, -4i32..5).prop_map(|(a, e)| Node::Pow(Box::new(a), e as f64 / 2.0)),
        ]
    })
}

fn same_value(
    a: Result<f64, wso_core::expr::EvalError>,
    b: Result<f64, wso_core::expr::EvalError>,
) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(node in tree(3)) {
        let e = Expr::from_node(node, 3).unwrap();
        let text = e.to_string();
        let back = parse(&text, 3).unwrap();
        prop_assert_eq!(back.root(), e.root(), "printed as {}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn printed_form_evaluates_identically(node in tree(2), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let e = Expr::from_node(node, 2).unwrap();
        let back = parse(&e.to_string(), 2).unwrap();
        prop_assert!(same_value(e.eval(&[x, y]), back.eval(&[x, y])));
    }

    #[test]
    fn left_associative_chains(a in 1u32..50, b in 1u32..50, c in 1u32..50) {
        let (a, b, c) = (a as f64, b as f64, c as f64);
        let e = parse(&format!("{a} - {b} - {c}"), 0).unwrap();
        prop_assert_eq!(e.eval(&[]).unwrap(), (a - b) - c);
        let e = parse(&format!("{a} / {b} / {c}"), 0).unwrap();
        prop_assert_eq!(e.eval(&[]).unwrap(), (a / b) / c);
        let e = parse(&format!("{a} + {b} * {c}"), 0).unwrap();
        prop_assert_eq!(e.eval(&[]).unwrap(), a + b * c);
    }

    #[test]
    fn parser_never_panics(s in "[-+*/^() .0-9a-z]{0,40}") {
        let _ = parse(&s, 2);
    }
}
