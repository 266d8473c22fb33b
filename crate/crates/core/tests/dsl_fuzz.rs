//! Round-trip fuzzing of the canonical printer against the parser.

use std::collections::BTreeMap;

use proptest::prelude::*;
use shapekit::shapescript::*;
use shapekit::synthetic::ground_truth_library;
use shapekit::CoordFrame;

const KEYWORDS: [&str; 12] = [
    "fn", "let", "for", "in", "if", "else", "return", "true", "false", "and", "or", "not",
];

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}".prop_filter("keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

/// Floats that already sit on the printer's six-digit grid.
fn printed_float(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_map(printer::quantize)
}

fn text() -> impl Strategy<Value = String> {
    "[ -~\t\n]{0,10}"
}

fn frame() -> impl Strategy<Value = CoordFrame> {
    (
        prop::array::uniform3(printed_float(0.001, 3.0)),
        prop::array::uniform3(printed_float(-2.0, 2.0)),
    )
        .prop_map(|(d, c)| CoordFrame::from_whd_xyz([d[0], d[1], d[2], c[0], c[1], c[2]]))
}

fn program_stmt() -> impl Strategy<Value = ProgramStmt> {
    let call = |name: &'static str, args: BoxedStrategy<Vec<Literal>>| {
        (frame(), args).prop_map(move |(frame, args)| ProgramStmt::Call {
            fn_name: name.into(),
            frame,
            args,
        })
    };
    prop_oneof![
        call(
            "leg_base",
            (printed_float(-1.0, 1.0), any::<bool>())
                .prop_map(|(f, b)| vec![Literal::Float(f), Literal::Bool(b)])
                .boxed()
        ),
        call(
            "ladder_back",
            (-5i64..12, printed_float(0.0, 1.0))
                .prop_map(|(n, r)| vec![Literal::Int(n), Literal::Float(r)])
                .boxed()
        ),
        call(
            "seat",
            prop_oneof![Just("solid"), Just("split")]
                .prop_map(|s| vec![Literal::Str(s.into())])
                .boxed()
        ),
        (frame(), text()).prop_map(|(frame, label)| ProgramStmt::MakePart { frame, label }),
    ]
}

fn program() -> impl Strategy<Value = ShapeProgram> {
    prop::collection::vec(program_stmt(), 0..8).prop_map(ShapeProgram::new)
}

fn e(kind: ExprKind) -> Expr {
    Expr::synthetic(kind)
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop::sample::select(vec![
        BinOp::Or,
        BinOp::And,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
    ])
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-1000i64..1000).prop_map(|v| e(ExprKind::Int(v))),
        printed_float(-100.0, 100.0).prop_map(|v| e(ExprKind::Float(v))),
        any::<bool>().prop_map(|b| e(ExprKind::Bool(b))),
        text().prop_map(|s| e(ExprKind::Str(s))),
        ident().prop_map(|s| e(ExprKind::Var(s))),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        // field and index bases are kept away from numeric literals, which
        // would fuse with the following `.`
        let base = prop_oneof![
            ident().prop_map(|s| e(ExprKind::Var(s))),
            (ident(), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(n, a)| e(ExprKind::Call(n, a))),
        ];
        prop_oneof![
            (base.clone(), ident()).prop_map(|(b, f)| e(ExprKind::Field(Box::new(b), f))),
            (base, inner.clone()).prop_map(|(b, i)| e(ExprKind::Index(Box::new(b), Box::new(i)))),
            prop::collection::vec(inner.clone(), 0..4).prop_map(|v| e(ExprKind::List(v))),
            (prop_oneof![Just(UnOp::Neg), Just(UnOp::Not)], inner.clone())
                .prop_map(|(op, x)| e(ExprKind::Unary(op, Box::new(x)))),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| e(ExprKind::Binary(
                op,
                Box::new(l),
                Box::new(r)
            ))),
            (ident(), prop::collection::vec(inner, 0..4))
                .prop_map(|(n, a)| e(ExprKind::Call(n, a))),
        ]
    })
}

fn block() -> impl Strategy<Value = Block> {
    let simple = prop_oneof![
        (ident(), expr()).prop_map(|(name, value)| Stmt::Let {
            name,
            value,
            span: Span::default()
        }),
        (ident(), expr()).prop_map(|(name, value)| Stmt::Assign {
            name,
            value,
            span: Span::default()
        }),
        expr().prop_map(|value| Stmt::Return {
            value,
            span: Span::default()
        }),
        expr().prop_map(|expr| Stmt::Expr {
            expr,
            span: Span::default()
        }),
    ];
    let stmt = simple.prop_recursive(3, 24, 4, |inner| {
        let body = prop::collection::vec(inner, 0..3);
        prop_oneof![
            (ident(), expr(), expr(), body.clone()).prop_map(|(var, start, end, body)| Stmt::For {
                var,
                start,
                end,
                body,
                span: Span::default()
            }),
            (expr(), body.clone(), prop::option::of(body)).prop_map(
                |(cond, then_block, else_block)| Stmt::If {
                    cond,
                    then_block,
                    else_block,
                    span: Span::default()
                }
            ),
        ]
    });
    prop::collection::vec(stmt, 0..5)
}

fn param_type() -> impl Strategy<Value = ParamType> {
    prop_oneof![
        Just(ParamType::Float),
        Just(ParamType::Int),
        Just(ParamType::Bool),
        prop::collection::vec(ident(), 1..4).prop_map(ParamType::Enum),
    ]
}

fn doc_text() -> impl Strategy<Value = String> {
    "[a-z][a-z,.]{0,6}( [a-z,.]{1,6}){0,3}"
}

fn function() -> impl Strategy<Value = LibraryFunction> {
    (
        ident(),
        prop::collection::btree_map(ident(), param_type(), 0..4),
        doc_text(),
        doc_text(),
        prop::collection::vec(2i64..9, 1..4),
        prop::option::of(block()),
    )
        .prop_filter("frame name clash", |(_, params, ..)| {
            !params.contains_key("cf")
        })
        .prop_map(
            |(name, params, description, parts_spec, valid_options, body)| {
                let parameters_spec: BTreeMap<String, String> = params
                    .keys()
                    .map(|k| (k.clone(), format!("the {k}")))
                    .collect();
                LibraryFunction {
                    name,
                    frame_param: Some("cf".into()),
                    params: params
                        .into_iter()
                        .map(|(name, ty)| Param { name, ty })
                        .collect(),
                    return_type: PART_LIST_TYPE.into(),
                    doc: DocString {
                        description,
                        parts_spec,
                        valid_options,
                        parameters_spec,
                    },
                    body,
                    span: Span::default(),
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn programs_round_trip(p in program()) {
        let lib = ground_truth_library();
        let text = print_program(&p);
        let back = parse_program(&text, &lib).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(print_program(&back), text);
    }

    #[test]
    fn function_syntax_round_trips(f in function()) {
        let text = print_function(&f);
        let back = parse_functions(&text).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0], &f);
        prop_assert_eq!(print_function(&back[0]), text);
    }

    #[test]
    fn printing_is_a_function_of_the_tree(p in program()) {
        let copy = p.clone();
        prop_assert_eq!(print_program(&p).into_bytes(), print_program(&copy).into_bytes());
    }

    #[test]
    fn dof_is_additive(a in program(), b in program()) {
        let joined = count_dof_tokens(&a.concat(&b)).value();
        prop_assert_eq!(joined, count_dof_tokens(&a).value() + count_dof_tokens(&b).value());
    }
}

#[test]
fn valid_options_below_two_never_parse() {
    for bad in ["[1]", "[2, 1]", "[0, 3]"] {
        let src = format!(
            "/// @description d\n/// @parts p\n/// @valid_options {bad}\nfn f(cf: Frame) -> PartList {{\n    return [];\n}}\n"
        );
        assert!(
            matches!(
                parse_library(&src),
                Err(ScriptError::ValidOptionsTooSmall { .. })
            ),
            "{bad}"
        );
    }
}
