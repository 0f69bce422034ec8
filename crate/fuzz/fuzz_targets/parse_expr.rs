#![no_main]

use libfuzzer_sys::fuzz_target;
use wso_core::expr::parse;

// first byte picks the arity, the rest is the source text
fuzz_target!(|data: &[u8]| {
    let Some((&head, rest)) = data.split_first() else {
        return;
    };
    let arity = usize::from(head % 5);
    let Ok(src) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(expr) = parse(src, arity) {
        // printing must round-trip
        let again = parse(&expr.to_string(), arity).expect("printed form reparses");
        assert_eq!(again.to_string(), expr.to_string());
        let point = vec![0.5; arity];
        let _ = expr.eval(&point);
    }
});
