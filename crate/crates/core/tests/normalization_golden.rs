mod common;

#[test]
fn golden_set_has_thirty_cases() {
    let g = common::golden_answers();
    assert_eq!(g.normalize.len() + g.exact_match.len(), 30);
}

#[test]
fn golden_set_passes_byte_exactly() {
    let failures = common::golden_answer_failures();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
