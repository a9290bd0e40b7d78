mod common;

use rdrqa::pattern::{find_match, parse_rule};

#[test]
fn matcher_agrees_with_enumeration() {
    common::check_matcher(10_000, 0x3a7c).unwrap();
}

#[test]
fn greedy_plus_takes_the_longest_run() {
    let doc = common::letters("xaaab").unwrap();
    let rule = parse_rule("({A}+ {B}):m --> :m.Hit={}").unwrap();
    let m = find_match(&doc, &rule.condition).unwrap();
    assert_eq!((m.span.start, m.span.end), (1, 5));
}

#[test]
fn backtracks_out_of_a_greedy_star() {
    let doc = common::letters("aab").unwrap();
    let rule = parse_rule("({A}* {A} {B}):m --> :m.Hit={}").unwrap();
    let m = find_match(&doc, &rule.condition).unwrap();
    assert_eq!((m.span.start, m.span.end), (0, 3));
}
