//! Text format for ET0L grammars.
//!
//! ```text
//! # comment
//! terminals: a b
//! nonterminals: S A B
//! start: S
//! table alpha {
//!   S -> S S | S | A B
//! }
//! table beta {
//!   A -> a A
//!   B -> {
//!     state q0
//!     state q1
//!     accept q1
//!     edge q0 b q1
//!     edge q1 B q1
//!   }
//! }
//! table gamma {
//!   A -> eps
//!   B -> empty
//! }
//! control: alpha beta* gamma
//! ```
//!
//! Productions are regexes over symbol names (`|`, `*`, parentheses, `eps`,
//! `empty`) or explicit automaton blocks (first declared state is initial).
//! Symbol and table names are whitespace-free tokens without the reserved
//! characters `( ) | * { }`.

use std::collections::BTreeMap;

use super::{Et0lError, Et0lGrammar, SymbolSpace, Table};
use crate::automaton::{regex_to_nfa, Nfa, NfaBuilder, Sym};

fn perr(line: usize, msg: impl Into<String>) -> Et0lError {
    Et0lError::Parse { line, msg: msg.into() }
}

pub fn parse_grammar(text: &str) -> Result<Et0lGrammar, Et0lError> {
    let mut symbols = SymbolSpace::new();
    let mut terminals_seen = false;
    let mut nonterminals_seen = false;
    let mut start: Option<String> = None;
    let mut tables: Vec<Table> = Vec::new();
    let mut control: Option<(String, usize)> = None;
    let mut current_table: Option<Table> = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, raw)) = lines.next() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("terminals:") {
            for tok in rest.split_whitespace() {
                check_symbol_name(line_no, tok)?;
                symbols.add_terminal(tok);
            }
            terminals_seen = true;
        } else if let Some(rest) = line.strip_prefix("nonterminals:") {
            for tok in rest.split_whitespace() {
                check_symbol_name(line_no, tok)?;
                symbols.add_nonterminal(tok);
            }
            nonterminals_seen = true;
        } else if let Some(rest) = line.strip_prefix("start:") {
            start = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("control:") {
            control = Some((rest.trim().to_string(), line_no));
        } else if let Some(rest) = line.strip_prefix("table ") {
            if current_table.is_some() {
                return Err(perr(line_no, "nested table block"));
            }
            let rest = rest.trim();
            let name = rest
                .strip_suffix('{')
                .ok_or_else(|| perr(line_no, "expected `table NAME {`"))?
                .trim();
            if name.is_empty() {
                return Err(perr(line_no, "table needs a name"));
            }
            current_table = Some(Table::new(name));
        } else if line == "}" {
            match current_table.take() {
                Some(t) => tables.push(t),
                None => return Err(perr(line_no, "unmatched `}`")),
            }
        } else if let Some((lhs, rhs)) = line.split_once("->") {
            let table = current_table
                .as_mut()
                .ok_or_else(|| perr(line_no, "production outside a table block"))?;
            let lhs = lhs.trim();
            let sym = symbols
                .id_of(lhs)
                .ok_or_else(|| perr(line_no, format!("unknown symbol `{lhs}`")))?;
            if symbols.is_terminal(sym) {
                return Err(perr(line_no, format!("`{lhs}` is a terminal; terminals are fixed")));
            }
            let rhs = rhs.trim();
            let nfa = if rhs == "{" {
                parse_automaton_block(&mut lines, &symbols, line_no)?
            } else {
                regex_to_nfa(rhs, &|n| symbols.id_of(n))
                    .map_err(|e| perr(line_no, e.to_string()))?
            };
            table.set(sym, nfa);
        } else {
            return Err(perr(line_no, format!("cannot parse `{line}`")));
        }
    }
    if current_table.is_some() {
        return Err(perr(0, "unterminated table block"));
    }
    if !terminals_seen || !nonterminals_seen {
        return Err(perr(0, "missing terminals: or nonterminals: header"));
    }
    let start = start.ok_or_else(|| perr(0, "missing start: header"))?;
    let start_id = symbols
        .id_of(&start)
        .ok_or_else(|| perr(0, format!("unknown start symbol `{start}`")))?;
    let (control_expr, control_line) = control.ok_or_else(|| perr(0, "missing control: line"))?;
    let table_names: Vec<String> = tables.iter().map(|t| t.name.clone()).collect();
    let control_nfa = regex_to_nfa(&control_expr, &|n| {
        table_names.iter().position(|t| t == n).map(|i| i as Sym)
    })
    .map_err(|e| perr(control_line, e.to_string()))?;
    Ok(Et0lGrammar { symbols, tables, control: control_nfa, control_expr, start: start_id })
}

fn check_symbol_name(line: usize, name: &str) -> Result<(), Et0lError> {
    let reserved = ["eps", "empty", "->"];
    if reserved.contains(&name) || name.chars().any(|c| "()|*{}".contains(c)) {
        return Err(perr(line, format!("symbol name `{name}` is reserved or contains reserved characters")));
    }
    Ok(())
}

fn parse_automaton_block<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    symbols: &SymbolSpace,
    open_line: usize,
) -> Result<Nfa, Et0lError> {
    let mut b = NfaBuilder::new();
    let mut names: BTreeMap<String, u32> = BTreeMap::new();
    let mut initial: Option<u32> = None;
    let mut pending_accept: Vec<(usize, String)> = Vec::new();
    let mut pending_edges: Vec<(usize, String, String, String)> = Vec::new();
    for (idx, raw) in lines.by_ref() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line == "}" {
            let initial =
                initial.ok_or_else(|| perr(open_line, "automaton block declares no states"))?;
            for (line_no, name) in pending_accept {
                let &q = names
                    .get(&name)
                    .ok_or_else(|| perr(line_no, format!("unknown state `{name}`")))?;
                b.accept(q);
            }
            for (line_no, from, sym, to) in pending_edges {
                let &q = names
                    .get(&from)
                    .ok_or_else(|| perr(line_no, format!("unknown state `{from}`")))?;
                let &r = names
                    .get(&to)
                    .ok_or_else(|| perr(line_no, format!("unknown state `{to}`")))?;
                let s = symbols
                    .id_of(&sym)
                    .ok_or_else(|| perr(line_no, format!("unknown symbol `{sym}`")))?;
                b.edge(q, s, r);
            }
            return Ok(b.build(initial));
        }
        let mut parts = line.split_whitespace();
        match parts.next().unwrap() {
            "state" => {
                let name = parts.next().ok_or_else(|| perr(line_no, "state needs a name"))?;
                if names.contains_key(name) {
                    return Err(perr(line_no, format!("duplicate state `{name}`")));
                }
                let q = b.state();
                names.insert(name.to_string(), q);
                if initial.is_none() {
                    initial = Some(q);
                }
            }
            "accept" => {
                let name = parts.next().ok_or_else(|| perr(line_no, "accept needs a state"))?;
                pending_accept.push((line_no, name.to_string()));
            }
            "edge" => {
                let from = parts.next().ok_or_else(|| perr(line_no, "edge needs: from symbol to"))?;
                let sym = parts.next().ok_or_else(|| perr(line_no, "edge needs: from symbol to"))?;
                let to = parts.next().ok_or_else(|| perr(line_no, "edge needs: from symbol to"))?;
                pending_edges.push((line_no, from.to_string(), sym.to_string(), to.to_string()));
            }
            other => return Err(perr(line_no, format!("unknown block directive `{other}`"))),
        }
    }
    Err(perr(open_line, "unterminated automaton block"))
}

/// Renders a grammar in the text format. Finite table languages are written
/// as alternations; infinite ones as automaton blocks.
pub fn render_grammar(grammar: &Et0lGrammar) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let terms: Vec<&str> =
        grammar.symbols.terminals().map(|s| grammar.symbols.name(s)).collect();
    let nonterms: Vec<&str> =
        grammar.symbols.nonterminals().map(|s| grammar.symbols.name(s)).collect();
    let _ = writeln!(out, "terminals: {}", terms.join(" "));
    let _ = writeln!(out, "nonterminals: {}", nonterms.join(" "));
    let _ = writeln!(out, "start: {}", grammar.symbols.name(grammar.start));
    for table in &grammar.tables {
        let _ = writeln!(out, "table {} {{", table.name);
        for sym in table.mapped_symbols() {
            let nfa = table.language(sym);
            let name = grammar.symbols.name(sym);
            match finite_words(&nfa) {
                Some(words) => {
                    let alts: Vec<String> = if words.is_empty() {
                        vec!["empty".to_string()]
                    } else {
                        words
                            .iter()
                            .map(|w| {
                                if w.is_empty() {
                                    "eps".to_string()
                                } else {
                                    w.iter()
                                        .map(|&s| grammar.symbols.name(s))
                                        .collect::<Vec<_>>()
                                        .join(" ")
                                }
                            })
                            .collect()
                    };
                    let _ = writeln!(out, "  {name} -> {}", alts.join(" | "));
                }
                None => {
                    // the block convention makes the first declared state
                    // initial, so renumber with the initial state first
                    let n = nfa.n_states() as u32;
                    let rank = |q: u32| -> u32 {
                        if q == nfa.initial() {
                            0
                        } else if q < nfa.initial() {
                            q + 1
                        } else {
                            q
                        }
                    };
                    let _ = writeln!(out, "  {name} -> {{");
                    for q in 0..n {
                        let _ = writeln!(out, "    state q{q}");
                    }
                    for q in 0..n {
                        if nfa.is_accepting(q) {
                            let _ = writeln!(out, "    accept q{}", rank(q));
                        }
                    }
                    let mut lines = Vec::new();
                    for q in 0..n {
                        for &(s, t) in nfa.edges_from(q) {
                            lines.push(format!(
                                "    edge q{} {} q{}",
                                rank(q),
                                grammar.symbols.name(s),
                                rank(t)
                            ));
                        }
                    }
                    lines.sort();
                    for line in lines {
                        let _ = writeln!(out, "{line}");
                    }
                    let _ = writeln!(out, "  }}");
                }
            }
        }
        let _ = writeln!(out, "}}");
    }
    let _ = writeln!(out, "control: {}", grammar.control_expr);
    out
}

/// All words of an acyclic (hence finite) language, or `None` if the
/// reachable part of the automaton has a cycle.
fn finite_words(nfa: &Nfa) -> Option<Vec<Vec<Sym>>> {
    let n = nfa.n_states();
    // cycle check on reachable states
    let mut color = vec![0u8; n]; // 0 unvisited, 1 active, 2 done
    fn dfs(q: u32, nfa: &Nfa, color: &mut [u8]) -> bool {
        color[q as usize] = 1;
        for &(_, t) in nfa.edges_from(q) {
            match color[t as usize] {
                0 => {
                    if !dfs(t, nfa, color) {
                        return false;
                    }
                }
                1 => return false,
                _ => {}
            }
        }
        color[q as usize] = 2;
        true
    }
    if !dfs(nfa.initial(), nfa, &mut color) {
        return None;
    }
    let words = nfa.enumerate_by_length(n, 1 << 16).ok()?;
    Some(words.into_iter().collect())
}

/// Renders a grammar whose initial-state ids may be nonzero by normalizing
/// through parse/render round-trip helpers in tests.
#[cfg(test)]
mod tests {
    use super::*;
    use crate::et0l::test_grammars;
    use crate::et0l::{generate, LimitingGrammar};

    const ASTAR: &str = "\
# a* as a limiting grammar
terminals: a
nonterminals: S A B
start: S
table alpha {
  S -> A
}
table beta {
  A -> a A | B
  B -> B
}
table gamma {
  S -> S
  A -> eps
  B -> eps
}
control: alpha beta* gamma
";

    #[test]
    fn parse_and_generate() {
        let g = parse_grammar(ASTAR).unwrap();
        let lim = LimitingGrammar::new(g).unwrap();
        let run = lim.generate_limiting(4).unwrap();
        assert_eq!(run.counts_by_length(4), vec![1, 1, 1, 1, 1]);
    }

    #[test]
    fn automaton_block_parses() {
        let text = "\
terminals: a
nonterminals: S
start: S
table alpha {
  S -> {
    state q0
    state q1
    accept q1
    edge q0 a q1
    edge q1 a q1
  }
}
table beta {
  S -> S
}
table gamma {
  S -> S
}
control: alpha beta* gamma
";
        let g = parse_grammar(text).unwrap();
        let words = generate(&g, 3, 2).unwrap();
        let rendered: Vec<String> = words.iter().map(|w| g.symbols.render_word(w)).collect();
        assert_eq!(rendered, vec!["a", "aa", "aaa"]);
    }

    #[test]
    fn round_trip_through_text() {
        for g in [test_grammars::anbn(), test_grammars::astar(), test_grammars::partitions()] {
            let text = render_grammar(&g);
            let g2 = parse_grammar(&text).unwrap();
            let w1 = generate(&g, 5, 6).unwrap();
            let w2 = generate(&g2, 5, 6).unwrap();
            assert_eq!(w1, w2, "round trip changed the language:\n{text}");
        }
    }

    #[test]
    fn round_trip_of_a_transduced_grammar() {
        // transformed grammars have table automata with nonzero initial
        // states; rendering must still put the initial state first
        use crate::transducer::{decoding_automaton, transform_grammar, PrefixCode};
        let lim = LimitingGrammar::new(test_grammars::astar()).unwrap();
        let code = PrefixCode::new(
            vec!["a".into()],
            vec!["z".into()],
            vec![(vec![0, 0], vec![0])],
        )
        .unwrap();
        let gsm = decoding_automaton(&code); // aa -> z, two states
        let out = transform_grammar(&lim, &gsm, 6).unwrap();
        let text = render_grammar(out.grammar());
        let reparsed = parse_grammar(&text).unwrap();
        let lim2 = LimitingGrammar::new(reparsed).unwrap();
        let c1 = crate::et0l::generate_limiting_counts(&out, 6).unwrap();
        let c2 = crate::et0l::generate_limiting_counts(&lim2, 6).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1, vec![1, 1, 1, 1, 1, 1, 1]); // z^k for every k
    }

    #[test]
    fn parse_errors_have_lines() {
        let text = "terminals: a\nnonterminals: S\nstart: S\ntable t {\n  S -> ??? (\n}\ncontrol: t\n";
        match parse_grammar(text) {
            Err(Et0lError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_grammar("terminals: a\n").is_err());
    }
}
