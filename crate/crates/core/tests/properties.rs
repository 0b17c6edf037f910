use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqlsynth_core::eval::{denotation_match, normalize_answer, normalize_atom};
use sqlsynth_core::exec::{execute, render_denotation, Denotation};
use sqlsynth_core::linearize::{flatten_table, truncate_rows};
use sqlsynth_core::sql::*;
use sqlsynth_core::table::{infer_column_types, CellValue, Table};
use sqlsynth_core::testkit::{random_query, random_query_raw, random_table};

fn table_and_rng(seed: u64) -> (Table, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_table(&mut rng, "p", 12, 6);
    (t, rng)
}

/// Splits a flattened table back into headers and rows.
fn delinearize(flat: &str) -> (Vec<String>, Vec<Vec<String>>) {
    // trimming may have eaten the space after a final separator
    let padded = if flat.ends_with(" |") { format!("{flat} ") } else { flat.to_string() };
    let body = padded.strip_prefix("[HEAD] : ").unwrap();
    let mut parts = body.split(" [ROW] ");
    let cells = |s: &str| s.split(" | ").map(String::from).collect::<Vec<_>>();
    let headers = cells(parts.next().unwrap());
    let rows = parts
        .enumerate()
        .map(|(i, p)| {
            let rest = p.strip_prefix(&format!("{} :", i + 1)).unwrap();
            let rest = rest.strip_prefix(' ').unwrap_or(rest);
            cells(rest)
        })
        .collect();
    (headers, rows)
}

fn cell_text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z ]{0,8}",
        "-?[0-9]{1,4}(\\.[0-9]{1,2})?",
        Just(String::new()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tokenizer_is_total(s in "\\PC{0,40}") {
        // never panics; errors carry an offset inside the input
        if let Err(SqlError::Lex { offset, .. }) = tokenize(&s, None) {
            prop_assert!(offset <= s.chars().count());
        }
        let _ = parse(&s, None);
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let (t, mut rng) = table_and_rng(seed);
        let q = random_query_raw(&mut rng, &t);
        let printed = print_canonical(&q);
        if let Ok(parsed) = parse(&printed, Some(t.schema())) {
            prop_assert_eq!(&parsed, &q, "{}", printed);
            prop_assert_eq!(print_canonical(&parsed), printed);
        }
        let q = random_query(&mut rng, &t);
        let p = print_canonical(&q);
        prop_assert_eq!(parse(&p, Some(t.schema())).unwrap(), q);
        // without a schema the same text parses to the same tree
        prop_assert_eq!(print_canonical(&parse(&p, None).unwrap()), p);
    }

    #[test]
    fn adding_a_conjunct_adds_elements(seed in any::<u64>()) {
        let (t, mut rng) = table_and_rng(seed);
        let q = random_query(&mut rng, &t);
        let before = element_stream(&q).len();
        let col = t.headers()[0].clone();
        let extra = Condition::Compare { column: col, op: CmpOp::Eq, rhs: CompareRhs::Literal(Literal::Text("z".into())) };
        let more = q.clone().and_where(extra);
        prop_assert!(element_stream(&more).len() > before);
    }

    #[test]
    fn executor_invariants(seed in any::<u64>()) {
        let (t, mut rng) = table_and_rng(seed);
        let q = random_query(&mut rng, &t);
        let a = execute(&q, &t);
        prop_assert_eq!(&a, &execute(&q, &t));
        if let (Ok(Denotation::ValueList(v)), Some(limit)) = (&a, q.limit) {
            let per_row = q.projection.len() as u64;
            prop_assert!(v.len() as u64 <= limit * per_row);
        }
    }

    #[test]
    fn filtering_shrinks_selections(seed in any::<u64>()) {
        let (t, mut rng) = table_and_rng(seed);
        let j = 0;
        let base = SqlQuery::select_column(t.headers()[j].clone());
        let q = random_query(&mut rng, &t);
        let Some(w) = q.where_clause else { return Ok(()) };
        let all = execute(&base, &t).unwrap();
        if let Ok(Denotation::ValueList(some)) = execute(&base.clone().and_where(w), &t) {
            let Denotation::ValueList(all) = all else { unreachable!() };
            prop_assert!(some.len() <= all.len());
            // a filtered selection is a subsequence of the unfiltered one
            let mut it = all.iter();
            for v in &some {
                prop_assert!(it.any(|x| x == v));
            }
        }
    }

    #[test]
    fn superlative_duality(seed in any::<u64>()) {
        let (t, _) = table_and_rng(seed);
        let Some(j) = (0..t.width()).find(|&j| t.column_types()[j] == sqlsynth_core::table::ColumnType::NumberCol) else {
            return Ok(());
        };
        let col = quote_identifier(&t.headers()[j]);
        let top = parse(&format!("SELECT {col} ORDER BY {col} DESC LIMIT 1"), Some(t.schema())).unwrap();
        let max = parse(&format!("SELECT MAX({col})"), Some(t.schema())).unwrap();
        let top = render_denotation(&execute(&top, &t).unwrap(), ", ");
        let max = render_denotation(&execute(&max, &t).unwrap(), ", ");
        // empty cells sort first, so DESC puts the maximum first
        prop_assert_eq!(top, max);
    }

    #[test]
    fn flattening_is_injective_on_cells(seed in any::<u64>(), row in 0usize..12, col in 0usize..6, new in "[a-z]{1,5}") {
        let (t, _) = table_and_rng(seed);
        if t.is_empty() { return Ok(()); }
        let (r, c) = (row % t.len(), col % t.width());
        let mut rows = t.display_rows();
        if rows[r][c] == new { return Ok(()); }
        rows[r][c] = new;
        let u = Table::from_raw("p", t.headers(), &rows).unwrap();
        prop_assert_ne!(flatten_table(&t).unwrap(), flatten_table(&u).unwrap());
    }

    #[test]
    fn delinearize_recovers_table(headers in proptest::collection::vec("[A-Za-z][a-z]{0,6}", 1..5), cells in proptest::collection::vec(cell_text(), 0..20)) {
        let w = headers.len();
        let rows: Vec<Vec<String>> = cells.chunks(w).filter(|c| c.len() == w).map(|c| c.to_vec()).collect();
        let Ok(t) = Table::from_raw("d", &headers, &rows) else { return Ok(()) };
        let flat = flatten_table(&t).unwrap();
        let (h, r) = delinearize(&flat);
        prop_assert_eq!(h, t.headers().to_vec());
        let mut expected = t.display_rows();
        // the flattened text drops trailing whitespace of the final cell
        if let Some(last) = expected.last_mut().and_then(|r| r.last_mut()) {
            *last = last.trim_end().to_string();
        }
        if let Some(last_row) = r.last() {
            prop_assert_eq!(last_row.len(), w);
        }
        let got: Vec<Vec<String>> = r.iter().map(|row| row.iter().map(|c| c.trim_end().to_string()).collect()).collect();
        let want: Vec<Vec<String>> = expected.iter().map(|row| row.iter().map(|c| c.trim_end().to_string()).collect()).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn truncation_is_a_prefix(seed in any::<u64>(), budget in 20usize..400) {
        let (t, _) = table_and_rng(seed);
        let sentence = "SELECT x";
        let Ok(cut) = truncate_rows(&t, budget, sentence) else { return Ok(()) };
        let full = flatten_table(&t).unwrap();
        let part = flatten_table(&cut).unwrap();
        prop_assert!(full.starts_with(&part));
        prop_assert!(sentence.len() + 1 + part.chars().count() <= budget);
        if cut.len() < t.len() {
            let next = t.with_row_prefix(cut.len() + 1);
            prop_assert!(sentence.len() + 1 + flatten_table(&next).unwrap().chars().count() > budget);
        }
    }

    #[test]
    fn match_is_reflexive_and_symmetric(a in "[a-zA-Z0-9 ,.\"']{0,20}", b in "[a-zA-Z0-9 ,.\"']{0,20}") {
        let (x, y) = (normalize_answer(&a, ", "), normalize_answer(&b, ", "));
        prop_assert!(denotation_match(&x, &x));
        prop_assert_eq!(denotation_match(&x, &y), denotation_match(&y, &x));
    }

    #[test]
    fn normalization_is_idempotent(a in "\\PC{0,20}") {
        let once = normalize_atom(&a);
        prop_assert_eq!(normalize_atom(&once.text), once);
    }

    #[test]
    fn typing_is_idempotent(seed in any::<u64>()) {
        let (t, _) = table_and_rng(seed);
        let cols: Vec<Vec<String>> = (0..t.width()).map(|j| t.column(j).map(CellValue::display).collect()).collect();
        prop_assert_eq!(infer_column_types(&cols), t.column_types().to_vec());
        let again = Table::from_raw("p", t.headers(), &t.display_rows()).unwrap();
        prop_assert_eq!(again, t);
    }
}
