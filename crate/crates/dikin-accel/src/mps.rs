//! Fixed-format MPS reader (Netlib style). Accepts whitespace-delimited
//! "free" layout as well, since modern mirrors are whitespace-clean.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::model::{ColumnBounds, GeneralLp, RowSense};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("line {line}: file ends before ENDATA")]
    TruncatedFile { line: usize },
    #[error("line {line}: unsupported: {what}")]
    Unsupported { line: usize, what: String },
    #[error("line {line}: row '{name}' referenced before declaration")]
    UndeclaredRow { line: usize, name: String },
    #[error("line {line}: column '{name}' not declared in COLUMNS")]
    UndeclaredColumn { line: usize, name: String },
    #[error("line {line}: cannot parse '{token}' as a number")]
    MalformedNumber { line: usize, token: String },
    #[error("no objective (N) row declared")]
    MissingObjective,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Lo,
    Up,
    Fx,
    Fr,
    Mi,
    Pl,
}

/// Structured view of an MPS file before matrix assembly.
///
/// Entries are kept in file order; duplicate `(column, row)` cells are summed
/// during assembly and counted in `duplicates_merged`.
#[derive(Clone, Debug, Default)]
pub struct MpsDocument {
    pub name: String,
    pub objective_row: String,
    /// Constraint rows (the N row is kept separately).
    pub rows: Vec<(RowSense, String)>,
    /// (column, row, value) from the COLUMNS section, objective included.
    pub columns: Vec<(String, String, f64)>,
    /// (row, value) from the RHS section.
    pub rhs: Vec<(String, f64)>,
    /// (kind, column, value) from the BOUNDS section; value is 0 for
    /// kinds that take none.
    pub bounds: Vec<(BoundKind, String, f64)>,
    pub duplicates_merged: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

fn parse_value(token: &str, line: usize) -> Result<f64, MpsError> {
    token.parse::<f64>().map_err(|_| MpsError::MalformedNumber {
        line,
        token: token.to_string(),
    })
}

impl MpsDocument {
    /// Tokenize and collect the sections of an MPS file. Line numbers in
    /// diagnostics are 1-based.
    pub fn parse(text: &str) -> Result<Self, MpsError> {
        let mut doc = MpsDocument::default();
        let mut section = Section::None;
        let mut saw_endata = false;
        let mut objective: Option<String> = None;
        // free (extra N) rows whose entries are skipped
        let mut free_rows: Vec<String> = Vec::new();
        let mut row_set: HashMap<String, ()> = HashMap::new();
        let mut col_set: HashMap<String, ()> = HashMap::new();
        let mut cell_seen: HashMap<(String, String), ()> = HashMap::new();
        let mut last_line = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            if raw.trim().is_empty() || raw.starts_with('*') {
                continue;
            }
            let header = !raw.starts_with(' ') && !raw.starts_with('\t');
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if header {
                match fields[0] {
                    "NAME" => {
                        doc.name = fields.get(1).unwrap_or(&"").to_string();
                        continue;
                    }
                    "ROWS" => section = Section::Rows,
                    "COLUMNS" => section = Section::Columns,
                    "RHS" => section = Section::Rhs,
                    "BOUNDS" => section = Section::Bounds,
                    "RANGES" => {
                        return Err(MpsError::Unsupported {
                            line,
                            what: "RANGES section".into(),
                        })
                    }
                    "OBJSENSE" | "OBJSENSE:" => {
                        return Err(MpsError::Unsupported {
                            line,
                            what: "OBJSENSE section".into(),
                        })
                    }
                    "ENDATA" => {
                        saw_endata = true;
                        break;
                    }
                    other => {
                        return Err(MpsError::Unsupported {
                            line,
                            what: format!("section '{other}'"),
                        })
                    }
                }
                continue;
            }

            match section {
                Section::None => {
                    return Err(MpsError::Unsupported {
                        line,
                        what: "data before any section header".into(),
                    })
                }
                Section::Rows => {
                    if fields.len() < 2 {
                        return Err(MpsError::Unsupported {
                            line,
                            what: "row line needs a sense and a name".into(),
                        });
                    }
                    let name = fields[1].to_string();
                    match fields[0] {
                        "N" => {
                            if objective.is_none() {
                                objective = Some(name);
                            } else {
                                // extra free rows are legal; ignore their entries
                                free_rows.push(name);
                            }
                        }
                        "E" | "L" | "G" => {
                            let sense = match fields[0] {
                                "E" => RowSense::Eq,
                                "L" => RowSense::Le,
                                _ => RowSense::Ge,
                            };
                            row_set.insert(name.clone(), ());
                            doc.rows.push((sense, name));
                        }
                        other => {
                            return Err(MpsError::Unsupported {
                                line,
                                what: format!("row sense '{other}'"),
                            })
                        }
                    }
                }
                Section::Columns => {
                    if fields.get(1).is_some_and(|f| f.contains("MARKER")) {
                        return Err(MpsError::Unsupported {
                            line,
                            what: "integer markers".into(),
                        });
                    }
                    let col = fields[0].to_string();
                    let obj = objective.as_deref().ok_or(MpsError::MissingObjective)?;
                    if fields.len() < 3 || fields.len() % 2 == 0 {
                        return Err(MpsError::MalformedNumber {
                            line,
                            token: "<end of line>".into(),
                        });
                    }
                    col_set.entry(col.clone()).or_insert(());
                    for pair in fields[1..].chunks(2) {
                        let row = pair[0];
                        let value = parse_value(pair[1], line)?;
                        if row != obj
                            && !row_set.contains_key(row)
                            && !free_rows.iter().any(|r| r == row)
                        {
                            return Err(MpsError::UndeclaredRow {
                                line,
                                name: row.to_string(),
                            });
                        }
                        if free_rows.iter().any(|r| r == row) {
                            continue;
                        }
                        if cell_seen
                            .insert((col.clone(), row.to_string()), ())
                            .is_some()
                        {
                            doc.duplicates_merged += 1;
                        }
                        doc.columns.push((col.clone(), row.to_string(), value));
                    }
                }
                Section::Rhs => {
                    // fields[0] is the RHS vector name
                    if fields.len() < 3 || fields.len() % 2 == 0 {
                        return Err(MpsError::MalformedNumber {
                            line,
                            token: "<end of line>".into(),
                        });
                    }
                    let obj = objective.as_deref().unwrap_or("");
                    for pair in fields[1..].chunks(2) {
                        let row = pair[0];
                        let value = parse_value(pair[1], line)?;
                        if row == obj || free_rows.iter().any(|r| r == row) {
                            // objective-row RHS (constant) is not modeled
                            continue;
                        }
                        if !row_set.contains_key(row) {
                            return Err(MpsError::UndeclaredRow {
                                line,
                                name: row.to_string(),
                            });
                        }
                        doc.rhs.push((row.to_string(), value));
                    }
                }
                Section::Bounds => {
                    if fields.len() < 3 {
                        return Err(MpsError::Unsupported {
                            line,
                            what: "bound line needs kind, set name and column".into(),
                        });
                    }
                    let kind = match fields[0] {
                        "LO" => BoundKind::Lo,
                        "UP" => BoundKind::Up,
                        "FX" => BoundKind::Fx,
                        "FR" => BoundKind::Fr,
                        "MI" => BoundKind::Mi,
                        "PL" => BoundKind::Pl,
                        other => {
                            return Err(MpsError::Unsupported {
                                line,
                                what: format!("bound type '{other}'"),
                            })
                        }
                    };
                    let col = fields[2].to_string();
                    if !col_set.contains_key(&col) {
                        return Err(MpsError::UndeclaredColumn { line, name: col });
                    }
                    let value = match kind {
                        BoundKind::Lo | BoundKind::Up | BoundKind::Fx => {
                            let tok = fields.get(3).copied().unwrap_or("");
                            parse_value(tok, line)?
                        }
                        _ => 0.0,
                    };
                    doc.bounds.push((kind, col, value));
                }
            }
        }

        if !saw_endata {
            return Err(MpsError::TruncatedFile { line: last_line });
        }
        doc.objective_row = objective.ok_or(MpsError::MissingObjective)?;
        Ok(doc)
    }

    /// Count of structural (constraint-matrix) entries after merging, i.e.
    /// cells of `a` that end up nonzero.
    pub fn structural_nonzeros(&self) -> usize {
        let mut cells: HashMap<(&str, &str), f64> = HashMap::new();
        for (col, row, v) in &self.columns {
            if row != &self.objective_row {
                *cells.entry((col.as_str(), row.as_str())).or_insert(0.0) += v;
            }
        }
        cells.values().filter(|&&v| v != 0.0).count()
    }

    /// Assemble the dense general-form LP. Missing RHS entries default to
    /// zero per MPS convention.
    pub fn to_general_lp(&self) -> GeneralLp {
        let m = self.rows.len();
        let row_index: HashMap<&str, usize> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, (_, name))| (name.as_str(), i))
            .collect();

        let mut col_index: HashMap<&str, usize> = HashMap::new();
        let mut col_names: Vec<String> = Vec::new();
        for (col, _, _) in &self.columns {
            if !col_index.contains_key(col.as_str()) {
                col_index.insert(col.as_str(), col_names.len());
                col_names.push(col.clone());
            }
        }
        let n = col_names.len();

        let mut a = Array2::zeros((m, n));
        let mut cost = Array1::zeros(n);
        for (col, row, v) in &self.columns {
            let j = col_index[col.as_str()];
            if row == &self.objective_row {
                cost[j] += v;
            } else {
                a[(row_index[row.as_str()], j)] += v;
            }
        }

        let mut rhs = Array1::zeros(m);
        for (row, v) in &self.rhs {
            rhs[row_index[row.as_str()]] = *v;
        }

        let mut bounds = vec![ColumnBounds::default(); n];
        for (kind, col, v) in &self.bounds {
            let bd = &mut bounds[col_index[col.as_str()]];
            match kind {
                BoundKind::Lo => bd.lower = *v,
                BoundKind::Up => bd.upper = *v,
                BoundKind::Fx => {
                    bd.lower = *v;
                    bd.upper = *v;
                }
                BoundKind::Fr => {
                    bd.lower = f64::NEG_INFINITY;
                    bd.upper = f64::INFINITY;
                }
                BoundKind::Mi => bd.lower = f64::NEG_INFINITY,
                BoundKind::Pl => bd.upper = f64::INFINITY,
            }
        }

        GeneralLp {
            a,
            rhs,
            cost,
            senses: self.rows.iter().map(|(s, _)| *s).collect(),
            bounds,
            col_names,
            row_names: self.rows.iter().map(|(_, name)| name.clone()).collect(),
        }
    }
}

/// Parse MPS text into a general-form LP plus the sparsity of its
/// constraint matrix (portion of nonzero entries).
pub fn parse_mps(text: &str) -> Result<(GeneralLp, f64), MpsError> {
    let doc = MpsDocument::parse(text)?;
    let glp = doc.to_general_lp();
    let (m, n) = glp.a.dim();
    let sparsity = if m * n == 0 {
        1.0
    } else {
        doc.structural_nonzeros() as f64 / (m * n) as f64
    };
    Ok((glp, sparsity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const MICRO: &str = "\
NAME          TEST
ROWS
 N  COST
 E  R1
COLUMNS
    X1        COST      1.0        R1        1.0
    X2        COST      2.0        R1        1.0
RHS
    B         R1        2.0
ENDATA
";

    #[test]
    fn micro_fixture_parses_exactly() {
        let (glp, sparsity) = parse_mps(MICRO).unwrap();
        assert_eq!(glp.a, array![[1.0, 1.0]]);
        assert_eq!(glp.rhs, array![2.0]);
        assert_eq!(glp.cost, array![1.0, 2.0]);
        assert_eq!(glp.senses, vec![RowSense::Eq]);
        assert_eq!(sparsity, 1.0);
        assert_eq!(glp.col_names, vec!["X1", "X2"]);
    }

    #[test]
    fn omitted_rhs_defaults_to_zero() {
        let text = MICRO
            .lines()
            .filter(|l| !l.starts_with("RHS") && !l.contains("B "))
            .collect::<Vec<_>>()
            .join("\n");
        let (glp, _) = parse_mps(&text).unwrap();
        assert_eq!(glp.rhs, array![0.0]);
    }

    #[test]
    fn missing_endata_is_truncated() {
        let text = MICRO.replace("ENDATA\n", "");
        assert!(matches!(
            parse_mps(&text),
            Err(MpsError::TruncatedFile { .. })
        ));
    }

    #[test]
    fn ranges_section_is_rejected() {
        let text = MICRO.replace("RHS\n", "RANGES\n    R         R1        1.0\nRHS\n");
        assert!(matches!(
            parse_mps(&text),
            Err(MpsError::Unsupported { .. })
        ));
    }

    #[test]
    fn undeclared_row_reports_line() {
        let text = MICRO.replace("R1        1.0\n    X2", "R9        1.0\n    X2");
        match parse_mps(&text) {
            Err(MpsError::UndeclaredRow { line, name }) => {
                assert_eq!(name, "R9");
                assert_eq!(line, 6);
            }
            other => panic!("expected UndeclaredRow, got {other:?}"),
        }
    }

    #[test]
    fn malformed_number_reports_token() {
        let text = MICRO.replace("2.0", "two");
        match parse_mps(&text) {
            Err(MpsError::MalformedNumber { token, .. }) => assert_eq!(token, "two"),
            other => panic!("expected MalformedNumber, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_cells_are_summed_and_flagged() {
        let text = MICRO.replace(
            "    X2        COST      2.0        R1        1.0",
            "    X2        COST      2.0        R1        1.0\n    X2        R1        0.5",
        );
        let doc = MpsDocument::parse(&text).unwrap();
        assert_eq!(doc.duplicates_merged, 1);
        let glp = doc.to_general_lp();
        assert_eq!(glp.a, array![[1.0, 1.5]]);
        assert_eq!(doc.structural_nonzeros(), 2);
    }

    #[test]
    fn bound_kinds_map_to_column_bounds() {
        let text = "\
NAME          B
ROWS
 N  COST
 E  R1
COLUMNS
    X1        COST      1.0        R1        1.0
    X2        COST      1.0        R1        1.0
    X3        COST      1.0        R1        1.0
    X4        COST      1.0        R1        1.0
RHS
    B         R1        1.0
BOUNDS
 LO BND       X1        -2.0
 UP BND       X1        5.0
 FX BND       X2        3.0
 FR BND       X3
 MI BND       X4
ENDATA
";
        let (glp, _) = parse_mps(text).unwrap();
        assert_eq!(glp.bounds[0].lower, -2.0);
        assert_eq!(glp.bounds[0].upper, 5.0);
        assert_eq!(glp.bounds[1].lower, 3.0);
        assert_eq!(glp.bounds[1].upper, 3.0);
        assert!(glp.bounds[2].lower.is_infinite() && glp.bounds[2].lower < 0.0);
        assert!(glp.bounds[2].upper.is_infinite() && glp.bounds[2].upper > 0.0);
        assert!(glp.bounds[3].lower.is_infinite() && glp.bounds[3].lower < 0.0);
        assert_eq!(glp.bounds[3].upper, f64::INFINITY);
    }

    #[test]
    fn unknown_bound_column_is_reported() {
        let text = MICRO.replace("ENDATA", "BOUNDS\n UP BND       X9        1.0\nENDATA");
        assert!(matches!(
            parse_mps(&text),
            Err(MpsError::UndeclaredColumn { .. })
        ));
    }

    mod totality {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            // the parser must never panic, whatever bytes arrive
            #[test]
            fn parser_is_total(input in "\\PC*") {
                let _ = parse_mps(&input);
            }

            #[test]
            fn parser_is_total_on_mps_like_soup(
                lines in proptest::collection::vec(
                    prop_oneof![
                        Just("ROWS".to_string()),
                        Just("COLUMNS".to_string()),
                        Just(" N  C".to_string()),
                        Just(" E  R1".to_string()),
                        Just("    X1 C 1.0 R1 2e3".to_string()),
                        Just("    X1 R1 nan".to_string()),
                        Just("RHS".to_string()),
                        Just("ENDATA".to_string()),
                        "[ -~]{0,30}",
                    ],
                    0..40,
                )
            ) {
                let _ = parse_mps(&lines.join("\n"));
            }
        }
    }
}
