//! Reader for the whitespace-separated German credit file (20 attributes and
//! one outcome per line, attribute codes `A11` ... `A202`).

use std::fs;
use std::path::Path;

use super::{ColumnData, Dataset, FeatureKind, FeatureSpec, Role};
use crate::error::{Error, Result};

/// Name of the derived protected column.
pub const GENDER: &str = "Gender";
/// Name of the outcome column (1 = good type, 0 = bad type).
pub const TARGET: &str = "CreditRisk";

const PERSONAL_STATUS: &str = "PersonalStatus";
const FIELDS: usize = 21;

fn layout() -> Vec<FeatureSpec> {
    use Role::*;
    vec![
        FeatureSpec::categorical("AccountStatus", ["A11", "A12", "A13", "A14"], Feature),
        FeatureSpec::numeric("CreditDuration", Feature),
        FeatureSpec::categorical("CreditHistory", ["A30", "A31", "A32", "A33", "A34"], Feature),
        FeatureSpec::categorical(
            "Purpose",
            ["A40", "A41", "A42", "A43", "A44", "A45", "A46", "A48", "A49", "A410"],
            Feature,
        ),
        FeatureSpec::numeric("CreditAmount", Feature),
        FeatureSpec::categorical("Savings", ["A61", "A62", "A63", "A64", "A65"], Feature),
        FeatureSpec::categorical("EmploymentDuration", ["A71", "A72", "A73", "A74", "A75"], Feature),
        FeatureSpec::numeric("InstallmentRate", Feature),
        // Replaced by the binary gender column; kept for reference only.
        FeatureSpec::categorical(PERSONAL_STATUS, ["A91", "A92", "A93", "A94", "A95"], Excluded),
        FeatureSpec::categorical("Guarantor", ["A101", "A102", "A103"], Feature),
        FeatureSpec::numeric("ResidenceTime", Feature),
        FeatureSpec::categorical("Property", ["A121", "A122", "A123", "A124"], Feature),
        FeatureSpec::numeric("Age", Feature),
        FeatureSpec::categorical("OtherInstallmentPlan", ["A141", "A142", "A143"], Feature),
        FeatureSpec::categorical("Housing", ["A151", "A152", "A153"], Feature),
        FeatureSpec::numeric("NumberOfCredit", Feature),
        FeatureSpec::categorical("Job", ["A171", "A172", "A173", "A174"], Feature),
        FeatureSpec::numeric("NumberLiablePeople", Feature),
        FeatureSpec::categorical("Telephone", ["A191", "A192"], Feature),
        FeatureSpec::categorical("ForeignWorker", ["A201", "A202"], Excluded),
        FeatureSpec::numeric(TARGET, Target),
    ]
}

/// 1 for the female personal-status codes (`A92`, `A95`), 0 for the male ones.
pub fn derive_gender(personal_status: &str) -> Result<u8> {
    match personal_status {
        "A92" | "A95" => Ok(1),
        "A91" | "A93" | "A94" => Ok(0),
        other => Err(Error::InvalidValue { feature: PERSONAL_STATUS.into(), value: other.into() }),
    }
}

pub fn load_german_credit(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_german_credit(&fs::read_to_string(path)?)
}

pub fn parse_german_credit(text: &str) -> Result<Dataset> {
    let mut specs = layout();
    let mut columns: Vec<ColumnData> = specs
        .iter()
        .map(|s| match s.kind {
            FeatureKind::Numeric => ColumnData::Numeric(Vec::new()),
            FeatureKind::Categorical { .. } => ColumnData::Categorical(Vec::new()),
        })
        .collect();
    let mut gender = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != FIELDS {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {FIELDS} fields, found {}", fields.len()),
            });
        }
        for ((spec, col), field) in specs.iter().zip(columns.iter_mut()).zip(&fields) {
            match (&spec.kind, col) {
                (FeatureKind::Categorical { levels }, ColumnData::Categorical(codes)) => {
                    let code = levels.iter().position(|l| l == field).ok_or_else(|| Error::UnknownCode {
                        line: lineno,
                        column: spec.name.clone(),
                        code: field.to_string(),
                    })?;
                    codes.push(code as u32);
                }
                (FeatureKind::Numeric, ColumnData::Numeric(values)) if spec.role == Role::Target => {
                    let y = match *field {
                        "1" => 1.0,
                        "2" => 0.0,
                        other => {
                            return Err(Error::UnknownCode {
                                line: lineno,
                                column: spec.name.clone(),
                                code: other.to_string(),
                            })
                        }
                    };
                    values.push(y);
                }
                (FeatureKind::Numeric, ColumnData::Numeric(values)) => {
                    let x: f64 = field.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("`{field}` is not a number ({})", spec.name),
                    })?;
                    values.push(x);
                }
                _ => unreachable!(),
            }
        }
        gender.push(f64::from(derive_gender(fields[8]).map_err(|_| Error::UnknownCode {
            line: lineno,
            column: PERSONAL_STATUS.into(),
            code: fields[8].to_string(),
        })?));
    }
    if gender.is_empty() {
        return Err(Error::EmptyInput);
    }
    specs.push(FeatureSpec::numeric(GENDER, Role::Protected));
    columns.push(ColumnData::Numeric(gender));
    Dataset::new(specs, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Value;

    const FIRST: &str = "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1";

    #[test]
    fn gender_codes() {
        assert_eq!(derive_gender("A92").unwrap(), 1);
        assert_eq!(derive_gender("A93").unwrap(), 0);
        assert_eq!(derive_gender("A95").unwrap(), 1);
        assert_eq!(derive_gender("A91").unwrap(), 0);
        assert!(derive_gender("A96").is_err());
    }

    #[test]
    fn single_line_decodes() {
        let d = parse_german_credit(FIRST).unwrap();
        assert_eq!(d.n_rows(), 1);
        assert_eq!(d.protected(), vec![0]);
        assert_eq!(d.target(), vec![1]);
        assert_eq!(d.value(0, "CreditAmount"), Some(Value::Number(1169.0)));
        assert_eq!(d.value(0, "Telephone"), Some(Value::Level("A192".into())));
        assert_eq!(d.spec("ForeignWorker").unwrap().role, Role::Excluded);
        assert_eq!(d.spec("PersonalStatus").unwrap().role, Role::Excluded);
        assert_eq!(d.specs().len(), 22);
    }

    #[test]
    fn short_line_names_the_line() {
        let text = format!("{FIRST}\nA11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201\n");
        match parse_german_credit(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_code_names_the_line() {
        let text = FIRST.replace("A43", "A47");
        match parse_german_credit(&text) {
            Err(Error::UnknownCode { line, column, code }) => {
                assert_eq!((line, column.as_str(), code.as_str()), (1, "Purpose", "A47"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_german_credit(&FIRST.replace(" 1169 ", " x ")), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_file() {
        assert!(matches!(parse_german_credit(""), Err(Error::EmptyInput)));
        assert!(matches!(parse_german_credit("\n  \n"), Err(Error::EmptyInput)));
    }
}
