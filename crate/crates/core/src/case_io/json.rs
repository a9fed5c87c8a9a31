//! Native JSON case schema:
//! `{name, slack_bus, buses:[{id, demand}], lines:[{id, from, to, susceptance,
//! limit}], generators:[{id, bus, cost, p_max, kind}]}`.

use serde_json::{Map, Value};

use super::{ensure_valid, CaseIoError};
use crate::model::Grid;

fn schema(pointer: String, message: impl Into<String>) -> CaseIoError {
    CaseIoError::Schema { pointer, message: message.into() }
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, CaseIoError> {
    obj.get(key).ok_or_else(|| schema(format!("{path}/{key}"), "missing field"))
}

fn index(obj: &Map<String, Value>, path: &str, key: &str) -> Result<usize, CaseIoError> {
    field(obj, path, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| schema(format!("{path}/{key}"), "expected a non-negative integer"))
}

enum Sign {
    Positive,
    NonNegative,
    Any,
}

fn real(obj: &Map<String, Value>, path: &str, key: &str, sign: Sign) -> Result<f64, CaseIoError> {
    let pointer = format!("{path}/{key}");
    let v = field(obj, path, key)?
        .as_f64()
        .ok_or_else(|| schema(pointer.clone(), "expected a number"))?;
    match sign {
        Sign::Positive if !(v > 0.0) => Err(schema(pointer, format!("must be positive, got {v}"))),
        Sign::NonNegative if !(v >= 0.0) => Err(schema(pointer, format!("must be non-negative, got {v}"))),
        _ => Ok(v),
    }
}

fn array<'a>(root: &'a Map<String, Value>, key: &str) -> Result<&'a Vec<Value>, CaseIoError> {
    field(root, "", key)?
        .as_array()
        .ok_or_else(|| schema(format!("/{key}"), "expected an array"))
}

/// Checks every record against the schema, reporting the first violation
/// with its JSON pointer.
fn check_schema(value: &Value) -> Result<(), CaseIoError> {
    let root = value.as_object().ok_or_else(|| schema(String::new(), "expected an object"))?;
    if let Some(name) = root.get("name") {
        if !name.is_string() {
            return Err(schema("/name".into(), "expected a string"));
        }
    }
    index(root, "", "slack_bus")?;
    let records = |key: &str| -> Result<Vec<(String, &Map<String, Value>)>, CaseIoError> {
        array(root, key)?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let path = format!("/{key}/{i}");
                let obj = v.as_object().ok_or_else(|| schema(path.clone(), "expected an object"))?;
                let id = index(obj, &path, "id")?;
                if id != i {
                    return Err(schema(format!("{path}/id"), format!("ids must be 0..n in order, got {id}")));
                }
                Ok((path, obj))
            })
            .collect()
    };
    for (path, obj) in records("buses")? {
        real(obj, &path, "demand", Sign::NonNegative)?;
    }
    for (path, obj) in records("lines")? {
        index(obj, &path, "from")?;
        index(obj, &path, "to")?;
        real(obj, &path, "susceptance", Sign::Positive)?;
        real(obj, &path, "limit", Sign::Positive)?;
    }
    for (path, obj) in records("generators")? {
        index(obj, &path, "bus")?;
        real(obj, &path, "cost", Sign::Any)?;
        real(obj, &path, "p_max", Sign::NonNegative)?;
        let kind = field(obj, &path, "kind")?;
        if !matches!(kind.as_str(), Some("thermal" | "wind" | "backup")) {
            return Err(schema(format!("{path}/kind"), "expected thermal, wind or backup"));
        }
    }
    Ok(())
}

/// Reads and validates a JSON case.
pub fn read_json_case(text: &str) -> Result<Grid<f64>, CaseIoError> {
    let value: Value = serde_json::from_str(text)?;
    check_schema(&value)?;
    let grid: Grid<f64> = serde_json::from_value(value)?;
    ensure_valid(&grid)?;
    Ok(grid)
}

/// Pretty-printed JSON; numbers keep full precision.
pub fn write_json_case(grid: &Grid<f64>) -> String {
    serde_json::to_string_pretty(grid).expect("grid serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn round_trip_is_exact() {
        let mut g = three_ring();
        g.lines[1].susceptance = 1.0 / 3.0;
        g.buses[2].demand = 0.1 + 0.2;
        g.generators[0].cost = 13.320000000000002;
        let back = read_json_case(&write_json_case(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn negative_limit_pointer() {
        let mut g = three_ring();
        g.lines.push(line(3, 1, 2, 1.0, 5.0));
        let mut v: Value = serde_json::from_str(&write_json_case(&g)).unwrap();
        v["lines"][3]["limit"] = Value::from(-1.0);
        match read_json_case(&v.to_string()).unwrap_err() {
            CaseIoError::Schema { pointer, .. } => assert_eq!(pointer, "/lines/3/limit"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn missing_field_and_bad_kind() {
        let g = two_bus(10.0);
        let mut v: Value = serde_json::from_str(&write_json_case(&g)).unwrap();
        v["generators"][1]["kind"] = Value::from("nuclear");
        assert!(matches!(read_json_case(&v.to_string()), Err(CaseIoError::Schema { pointer, .. }) if pointer == "/generators/1/kind"));
        v["buses"][0].as_object_mut().unwrap().remove("demand");
        assert!(matches!(read_json_case(&v.to_string()), Err(CaseIoError::Schema { pointer, .. }) if pointer == "/buses/0/demand"));
    }

    #[test]
    fn disconnected_grid_rejected() {
        let mut g = two_bus(10.0);
        g.buses.push(bus(2, 0.0));
        assert!(matches!(read_json_case(&write_json_case(&g)), Err(CaseIoError::Invalid(_))));
    }
}
