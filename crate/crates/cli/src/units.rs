//! Unit-tagged quantities such as `"200 mm"` or `"0.05 N*m"`, converted to SI.

use std::fmt;

/// Standard gravity, used to turn masses into hanging-weight forces.
pub const GRAVITY: f64 = 9.806_65;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Force,
    Moment,
    Pressure,
    FlexuralRigidity,
    LinearStiffness,
    Angle,
    Mass,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Length => "length",
            Dimension::Force => "force",
            Dimension::Moment => "moment",
            Dimension::Pressure => "pressure",
            Dimension::FlexuralRigidity => "flexural rigidity",
            Dimension::LinearStiffness => "stiffness",
            Dimension::Angle => "angle",
            Dimension::Mass => "mass",
        };
        f.write_str(name)
    }
}

const UNITS: &[(&str, Dimension, f64)] = &[
    ("m", Dimension::Length, 1.0),
    ("cm", Dimension::Length, 1e-2),
    ("mm", Dimension::Length, 1e-3),
    ("um", Dimension::Length, 1e-6),
    ("N", Dimension::Force, 1.0),
    ("mN", Dimension::Force, 1e-3),
    ("kN", Dimension::Force, 1e3),
    ("N*m", Dimension::Moment, 1.0),
    ("N*mm", Dimension::Moment, 1e-3),
    ("Pa", Dimension::Pressure, 1.0),
    ("kPa", Dimension::Pressure, 1e3),
    ("MPa", Dimension::Pressure, 1e6),
    ("GPa", Dimension::Pressure, 1e9),
    ("N*m^2", Dimension::FlexuralRigidity, 1.0),
    ("N*mm^2", Dimension::FlexuralRigidity, 1e-6),
    ("N/m", Dimension::LinearStiffness, 1.0),
    ("N/mm", Dimension::LinearStiffness, 1e3),
    ("rad", Dimension::Angle, 1.0),
    ("deg", Dimension::Angle, std::f64::consts::PI / 180.0),
    ("kg", Dimension::Mass, 1.0),
    ("g", Dimension::Mass, 1e-3),
    ("lb", Dimension::Mass, 0.453_592_37),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("`{0}` is not of the form \"<number> <unit>\"")]
    Malformed(String),
    #[error("unknown unit `{unit}` in `{text}`")]
    UnknownUnit { text: String, unit: String },
    #[error("`{text}` is a {found}, expected a {expected}")]
    WrongDimension {
        text: String,
        found: Dimension,
        expected: Dimension,
    },
}

/// Parses `text` and returns its SI value, checking the dimension.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64, UnitError> {
    let trimmed = text.trim();
    let (number, unit) = trimmed
        .split_once(char::is_whitespace)
        .ok_or_else(|| UnitError::Malformed(text.to_string()))?;
    let value: f64 = number
        .parse()
        .map_err(|_| UnitError::Malformed(text.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::Malformed(text.to_string()));
    }
    let unit = unit.trim().replace(' ', "");
    let unit = unit.replace('·', "*");
    let (_, dim, factor) = UNITS
        .iter()
        .find(|(name, _, _)| *name == unit)
        .ok_or_else(|| UnitError::UnknownUnit {
            text: text.to_string(),
            unit: unit.clone(),
        })?;
    if *dim != expected {
        return Err(UnitError::WrongDimension {
            text: text.to_string(),
            found: *dim,
            expected,
        });
    }
    Ok(value * factor)
}
