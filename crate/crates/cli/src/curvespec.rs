//! Textual curve specifications.
//!
//! Grammar (one curve per string):
//!
//! ```text
//! const:<sigma>            constant volatility
//! quartic:<a>,<b>,<c>      sigma(t) = a + b (t - c)^4
//! cos:<n>,<alpha>          sigma^2(t) = 1 + n^(-alpha) cos(pi n t)
//! table:<path>             CSV file with header `t,sigma`
//! ```
//!
//! Parsing reports the byte position of the offending token; positivity
//! violations surface the offending time point from curve validation.

use std::fmt;
use std::path::Path;

use specvol::VolatilityCurve;

/// A parsed curve plus the text it round-trips through.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    raw: String,
    curve: VolatilityCurve,
}

impl CurveSpec {
    pub fn curve(&self) -> &VolatilityCurve {
        &self.curve
    }

    pub fn into_curve(self) -> VolatilityCurve {
        self.curve
    }

    /// Canonical text form; parses back to an identical curve.
    pub fn format(&self) -> String {
        match &self.curve {
            VolatilityCurve::Constant { sigma } => format!("const:{sigma}"),
            VolatilityCurve::ShiftedQuartic { a, b, c } => format!("quartic:{a},{b},{c}"),
            VolatilityCurve::CosinePerturbation { n_freq, alpha } => {
                format!("cos:{n_freq},{alpha}")
            }
            // Knots live in a file; the original string is already canonical.
            VolatilityCurve::Tabulated { .. } => self.raw.clone(),
        }
    }
}

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone)]
pub struct SpecError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "curve spec error at position {}: {}", self.position, self.message)
    }
}

impl std::error::Error for SpecError {}

fn err(position: usize, message: impl Into<String>) -> SpecError {
    SpecError { position, message: message.into() }
}

/// Split `rest` (starting at byte `base` of the full spec) into exactly
/// `count` comma-separated fields, reporting offsets on failure.
fn fields(rest: &str, base: usize, count: usize) -> Result<Vec<(&str, usize)>, SpecError> {
    let mut out = Vec::new();
    let mut offset = base;
    for piece in rest.split(',') {
        out.push((piece, offset));
        offset += piece.len() + 1;
    }
    if out.len() != count {
        return Err(err(
            base + rest.len(),
            format!("expected {count} comma-separated fields, found {}", out.len()),
        ));
    }
    Ok(out)
}

fn parse_f64(field: &str, pos: usize, name: &str) -> Result<f64, SpecError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| err(pos, format!("cannot parse {name} from {field:?}")))
}

fn parse_u32(field: &str, pos: usize, name: &str) -> Result<u32, SpecError> {
    field
        .trim()
        .parse::<u32>()
        .map_err(|_| err(pos, format!("cannot parse {name} from {field:?}")))
}

/// Parse a curve specification string.
pub fn parse_curve_spec(text: &str) -> Result<CurveSpec, SpecError> {
    let (head, rest) = text
        .split_once(':')
        .ok_or_else(|| err(0, "expected <kind>:<parameters>"))?;
    let base = head.len() + 1;
    let curve = match head {
        "const" => {
            let f = fields(rest, base, 1)?;
            let sigma = parse_f64(f[0].0, f[0].1, "sigma")?;
            VolatilityCurve::constant(sigma)
        }
        "quartic" => {
            let f = fields(rest, base, 3)?;
            let a = parse_f64(f[0].0, f[0].1, "a")?;
            let b = parse_f64(f[1].0, f[1].1, "b")?;
            let c = parse_f64(f[2].0, f[2].1, "c")?;
            VolatilityCurve::shifted_quartic(a, b, c)
        }
        "cos" => {
            let f = fields(rest, base, 2)?;
            let n = parse_u32(f[0].0, f[0].1, "n")?;
            let alpha = parse_f64(f[1].0, f[1].1, "alpha")?;
            VolatilityCurve::cosine_perturbation(n, alpha)
        }
        "table" => {
            if rest.is_empty() {
                return Err(err(base, "expected a file path"));
            }
            let knots = crate::csvio::read_knots(Path::new(rest))
                .map_err(|e| err(base, format!("cannot read {rest}: {e}")))?;
            VolatilityCurve::tabulated(knots)
        }
        other => {
            return Err(err(
                0,
                format!("unknown curve kind {other:?}; expected const, quartic, cos or table"),
            ))
        }
    }
    .map_err(|e| err(base, e.to_string()))?;
    Ok(CurveSpec { raw: text.to_string(), curve })
}
