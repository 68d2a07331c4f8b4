//! Float formatting for CSV output: 17 significant digits, enough for
//! bit-exact round trips.

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}
