use crate::error::{Error, Result};
use crate::fock::{FockCutoff, C64};
use crate::phase_space::{PhasePoint, WidthAssignment, WidthParam};
use crate::scan::Axis;

fn bad(what: &str, text: &str) -> Error {
    Error::InvalidArgument(format!("cannot parse {what} from `{text}`"))
}

fn numbers(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(what, text)))
        .collect()
}

/// `re` or `re,im`.
pub fn complex(text: &str) -> Result<C64> {
    match numbers(text, "a complex amplitude")?.as_slice() {
        [re] => Ok(C64::new(*re, 0.0)),
        [re, im] => Ok(C64::new(*re, *im)),
        _ => Err(bad("a complex amplitude", text)),
    }
}

/// `re_a,im_a,re_b,im_b`.
pub fn point(text: &str) -> Result<PhasePoint> {
    match numbers(text, "a point")?.as_slice() {
        &[a, b, c, d] => {
            let p = PhasePoint::from_reals([a, b, c, d]);
            p.check()?;
            Ok(p)
        }
        _ => Err(bad("a point (4 numbers)", text)),
    }
}

/// Points separated by `;`.
pub fn points(text: &str) -> Result<Vec<PhasePoint>> {
    text.split(';').map(point).collect()
}

/// `d` or `da,db`.
pub fn cutoff(text: &str) -> Result<FockCutoff> {
    let dims: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| bad("a cutoff", text)))
        .collect::<Result<_>>()?;
    match dims.as_slice() {
        [d] => FockCutoff::square(*d),
        [a, b] => FockCutoff::new(*a, *b),
        _ => Err(bad("a cutoff", text)),
    }
}

/// One width for all rows, or one per row.
pub fn widths(text: &str) -> Result<WidthAssignment> {
    let rows = numbers(text, "widths")?
        .into_iter()
        .map(WidthParam::new)
        .collect::<Result<Vec<_>>>()?;
    match rows.len() {
        1 => Ok(WidthAssignment::uniform(rows[0])),
        _ => WidthAssignment::symmetric(rows),
    }
}

/// A list `x,y,...` or a range `min:max:steps`.
pub fn width_list(text: &str) -> Result<Vec<WidthParam>> {
    if text.contains(':') {
        let axis = Axis::parse(text)?;
        (0..axis.steps).map(|k| WidthParam::new(axis.value(k))).collect()
    } else {
        numbers(text, "widths")?.into_iter().map(WidthParam::new).collect()
    }
}

/// One `min:max:steps` for every axis, or `n` of them separated by `;`.
pub fn axes(text: &str, n: usize) -> Result<Vec<Axis>> {
    let parts: Vec<&str> = text.split(';').collect();
    match parts.len() {
        1 => Ok(vec![Axis::parse(parts[0])?; n]),
        k if k == n => parts.into_iter().map(Axis::parse).collect(),
        k => Err(Error::InvalidArgument(format!("{k} ranges given, the slice has {n} axes"))),
    }
}
