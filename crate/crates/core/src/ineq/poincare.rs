use super::{digest, InequalityReport};
use crate::error::{Error, Result};
use crate::fieldlab::{apply_op_fd, integrate_phi, Field};
use crate::nfunc::NFunction;
use crate::opsym::DiffOp;

/// `int phi(|u|)` against `int phi(|A u|)`.
pub fn poincare_ratio(phi: &NFunction, op: &DiffOp, u: &Field) -> Result<InequalityReport> {
    let au = apply_op_fd(op, u)?;
    let lhs = integrate_phi(phi, u);
    let rhs = integrate_phi(phi, &au);
    if rhs == 0.0 && lhs > 0.0 {
        return Err(Error::DegenerateDenominator(format!("int phi(|A u|) vanishes for {op} while int phi(|u|) = {lhs}")));
    }
    let mut r = InequalityReport::from_sides(lhs, rhs, digest(&format!("poincare|{phi}|{:?}", op.descriptor()), &[u]));
    if r.trivial {
        r.notes.push("u vanishes identically".into());
    }
    Ok(r)
}
