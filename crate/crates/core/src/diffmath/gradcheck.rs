use super::{DenseMatrix, MathError, Tape, Var};

/// One-sided slopes differing by more than this (relative) mark a kink; the
/// coordinate is skipped instead of compared.
const KINK_TOLERANCE: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Max over checked coordinates of `|analytic - numeric| / max(1, |numeric|)`.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates skipped because the function is not differentiable there.
    pub skipped: usize,
}

/// Compares reverse-mode gradients of `f` against central differences with
/// step `h`, coordinate by coordinate over every leaf.
///
/// `f` receives a fresh tape with one leaf per entry of `leaves` and must
/// return a scalar node. It is called `2·N + 1` times for `N` coordinates, so
/// it must be deterministic.
pub fn grad_check<F, E>(f: F, leaves: &[DenseMatrix], h: f64) -> Result<GradCheckReport, E>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, E>,
    E: From<MathError>,
{
    let eval = |values: &[DenseMatrix]| -> Result<f64, E> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.leaf(v.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let shape = tape.shape(out);
        tape.value(out)
            .as_scalar()
            .ok_or_else(|| MathError::NonScalarLoss { shape }.into())
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = leaves.iter().map(|v| tape.leaf(v.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let base = tape
        .value(out)
        .as_scalar()
        .ok_or(MathError::NonScalarLoss { shape: tape.shape(out) })?;
    let grads = tape.backward(out)?;

    let mut work: Vec<DenseMatrix> = leaves.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (li, var) in vars.iter().enumerate() {
        let analytic = grads.wrt(*var).expect("every leaf has a gradient");
        for c in 0..leaves[li].len() {
            let orig = leaves[li].data()[c];
            work[li].data_mut()[c] = orig + h;
            let plus = eval(&work)?;
            work[li].data_mut()[c] = orig - h;
            let minus = eval(&work)?;
            work[li].data_mut()[c] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let forward = (plus - base) / h;
            let backward = (base - minus) / h;
            if (forward - backward).abs() > KINK_TOLERANCE * numeric.abs().max(1.0) {
                report.skipped += 1;
                continue;
            }
            let err = (analytic.data()[c] - numeric).abs() / numeric.abs().max(1.0);
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}
