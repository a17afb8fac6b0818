//! Central-finite-difference verification of analytic gradients.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::neural::ParameterStore;
use crate::neural::tape::GradMap;

/// Outcome of a gradient check over every parameter coordinate.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error per parameter path.
    pub per_path: BTreeMap<String, f64>,
    pub max_rel_error: f64,
    pub worst_path: Option<String>,
    pub tolerance: f64,
    pub step: f64,
    pub pass: bool,
}

/// Default central-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-4;

/// Compare the analytic gradients produced by `loss_fn` against central
/// finite differences of its loss, coordinate by coordinate.
///
/// `loss_fn` must map the parameter store to a scalar loss and its
/// gradient map deterministically; it is evaluated twice up front and
/// must return bit-identical losses. The relative error of a coordinate
/// is `|fd - analytic| / max(|fd| + |analytic|, 1e-4)`, so coordinates
/// whose gradient is essentially zero are compared absolutely.
pub fn grad_check<F>(
    loss_fn: F,
    params: &ParameterStore,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&ParameterStore) -> Result<(f64, GradMap)>,
{
    let (loss_a, grads) = loss_fn(params)?;
    let (loss_b, _) = loss_fn(params)?;
    if loss_a.to_bits() != loss_b.to_bits() {
        return Err(Error::NonDeterministic(format!(
            "loss changed between evaluations ({loss_a} vs {loss_b})"
        )));
    }

    let mut probe = params.clone();
    let mut per_path = BTreeMap::new();
    let mut max_rel_error = 0.0_f64;
    let mut worst_path = None;

    let paths: Vec<String> = params.paths().map(str::to_owned).collect();
    for path in paths {
        let len = params.get(&path)?.len();
        let mut worst_here = 0.0_f64;
        for i in 0..len {
            let original = params.get(&path)?.data()[i];
            probe.get_mut(&path)?.data_mut()[i] = original + step;
            let (plus, _) = loss_fn(&probe)?;
            probe.get_mut(&path)?.data_mut()[i] = original - step;
            let (minus, _) = loss_fn(&probe)?;
            probe.get_mut(&path)?.data_mut()[i] = original;

            let fd = (plus - minus) / (2.0 * step);
            let analytic = grads.get(&path).map_or(0.0, |g| g[i]);
            let rel = (fd - analytic).abs() / (fd.abs() + analytic.abs()).max(1e-4);
            if rel > worst_here {
                worst_here = rel;
            }
            if rel > max_rel_error {
                max_rel_error = rel;
                worst_path = Some(path.clone());
            }
        }
        per_path.insert(path, worst_here);
    }

    Ok(GradCheckReport {
        per_path,
        max_rel_error,
        worst_path,
        tolerance,
        step,
        pass: max_rel_error <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::tape::Tape;
    use crate::neural::{ParameterStore, Tensor};

    fn quadratic_loss(store: &ParameterStore) -> Result<(f64, GradMap)> {
        let mut loss = 0.0;
        let mut grads = GradMap::new();
        for (path, tensor) in store.iter() {
            loss += tensor.data().iter().map(|p| p * p).sum::<f64>();
            grads.insert(path.to_owned(), tensor.data().iter().map(|p| 2.0 * p).collect());
        }
        Ok((loss, grads))
    }

    #[test]
    fn quadratic_matches_within_1e8() {
        let mut store = ParameterStore::new(1);
        store.insert("x", Tensor::vector(vec![0.7, -0.3, 1.9])).unwrap();
        store.insert("y", Tensor::vector(vec![0.01])).unwrap();
        let report = grad_check(quadratic_loss, &store, GRAD_CHECK_STEP, 1e-8).unwrap();
        assert!(report.pass, "max rel error {}", report.max_rel_error);
    }

    #[test]
    fn corrupted_gradient_fails_naming_the_path() {
        let corrupt = |store: &ParameterStore| -> Result<(f64, GradMap)> {
            let (loss, mut grads) = quadratic_loss(store)?;
            grads.get_mut("bad").unwrap()[0] += 0.5;
            Ok((loss, grads))
        };
        let mut store = ParameterStore::new(1);
        store.insert("good", Tensor::vector(vec![0.4])).unwrap();
        store.insert("bad", Tensor::vector(vec![-0.2])).unwrap();
        let report = grad_check(corrupt, &store, GRAD_CHECK_STEP, 1e-6).unwrap();
        assert!(!report.pass);
        assert_eq!(report.worst_path.as_deref(), Some("bad"));
        assert!(report.per_path["good"] <= 1e-6);
    }

    #[test]
    fn non_deterministic_closure_is_rejected() {
        use std::cell::Cell;
        let counter = Cell::new(0.0_f64);
        let jittery = |_: &ParameterStore| -> Result<(f64, GradMap)> {
            counter.set(counter.get() + 1.0);
            Ok((counter.get(), GradMap::new()))
        };
        let mut store = ParameterStore::new(1);
        store.insert("x", Tensor::vector(vec![1.0])).unwrap();
        assert!(matches!(
            grad_check(jittery, &store, GRAD_CHECK_STEP, 1e-4),
            Err(Error::NonDeterministic(_))
        ));
    }

    #[test]
    fn tape_loss_closure_passes() {
        // A small composite graph: softmax-xent over W x + b.
        let mut store = ParameterStore::new(5);
        store.register_xavier("w", vec![3, 4]).unwrap();
        store.register_uniform("b", vec![3], -0.5, 0.5).unwrap();
        let x = [0.3, -1.2, 0.8, 0.05];
        let loss_fn = move |s: &ParameterStore| -> Result<(f64, GradMap)> {
            let mut tape = Tape::new();
            let w = tape.param(s, "w")?;
            let b = tape.param(s, "b")?;
            let xn = tape.input(&x);
            let y = tape.matvec(w, xn)?;
            let y = tape.add(y, b)?;
            let loss = tape.softmax_xent(y, 1)?;
            let grads = tape.backward(loss)?;
            Ok((tape.value(loss)[0], grads))
        };
        let report = grad_check(loss_fn, &store, GRAD_CHECK_STEP, 1e-6).unwrap();
        assert!(report.pass, "max rel error {}", report.max_rel_error);
    }
}
