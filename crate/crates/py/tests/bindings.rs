use pyo3::prelude::*;
use ratransfer::ratransfer;

fn run(code: &std::ffi::CStr) {
    pyo3::append_to_inittab!(ratransfer);
    pyo3::prepare_freethreaded_python();
    Python::with_gil(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn module_round_trip() {
    run(c"
import ratransfer as rt
m, truth = rt.synth(k=200, states=2, beta=5000.0, seed=3)
assert m.k == 200 and len(truth) == 200
est = rt.estimate_beta_halfnormal(m)
assert 2500 < est.beta < 6000, est.beta
v = rt.volume_report(m, est.beta)
assert abs(v['non_random_fraction'] - (1 - 1 / v['f'])) < 1e-12
w, p = rt.shapiro_wilk([1.0, 2.0, 4.0])
assert 0.9 < w < 1.0
try:
    rt.shapiro_wilk([1.0, 1.0, 1.0])
except RuntimeError:
    pass
else:
    raise AssertionError('constant sample accepted')
");
}
