"""Shared pytest hooks: per-criterion pass/fail summary for the
acceptance suite."""

CRITERIA = {
    "test_c1_fixed_parameter_form_factors":
        "criterion 1: fixed-parameter form-factor reproduction",
    "test_c2_ga_recovery":
        "criterion 2: GA recovery of the optimal form factors",
    "test_c3_sinusoidal_pinched_ceiling":
        "criterion 3: sinusoidal pinched-loop ceiling on a 20x20 grid",
    "test_c4_delta_pulse_analytic_oracle":
        "criterion 4: delta-kick analytic area oracle",
    "test_c5_integral_representation_oracle":
        "criterion 5: non-local integral representation oracle",
    "test_c6_oscillator_identity":
        "criterion 6: forced-oscillator identity residual",
    "test_c7_regime_classification":
        "criterion 7: qualitative regime classification",
    "test_c8_property_suites":
        "criterion 8: geometric and integrator property suites",
}

_results = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if name in CRITERIA and report.when == "call":
        _results[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, label in CRITERIA.items():
        outcome = _results.get(name)
        if outcome is None:
            continue
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line("%s  %s" % (verdict, label))
