import pathlib
import sys

SRC = pathlib.Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from hypothesis import settings

settings.register_profile("imgany", deadline=None, max_examples=50)
settings.load_profile("imgany")

ACCEPTANCE_LABELS = {
    "test_retrieval_oracle_equivalence": "retrieval oracle equivalence (200 randomized cases)",
    "test_pipeline_oracle_equivalence": "pipeline oracle equivalence (50 randomized instances)",
    "test_planted_entity_recovery": "planted-entity recovery (>= 49/50 trials)",
    "test_invariant_suite": "invariant suite (permutation, bounds, ablations, threshold, M=1)",
    "test_bank_format": "bank format round-trips and corruption rejection",
    "test_http_cli_equivalence": "HTTP/CLI byte equivalence (20 randomized inputs)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome, status in (("passed", "PASS"), ("failed", "FAIL")):
        for report in terminalreporter.stats.get(outcome, []):
            if "acceptance" in getattr(report, "keywords", {}):
                name = report.nodeid.split("::")[-1]
                lines.append((status, ACCEPTANCE_LABELS.get(name, name)))
    if lines:
        terminalreporter.section("acceptance criteria")
        for status, label in sorted(lines, key=lambda t: t[1]):
            terminalreporter.write_line(f"{status}  {label}")
