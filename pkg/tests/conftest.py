import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

if not os.environ.get("STRUCTODE_CACHE"):
    # keep generated reference traces out of the user's home cache
    os.environ["STRUCTODE_CACHE"] = tempfile.mkdtemp(prefix="structode-cache-")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results, key=int):
        terminalreporter.write_line(results[cid])
