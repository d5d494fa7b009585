import sys


def _acceptance_module():
    for name, mod in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance" and hasattr(mod, "RESULTS"):
            return mod
    return None


def pytest_terminal_summary(terminalreporter):
    acc = _acceptance_module()
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(acc.RESULTS, key=lambda n: (int(str(n).rstrip("s")), str(n))):
        name, passed, detail = acc.RESULTS[num]
        terminalreporter.write_line(acc.format_line(num, name, passed, detail))
