import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance-criteria verdict lines after the test summary."""
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            lines = getattr(mod, "RESULTS", [])
            if lines:
                terminalreporter.section("acceptance criteria")
                for line in lines:
                    terminalreporter.write_line(line)
            break
