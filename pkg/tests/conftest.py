ACCEPTANCE = {}


def pytest_collection_finish(session):
    for item in session.items:
        crit = item.get_closest_marker("criterion")
        if crit is not None:
            entry = ACCEPTANCE.setdefault(crit.args[0], {"title": crit.args[1], "outcomes": [], "items": 0})
            entry["items"] += 1


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, entry in ACCEPTANCE.items():
        if f"criterion_{key}_" in report.nodeid:
            entry["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        entry = ACCEPTANCE[key]
        outcomes = entry["outcomes"]
        if not outcomes:
            verdict = "NOT RUN"
        elif any(o != "passed" for o in outcomes):
            verdict = "FAIL"
        elif len(outcomes) < entry["items"]:
            verdict = "INCOMPLETE"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {key:>2}: {verdict}  {entry['title']}")
