import functools

# criterion number -> (title, passed, detail); filled by tests marked with @criterion
ACCEPTANCE = {}


def criterion(number, title):
    """Record the outcome of an acceptance test for the end-of-run summary."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as e:
                first = str(e).splitlines()[0] if str(e) else ""
                ACCEPTANCE[number] = (title, False, f"{type(e).__name__}: {first}")
                raise
            ACCEPTANCE[number] = (title, True, detail or "")
        return run

    return wrap


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
