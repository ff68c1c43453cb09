"""Collects one verdict line per acceptance criterion."""
RESULTS = {}


def record(number, title, ok, detail):
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: " \
           f"{detail}"
    RESULTS[number] = line
    print(line)
    return ok
