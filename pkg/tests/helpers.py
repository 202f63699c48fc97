"""Independent numerical oracles shared by the tests."""
import numpy as np


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of scalar ``f`` at flat vector ``x``."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        old = x[i]
        x[i] = old + h
        fp = f(x)
        x[i] = old - h
        fm = f(x)
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b):
    a = np.ravel(a)
    b = np.ravel(b)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / denom)


def flat(arrays):
    return np.concatenate([np.ravel(a) for a in arrays])


# acceptance verdicts, printed at the end of the session by conftest.py
ACCEPTANCE: dict[str, tuple[bool | None, str]] = {}


def record(criterion: str, ok: bool | None, detail: str) -> None:
    """Store and print one verdict line; ``ok=None`` means not run."""
    ACCEPTANCE[criterion] = (ok, detail)
    print(verdict_line(criterion, ok, detail))


def verdict_line(criterion: str, ok: bool | None, detail: str) -> str:
    tag = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    return f"criterion {criterion}: {tag}  {detail}"
