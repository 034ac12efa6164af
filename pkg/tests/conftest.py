import numpy as np

ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    """Collect one pass/fail line per acceptance criterion check."""
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"[{label}] {status}: {detail}")
    assert ok, f"{label} failed: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def param_vector(params):
    return np.concatenate([p.value.ravel() for p in params])


def set_param_vector(params, vec):
    off = 0
    for p in params:
        n = p.value.size
        p.value[...] = vec[off:off + n].reshape(p.value.shape)
        off += n


def grad_vector(params):
    return np.concatenate([p.grad.ravel() for p in params])


def central_differences(loss_fn, params, coords, h=1e-6):
    """Finite-difference gradient of loss_fn() at the given flat coordinates."""
    vec = param_vector(params)
    out = np.empty(len(coords))
    for i, c in enumerate(coords):
        orig = vec[c]
        vec[c] = orig + h
        set_param_vector(params, vec)
        lp = loss_fn()
        vec[c] = orig - h
        set_param_vector(params, vec)
        lm = loss_fn()
        vec[c] = orig
        out[i] = (lp - lm) / (2 * h)
    set_param_vector(params, vec)
    return out


def relative_error(a, b, floor=1e-8):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
