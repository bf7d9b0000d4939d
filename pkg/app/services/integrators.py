from typing import Callable

import numpy as np

Derivative = Callable[[float, np.ndarray], np.ndarray]


def rk4_step(f: Derivative, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """Classic fourth-order Runge-Kutta step for y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_fixed(
    f: Derivative,
    y0: np.ndarray,
    times: np.ndarray,
    after_step: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Integrate on the given grid, returning y at every grid time (shape (len(times), *y0.shape))."""
    out = np.empty((len(times),) + y0.shape, dtype=np.result_type(y0, complex))
    y = np.array(y0, dtype=out.dtype)
    out[0] = y
    for j in range(len(times) - 1):
        y = rk4_step(f, times[j], y, times[j + 1] - times[j])
        if after_step is not None:
            y = after_step(y)
        out[j + 1] = y
    return out


def derivative_4th(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite differences along axis 0 on a uniform grid.

    Centered five-point stencil in the interior, one-sided five-point stencils
    on the first and last two samples. Needs at least five samples.
    """
    y = np.asarray(values)
    n = y.shape[0]
    if n < 5:
        raise ValueError("fourth-order differences need at least 5 samples")
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    d[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h)
    d[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h)
    d[-1] = (25.0 * y[-1] - 48.0 * y[-2] + 36.0 * y[-3] - 16.0 * y[-4] + 3.0 * y[-5]) / (12.0 * h)
    d[-2] = (3.0 * y[-1] + 10.0 * y[-2] - 18.0 * y[-3] + 6.0 * y[-4] - y[-5]) / (12.0 * h)
    return d
