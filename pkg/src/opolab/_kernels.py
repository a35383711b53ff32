"""Time-stepping kernels for the noise-locking loop.

Both backends consume the same precomputed per-step arrays and perform the
same floating-point operations in the same order, so they agree bitwise.
"""
import math

import numpy as np

from ._accel import NUMBA_AVAILABLE, njit

if NUMBA_AVAILABLE:
    from numba import types

    # numba's own cos/sin can differ from the C library by an ulp; bind the
    # libm symbols that math.cos/math.sin call so both backends round alike.
    _cos = types.ExternalFunction("cos", types.float64(types.float64))
    _sin = types.ExternalFunction("sin", types.float64(types.float64))
else:  # pragma: no cover
    _cos = math.cos
    _sin = math.sin


def _lock_loop(dither, reference, normals, disturbance, contrast, v_plus, v_minus,
               sigma, lp_coef, integ_step, theta0, out_theta, out_err, out_ctrl):
    """Run the loop in place; returns the number of steps completed.

    Per step: meter the homodyne noise power at the total phase, mix with the
    demodulation reference, low-pass, then integrate into the control phase.
    Stops early (returning the step index) if the state becomes non-finite.
    """
    n = dither.shape[0]
    n_dist = disturbance.shape[0]
    n_con = contrast.shape[0]
    ctrl = theta0
    y = 0.0
    for k in range(n):
        dist = disturbance[k] if n_dist > 1 else disturbance[0]
        con = contrast[k] if n_con > 1 else contrast[0]
        theta = ctrl + dither[k] + dist
        c = _cos(theta)
        s = _sin(theta)
        vp = 1.0 + con * (v_plus - 1.0)
        vm = 1.0 + con * (v_minus - 1.0)
        power = (vp * c * c + vm * s * s) * (1.0 + sigma * normals[k])
        y = y + lp_coef * (power * reference[k] - y)
        ctrl = ctrl - integ_step * y
        if not (math.isfinite(ctrl) and math.isfinite(y)):
            return k
        out_theta[k] = theta
        out_err[k] = y
        out_ctrl[k] = ctrl
    return n


lock_loop_numba = njit(_lock_loop)


def lock_loop_python(dither, reference, normals, disturbance, contrast, v_plus, v_minus,
                     sigma, lp_coef, integ_step, theta0, out_theta, out_err, out_ctrl):
    """Fallback with the same arithmetic as the compiled kernel, iterating over Python floats."""
    n = len(dither)
    if len(disturbance) == 1:
        disturbance = np.broadcast_to(disturbance, (n,))
    if len(contrast) == 1:
        contrast = np.broadcast_to(contrast, (n,))
    theta_buf = [0.0] * n
    err_buf = [0.0] * n
    ctrl_buf = [0.0] * n
    cos = math.cos
    sin = math.sin
    isfinite = math.isfinite
    ctrl = theta0
    y = 0.0
    done = n
    for k, (d, ref, z, dist, con) in enumerate(zip(dither.tolist(), reference.tolist(), normals.tolist(),
                                                   disturbance.tolist(), contrast.tolist())):
        theta = ctrl + d + dist
        c = cos(theta)
        s = sin(theta)
        vp = 1.0 + con * (v_plus - 1.0)
        vm = 1.0 + con * (v_minus - 1.0)
        power = (vp * c * c + vm * s * s) * (1.0 + sigma * z)
        y = y + lp_coef * (power * ref - y)
        ctrl = ctrl - integ_step * y
        if not (isfinite(ctrl) and isfinite(y)):
            done = k
            break
        theta_buf[k] = theta
        err_buf[k] = y
        ctrl_buf[k] = ctrl
    out_theta[:done] = theta_buf[:done]
    out_err[:done] = err_buf[:done]
    out_ctrl[:done] = ctrl_buf[:done]
    return done
