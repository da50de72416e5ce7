# cython: language_level=3
"""Compiled load-indicator iteration.

Mirrors ``_opt_load_py.opt_load`` operation for operation so the two
produce identical lambda trajectories.
"""
import numpy as np

from libc.math cimport pow, sqrt, log, fabs


cdef inline double _step_size(int schedule, double eps0, long i) nogil:
    if schedule == 0:
        return eps0
    elif schedule == 1:
        return eps0 / <double>i
    return eps0 / sqrt(<double>i)


cdef double _objective(const double[:, ::1] c, const double[::1] lam, double alpha,
                       double rho) noexcept nogil:
    cdef Py_ssize_t U = c.shape[0], B = c.shape[1], u, b
    cdef double total = 0.0, users = 0.0, m, ratio
    for b in range(B):
        total += lam[b]
    for u in range(U):
        m = 0.0
        for b in range(B):
            if c[u, b] > 0.0:
                ratio = c[u, b] / lam[b]
                if ratio > m:
                    m = ratio
        if alpha == 1.0:
            users += log(m)
        else:
            users += pow(m, rho - 1.0)
    if alpha == 1.0:
        return total + users
    return total + users / (rho - 1.0)


def objective(const double[:, ::1] rates, const double[::1] lam, double alpha):
    return _objective(rates, lam, alpha, 1.0 / alpha)


def opt_load(const double[:, ::1] rates, const double[:, ::1] rate_pow, const double[::1] lam0,
             double alpha, int schedule, double eps0, long start_iter,
             long max_steps, double tie_tol, double stop_tol, double floor,
             bint record_lambdas, double best_f, const double[::1] best_lam0):
    cdef Py_ssize_t U = rates.shape[0], B = rates.shape[1]
    cdef Py_ssize_t u, b, rep
    cdef long k, i, n = 0
    cdef double rho = 1.0 / alpha
    cdef double m, thresh, ratio, eps, f, gsq, g, move, new

    lam_arr = np.array(lam0, dtype=np.float64, copy=True)
    best_arr = np.array(best_lam0, dtype=np.float64, copy=True)
    lampow_arr = np.empty(B, dtype=np.float64)
    load_arr = np.empty(B, dtype=np.float64)
    steps_arr = np.empty(max_steps, dtype=np.float64)
    obj_arr = np.empty(max_steps, dtype=np.float64)
    norm_arr = np.empty(max_steps, dtype=np.float64)
    if record_lambdas:
        trace_arr = np.empty((max_steps, B), dtype=np.float64)
    else:
        trace_arr = np.empty((0, B), dtype=np.float64)

    cdef double[::1] lam = lam_arr
    cdef double[::1] best = best_arr
    cdef double[::1] lampow = lampow_arr
    cdef double[::1] load = load_arr
    cdef double[::1] steps = steps_arr
    cdef double[::1] obj = obj_arr
    cdef double[::1] norms = norm_arr
    cdef double[:, ::1] trace = trace_arr
    cdef bint stopped = False

    with nogil:
        for k in range(max_steps):
            i = start_iter + k
            eps = _step_size(schedule, eps0, i)
            f = _objective(rates, lam, alpha, rho)
            if record_lambdas:
                for b in range(B):
                    trace[k, b] = lam[b]
            if f < best_f:
                best_f = f
                for b in range(B):
                    best[b] = lam[b]
            for b in range(B):
                lampow[b] = pow(lam[b], rho)
                load[b] = 0.0
            for u in range(U):
                m = 0.0
                for b in range(B):
                    if rates[u, b] > 0.0:
                        ratio = rates[u, b] / lam[b]
                        if ratio > m:
                            m = ratio
                thresh = (1.0 - tie_tol) * m
                rep = 0
                for b in range(B):
                    if rates[u, b] > 0.0 and rates[u, b] / lam[b] >= thresh:
                        rep = b
                        break
                load[rep] += rate_pow[u, rep] / lampow[rep]
            gsq = 0.0
            move = 0.0
            for b in range(B):
                g = 1.0 - load[b]
                gsq += g * g
                new = lam[b] + eps * (load[b] - 1.0)
                if new < floor:
                    new = floor
                if fabs(new - lam[b]) > move:
                    move = fabs(new - lam[b])
                lam[b] = new
            steps[k] = eps
            obj[k] = f
            norms[k] = sqrt(gsq)
            n = k + 1
            if move < stop_tol:
                stopped = True
                break
        f = _objective(rates, lam, alpha, rho)
        if f < best_f:
            best_f = f
            for b in range(B):
                best[b] = lam[b]

    return (lam_arr, n, best_f, best_arr, steps_arr[:n], obj_arr[:n], norm_arr[:n],
            trace_arr[:n] if record_lambdas else None, stopped)
