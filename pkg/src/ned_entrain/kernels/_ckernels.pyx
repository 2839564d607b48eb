# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot numerical kernels.

Semantics mirror `_pykernels` exactly; see that module for the contracts.
Loops run per feature column over the batch axis so memory access stays
sequential on C-contiguous float64 arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log, exp, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()


def bn_train(
    double[:, ::1] x,
    double[::1] gamma,
    double[::1] beta,
    double[::1] running_mean,
    double[::1] running_var,
    double momentum,
    double eps,
):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] y_arr = np.empty((n, d), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] xhat_arr = np.empty((n, d), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] var_arr = np.empty(d, dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] xhat = xhat_arr
    cdef double[::1] var = var_arr
    # Row-streaming passes with per-column accumulators: x is C-contiguous,
    # so an inner loop over columns walks memory sequentially and vectorizes.
    cdef cnp.ndarray[double, ndim=1] mean_arr = np.zeros(d, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] inv_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] mean = mean_arr
    cdef double[::1] inv = inv_arr
    cdef Py_ssize_t i, j
    cdef double diff, var_update, xh
    for i in range(n):
        for j in range(d):
            mean[j] += x[i, j]
    for j in range(d):
        mean[j] /= n
        var[j] = 0.0
    for i in range(n):
        for j in range(d):
            diff = x[i, j] - mean[j]
            var[j] += diff * diff
    for j in range(d):
        var[j] /= n
        inv[j] = 1.0 / sqrt(var[j] + eps)
    for i in range(n):
        for j in range(d):
            xh = (x[i, j] - mean[j]) * inv[j]
            xhat[i, j] = xh
            y[i, j] = gamma[j] * xh + beta[j]
    for j in range(d):
        if n > 1:
            var_update = var[j] * (<double>n / (<double>n - 1.0))
        else:
            var_update = var[j]
        running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mean[j]
        running_var[j] = (1.0 - momentum) * running_var[j] + momentum * var_update
    return y_arr, xhat_arr, var_arr


def bn_eval(
    double[:, ::1] x,
    double[::1] gamma,
    double[::1] beta,
    double[::1] running_mean,
    double[::1] running_var,
    double eps,
):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] y_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef cnp.ndarray[double, ndim=1] inv_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] inv = inv_arr
    cdef Py_ssize_t i, j
    for j in range(d):
        inv[j] = 1.0 / sqrt(running_var[j] + eps)
    for i in range(n):
        for j in range(d):
            y[i, j] = gamma[j] * (x[i, j] - running_mean[j]) * inv[j] + beta[j]
    return y_arr


def bn_backward(
    double[:, ::1] dy,
    double[:, ::1] xhat,
    double[::1] gamma,
    double[::1] var,
    double eps,
):
    cdef Py_ssize_t n = dy.shape[0]
    cdef Py_ssize_t d = dy.shape[1]
    cdef cnp.ndarray[double, ndim=2] dx_arr = np.empty((n, d), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dgamma_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dbeta_arr = np.empty(d, dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[::1] dgamma = dgamma_arr
    cdef double[::1] dbeta = dbeta_arr
    cdef cnp.ndarray[double, ndim=1] sdx_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] sdxx_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] scale_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] sum_dxhat = sdx_arr
    cdef double[::1] sum_dxhat_xhat = sdxx_arr
    cdef double[::1] scale = scale_arr
    cdef Py_ssize_t i, j
    cdef double dxh
    for j in range(d):
        dgamma[j] = 0.0
        dbeta[j] = 0.0
    for i in range(n):
        for j in range(d):
            dbeta[j] += dy[i, j]
            dgamma[j] += dy[i, j] * xhat[i, j]
    for j in range(d):
        sum_dxhat[j] = gamma[j] * dbeta[j]
        sum_dxhat_xhat[j] = gamma[j] * dgamma[j]
        scale[j] = (1.0 / sqrt(var[j] + eps)) / n
    for i in range(n):
        for j in range(d):
            dxh = dy[i, j] * gamma[j]
            dx[i, j] = scale[j] * (n * dxh - sum_dxhat[j] - xhat[i, j] * sum_dxhat_xhat[j])
    return dx_arr, dgamma_arr, dbeta_arr


def relu(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] y_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(d):
            y[i, j] = x[i, j] if x[i, j] > 0.0 else 0.0
    return y_arr


def relu_backward(double[:, ::1] dy, double[:, ::1] y):
    cdef Py_ssize_t n = dy.shape[0]
    cdef Py_ssize_t d = dy.shape[1]
    cdef cnp.ndarray[double, ndim=2] dx_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef Py_ssize_t i, j
    cdef double g, act
    # Load both operands unconditionally so the select if-converts to a
    # vector blend instead of a branch around the gradient load.
    for i in range(n):
        for j in range(d):
            g = dy[i, j]
            act = y[i, j]
            dx[i, j] = g if act > 0.0 else 0.0
    return dx_arr


def smooth_l1(double[:, ::1] pred, double[:, ::1] target):
    cdef Py_ssize_t n = pred.shape[0]
    cdef Py_ssize_t d = pred.shape[1]
    cdef cnp.ndarray[double, ndim=2] grad_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, j
    cdef double total = 0.0
    cdef double dd, ad, size
    size = <double>(n * d)
    for i in range(n):
        for j in range(d):
            dd = pred[i, j] - target[i, j]
            ad = fabs(dd)
            if ad < 1.0:
                total += 0.5 * dd * dd
            else:
                total += ad - 0.5
            if dd > 1.0:
                grad[i, j] = 1.0 / size
            elif dd < -1.0:
                grad[i, j] = -1.0 / size
            else:
                grad[i, j] = dd / size
    return total / size, grad_arr


def kl_softmax(double[:, ::1] pred, double[:, ::1] target):
    cdef Py_ssize_t n = pred.shape[0]
    cdef Py_ssize_t d = pred.shape[1]
    cdef cnp.ndarray[double, ndim=2] grad_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef double *log_p = <double *> malloc(d * sizeof(double))
    cdef double *log_q = <double *> malloc(d * sizeof(double))
    cdef Py_ssize_t i, j
    cdef double pmax, qmax, psum, qsum, total, qv
    if log_p == NULL or log_q == NULL:
        if log_p != NULL:
            free(log_p)
        if log_q != NULL:
            free(log_q)
        raise MemoryError()
    total = 0.0
    try:
        for i in range(n):
            pmax = pred[i, 0]
            qmax = target[i, 0]
            for j in range(1, d):
                if pred[i, j] > pmax:
                    pmax = pred[i, j]
                if target[i, j] > qmax:
                    qmax = target[i, j]
            psum = 0.0
            qsum = 0.0
            for j in range(d):
                psum += exp(pred[i, j] - pmax)
                qsum += exp(target[i, j] - qmax)
            psum = log(psum)
            qsum = log(qsum)
            for j in range(d):
                log_p[j] = pred[i, j] - pmax - psum
                log_q[j] = target[i, j] - qmax - qsum
            for j in range(d):
                qv = exp(log_q[j])
                total += qv * (log_q[j] - log_p[j])
                grad[i, j] = (exp(log_p[j]) - qv) / n
    finally:
        free(log_p)
        free(log_q)
    return total / n, grad_arr


def adam_update(
    double[:, :] param,
    double[:, :] grad,
    double[:, :] m,
    double[:, :] v,
    int t,
    double lr,
    double beta1,
    double beta2,
    double eps,
):
    cdef Py_ssize_t n = param.shape[0]
    cdef Py_ssize_t d = param.shape[1]
    cdef double bc1 = 1.0 - beta1**t
    cdef double bc2 = 1.0 - beta2**t
    cdef Py_ssize_t i, j
    cdef double g, mhat, vhat
    for i in range(n):
        for j in range(d):
            g = grad[i, j]
            m[i, j] = beta1 * m[i, j] + (1.0 - beta1) * g
            v[i, j] = beta2 * v[i, j] + (1.0 - beta2) * g * g
            mhat = m[i, j] / bc1
            vhat = v[i, j] / bc2
            param[i, j] = param[i, j] - lr * mhat / (sqrt(vhat) + eps)
    return None


cdef double _interp_percentile(double *s, Py_ssize_t n, double q) noexcept:
    cdef double h = (n - 1) * q
    cdef Py_ssize_t lo = <Py_ssize_t>h
    cdef double frac = h - lo
    if lo + 1 < n:
        return s[lo] + frac * (s[lo + 1] - s[lo])
    return s[n - 1]


# Introsort specialized for doubles: libc qsort pays an indirect call per
# comparison, which dominates the functional computation on long utterances.
cdef void _insertion_sort(double *a, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(lo + 1, hi + 1):
        key = a[i]
        j = i - 1
        while j >= lo and a[j] > key:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


cdef void _sift_down(double *a, Py_ssize_t lo, Py_ssize_t start,
                     Py_ssize_t end) noexcept nogil:
    cdef Py_ssize_t root = start, child
    cdef double tmp
    while 2 * root - lo + 1 <= end:
        child = 2 * root - lo + 1
        if child + 1 <= end and a[child] < a[child + 1]:
            child += 1
        if a[root] < a[child]:
            tmp = a[root]
            a[root] = a[child]
            a[child] = tmp
            root = child
        else:
            return


cdef void _heapsort(double *a, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t start, end
    cdef double tmp
    start = lo + (hi - lo - 1) // 2
    while start >= lo:
        _sift_down(a, lo, start, hi)
        start -= 1
    end = hi
    while end > lo:
        tmp = a[end]
        a[end] = a[lo]
        a[lo] = tmp
        end -= 1
        _sift_down(a, lo, lo, end)


cdef void _introsort(double *a, Py_ssize_t lo, Py_ssize_t hi,
                     int depth) noexcept nogil:
    cdef Py_ssize_t mid, i, j
    cdef double pivot, tmp
    while hi - lo > 16:
        if depth == 0:
            _heapsort(a, lo, hi)
            return
        depth -= 1
        # median-of-three pivot, stored at lo
        mid = lo + (hi - lo) // 2
        if a[mid] < a[lo]:
            tmp = a[mid]; a[mid] = a[lo]; a[lo] = tmp
        if a[hi] < a[lo]:
            tmp = a[hi]; a[hi] = a[lo]; a[lo] = tmp
        if a[hi] < a[mid]:
            tmp = a[hi]; a[hi] = a[mid]; a[mid] = tmp
        pivot = a[mid]
        i = lo
        j = hi
        while True:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i >= j:
                break
            tmp = a[i]; a[i] = a[j]; a[j] = tmp
            i += 1
            j -= 1
        _introsort(a, lo, j, depth)
        lo = j + 1
    _insertion_sort(a, lo, hi)


cdef void _sort_doubles(double *a, Py_ssize_t n) noexcept nogil:
    cdef int depth = 2
    cdef Py_ssize_t m = n
    while m > 0:
        depth += 2
        m >>= 1
    if n > 1:
        _introsort(a, 0, n - 1, depth)


def column_functionals(double[:, ::1] frames):
    cdef Py_ssize_t n = frames.shape[0]
    cdef Py_ssize_t ncols = frames.shape[1]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(6 * ncols, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double *col = <double *> malloc(n * sizeof(double))
    cdef Py_ssize_t i, c, base
    cdef double mean, acc, diff, p1, p99
    if col == NULL:
        raise MemoryError()
    try:
        for c in range(ncols):
            acc = 0.0
            for i in range(n):
                col[i] = frames[i, c]
                acc += col[i]
            mean = acc / n
            acc = 0.0
            for i in range(n):
                diff = col[i] - mean
                acc += diff * diff
            _sort_doubles(col, n)
            p1 = _interp_percentile(col, n, 0.01)
            p99 = _interp_percentile(col, n, 0.99)
            base = 6 * c
            out[base] = mean
            out[base + 1] = _interp_percentile(col, n, 0.5)
            out[base + 2] = sqrt(acc / n)
            out[base + 3] = p1
            out[base + 4] = p99
            out[base + 5] = p99 - p1
    finally:
        free(col)
    return out_arr
