#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "fas/errors.hpp"
#include "fas/linalg.hpp"

namespace fas {

namespace {

template <class T>
T sign_of(T magnitude, T s)
{
    return s >= T{0} ? std::fabs(magnitude) : -std::fabs(magnitude);
}

}  // namespace

EigenDecomposition jacobi_eigen(const MatrixLD& input, int max_sweeps)
{
    using T = long double;
    const std::size_t n = input.rows();
    if (n != input.cols())
        throw DomainError("jacobi_eigen: matrix must be square");

    MatrixLD a = input;
    MatrixLD v = MatrixLD::identity(n);
    std::vector<T> d(n), b(n), z(n, T{0});
    for (std::size_t i = 0; i < n; ++i)
        d[i] = b[i] = a(i, i);

    auto off_mass = [&] {
        T sm = 0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                sm += std::fabs(a(p, q));
        return sm;
    };

    int sweep = 1;
    bool converged = n <= 1;
    for (; sweep <= max_sweeps && !converged; ++sweep) {
        const T sm = off_mass();
        if (sm == T{0}) {
            converged = true;
            break;
        }
        const T tresh = sweep < 4 ? T{0.2} * sm / static_cast<T>(n * n) : T{0};
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const T g = 100 * std::fabs(a(p, q));
                if (sweep > 4 && std::fabs(d[p]) + g == std::fabs(d[p]) &&
                    std::fabs(d[q]) + g == std::fabs(d[q])) {
                    a(p, q) = 0;
                    continue;
                }
                if (std::fabs(a(p, q)) <= tresh)
                    continue;
                T h = d[q] - d[p];
                T t;
                if (std::fabs(h) + g == std::fabs(h)) {
                    t = a(p, q) / h;
                } else {
                    const T theta = T{0.5} * h / a(p, q);
                    t = T{1} / (std::fabs(theta) + std::sqrt(T{1} + theta * theta));
                    if (theta < 0)
                        t = -t;
                }
                const T c = T{1} / std::sqrt(1 + t * t);
                const T s = t * c;
                const T tau = s / (T{1} + c);
                h = t * a(p, q);
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a(p, q) = 0;
                auto rotate = [&](T& x, T& y) {
                    const T gx = x, hy = y;
                    x = gx - s * (hy + gx * tau);
                    y = hy + s * (gx - hy * tau);
                };
                for (std::size_t j = 0; j < p; ++j)
                    rotate(a(j, p), a(j, q));
                for (std::size_t j = p + 1; j < q; ++j)
                    rotate(a(p, j), a(j, q));
                for (std::size_t j = q + 1; j < n; ++j)
                    rotate(a(p, j), a(q, j));
                for (std::size_t j = 0; j < n; ++j)
                    rotate(v(j, p), v(j, q));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0;
        }
    }
    if (!converged && off_mass() == T{0})
        converged = true;

    T off = 0;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
            off += 2 * a(p, q) * a(p, q);
    if (!converged)
        throw NumericError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                               " sweeps",
                           static_cast<double>(std::sqrt(off)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return d[i] > d[j]; });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t l = 0; l < n; ++l) {
        out.values[l] = static_cast<double>(d[order[l]]);
        for (std::size_t k = 0; k < n; ++k)
            out.vectors(k, l) = static_cast<double>(v(k, order[l]));
    }
    out.sweeps = sweep - 1;
    out.off_diagonal = static_cast<double>(std::sqrt(off));
    return out;
}

EigenDecomposition jacobi_eigen(const Matrix& a, int max_sweeps)
{
    return jacobi_eigen(matrix_cast<long double>(a), max_sweeps);
}

template <class T>
void tridiagonal_ql(std::vector<T>& d, std::vector<T>& e, std::vector<T>* first)
{
    const std::size_t n = d.size();
    if (e.size() != n)
        throw DomainError("tridiagonal_ql: size mismatch");
    if (n == 0)
        return;
    if (first) {
        first->assign(n, T{0});
        (*first)[0] = T{1};
    }
    for (std::size_t i = 1; i < n; ++i)
        e[i - 1] = e[i];
    e[n - 1] = 0;

    const T eps = std::numeric_limits<T>::epsilon();
    // Off-diagonals below eps * ||T|| are dropped as well: the Householder
    // step is only normwise accurate, and a purely relative test can stall on
    // clusters of rounding-level eigenvalues.
    T norm = 0;
    for (std::size_t i = 0; i < n; ++i)
        norm = std::max(norm, std::fabs(d[i]) + std::fabs(e[i]));
    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const T dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= eps * dd || std::fabs(e[m]) <= eps * norm)
                    break;
            }
            if (m == l)
                break;
            if (++iter > 80)
                throw NumericError("tridiagonal_ql: too many iterations", static_cast<double>(std::fabs(e[l])));
            T g = (d[l + 1] - d[l]) / (T{2} * e[l]);
            T r = std::hypot(g, T{1});
            g = d[m] - d[l] + e[l] / (g + sign_of(r, g));
            T s = 1, c = 1, p = 0;
            bool deflated = false;
            for (std::size_t i = m; i-- > l;) {
                T f = s * e[i];
                const T bb = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == T{0}) {
                    d[i + 1] -= p;
                    e[m] = 0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T{2} * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                if (first) {
                    auto& z = *first;
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
            }
            if (deflated)
                continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0;
        } while (m != l);
    }
}

template <class T>
std::vector<T> symmetric_eigenvalues(BasicMatrix<T> a)
{
    const std::size_t n = a.rows();
    if (n != a.cols())
        throw DomainError("symmetric_eigenvalues: matrix must be square");
    std::vector<T> d(n), e(n, T{0});
    if (n == 0)
        return d;

    // Householder reduction on the full (kept symmetric) matrix so that every
    // inner loop runs along contiguous rows.
    std::vector<T> v(n), p(n), w(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t m = n - k - 1;  // length of the reflected vector
        T scale = 0;
        for (std::size_t i = 0; i < m; ++i)
            scale += std::fabs(a(k + 1 + i, k));
        if (scale == T{0}) {
            e[k + 1] = 0;
            continue;
        }
        T norm2 = 0;
        for (std::size_t i = 0; i < m; ++i) {
            v[i] = a(k + 1 + i, k) / scale;
            norm2 += v[i] * v[i];
        }
        const T alpha = -sign_of(std::sqrt(norm2), v[0]);
        e[k + 1] = alpha * scale;
        v[0] -= alpha;
        const T vtv = norm2 - T{2} * alpha * (v[0] + alpha) + alpha * alpha;
        if (vtv == T{0})
            continue;
        const T beta = T{2} / vtv;

        for (std::size_t i = 0; i < m; ++i) {
            const T* row = &a(k + 1 + i, k + 1);
            T acc = 0;
            for (std::size_t j = 0; j < m; ++j)
                acc += row[j] * v[j];
            p[i] = beta * acc;
        }
        T kk = 0;
        for (std::size_t i = 0; i < m; ++i)
            kk += v[i] * p[i];
        kk *= T{0.5} * beta;
        for (std::size_t i = 0; i < m; ++i)
            w[i] = p[i] - kk * v[i];
        for (std::size_t i = 0; i < m; ++i) {
            T* row = &a(k + 1 + i, k + 1);
            const T vi = v[i], wi = w[i];
            for (std::size_t j = 0; j < m; ++j)
                row[j] -= vi * w[j] + wi * v[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        d[i] = a(i, i);
    if (n >= 2)
        e[n - 1] = a(n - 1, n - 2);

    tridiagonal_ql(d, e);
    std::sort(d.begin(), d.end(), std::greater<T>());
    return d;
}

template <class T>
std::vector<T> symmetric_toeplitz_eigenvalues(std::span<const T> t)
{
    const std::size_t n = t.size();
    if (n <= 2) {
        BasicMatrix<T> a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a(i, j) = t[i > j ? i - j : j - i];
        return symmetric_eigenvalues(std::move(a));
    }
    auto entry = [&](std::size_t i, std::size_t j) { return t[i > j ? i - j : j - i]; };
    const std::size_t m = n / 2;
    const bool odd = (n % 2) != 0;

    // T12 J has entries T(i, n-1-j); symmetric part T11 + T12 J, skew part T11 - T12 J.
    BasicMatrix<T> sym(odd ? m + 1 : m, odd ? m + 1 : m);
    BasicMatrix<T> skew(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const T t11 = entry(i, j);
            const T t12j = entry(i, n - 1 - j);
            sym(i, j) = t11 + t12j;
            skew(i, j) = t11 - t12j;
        }
    }
    if (odd) {
        const T r2 = std::sqrt(T{2});
        for (std::size_t i = 0; i < m; ++i) {
            sym(i, m) = r2 * entry(i, m);
            sym(m, i) = sym(i, m);
        }
        sym(m, m) = t[0];
    }
    std::vector<T> a = symmetric_eigenvalues(std::move(sym));
    std::vector<T> b = symmetric_eigenvalues(std::move(skew));
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end(), std::greater<T>());
    return a;
}

template void tridiagonal_ql<double>(std::vector<double>&, std::vector<double>&, std::vector<double>*);
template void tridiagonal_ql<long double>(std::vector<long double>&, std::vector<long double>&,
                                          std::vector<long double>*);
template std::vector<double> symmetric_eigenvalues<double>(BasicMatrix<double>);
template std::vector<long double> symmetric_eigenvalues<long double>(BasicMatrix<long double>);
template std::vector<double> symmetric_toeplitz_eigenvalues<double>(std::span<const double>);
template std::vector<long double> symmetric_toeplitz_eigenvalues<long double>(std::span<const long double>);

}  // namespace fas
