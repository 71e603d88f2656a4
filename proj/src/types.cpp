#include "finslab/types.hpp"

#include <cmath>
#include <numbers>

namespace finslab {

SymMatrix::SymMatrix(const Mat& m) : m_(m.rows(), m.cols()) {
    if (m.rows() != m.cols()) throw InputError("SymMatrix: matrix is not square");
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = j; i < m.rows(); ++i) {
            m_(i, j) = m(i, j);
            m_(j, i) = m(i, j);
        }
}

SymMatrix SymMatrix::outer(const Vec& a) { return SymMatrix(Mat(a * a.transpose())); }

SymMatrix SymMatrix::sym_outer(const Vec& a, const Vec& b) {
    return SymMatrix(Mat(a * b.transpose() + b * a.transpose()));
}

long long Rng::integer(long long lo, long long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long long>(engine_() % span);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

Vec Rng::normal_vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
}

Vec Rng::unit_vec(int d) {
    for (;;) {
        Vec v = normal_vec(d);
        const double n = v.norm();
        if (n > 1e-12) return v / n;
    }
}

SymMatrix Rng::normal_sym(int d) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) m(i, j) = normal();
    return SymMatrix(m);
}

}  // namespace finslab
