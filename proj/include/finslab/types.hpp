#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace finslab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric matrix. Only the lower triangle of the input is read, so the
/// stored entries satisfy (i,j) == (j,i) bit for bit.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int d) : m_(Mat::Zero(d, d)) {}
    explicit SymMatrix(const Mat& m);

    static SymMatrix zero(int d) { return SymMatrix(d); }
    static SymMatrix identity(int d) { return SymMatrix(Mat::Identity(d, d)); }
    static SymMatrix outer(const Vec& a);             // a a^T
    static SymMatrix sym_outer(const Vec& a, const Vec& b);  // a b^T + b a^T

    int dim() const { return static_cast<int>(m_.rows()); }
    double operator()(int i, int j) const { return m_(i, j); }
    const Mat& mat() const { return m_; }

    double quad(const Vec& q) const { return q.dot(m_ * q); }
    double norm() const { return m_.norm(); }

    SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(m_ + o.m_); }
    SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(m_ - o.m_); }
    SymMatrix operator*(double s) const { return SymMatrix(m_ * s); }

private:
    Mat m_;
};

inline SymMatrix operator*(double s, const SymMatrix& x) { return x * s; }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wrong dimension, bad parameter, violated precondition.
class InputError : public Error {
public:
    using Error::Error;
};

/// Geometrically degenerate input (0 not interior, singular basis, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, failed brackets, diverging fields.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or data file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Seedable generator with a portable output sequence: mt19937_64 words, the
/// top 53 bits mapped to [0,1), Box-Muller for normals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [lo, hi].
    long long integer(long long lo, long long hi);
    double normal();
    Vec normal_vec(int d);
    Vec unit_vec(int d);
    SymMatrix normal_sym(int d);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InputError(msg);
}

inline void require_dim(const Vec& v, int d, const char* what) {
    if (v.size() != d)
        throw InputError(std::string(what) + ": dimension mismatch (expected " +
                         std::to_string(d) + ", got " + std::to_string(v.size()) + ")");
}

}  // namespace finslab
