#pragma once

#include <cstddef>
#include <vector>

#include "hrank/certreal.hpp"

namespace hrank {

template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, const T& fill = T())
        : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    T& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> d_;
};

using RMatrix = Matrix<CertReal>;
using CMatrix = Matrix<CertComplex>;

RMatrix identity_real(std::size_t n, Bits prec);
CMatrix identity_complex(std::size_t n, Bits prec);
RMatrix operator*(const RMatrix& a, const RMatrix& b);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator-(const CMatrix& a, const CMatrix& b);
CMatrix adjoint(const CMatrix& a);
CertReal frobenius(const RMatrix& a);
CertReal frobenius(const CMatrix& a);
// Largest |entry| upper bound.
CertReal max_abs(const CMatrix& a);

// Approximate inverse X of a square real matrix together with a certified
// bound e >= ||I - X M||_F. When e < 1 the inverse exists and
// ||M^{-1}||_2 <= ||X||_F / (1 - e).
struct VerifiedInverse {
    RMatrix X;
    CertReal residual;  // upper bound of ||I - X M||_F
    CertReal x_norm;    // ||X||_F
};

// Throws SingularFrame when the residual bound does not drop below 1.
VerifiedInverse verified_inverse(const RMatrix& M);

// Certified lower bound of sigma_min(M).
CertReal sigma_min_lower(const VerifiedInverse& inv);

// Enclosure of M^{-1} b.
std::vector<CertReal> verified_solve(const VerifiedInverse& inv, const std::vector<CertReal>& b);

// Eigenvalues of a complex square matrix by Hessenberg reduction and shifted
// QR, in point arithmetic at the matrix precision (not certified).
std::vector<CertComplex> eigenvalues(const CMatrix& A);

// Singular values (descending), point arithmetic, via eigenvalues of A^H A.
std::vector<CertReal> singular_values(const CMatrix& A);

// Certified sigma_1 lower bound and sigma_2 upper bound, using
// sigma_2^2 <= ||A||_F^2 - ||A v||^2 for the unit vector v built from the
// largest row of A.
struct RankOneBound {
    CertReal sigma1_lower;
    CertReal sigma2_upper;
};
RankOneBound rank_one_bound(const CMatrix& A);

}  // namespace hrank
