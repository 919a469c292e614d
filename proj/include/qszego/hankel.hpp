#pragma once

// Finite sections of Hankel, shifted Hankel and Toeplitz operators on L^2_+.
//
// Antilinear operators are stored as coefficient matrices A acting by
// h -> A * conj(h). Composition rules:
//   (linear B) o (antilinear A)  has matrix  B * A
//   (antilinear A) o (linear B)  has matrix  A * conj(B)
// so every spectral question reduces to ordinary complex linear algebra.

#include <Eigen/Dense>
#include <vector>

#include "qszego/spectrum.hpp"

namespace qszego {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Complex symmetric matrix A with action h -> A conj(h).
class AntilinearHankel {
public:
    AntilinearHankel() = default;
    /// Throws std::invalid_argument unless A is square and exactly symmetric.
    explicit AntilinearHankel(Matrix a);

    const Matrix& matrix() const { return a_; }
    Eigen::Index dim() const { return a_.rows(); }

private:
    Matrix a_;
};

/// Linear operator with entry (j,k) = b(j-k).
class ToeplitzOp {
public:
    ToeplitzOp() = default;
    explicit ToeplitzOp(Matrix t) : t_(std::move(t)) {}

    const Matrix& matrix() const { return t_; }
    Eigen::Index dim() const { return t_.rows(); }

private:
    Matrix t_;
};

/// Singular values sigma_1 >= sigma_2 >= ... >= 0.
struct SigmaSpectrum {
    std::vector<double> values;

    double largest() const { return values.empty() ? 0.0 : values.front(); }
    double sum() const;
    double sum_of_squares() const;
};

/// H_u on modes 0..N-1: A(j,k) = u(j+k). Requires N <= cutoff + 1.
AntilinearHankel hankel_matrix(const SpectrumPlus& u, std::size_t N);

/// K_u = S* H_u on modes 0..N-1: A(j,k) = u(j+k+1).
AntilinearHankel k_matrix(const SpectrumPlus& u, std::size_t N);

/// T_b on modes 0..N-1. Requires N <= b.cutoff() + 1.
ToeplitzOp toeplitz_matrix(const TwoSidedSpectrum& b, std::size_t N);

/// B_u = -i (T_{conj(J) u} + T_{J conj(u)}), the skew-adjoint half of the Lax pair.
ToeplitzOp b_u_matrix(const SpectrumPlus& u, std::size_t N);
ToeplitzOp b_u_matrix(const SpectrumPlus& u, cplx J, std::size_t N);

/// Singular values of A; for symmetric A their squares are the eigenvalues of
/// the linear operator K^2 = A conj(A). Throws std::runtime_error if the SVD
/// does not converge.
SigmaSpectrum sigma_spectrum(const AntilinearHankel& K);

/// Eigenvalues of A conj(A) from a general (non-Hermitian) eigensolver, sorted
/// descending, real parts only. Independent cross-check of sigma_spectrum.
std::vector<double> k_squared_eigenvalues(const AntilinearHankel& K);

/// sigma_1(H_u) at section size N; a lower bound for the BMO norm of u.
double bmo_proxy(const SpectrumPlus& u, std::size_t N);

/// sum_k sigma_k.
double trace_norm(const AntilinearHankel& K);

/// A conj(h). Throws std::invalid_argument on a dimension mismatch.
Vector apply_antilinear(const AntilinearHankel& A, const Vector& h);

/// Matrix of (linear B) o (antilinear A).
Matrix compose(const ToeplitzOp& B, const AntilinearHankel& A);
/// Matrix of (antilinear A) o (linear B).
Matrix compose(const AntilinearHankel& A, const ToeplitzOp& B);

/// Coefficients of u as an Eigen vector of length N (zero beyond the cutoff).
Vector to_vector(const SpectrumPlus& u, std::size_t N);

}  // namespace qszego
