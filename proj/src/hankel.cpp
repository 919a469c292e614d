#include "qszego/hankel.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qszego {

namespace {

void require_section(std::size_t N, std::size_t cutoff, const char* what) {
    if (N > cutoff + 1) {
        throw std::invalid_argument(std::string(what) + ": section size " + std::to_string(N) +
                                    " exceeds available coefficients (" +
                                    std::to_string(cutoff + 1) + ")");
    }
}

cplx coeff_or_zero(const SpectrumPlus& u, std::size_t n) {
    return n <= u.cutoff() ? u[n] : cplx{};
}

}  // namespace

AntilinearHankel::AntilinearHankel(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols()) throw std::invalid_argument("AntilinearHankel: matrix not square");
    if (a_ != a_.transpose()) throw std::invalid_argument("AntilinearHankel: matrix not symmetric");
}

double SigmaSpectrum::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

double SigmaSpectrum::sum_of_squares() const {
    return std::accumulate(values.begin(), values.end(), 0.0,
                           [](double acc, double s) { return acc + s * s; });
}

AntilinearHankel hankel_matrix(const SpectrumPlus& u, std::size_t N) {
    require_section(N, u.cutoff(), "hankel_matrix");
    const auto n = static_cast<Eigen::Index>(N);
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) a(j, k) = coeff_or_zero(u, static_cast<std::size_t>(j + k));
    return AntilinearHankel(std::move(a));
}

AntilinearHankel k_matrix(const SpectrumPlus& u, std::size_t N) {
    require_section(N, u.cutoff(), "k_matrix");
    const auto n = static_cast<Eigen::Index>(N);
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            a(j, k) = coeff_or_zero(u, static_cast<std::size_t>(j + k + 1));
    return AntilinearHankel(std::move(a));
}

ToeplitzOp toeplitz_matrix(const TwoSidedSpectrum& b, std::size_t N) {
    require_section(N, b.cutoff(), "toeplitz_matrix");
    const auto n = static_cast<Eigen::Index>(N);
    Matrix t(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) t(j, k) = b.at(static_cast<long>(j - k));
    return ToeplitzOp(std::move(t));
}

ToeplitzOp b_u_matrix(const SpectrumPlus& u, std::size_t N) { return b_u_matrix(u, compute_J(u), N); }

ToeplitzOp b_u_matrix(const SpectrumPlus& u, cplx J, std::size_t N) {
    require_section(N, u.cutoff(), "b_u_matrix");
    const auto n = static_cast<Eigen::Index>(N);
    const cplx minus_i{0.0, -1.0};
    Matrix b = Matrix::Zero(n, n);
    // Lower triangle from T_{conj(J) u}, upper from T_{J conj(u)}; the diagonal gets both.
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k <= j; ++k) b(j, k) += std::conj(J) * u[static_cast<std::size_t>(j - k)];
        for (Eigen::Index k = j; k < n; ++k) b(j, k) += J * std::conj(u[static_cast<std::size_t>(k - j)]);
    }
    return ToeplitzOp(minus_i * b);
}

SigmaSpectrum sigma_spectrum(const AntilinearHankel& K) {
    SigmaSpectrum out;
    if (K.dim() == 0) return out;
    Eigen::BDCSVD<Matrix> svd(K.matrix());
    if (svd.info() != Eigen::Success) throw std::runtime_error("sigma_spectrum: SVD did not converge");
    const auto& sv = svd.singularValues();
    out.values.assign(sv.data(), sv.data() + sv.size());
    std::sort(out.values.begin(), out.values.end(), std::greater<>());
    return out;
}

std::vector<double> k_squared_eigenvalues(const AntilinearHankel& K) {
    const Matrix& a = K.matrix();
    Eigen::ComplexEigenSolver<Matrix> es(a * a.conjugate(), false);
    if (es.info() != Eigen::Success) throw std::runtime_error("k_squared_eigenvalues: eigensolver failed");
    std::vector<double> ev(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index i = 0; i < a.rows(); ++i) ev[static_cast<std::size_t>(i)] = es.eigenvalues()(i).real();
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

double bmo_proxy(const SpectrumPlus& u, std::size_t N) {
    if (N == 0) return 0.0;
    return sigma_spectrum(hankel_matrix(u, N)).largest();
}

double trace_norm(const AntilinearHankel& K) { return sigma_spectrum(K).sum(); }

Vector apply_antilinear(const AntilinearHankel& A, const Vector& h) {
    if (h.size() != A.dim()) {
        throw std::invalid_argument("apply_antilinear: dimension mismatch (" + std::to_string(h.size()) +
                                    " vs " + std::to_string(A.dim()) + ")");
    }
    return A.matrix() * h.conjugate();
}

Matrix compose(const ToeplitzOp& B, const AntilinearHankel& A) { return B.matrix() * A.matrix(); }

Matrix compose(const AntilinearHankel& A, const ToeplitzOp& B) {
    return A.matrix() * B.matrix().conjugate();
}

Vector to_vector(const SpectrumPlus& u, std::size_t N) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(N));
    for (std::size_t n = 0; n < N && n <= u.cutoff(); ++n) v(static_cast<Eigen::Index>(n)) = u[n];
    return v;
}

}  // namespace qszego
