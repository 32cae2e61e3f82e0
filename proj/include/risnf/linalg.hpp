#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace risnf {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline cplx unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

inline bool all_finite(const CMat& m) { return m.allFinite(); }

/// log2 det of a Hermitian positive definite matrix through its Cholesky factor.
inline double log2det_hpd(const CMat& a) {
    Eigen::LLT<CMat> llt(a);
    if (llt.info() != Eigen::Success) throw std::runtime_error("log2det_hpd: matrix is not positive definite");
    const auto& l = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::log2(l(i, i).real());
    return 2.0 * acc;
}

/// Count of singular values strictly above rel_tol * sigma_max.
inline int numerical_rank(const CMat& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<CMat> svd(m);
    const RVec& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

inline RVec singular_values(const CMat& m) { return Eigen::JacobiSVD<CMat>(m).singularValues(); }

inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

} // namespace risnf
