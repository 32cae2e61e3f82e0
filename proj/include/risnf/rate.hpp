#pragma once

#include "risnf/channel.hpp"
#include "risnf/linalg.hpp"

#include <algorithm>
#include <stdexcept>

namespace risnf {

/// log2 det(I + H W W^H H^H / noise_var) in bits/s/Hz.
inline double achievable_rate(const CMat& h, const CMat& w, double noise_var) {
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) throw std::invalid_argument("achievable_rate: noise variance must be positive");
    if (h.cols() != w.rows()) throw std::invalid_argument("achievable_rate: shape mismatch between H and W");
    if (!h.allFinite() || !w.allFinite()) throw std::invalid_argument("achievable_rate: non-finite input");
    const CMat hw = h * w;
    const CMat k = CMat::Identity(h.rows(), h.rows()) + (hw * hw.adjoint()) / noise_var;
    return std::max(0.0, log2det_hpd(hermitian_part(k)));
}

/// Rate of RIS coefficient vectors for a fixed channel and precoder. G_bs_ris W is
/// formed once, so each call costs O(N_U M q) plus a q x q (or N_U x N_U) Cholesky.
class RateScorer {
public:
    RateScorer(const ChannelRealization& ch, const CMat& w, double noise_var)
        : g_ris_ue_(ch.g_ris_ue), gw_(ch.g_bs_ris * w), noise_var_(noise_var) {
        if (!(noise_var > 0.0)) throw std::invalid_argument("RateScorer: noise variance must be positive");
        if (ch.g_bs_ris.cols() != w.rows()) throw std::invalid_argument("RateScorer: precoder rows must equal N_B");
        ch.validate();
    }

    double operator()(const CVec& phi) const {
        if (phi.size() != gw_.rows()) throw std::invalid_argument("RateScorer: codeword length must equal M");
        const CMat b = g_ris_ue_ * (phi.asDiagonal() * gw_);
        CMat k;
        if (b.cols() < b.rows())
            k = CMat::Identity(b.cols(), b.cols()) + (b.adjoint() * b) / noise_var_;
        else
            k = CMat::Identity(b.rows(), b.rows()) + (b * b.adjoint()) / noise_var_;
        return std::max(0.0, log2det_hpd(k));
    }

private:
    CMat g_ris_ue_;
    CMat gw_;
    double noise_var_;
};

} // namespace risnf
