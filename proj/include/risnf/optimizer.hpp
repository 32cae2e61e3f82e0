#pragma once

#include "risnf/channel.hpp"
#include "risnf/codebook.hpp"
#include "risnf/linalg.hpp"
#include "risnf/rate.hpp"
#include "risnf/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace risnf {

struct Precoder {
    CMat w;             ///< N_B x q
    double p_max = 1.0; ///< watts
    double mu = 0.0;    ///< multiplier of the power constraint at the solution
};

struct Combiner {
    CMat u; ///< N_U x q
};

/// (U^H H W - I)(U^H H W - I)^H + noise_var U^H U.
inline CMat mse_matrix(const CMat& h, const CMat& w, const CMat& u, double noise_var) {
    if (h.cols() != w.rows() || h.rows() != u.rows() || u.cols() != w.cols())
        throw std::invalid_argument("mse_matrix: shape mismatch");
    const Eigen::Index q = w.cols();
    const CMat d = u.adjoint() * h * w - CMat::Identity(q, q);
    return hermitian_part(d * d.adjoint() + noise_var * (u.adjoint() * u));
}

/// MMSE combiner (H W W^H H^H + noise_var I)^{-1} H W.
inline Combiner optimal_combiner(const CMat& h, const CMat& w, double noise_var) {
    if (!(noise_var > 0.0)) throw std::invalid_argument("optimal_combiner: noise variance must be positive");
    if (h.cols() != w.rows()) throw std::invalid_argument("optimal_combiner: shape mismatch");
    const CMat hw = h * w;
    const CMat k = hermitian_part(hw * hw.adjoint()) + noise_var * CMat::Identity(h.rows(), h.rows());
    return {k.llt().solve(hw)};
}

/// F = E^{-1}; E must be Hermitian positive definite.
inline CMat weight_update(const CMat& e) {
    if (e.rows() != e.cols()) throw std::invalid_argument("weight_update: E must be square");
    const double scale = std::max(e.norm(), std::numeric_limits<double>::min());
    if ((e - e.adjoint()).norm() > 1e-10 * scale) throw std::invalid_argument("weight_update: E is not Hermitian");
    const CMat eh = hermitian_part(e);
    Eigen::SelfAdjointEigenSolver<CMat> es(eh, Eigen::EigenvaluesOnly);
    const RVec& ev = es.eigenvalues();
    if (ev.size() == 0 || ev(0) <= 1e-14 * ev(ev.size() - 1))
        throw std::runtime_error("weight_update: MSE matrix is singular (too many streams for the channel?)");
    Eigen::LLT<CMat> llt(eh);
    if (llt.info() != Eigen::Success) throw std::runtime_error("weight_update: MSE matrix is not positive definite");
    return hermitian_part(llt.solve(CMat::Identity(e.rows(), e.cols())));
}

/// log|F| - Tr(F E) in nats; the WMMSE surrogate whose maximizer over F is E^{-1}.
inline double wmmse_surrogate(const CMat& f, const CMat& e) {
    Eigen::LLT<CMat> llt(hermitian_part(f));
    if (llt.info() != Eigen::Success) throw std::runtime_error("wmmse_surrogate: F is not positive definite");
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
    return logdet - (f * e).trace().real();
}

struct PrecoderProblem {
    CMat a; ///< H^H U F U^H H
    CMat b; ///< H^H U F
};

inline PrecoderProblem precoder_problem(const CMat& h, const CMat& u, const CMat& f) {
    const CMat hu = h.adjoint() * u;
    const CMat b = hu * f;
    return {hermitian_part(b * hu.adjoint()), b};
}

/// Minimizes Tr(W^H A W) - 2 Re Tr(F U^H H W) subject to ||W||_F^2 <= p_max.
///
/// The minimizer is W(mu) = (A + mu I)^{-1} H^H U F. mu = 0 (minimum-norm solution)
/// when that already meets the budget; otherwise ||W(mu)||_F^2 = p_max is solved
/// by bisection on mu in the eigenbasis of A.
inline Precoder solve_precoder(const CMat& h, const CMat& u, const CMat& f, double p_max, int max_bisections = 400) {
    if (!(p_max > 0.0)) throw std::invalid_argument("solve_precoder: power budget must be positive");
    if (h.rows() != u.rows() || u.cols() != f.rows() || f.rows() != f.cols())
        throw std::invalid_argument("solve_precoder: shape mismatch");
    const auto prob = precoder_problem(h, u, f);
    const Eigen::Index n = prob.a.rows();
    Eigen::SelfAdjointEigenSolver<CMat> es(prob.a);
    if (es.info() != Eigen::Success) throw std::runtime_error("solve_precoder: eigendecomposition failed");
    const RVec lam = es.eigenvalues().cwiseMax(0.0);
    const CMat c = es.eigenvectors().adjoint() * prob.b;
    RVec weight(n);
    for (Eigen::Index i = 0; i < n; ++i) weight(i) = c.row(i).squaredNorm();

    const double lam_max = lam.size() ? lam.maxCoeff() : 0.0;
    const double cutoff = 1e-12 * lam_max;
    auto norm2 = [&](double mu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = lam(i) + mu;
            if (mu == 0.0 && lam(i) <= cutoff) continue;
            s += weight(i) / (d * d);
        }
        return s;
    };
    auto build = [&](double mu) {
        CMat scaled = c;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = lam(i) + mu;
            if (mu == 0.0 && lam(i) <= cutoff) scaled.row(i).setZero();
            else scaled.row(i) /= d;
        }
        return CMat(es.eigenvectors() * scaled);
    };

    Precoder out;
    out.p_max = p_max;
    if (prob.b.norm() == 0.0) {
        out.w = CMat::Zero(n, f.cols());
        return out;
    }
    if (lam_max > 0.0 && norm2(0.0) <= p_max) {
        out.w = build(0.0);
        return out;
    }
    double lo = 0.0;
    double hi = std::sqrt(weight.sum() / p_max);
    while (norm2(hi) > p_max) hi *= 2.0;
    int it = 0;
    for (; it < max_bisections && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (norm2(mid) > p_max ? lo : hi) = mid;
    }
    if (it == max_bisections) throw std::runtime_error("solve_precoder: bisection on the power multiplier did not converge");
    out.mu = hi;
    out.w = build(hi);
    return out;
}

/// Training procedure used inside the alternating optimization.
enum class TrainingScheme { Angular, Hierarchical, TwoStage };

inline const char* to_string(TrainingScheme s) {
    switch (s) {
    case TrainingScheme::Angular: return "angular";
    case TrainingScheme::Hierarchical: return "hierarchical";
    case TrainingScheme::TwoStage: return "two-stage";
    }
    return "?";
}

inline TrainingScheme default_scheme(ModelTag t) {
    switch (t) {
    case ModelTag::FF: return TrainingScheme::Angular;
    case ModelTag::NN: return TrainingScheme::Hierarchical;
    default: return TrainingScheme::TwoStage;
    }
}

/// A channel model paired with the training scheme that designs the RIS for it.
struct Design {
    ModelTag model = ModelTag::NN;
    TrainingScheme scheme = TrainingScheme::Hierarchical;

    std::string label() const {
        if (scheme == default_scheme(model)) return to_string(model);
        return std::string(to_string(model)) + "-" + to_string(scheme);
    }
};

inline std::optional<Design> parse_design(std::string_view s) {
    for (ModelTag t : {ModelTag::FF, ModelTag::NF, ModelTag::FN, ModelTag::NN})
        for (TrainingScheme sc : {TrainingScheme::Angular, TrainingScheme::Hierarchical, TrainingScheme::TwoStage}) {
            const Design d{t, sc};
            if (d.label() == s) return d;
        }
    return std::nullopt;
}

/// Stream count: the user's antennas capped by the cascaded rank bound of the model
/// (paths of the far-field links, or min{N_B, N_U, M} when both links are near-field).
inline int default_streams(ModelTag t, const SystemGeometry& g, int paths_bs_ris, int paths_ris_ue) {
    int bound = std::min({g.n_bs(), g.n_ue(), g.n_ris()});
    if (!bs_link_is_near(t)) bound = std::min(bound, paths_bs_ris);
    if (!ue_link_is_near(t)) bound = std::min(bound, paths_ris_ue);
    return std::max(1, std::min(g.n_ue(), bound));
}

/// Matched filter on the first q columns of H^H, scaled to the full budget.
inline CMat initial_precoder(const CMat& h, int q, double p_max) {
    const Eigen::Index n_b = h.cols();
    CMat w = CMat::Zero(n_b, q);
    const CMat hh = h.adjoint();
    for (int k = 0; k < q && k < hh.cols(); ++k) w.col(k) = hh.col(k);
    if (w.norm() == 0.0)
        for (int k = 0; k < q && k < n_b; ++k) w(k, k) = 1.0;
    return std::sqrt(p_max) / w.norm() * w;
}

struct AOConfig {
    Design design;
    SamplingGrid range_bs;
    SamplingGrid range_ue;
    TrainingBudget budget;
    double p_max = 1.0;
    double noise_var = 1.0;
    int max_iterations = 20; ///< T
    double tolerance = 1e-4; ///< zeta
    int streams = 1;         ///< q
};

struct AOTraceRow {
    int iteration = 0;
    double rate = 0.0;
    double gamma = 0.0;
    std::uint64_t evaluations = 0;
};

struct AOState {
    Precoder precoder;
    Combiner combiner;
    Codeword phase;
    CMat weight;
    std::vector<double> rate_history;
    double gamma = std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::uint64_t evaluations = 0;           ///< cumulative over all training passes
    std::uint64_t evaluations_per_pass = 0;  ///< cost of one training pass
    std::vector<AOTraceRow> trace;
    std::vector<std::string> diagnostics;
};

template <CodewordScorer S>
TrainingReport run_training(const S& scorer, const SystemGeometry& g, const AOConfig& cfg) {
    switch (cfg.design.scheme) {
    case TrainingScheme::Angular: return angular_sweep(scorer, g);
    case TrainingScheme::Hierarchical: return hierarchical_nn(scorer, g, cfg.range_bs, cfg.range_ue, cfg.budget);
    case TrainingScheme::TwoStage: {
        const ModelTag side = cfg.design.model == ModelTag::FN ? ModelTag::FN : ModelTag::NF;
        return two_stage_hybrid(scorer, g, side == ModelTag::NF ? cfg.range_bs : cfg.range_ue, cfg.budget, side);
    }
    }
    throw std::invalid_argument("run_training: unknown scheme");
}

/// Alternating optimization: RIS by training, combiner in closed form, MSE weight
/// F = E^{-1}, precoder from the weighted-MSE subproblem. Stops after T iterations or
/// once the relative rate change drops below the tolerance.
///
/// A training pass that cannot beat the current rate keeps the current RIS vector,
/// so the rate history never decreases.
inline AOState ao_loop(const ChannelRealization& ch, const SystemGeometry& g, const AOConfig& cfg) {
    ch.validate();
    if (cfg.streams < 1) throw std::invalid_argument("ao_loop: stream count must be >= 1");
    if (cfg.streams > std::min(ch.g_bs_ris.cols(), ch.g_ris_ue.rows()))
        throw std::invalid_argument("ao_loop: " + std::to_string(cfg.streams) + " streams exceed min(N_B, N_U)");
    if (cfg.max_iterations < 0) throw std::invalid_argument("ao_loop: negative iteration limit");
    AOState st;
    const Eigen::Index m = ch.ris_elements();
    st.phase.coeffs = CVec::Ones(m);
    CMat h = cascade(ch, st.phase.coeffs);
    st.precoder.p_max = cfg.p_max;
    st.precoder.w = initial_precoder(h, cfg.streams, cfg.p_max);
    st.combiner = optimal_combiner(h, st.precoder.w, cfg.noise_var);
    st.weight = weight_update(mse_matrix(h, st.precoder.w, st.combiner.u, cfg.noise_var));
    st.rate_history.push_back(achievable_rate(h, st.precoder.w, cfg.noise_var));
    st.trace.push_back({0, st.rate_history.back(), st.gamma, 0});

    for (int t = 0; t < cfg.max_iterations; ++t) {
        const double prev = st.rate_history.back();
        const RateScorer scorer(ch, st.precoder.w, cfg.noise_var);
        const TrainingReport rep = run_training(scorer, g, cfg);
        st.evaluations += rep.evaluations;
        st.evaluations_per_pass = rep.evaluations;
        if (rep.best_rate > prev) st.phase = rep.best_codeword;
        h = cascade(ch, st.phase.coeffs);

        st.combiner = optimal_combiner(h, st.precoder.w, cfg.noise_var);
        st.weight = weight_update(mse_matrix(h, st.precoder.w, st.combiner.u, cfg.noise_var));
        st.precoder = solve_precoder(h, st.combiner.u, st.weight, cfg.p_max);

        const double rate = achievable_rate(h, st.precoder.w, cfg.noise_var);
        if (rate < prev - 1e-6)
            st.diagnostics.push_back("iteration " + std::to_string(t + 1) + ": rate decreased by " + std::to_string(prev - rate));
        st.gamma = prev != 0.0 ? std::abs(rate - prev) / std::abs(prev)
                               : (rate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        st.rate_history.push_back(rate);
        st.iterations = t + 1;
        st.trace.push_back({st.iterations, rate, st.gamma, st.evaluations});
        if (st.gamma < cfg.tolerance) break;
    }
    st.combiner = optimal_combiner(h, st.precoder.w, cfg.noise_var);
    return st;
}

/// CSV: iteration,rate,gamma,evaluations.
inline void write_ao_trace_csv(std::ostream& os, const AOState& st) {
    os << "iteration,rate,gamma,evaluations\n";
    const auto prec = os.precision(12);
    for (const auto& r : st.trace) os << r.iteration << ',' << r.rate << ',' << r.gamma << ',' << r.evaluations << '\n';
    os.precision(prec);
}

} // namespace risnf
