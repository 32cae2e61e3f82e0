#pragma once

#include "risnf/codebook.hpp"
#include "risnf/geometry.hpp"
#include "risnf/linalg.hpp"

#include <array>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace risnf {

/// Anything that scores an RIS coefficient vector; the training routines only
/// ever see the score, never the channel.
template <class S>
concept CodewordScorer = requires(const S& s, const CVec& phi) {
    { s(phi) } -> std::convertible_to<double>;
};

struct TrainingBudget {
    int max_layers = 12;
    int s_x = 2;
    int s_y = 2;

    void validate(int min_layers = 1) const {
        if (max_layers < min_layers) throw std::invalid_argument("training budget: too few layers");
        if (s_x < 1 || s_y < 1) throw std::invalid_argument("training budget: samples per layer must be >= 1");
    }
    std::uint64_t points_per_range() const { return static_cast<std::uint64_t>(s_x) * s_y; }
};

/// Per-layer outcome. For sweeps `first`/`second` hold <m_x, m_y>; for hierarchical
/// layers they hold the chosen <i, j> sub-range pair (second = -1 when one side only).
struct LayerRecord {
    int layer = 0;
    int first = -1;
    int second = -1;
    double best_rate = 0.0;
    std::uint64_t cumulative_evaluations = 0;
};

struct TrainingReport {
    Codeword best_codeword;
    double best_rate = -std::numeric_limits<double>::infinity();
    std::uint64_t evaluations = 0;
    std::vector<LayerRecord> layer_trace;
};

/// Closed-form training overheads (number of codewords scored).
namespace overhead {
inline std::uint64_t pow4(int e) { return std::uint64_t{1} << (2 * e); }
inline std::uint64_t angular(int m) { return static_cast<std::uint64_t>(m); }
inline std::uint64_t hierarchical(int layers, int s_x, int s_y) {
    const std::uint64_t s = static_cast<std::uint64_t>(s_x) * s_y;
    return 16u * static_cast<std::uint64_t>(layers) * s * s;
}
/// Nominal exhaustive-search count 4^{L+1} (S_x S_y)^2; equals nn_lattice only for L = 1.
inline std::uint64_t hierarchical_es(int layers, int s_x, int s_y) {
    const std::uint64_t s = static_cast<std::uint64_t>(s_x) * s_y;
    return pow4(layers + 1) * s * s;
}
/// Size of the NN codebook on the final-resolution lattice, (4^L S_x S_y)^2.
inline std::uint64_t nn_lattice(int layers, int s_x, int s_y) {
    const std::uint64_t per_side = pow4(layers) * static_cast<std::uint64_t>(s_x) * s_y;
    return per_side * per_side;
}
inline std::uint64_t two_stage(int m, int layers, int s_x, int s_y) {
    return static_cast<std::uint64_t>(m) + 4u * static_cast<std::uint64_t>(layers) * s_x * s_y;
}
inline std::uint64_t hybrid_es(int m, int layers, int s_x, int s_y) {
    return static_cast<std::uint64_t>(m) * 4u * static_cast<std::uint64_t>(layers) * s_x * s_y;
}
} // namespace overhead

namespace detail {

/// Running argmax with lowest-index tie-break (strict improvement only).
struct Argmax {
    Codeword best;
    double rate = -std::numeric_limits<double>::infinity();
    bool any = false;

    bool offer(const CVec& coeffs, const Provenance& prov, double r) {
        if (!any || r > rate) {
            best.coeffs = coeffs;
            best.provenance = prov;
            rate = r;
            any = true;
            return true;
        }
        return false;
    }
};

template <CodewordScorer S>
double score(const S& scorer, const CVec& phi, std::uint64_t& counter) {
    ++counter;
    return static_cast<double>(scorer(phi));
}

/// Distance codewords per sub-range, memoized on the range bounds.
class DistanceCodewordCache {
public:
    DistanceCodewordCache(Side side, const SystemGeometry& g) : side_(side), g_(g) {}

    const CodewordList& get(const SamplingGrid& r) {
        const Key k{r.x_min, r.x_max, r.y_min, r.y_max, r.fixed_z, static_cast<double>(r.s_x), static_cast<double>(r.s_y)};
        auto it = cache_.find(k);
        if (it == cache_.end()) it = cache_.emplace(k, distance_codewords(r, side_, g_)).first;
        return it->second;
    }

private:
    using Key = std::array<double, 7>;
    Side side_;
    const SystemGeometry& g_;
    std::map<Key, CodewordList> cache_;
};

/// Hierarchical distance refinement on one side with a fixed base codeword.
/// Each layer scores 4 sub-ranges x S_x S_y samples and descends into the best one.
template <CodewordScorer S>
void refine_distance(const S& scorer, const Codeword& base, SamplingGrid range, const TrainingBudget& budget,
                     DistanceCodewordCache& words, Argmax& global, std::uint64_t& counter, std::vector<LayerRecord>* trace) {
    range.s_x = budget.s_x;
    range.s_y = budget.s_y;
    for (int layer = 1; layer <= budget.max_layers; ++layer) {
        const auto subs = subdivide_range(range);
        Argmax local;
        int chosen = 0;
        for (int i = 0; i < 4; ++i) {
            for (const auto& w : words.get(subs[i])) {
                const CVec phi = base.coeffs.cwiseProduct(w.coeffs);
                const Provenance prov = merge(base.provenance, w.provenance);
                const double r = score(scorer, phi, counter);
                if (local.offer(phi, prov, r)) chosen = i;
                global.offer(phi, prov, r);
            }
        }
        range = subs[chosen];
        if (trace) trace->push_back({layer, chosen + 1, -1, local.rate, counter});
    }
}

} // namespace detail

/// Scores every codeword of the FF angular codebook; ties go to the lowest index.
template <CodewordScorer S>
TrainingReport angular_sweep(const S& scorer, const SystemGeometry& g) {
    const Codebook cb = build_ff_codebook(g);
    TrainingReport rep;
    detail::Argmax best;
    for (const auto& w : cb.words) best.offer(w.coeffs, w.provenance, detail::score(scorer, w.coeffs, rep.evaluations));
    rep.best_codeword = best.best;
    rep.best_rate = best.rate;
    const auto& a = *best.best.provenance.angle;
    rep.layer_trace.push_back({0, a.m_x, a.m_y, best.rate, rep.evaluations});
    return rep;
}

/// Full scan of a codebook; ties go to the lowest index.
template <CodewordScorer S>
TrainingReport exhaustive_search(const S& scorer, const Codebook& cb) {
    if (cb.empty()) throw std::invalid_argument("exhaustive_search: empty codebook");
    TrainingReport rep;
    detail::Argmax best;
    for (const auto& w : cb.words) best.offer(w.coeffs, w.provenance, detail::score(scorer, w.coeffs, rep.evaluations));
    rep.best_codeword = best.best;
    rep.best_rate = best.rate;
    rep.layer_trace.push_back({0, -1, -1, best.rate, rep.evaluations});
    return rep;
}

/// Hierarchical NN training. Each layer quarters both sampling ranges, scores the
/// 16 sub-codebooks F_NN(l, i, j) (i: BS sub-range, j: user sub-range), and keeps
/// the pair holding the best codeword. Costs 16 L (S_x S_y)^2 evaluations.
template <CodewordScorer S>
TrainingReport hierarchical_nn(const S& scorer, const SystemGeometry& g, SamplingGrid range_bs, SamplingGrid range_ue,
                               const TrainingBudget& budget) {
    budget.validate(1);
    range_bs.s_x = range_ue.s_x = budget.s_x;
    range_bs.s_y = range_ue.s_y = budget.s_y;
    TrainingReport rep;
    detail::Argmax global;
    for (int layer = 1; layer <= budget.max_layers; ++layer) {
        const auto subs_bs = subdivide_range(range_bs);
        const auto subs_ue = subdivide_range(range_ue);
        std::array<CodewordList, 4> cw_bs;
        std::array<CodewordList, 4> cw_ue;
        for (int i = 0; i < 4; ++i) {
            cw_bs[i] = distance_codewords(subs_bs[i], Side::BS, g);
            cw_ue[i] = distance_codewords(subs_ue[i], Side::UE, g);
        }
        detail::Argmax local;
        int best_i = 0;
        int best_j = 0;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                // F_NN(l, i, j) = F_ue(j) star F_bs(i)
                for (const auto& wu : cw_ue[j]) {
                    for (const auto& wb : cw_bs[i]) {
                        const CVec phi = wu.coeffs.cwiseProduct(wb.coeffs);
                        const Provenance prov = merge(wu.provenance, wb.provenance);
                        const double r = detail::score(scorer, phi, rep.evaluations);
                        if (local.offer(phi, prov, r)) {
                            best_i = i;
                            best_j = j;
                        }
                        global.offer(phi, prov, r);
                    }
                }
            }
        }
        range_bs = subs_bs[best_i];
        range_ue = subs_ue[best_j];
        rep.layer_trace.push_back({layer, best_i + 1, best_j + 1, local.rate, rep.evaluations});
    }
    rep.best_codeword = global.best;
    rep.best_rate = global.rate;
    return rep;
}

/// Two-stage training for hybrid models. Stage 1 sweeps the M angular codewords and
/// fixes the best angle; stage 2 refines the focusing point on the near-field side
/// (BS for NF, user for FN) hierarchically. Costs M + 4 L S_x S_y evaluations; L = 0
/// is a pure sweep. Distance codewords are taken relative to the range centre (see
/// build_hybrid_codebook), so the stage-2 codeword at the centre is the stage-1 winner.
template <CodewordScorer S>
TrainingReport two_stage_hybrid(const S& scorer, const SystemGeometry& g, const SamplingGrid& range,
                                const TrainingBudget& budget, ModelTag side) {
    if (side != ModelTag::NF && side != ModelTag::FN) throw std::invalid_argument("two_stage_hybrid: side must be NF or FN");
    budget.validate(0);
    range.validate();
    const Side k = side == ModelTag::NF ? Side::BS : Side::UE;
    TrainingReport rep = angular_sweep(scorer, g);
    detail::Argmax global;
    global.offer(rep.best_codeword.coeffs, rep.best_codeword.provenance, rep.best_rate);
    const Codeword base = centre_relative(rep.best_codeword, range, g);
    detail::DistanceCodewordCache words(k, g);
    detail::refine_distance(scorer, base, range, budget, words, global, rep.evaluations, &rep.layer_trace);
    rep.best_codeword = global.best;
    rep.best_rate = global.rate;
    return rep;
}

/// Exhaustive baseline for hybrid models: every angular codeword gets its own
/// distance refinement, so no angle is committed early. Costs M x 4 L S_x S_y.
template <CodewordScorer S>
TrainingReport joint_hybrid_search(const S& scorer, const SystemGeometry& g, const SamplingGrid& range,
                                   const TrainingBudget& budget, ModelTag side) {
    if (side != ModelTag::NF && side != ModelTag::FN) throw std::invalid_argument("joint_hybrid_search: side must be NF or FN");
    budget.validate(1);
    const Codebook angular = build_ff_codebook(g);
    const Side k = side == ModelTag::NF ? Side::BS : Side::UE;
    TrainingReport rep;
    detail::Argmax global;
    detail::DistanceCodewordCache words(k, g);
    for (const auto& a : angular.words)
        detail::refine_distance(scorer, centre_relative(a, range, g), range, budget, words, global, rep.evaluations, nullptr);
    rep.best_codeword = global.best;
    rep.best_rate = global.rate;
    rep.layer_trace.push_back({0, -1, -1, global.rate, rep.evaluations});
    return rep;
}

/// The same range sampled at the resolution reached after `layers` hierarchical
/// layers: 2^L S samples per direction.
inline SamplingGrid final_resolution_grid(SamplingGrid range, int layers, int s_x, int s_y) {
    range.s_x = (1 << layers) * s_x;
    range.s_y = (1 << layers) * s_y;
    return range;
}

/// CSV: layer,chosen_i,chosen_j,best_rate,cumulative_evaluations.
inline void write_layer_trace_csv(std::ostream& os, const TrainingReport& rep) {
    os << "layer,chosen_i,chosen_j,best_rate,cumulative_evaluations\n";
    const auto prec = os.precision(12);
    for (const auto& l : rep.layer_trace) {
        os << l.layer << ',';
        if (l.first >= 0) os << l.first;
        os << ',';
        if (l.second >= 0) os << l.second;
        os << ',' << l.best_rate << ',' << l.cumulative_evaluations << '\n';
    }
    os.precision(prec);
}

} // namespace risnf
