#pragma once

#include "risnf/channel.hpp"
#include "risnf/codebook.hpp"
#include "risnf/experiment.hpp"
#include "risnf/optimizer.hpp"
#include "risnf/rate.hpp"
#include "risnf/training.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace risnf {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

struct CountingScorer {
    std::uint64_t* calls;
    double operator()(const CVec&) const {
        ++*calls;
        return 0.0;
    }
};

inline CMat random_matrix(Eigen::Index r, Eigen::Index c, CounterRng& rng) {
    CMat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.complex_normal(1.0);
    return m;
}

} // namespace detail

/// Quick self-checks of the library at desk scale. Each returns pass/fail with a detail line.
inline std::vector<CheckResult> run_invariant_suite() {
    std::vector<CheckResult> out;
    auto check = [&](const std::string& name, const std::function<std::string()>& body) {
        try {
            const std::string fail = body();
            out.push_back({name, fail.empty(), fail});
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("exception: ") + e.what()});
        }
    };
    const ExperimentConfig cfg = default_config(Scale::Desk);
    const SystemGeometry g = cfg.geometry();

    check("codewords are unit modulus", [&] {
        for (const auto& w : build_ff_codebook(g).words)
            if ((w.coeffs.cwiseAbs().array() - 1.0).abs().maxCoeff() > 1e-12) return std::string("FF codeword off the unit circle");
        for (const auto& w : build_nn_codebook(cfg.range_for(Node::BS), cfg.range_for(Node::UE), g).words)
            if ((w.coeffs.cwiseAbs().array() - 1.0).abs().maxCoeff() > 1e-12) return std::string("NN codeword off the unit circle");
        return std::string();
    });

    check("training counters match closed forms", [&] {
        std::uint64_t calls = 0;
        const detail::CountingScorer s{&calls};
        for (int l = 1; l <= 3; ++l) {
            calls = 0;
            const auto h = hierarchical_nn(s, g, cfg.range_for(Node::BS), cfg.range_for(Node::UE), {l, 2, 2});
            if (h.evaluations != overhead::hierarchical(l, 2, 2) || calls != h.evaluations) return "hierarchical L=" + std::to_string(l);
            calls = 0;
            const auto t = two_stage_hybrid(s, g, cfg.range_for(Node::BS), {l, 2, 2}, ModelTag::NF);
            if (t.evaluations != overhead::two_stage(g.n_ris(), l, 2, 2) || calls != t.evaluations) return "two-stage L=" + std::to_string(l);
        }
        return std::string();
    });

    check("precoder meets power budget and KKT", [&] {
        auto rng = CounterRng::keyed({7, 7});
        for (int i = 0; i < 10; ++i) {
            const CMat h = detail::random_matrix(4, 6, rng);
            const CMat u = detail::random_matrix(4, 2, rng);
            const CMat a = detail::random_matrix(2, 2, rng);
            const CMat f = a * a.adjoint() + 0.1 * CMat::Identity(2, 2);
            const double p = i % 2 ? 1e-3 : 1e3;
            const auto w = solve_precoder(h, u, f, p);
            if (w.w.squaredNorm() > p * (1 + 1e-9)) return std::string("power budget exceeded");
            const auto prob = precoder_problem(h, u, f);
            const double res = ((prob.a + w.mu * CMat::Identity(6, 6)) * w.w - prob.b).norm() / prob.b.norm();
            if (res > 1e-8) return "stationarity residual " + std::to_string(res);
        }
        return std::string();
    });

    check("AO rate history nondecreasing", [&] {
        auto rng = CounterRng::keyed({1, 1});
        const Scenario scn = draw_scenario(g, {}, rng);
        for (const auto& d : cfg.designs) {
            AOConfig ao;
            ao.design = d;
            ao.range_bs = cfg.range_for(Node::BS);
            ao.range_ue = cfg.range_for(Node::UE);
            ao.budget = {4, 2, 2};
            ao.noise_var = cfg.noise_w;
            ao.streams = default_streams(d.model, g, 3, 3);
            const auto st = ao_loop(scn.model(d.model, g), g, ao);
            for (std::size_t k = 1; k < st.rate_history.size(); ++k)
                if (st.rate_history[k] < st.rate_history[k - 1] - 1e-6) return d.label() + " decreased";
        }
        return std::string();
    });

    check("second-order distances track exact distances", [&] {
        double worst = 0.0;
        for (Link link : {Link::BS_RIS, Link::RIS_UE}) {
            const Node node = link == Link::BS_RIS ? Node::BS : Node::UE;
            for (int m = 0; m < g.n_ris(); ++m)
                for (int n = 0; n < g.elements(node); ++n) {
                    const Vec3 p = node == Node::BS ? g.bs_element(n) : g.ue_element(n);
                    const double exact = distance(p, g.ris_element(m));
                    worst = std::max(worst, std::abs(taylor_distance(link, m, n, g) - exact) / exact);
                }
        }
        return worst < 1e-4 ? std::string() : "relative error " + std::to_string(worst);
    });

    check("experiment output is deterministic", [&] {
        ExperimentConfig c = cfg;
        c.seeds = {1, 2};
        c.layers = 3;
        std::ostringstream a;
        std::ostringstream b;
        write_results_csv(a, run_experiment(c));
        c.workers = 2;
        write_results_csv(b, run_experiment(c));
        return a.str() == b.str() ? std::string() : std::string("outputs differ");
    });
    return out;
}

inline bool print_invariant_suite(std::ostream& os) {
    bool all = true;
    for (const auto& r : run_invariant_suite()) {
        os << (r.pass ? "PASS " : "FAIL ") << r.name;
        if (!r.pass) os << ": " << r.detail;
        os << '\n';
        all = all && r.pass;
    }
    return all;
}

} // namespace risnf
