#include "oracles.hpp"
#include "risnf/optimizer.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace risnf;

namespace {

CMat psd(Eigen::Index n, std::mt19937_64& rng, double ridge = 0.1) {
    const CMat a = oracle::randn(n, n, rng);
    return a * a.adjoint() + ridge * CMat::Identity(n, n);
}

GeometryParams desk_params() {
    GeometryParams p;
    p.n_bs = 8;
    p.n_ue = 4;
    p.m_x = 16;
    p.m_y = 2;
    p.ue_mid = {1.92, 0, 0};
    p.ris_mid = {0.8, 0, 0.64};
    return p;
}

} // namespace

TEST(Rate, ZeroPrecoderAndScalarReduction) {
    std::mt19937_64 rng(1);
    const CMat h = oracle::randn(3, 4, rng);
    EXPECT_EQ(achievable_rate(h, CMat::Zero(4, 2), 1.0), 0.0);

    const CVec u = oracle::randn(3, 1, rng);
    const CVec v = oracle::randn(4, 1, rng);
    const CMat w = oracle::randn(4, 1, rng);
    const CMat r1 = u * v.adjoint();
    const double want = std::log2(1.0 + std::norm((v.adjoint() * w)(0, 0)) * u.squaredNorm() / 0.3);
    EXPECT_NEAR(achievable_rate(r1, w, 0.3), want, 1e-10);
}

TEST(Rate, DecreasesWithNoiseAndMatchesGramForm) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const CMat h = oracle::randn(4, 6, rng);
        const CMat w = oracle::randn(6, 3, rng);
        const double r = achievable_rate(h, w, 0.5);
        EXPECT_GT(r, achievable_rate(h, w, 1.0));
        EXPECT_NEAR(r, oracle::rate_eig(h, w, 0.5), 1e-9);
    }
}

TEST(Rate, RejectsBadInput) {
    const CMat h = CMat::Ones(2, 2);
    EXPECT_THROW(achievable_rate(h, CMat::Ones(3, 1), 1.0), std::invalid_argument);
    EXPECT_THROW(achievable_rate(h, CMat::Ones(2, 1), 0.0), std::invalid_argument);
    CMat bad = h;
    bad(0, 0) = std::nan("");
    EXPECT_THROW(achievable_rate(bad, CMat::Ones(2, 1), 1.0), std::invalid_argument);
}

TEST(Rate, ScorerAgreesWithCascadeRate) {
    std::mt19937_64 rng(3);
    ChannelRealization ch{oracle::randn(10, 4, rng), oracle::randn(3, 10, rng), ModelTag::NN};
    const CMat w = oracle::randn(4, 2, rng);
    const RateScorer sc(ch, w, 0.7);
    for (int t = 0; t < 10; ++t) {
        const CVec phi = oracle::randn(10, 1, rng);
        EXPECT_NEAR(sc(phi), achievable_rate(cascade(ch, phi), w, 0.7), 1e-10);
    }
}

TEST(Mse, TrivialCases) {
    std::mt19937_64 rng(4);
    const CMat h = oracle::randn(3, 4, rng);
    const CMat w = oracle::randn(4, 2, rng);
    const CMat e0 = mse_matrix(h, w, CMat::Zero(3, 2), 0.4);
    EXPECT_LT((e0 - CMat::Identity(2, 2)).norm(), 1e-14);

    // U^H H W = I with orthonormal U
    const CMat u = CMat::Identity(3, 2);
    const CMat hw = CMat::Identity(3, 2);
    const CMat hh = CMat::Identity(3, 3);
    const CMat e1 = mse_matrix(hh, hw, u, 0.25);
    EXPECT_LT((e1 - 0.25 * CMat::Identity(2, 2)).norm(), 1e-14);
    EXPECT_THROW(mse_matrix(h, w, CMat::Zero(2, 2), 0.1), std::invalid_argument);
}

TEST(Mse, TraceMatchesMonteCarlo) {
    std::mt19937_64 rng(5);
    const CMat h = oracle::randn(3, 4, rng);
    const CMat w = oracle::randn(4, 2, rng, 0.5);
    const CMat u = oracle::randn(3, 2, rng, 0.5);
    const double s2 = 0.3;
    const double tr = mse_matrix(h, w, u, s2).trace().real();
    EXPECT_NEAR(tr, oracle::mse_trace(h, w, u, s2), 1e-12);
    double acc = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const CMat x = oracle::randn(2, 1, rng);
        const CMat n = oracle::randn(3, 1, rng, std::sqrt(s2));
        const CMat y = u.adjoint() * (h * w * x + n);
        acc += (y - x).squaredNorm();
    }
    EXPECT_NEAR(acc / draws, tr, 0.01 * tr);
}

TEST(Combiner, ScalarAndZeroChannel) {
    const CMat h = CMat::Constant(1, 1, 0.8);
    const CMat w = CMat::Constant(1, 1, 1.5);
    const double hw = 1.2;
    EXPECT_NEAR(std::abs(optimal_combiner(h, w, 0.1).u(0, 0) - hw / (hw * hw + 0.1)), 0.0, 1e-14);
    EXPECT_EQ(optimal_combiner(CMat::Zero(3, 2), CMat::Ones(2, 2), 0.1).u.norm(), 0.0);
}

TEST(Combiner, BeatsRandomAlternativesAndIsStationary) {
    std::mt19937_64 rng(6);
    for (int inst = 0; inst < 20; ++inst) {
        const CMat h = oracle::randn(4, 5, rng);
        const CMat w = oracle::randn(5, 2, rng);
        const double s2 = 0.2;
        const CMat u = optimal_combiner(h, w, s2).u;
        const double t0 = oracle::mse_trace(h, w, u, s2);
        for (int k = 0; k < 100; ++k) EXPECT_LE(t0, oracle::mse_trace(h, w, oracle::randn(4, 2, rng), s2) + 1e-12);
        for (int k = 0; k < 100; ++k) {
            const CMat d = oracle::randn(4, 2, rng);
            const double eps = 1e-5;
            const double fd = (oracle::mse_trace(h, w, u + eps * d, s2) - oracle::mse_trace(h, w, u - eps * d, s2)) / (2 * eps);
            EXPECT_LT(std::abs(fd), 1e-6);
        }
    }
}

TEST(Weight, Examples) {
    EXPECT_LT((weight_update(CMat::Identity(3, 3)) - CMat::Identity(3, 3)).norm(), 1e-14);
    CMat e = CMat::Zero(2, 2);
    e(0, 0) = 0.5;
    e(1, 1) = 0.25;
    const CMat f = weight_update(e);
    EXPECT_NEAR(f(0, 0).real(), 2.0, 1e-14);
    EXPECT_NEAR(f(1, 1).real(), 4.0, 1e-14);

    std::mt19937_64 rng(7);
    const CMat ee = psd(3, rng);
    const CMat ff = weight_update(ee);
    const double logdet_e = std::log(ee.determinant().real());
    EXPECT_NEAR(wmmse_surrogate(ff, ee), -logdet_e - 3.0, 1e-10);
    for (int k = 0; k < 20; ++k) EXPECT_GE(wmmse_surrogate(ff, ee), wmmse_surrogate(psd(3, rng), ee));
}

TEST(Weight, SingularOrNonHermitianRejected) {
    CMat e = CMat::Zero(2, 2);
    e(0, 0) = 1.0;
    EXPECT_THROW(weight_update(e), std::runtime_error);
    CMat ne = CMat::Identity(2, 2);
    ne(0, 1) = 1.0;
    EXPECT_THROW(weight_update(ne), std::invalid_argument);
}

TEST(Precoder, ZeroChannelGivesZero) {
    std::mt19937_64 rng(8);
    const auto p = solve_precoder(CMat::Zero(3, 4), oracle::randn(3, 2, rng), psd(2, rng), 1.0);
    EXPECT_EQ(p.w.norm(), 0.0);
}

TEST(Precoder, ScalarUnconstrainedStationaryPoint) {
    const CMat h = CMat::Constant(1, 1, 0.9);
    const CMat u = CMat::Constant(1, 1, 0.7);
    const CMat f = CMat::Constant(1, 1, 2.0);
    const auto p = solve_precoder(h, u, f, 100.0);
    const double a = 0.9 * 0.7 * 2.0 * 0.7 * 0.9;
    const double b = 0.9 * 0.7 * 2.0;
    EXPECT_NEAR(p.w(0, 0).real(), b / a, 1e-12);
    EXPECT_EQ(p.mu, 0.0);
}

TEST(Precoder, KktOnRandomInstances) {
    std::mt19937_64 rng(9);
    int active = 0;
    int inactive = 0;
    for (int t = 0; t < 100; ++t) {
        const CMat h = oracle::randn(4, 6, rng);
        const CMat u = oracle::randn(4, 3, rng);
        const CMat f = psd(3, rng);
        const double pmax = (t % 2) ? 1e-2 : 1e4;
        const auto p = solve_precoder(h, u, f, pmax);
        const CMat hu = h.adjoint() * u;
        const CMat a = hu * f * hu.adjoint();
        const CMat b = hu * f;
        const double power = p.w.squaredNorm();
        EXPECT_LE(power, pmax + 1e-9);
        EXPECT_LE(((a + p.mu * CMat::Identity(6, 6)) * p.w - b).norm(), 1e-8 * b.norm());
        EXPECT_LE(p.mu * (pmax - power), 1e-6);
        EXPECT_GE(p.mu, 0.0);
        if (p.mu > 0) {
            ++active;
            EXPECT_NEAR(power, pmax, 1e-6 * pmax);
        } else {
            ++inactive;
        }
    }
    EXPECT_GT(active, 0);
    EXPECT_GT(inactive, 0);
}

TEST(Precoder, MinimizesObjectiveOverFeasibleAlternatives) {
    std::mt19937_64 rng(10);
    const CMat h = oracle::randn(3, 4, rng);
    const CMat u = oracle::randn(3, 2, rng);
    const CMat f = psd(2, rng);
    const double pmax = 0.5;
    const CMat hu = h.adjoint() * u;
    const CMat a = hu * f * hu.adjoint();
    auto obj = [&](const CMat& w) { return (w.adjoint() * a * w).trace().real() - 2 * (f * u.adjoint() * h * w).trace().real(); };
    const auto p = solve_precoder(h, u, f, pmax);
    for (int k = 0; k < 200; ++k) {
        CMat w = oracle::randn(4, 2, rng);
        w *= std::sqrt(pmax) / w.norm() * std::uniform_real_distribution<double>(0, 1)(rng);
        EXPECT_LE(obj(p.w), obj(w) + 1e-12);
    }
}

TEST(Ao, ZeroIterationsReturnsInitialisation) {
    const SystemGeometry g(desk_params());
    auto rng = CounterRng::keyed({1, 1});
    const auto ch = draw_scenario(g, {}, rng).physical();
    AOConfig c;
    c.design = {ModelTag::NN, TrainingScheme::Hierarchical};
    c.range_bs = SamplingGrid::centred(0, 0, 0.8, 2, 2, 0);
    c.range_ue = SamplingGrid::centred(1.92, 0, 0.8, 2, 2, 0);
    c.max_iterations = 0;
    c.noise_var = 1e-13;
    c.streams = 4;
    const auto st = ao_loop(ch, g, c);
    EXPECT_EQ(st.rate_history.size(), 1u);
    EXPECT_EQ(st.iterations, 0);
    EXPECT_LT((st.phase.coeffs - CVec::Ones(32)).norm(), 1e-15);
    EXPECT_NEAR(st.precoder.w.squaredNorm(), 1.0, 1e-12);
}

TEST(Ao, MonotoneOnSeededNnInstances) {
    const SystemGeometry g(desk_params());
    for (std::uint64_t s = 1; s <= 10; ++s) {
        auto rng = CounterRng::keyed({s, 1});
        const auto scn = draw_scenario(g, {}, rng);
        AOConfig c;
        c.design = {ModelTag::NN, TrainingScheme::Hierarchical};
        c.range_bs = SamplingGrid::centred(0, 0, 0.8, 2, 2, 0);
        c.range_ue = SamplingGrid::centred(1.92, 0, 0.8, 2, 2, 0);
        c.budget = {6, 2, 2};
        c.noise_var = 1e-13;
        c.streams = default_streams(ModelTag::NN, g, 3, 3);
        const auto st = ao_loop(scn.model(ModelTag::NN, g), g, c);
        for (std::size_t k = 1; k < st.rate_history.size(); ++k) EXPECT_GE(st.rate_history[k], st.rate_history[k - 1] - 1e-6);
        EXPECT_TRUE(st.diagnostics.empty());
        EXPECT_EQ(st.evaluations_per_pass, overhead::hierarchical(6, 2, 2));
        EXPECT_EQ(st.trace.size(), st.rate_history.size());
    }
}

TEST(Ao, DefaultStreams) {
    const SystemGeometry g(desk_params());
    EXPECT_EQ(default_streams(ModelTag::NN, g, 3, 3), 4);
    EXPECT_EQ(default_streams(ModelTag::FF, g, 3, 2), 2);
    EXPECT_EQ(default_streams(ModelTag::NF, g, 1, 3), 3);
    EXPECT_EQ(default_streams(ModelTag::FN, g, 1, 3), 1);
}

TEST(Ao, DesignLabels) {
    EXPECT_EQ((Design{ModelTag::NN, TrainingScheme::Hierarchical}.label()), "NN");
    EXPECT_EQ((Design{ModelTag::NN, TrainingScheme::Angular}.label()), "NN-angular");
    EXPECT_EQ(parse_design("NF")->scheme, TrainingScheme::TwoStage);
    EXPECT_EQ(parse_design("NN-angular")->model, ModelTag::NN);
    EXPECT_FALSE(parse_design("XX").has_value());
}

TEST(Ao, TrainingArgmaxInvariantToChannelScale) {
    const SystemGeometry g(desk_params());
    auto rng = CounterRng::keyed({4, 1});
    const auto ch = draw_scenario(g, {}, rng).physical();
    const CMat w = initial_precoder(cascade(ch, CVec::Ones(32)), 4, 1.0);
    ChannelRealization scaled = ch;
    scaled.g_bs_ris *= 3.0;
    const auto rb = SamplingGrid::centred(0, 0, 0.8, 2, 2, 0);
    const auto ru = SamplingGrid::centred(1.92, 0, 0.8, 2, 2, 0);
    const auto a = hierarchical_nn(RateScorer(ch, w, 1e-13), g, rb, ru, {3, 2, 2});
    const auto b = hierarchical_nn(RateScorer(scaled, w, 1e-13), g, rb, ru, {3, 2, 2});
    EXPECT_EQ((a.best_codeword.coeffs - b.best_codeword.coeffs).norm(), 0.0);
}
