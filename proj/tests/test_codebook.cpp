#include "oracles.hpp"
#include "risnf/codebook.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace risnf;

namespace {

SystemGeometry geom(int mx, int my) {
    GeometryParams p;
    p.n_bs = 4;
    p.n_ue = 2;
    p.m_x = mx;
    p.m_y = my;
    return SystemGeometry(p);
}

Codeword cw(std::initializer_list<oracle::cplx> v) {
    Codeword w;
    w.coeffs.resize(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (auto x : v) w.coeffs(i++) = x;
    return w;
}

} // namespace

TEST(FfSteering, Examples) {
    const auto g = geom(2, 1);
    const CVec ones = ff_steering(0.0, 0.0, 3, 2, geom(3, 2));
    EXPECT_LT((ones - CVec::Ones(6)).norm(), 1e-15);
    EXPECT_LT(std::abs(ff_steering(0.4, 0.2, 1, 1, geom(1, 1))(0) - 1.0), 1e-15);
    const CVec b = ff_steering(1.0, 1.0, 2, 1, g);
    EXPECT_LT(std::abs(b(0) - 1.0), 1e-15);
    EXPECT_LT(std::abs(b(1) + 1.0), 1e-12);
}

TEST(FfCodebook, SizeGridAndConjugation) {
    EXPECT_EQ(build_ff_codebook(geom(60, 2)).size(), 120u);
    const auto one = build_ff_codebook(geom(1, 1));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_LT(std::abs(one[0].coeffs(0) - 1.0), 1e-15);
    const auto cb = build_ff_codebook(geom(4, 1));
    const double want[] = {-0.75, -0.25, 0.25, 0.75};
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(cb[static_cast<std::size_t>(i)].provenance.angle->beta, want[i]);

    const auto g = geom(4, 2);
    const double kd = 2 * oracle::pi / g.wavelength() * g.spacing();
    for (const auto& w : build_ff_codebook(g).words) {
        const auto a = *w.provenance.angle;
        EXPECT_DOUBLE_EQ(a.beta, (2.0 * a.m_x - 4 - 1) / 4);
        EXPECT_DOUBLE_EQ(a.delta, (2.0 * a.m_y - 2 - 1) / 2);
        for (int ix = 0; ix < 4; ++ix)
            for (int iy = 0; iy < 2; ++iy)
                EXPECT_LT(std::abs(w.coeffs(ix * 2 + iy) - oracle::expj(kd * (ix * a.beta * a.delta + iy * a.delta))), 1e-12);
    }
}

TEST(DistanceSteering, SingleElementAndSymmetry) {
    const auto g1 = geom(1, 1);
    const CVec f = distance_steering(1.0, 2.0, 0.0, g1);
    const double r = oracle::dist({1, 2, 0}, {10, 0, 8});
    EXPECT_LT(std::abs(f(0) - oracle::expj(-2 * oracle::pi * r / g1.wavelength())), 1e-9);

    const auto g = geom(2, 2);
    const CVec s = distance_steering(10.0, 0.0, 0.0, g);
    for (int m = 1; m < 4; ++m) EXPECT_LT(std::abs(s(m) - s(0)), 1e-12);
}

TEST(DistanceSteering, AdjacentPhaseStepShrinksWithDistance) {
    const auto g = geom(8, 1);
    const double aperture = 7 * g.spacing();
    double prev = 1e9;
    for (double k : {1.0, 5.0, 20.0, 100.0}) {
        const CVec f = distance_steering(10.0, 0.0, 8.0 - k * aperture, g);
        double worst = 0.0;
        for (int m = 0; m + 1 < 8; ++m) worst = std::max(worst, std::abs(std::arg(f(m + 1) / f(m))));
        EXPECT_LT(worst, prev);
        prev = worst;
    }
}

TEST(Star, Examples) {
    const auto r = star({cw({1, 1})}, {cw({1, -1})});
    ASSERT_EQ(r.size(), 1u);
    EXPECT_LT(std::abs(r[0].coeffs(1) + 1.0), 1e-15);

    CodewordList a{cw({1, 2}), cw({3, 4}), cw({5, 6})};
    CodewordList b{cw({1, 1}), cw({1, -1}), cw({2, 1}), cw({0, 1})};
    const auto ab = star(a, b);
    ASSERT_EQ(ab.size(), 12u);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            EXPECT_EQ((ab[i * 4 + j].coeffs - a[i].coeffs.cwiseProduct(b[j].coeffs)).norm(), 0.0);

    const auto id = star(a, {cw({1, 1})});
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ((id[i].coeffs - a[i].coeffs).norm(), 0.0);
    EXPECT_THROW(star({cw({1, 1}), cw({1})}, b), std::invalid_argument);
}

TEST(NnCodebook, SizeOrderAndModulus) {
    const auto g = geom(4, 2);
    const auto gb = SamplingGrid::centred(0, 0, 1.0, 2, 2, 0);
    const auto gu = SamplingGrid::centred(24, 0, 1.0, 2, 2, 0);
    const auto cb = build_nn_codebook(gb, gu, g);
    ASSERT_EQ(cb.size(), 16u);
    const auto pu = gu.samples();
    const auto pb = gb.samples();
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const auto& w = cb[i * 4 + j];
            EXPECT_EQ(*w.provenance.ue_point, pu[i]);
            EXPECT_EQ(*w.provenance.bs_point, pb[j]);
            const CVec want = distance_steering(pu[i].x, pu[i].y, 0, g).conjugate().cwiseProduct(
                distance_steering(pb[j].x, pb[j].y, 0, g).conjugate());
            EXPECT_LT((w.coeffs - want).norm(), 1e-12);
            EXPECT_LT((w.coeffs.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
        }
    auto g1b = gb;
    auto g1u = gu;
    g1b.s_x = g1b.s_y = g1u.s_x = g1u.s_y = 1;
    EXPECT_EQ(build_nn_codebook(g1b, g1u, g).size(), 1u);
}

TEST(HybridCodebook, SizesAndSide) {
    const auto g = geom(60, 2);
    const auto grid = SamplingGrid::centred(0, 0, 1.0, 4, 4, 0);
    EXPECT_EQ(build_hybrid_codebook(ModelTag::NF, grid, g).size(), 1920u);

    const auto gs = geom(4, 2);
    auto one = SamplingGrid::centred(0, 0, 1.0, 1, 1, 0);
    const auto ff = build_ff_codebook(gs);
    const auto h1 = build_hybrid_codebook(ModelTag::NF, one, gs);
    ASSERT_EQ(h1.size(), ff.size());
    for (std::size_t i = 0; i < ff.size(); ++i) EXPECT_LT((h1[i].coeffs - ff[i].coeffs).norm(), 1e-12);

    const auto small = SamplingGrid::centred(0, 0, 1.0, 2, 2, 0);
    const auto nf = build_hybrid_codebook(ModelTag::NF, small, gs);
    const auto fn = build_hybrid_codebook(ModelTag::FN, small, gs);
    ASSERT_EQ(nf.size(), fn.size());
    for (std::size_t i = 0; i < nf.size(); ++i) {
        EXPECT_TRUE(nf[i].provenance.bs_point.has_value());
        EXPECT_FALSE(nf[i].provenance.ue_point.has_value());
        EXPECT_TRUE(fn[i].provenance.ue_point.has_value());
        EXPECT_EQ(nf[i].provenance.angle, fn[i].provenance.angle);
        // identical grids: the focusing term is the same, only the tag differs
        EXPECT_LT((nf[i].coeffs - fn[i].coeffs).norm(), 1e-12);
    }
    EXPECT_THROW(build_hybrid_codebook(ModelTag::NN, small, gs), std::invalid_argument);
}

TEST(Subdivide, QuadrantOrderAndTiling) {
    const SamplingGrid unit{0, 1, 0, 1, 2, 2, 0};
    const auto q = subdivide_range(unit);
    const double want[4][4] = {{0, .5, 0, .5}, {.5, 1, 0, .5}, {.5, 1, .5, 1}, {0, .5, .5, 1}};
    for (int i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(q[i].x_min, want[i][0]);
        EXPECT_DOUBLE_EQ(q[i].x_max, want[i][1]);
        EXPECT_DOUBLE_EQ(q[i].y_min, want[i][2]);
        EXPECT_DOUBLE_EQ(q[i].y_max, want[i][3]);
        EXPECT_DOUBLE_EQ(q[i].width() * q[i].height(), 0.25);
    }
    double area = 0.0;
    int cells = 0;
    for (const auto& a : q)
        for (const auto& b : subdivide_range(a)) {
            area += b.width() * b.height();
            ++cells;
            EXPECT_GE(b.x_min, 0.0);
            EXPECT_LE(b.x_max, 1.0);
        }
    EXPECT_EQ(cells, 16);
    EXPECT_NEAR(area, 1.0, 1e-15);
    EXPECT_THROW(subdivide_range(SamplingGrid{0, 0, 0, 1, 2, 2, 0}), std::invalid_argument);
}

TEST(Codeword, PhasesInRange) {
    const auto cb = build_ff_codebook(geom(4, 2));
    for (const auto& w : cb.words) {
        const auto th = w.phases();
        EXPECT_LT((th.coefficients() - w.coeffs).norm(), 1e-12);
        EXPECT_GE(th.phases.minCoeff(), 0.0);
        EXPECT_LT(th.phases.maxCoeff(), 2 * oracle::pi);
    }
}

TEST(Codebook, CsvHasOneRowPerCodeword) {
    const auto cb = build_ff_codebook(geom(4, 2));
    std::ostringstream os;
    write_codebook_csv(os, cb);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("index,kind,m_x,m_y,beta,delta,bs_x,bs_y,ue_x,ue_y,theta_0,", 0), 0u);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 8);
}
