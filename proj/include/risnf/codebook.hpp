#pragma once

#include "risnf/channel.hpp"
#include "risnf/geometry.hpp"
#include "risnf/linalg.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace risnf {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Angular grid pair <beta_{m_x}, delta_{m_y}> (1-based indices as in the grid rule).
struct AnglePair {
    int m_x = 1;
    int m_y = 1;
    double beta = 0.0;
    double delta = 0.0;
    friend bool operator==(const AnglePair&, const AnglePair&) = default;
};

/// Where a codeword came from. Angular codewords carry an angle pair, distance
/// codewords a sample point per side, and star products the union of both.
struct Provenance {
    std::optional<AnglePair> angle;
    std::optional<Point2> bs_point;
    std::optional<Point2> ue_point;

    std::string kind() const {
        const bool pts = bs_point || ue_point;
        if (angle && pts) return "combined";
        if (angle) return "angle";
        if (pts) return "points";
        return "none";
    }

    /// Field-wise merge; fields already set on the left win.
    friend Provenance merge(const Provenance& a, const Provenance& b) {
        Provenance out = a;
        if (!out.angle) out.angle = b.angle;
        if (!out.bs_point) out.bs_point = b.bs_point;
        if (!out.ue_point) out.ue_point = b.ue_point;
        return out;
    }
};

struct Codeword {
    CVec coeffs; ///< RIS coefficients phi_m, unit modulus
    Provenance provenance;

    Eigen::Index size() const { return coeffs.size(); }

    /// RIS phases theta_m in [0, 2 pi) with phi_m = exp(-j theta_m).
    PhaseShiftVector phases() const {
        RVec th(coeffs.size());
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
            double t = -std::arg(coeffs(i));
            if (t < 0.0) t += 2.0 * kPi;
            if (t >= 2.0 * kPi) t -= 2.0 * kPi;
            th(i) = t;
        }
        return {th};
    }
};

using CodewordList = std::vector<Codeword>;

struct Codebook {
    std::string family;
    CodewordList words;

    std::size_t size() const { return words.size(); }
    bool empty() const { return words.empty(); }
    const Codeword& operator[](std::size_t i) const { return words[i]; }
};

enum class Side { BS, UE };

inline const char* to_string(Side s) { return s == Side::BS ? "BS" : "UE"; }

/// Rectangular sampling range on a plane of constant z, with S_x x S_y midpoint samples.
struct SamplingGrid {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;
    int s_x = 2;
    int s_y = 2;
    double fixed_z = 0.0;

    void validate() const {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw std::invalid_argument("sampling grid: degenerate range (need x_min < x_max and y_min < y_max)");
        if (s_x < 1 || s_y < 1) throw std::invalid_argument("sampling grid: sample counts must be >= 1");
    }

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }

    double sample_x(int s) const { return x_min + (s + 0.5) * (x_max - x_min) / s_x; }
    double sample_y(int s) const { return y_min + (s + 0.5) * (y_max - y_min) / s_y; }

    /// Samples in s_x-major order (s_y fastest).
    std::vector<Point2> samples() const {
        std::vector<Point2> out;
        out.reserve(static_cast<std::size_t>(s_x) * s_y);
        for (int i = 0; i < s_x; ++i)
            for (int j = 0; j < s_y; ++j) out.push_back({sample_x(i), sample_y(j)});
        return out;
    }

    bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }

    /// Range of the given half-width centred on (cx, cy).
    static SamplingGrid centred(double cx, double cy, double half_width, int s_x, int s_y, double z) {
        return {cx - half_width, cx + half_width, cy - half_width, cy + half_width, s_x, s_y, z};
    }
};

/// Quadrants in the order lower-left, lower-right, upper-right, upper-left.
inline std::array<SamplingGrid, 4> subdivide_range(const SamplingGrid& g) {
    g.validate();
    const double dx = 0.5 * (g.x_max - g.x_min);
    const double dy = 0.5 * (g.y_max - g.y_min);
    const double xm = g.x_min + dx;
    const double ym = g.y_min + dy;
    auto make = [&](double x0, double x1, double y0, double y1) {
        SamplingGrid q = g;
        q.x_min = x0;
        q.x_max = x1;
        q.y_min = y0;
        q.y_max = y1;
        return q;
    };
    return {make(g.x_min, xm, g.y_min, ym), make(xm, g.x_max, g.y_min, ym), make(xm, g.x_max, ym, g.y_max),
            make(g.x_min, xm, ym, g.y_max)};
}

/// Grid value (2 m - M - 1) / M for 1-based m.
inline double angular_grid_value(int m, int count) { return (2.0 * m - count - 1.0) / count; }

/// Far-field steering vector b(beta, delta): x phase index*beta*delta, y phase index*delta.
inline CVec ff_steering(double beta, double delta, int m_x, int m_y, const SystemGeometry& g) {
    if (m_x < 1 || m_y < 1) throw std::invalid_argument("ff_steering: need at least one element per axis");
    const double kd = g.wavenumber() * g.spacing();
    CVec b(m_x * m_y);
    for (int ix = 0; ix < m_x; ++ix)
        for (int iy = 0; iy < m_y; ++iy) b(ix * m_y + iy) = unit_phasor(-kd * (ix * beta * delta + iy * delta));
    return b;
}

/// Conjugated steering codewords over the full angular grid, m_y fastest.
inline Codebook build_ff_codebook(const SystemGeometry& g) {
    Codebook cb;
    cb.family = "FF";
    cb.words.reserve(static_cast<std::size_t>(g.n_ris()));
    for (int mx = 1; mx <= g.m_x(); ++mx) {
        const double beta = angular_grid_value(mx, g.m_x());
        for (int my = 1; my <= g.m_y(); ++my) {
            const double delta = angular_grid_value(my, g.m_y());
            Codeword w;
            w.coeffs = ff_steering(beta, delta, g.m_x(), g.m_y(), g).conjugate();
            w.provenance.angle = AnglePair{mx, my, beta, delta};
            cb.words.push_back(std::move(w));
        }
    }
    return cb;
}

/// Distance steering vector f(x, y, z): exp(-j 2 pi r_m / lambda), r_m the exact
/// distance from the point to RIS element m.
inline CVec distance_steering(double x, double y, double z, const SystemGeometry& g) {
    const Vec3 p{x, y, z};
    const double k = g.wavenumber();
    CVec f(g.n_ris());
    for (int m = 0; m < g.n_ris(); ++m) {
        const double r = distance(p, g.ris_element(m));
        if (!(r > 0.0)) throw std::invalid_argument("distance_steering: point coincides with a RIS element");
        f(m) = unit_phasor(-k * r);
    }
    return f;
}

/// Conjugated distance codewords for every sample of a grid, tagged with the side.
inline CodewordList distance_codewords(const SamplingGrid& grid, Side side, const SystemGeometry& g) {
    grid.validate();
    CodewordList out;
    for (const auto& p : grid.samples()) {
        Codeword w;
        w.coeffs = distance_steering(p.x, p.y, grid.fixed_z, g).conjugate();
        (side == Side::BS ? w.provenance.bs_point : w.provenance.ue_point) = p;
        out.push_back(std::move(w));
    }
    return out;
}

/// [x_1..x_M] star [y_1..y_N] = [x_1 o y_1, ..., x_1 o y_N, ..., x_M o y_N].
inline CodewordList star(const CodewordList& a, const CodewordList& b) {
    if (a.empty() || b.empty()) return {};
    const Eigen::Index m = a.front().size();
    for (const auto& w : a)
        if (w.size() != m) throw std::invalid_argument("star: codeword length mismatch");
    for (const auto& w : b)
        if (w.size() != m) throw std::invalid_argument("star: codeword length mismatch");
    CodewordList out;
    out.reserve(a.size() * b.size());
    for (const auto& x : a)
        for (const auto& y : b) out.push_back({x.coeffs.cwiseProduct(y.coeffs), merge(x.provenance, y.provenance)});
    return out;
}

/// User-side distance codewords star BS-side distance codewords; (S_x S_y)^2 entries.
inline Codebook build_nn_codebook(const SamplingGrid& grid_bs, const SamplingGrid& grid_ue, const SystemGeometry& g) {
    Codebook cb;
    cb.family = "NN";
    cb.words = star(distance_codewords(grid_ue, Side::UE, g), distance_codewords(grid_bs, Side::BS, g));
    return cb;
}

/// Multiplies a codeword by f(centre of range), the unconjugated focusing vector of
/// the range centre, so that a later distance codeword conj f(p) only adds the phase
/// difference between p and the centre.
inline Codeword centre_relative(const Codeword& w, const SamplingGrid& range, const SystemGeometry& g) {
    range.validate();
    const double cx = 0.5 * (range.x_min + range.x_max);
    const double cy = 0.5 * (range.y_min + range.y_max);
    return {w.coeffs.cwiseProduct(distance_steering(cx, cy, range.fixed_z, g)), w.provenance};
}

/// Angular codebook star distance codewords of the near-field side (BS samples for
/// NF, user samples for FN), the latter relative to the range centre. M * S_x * S_y entries.
inline Codebook build_hybrid_codebook(ModelTag side, const SamplingGrid& grid, const SystemGeometry& g) {
    if (side != ModelTag::NF && side != ModelTag::FN)
        throw std::invalid_argument("build_hybrid_codebook: side must be NF or FN");
    const Side k = side == ModelTag::NF ? Side::BS : Side::UE;
    CodewordList angular = build_ff_codebook(g).words;
    for (auto& w : angular) w = centre_relative(w, grid, g);
    Codebook cb;
    cb.family = to_string(side);
    cb.words = star(angular, distance_codewords(grid, k, g));
    return cb;
}

/// CSV: index,kind,m_x,m_y,beta,delta,bs_x,bs_y,ue_x,ue_y,theta_0..theta_{M-1} (radians).
inline void write_codebook_csv(std::ostream& os, const Codebook& cb) {
    const Eigen::Index m = cb.empty() ? 0 : cb.words.front().size();
    os << "index,kind,m_x,m_y,beta,delta,bs_x,bs_y,ue_x,ue_y";
    for (Eigen::Index i = 0; i < m; ++i) os << ",theta_" << i;
    os << '\n';
    std::ostringstream cell;
    cell << std::setprecision(12);
    auto num = [&](double v) {
        cell.str({});
        cell << v;
        return cell.str();
    };
    for (std::size_t idx = 0; idx < cb.size(); ++idx) {
        const auto& w = cb.words[idx];
        const auto& p = w.provenance;
        os << idx << ',' << p.kind() << ',';
        if (p.angle)
            os << p.angle->m_x << ',' << p.angle->m_y << ',' << num(p.angle->beta) << ',' << num(p.angle->delta);
        else
            os << ",,,";
        os << ',';
        if (p.bs_point) os << num(p.bs_point->x) << ',' << num(p.bs_point->y);
        else os << ',';
        os << ',';
        if (p.ue_point) os << num(p.ue_point->x) << ',' << num(p.ue_point->y);
        else os << ',';
        const auto th = w.phases().phases;
        for (Eigen::Index i = 0; i < th.size(); ++i) os << ',' << num(th(i));
        os << '\n';
    }
}

} // namespace risnf
