#pragma once

#include "risnf/geometry.hpp"
#include "risnf/linalg.hpp"
#include "risnf/rng.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace risnf {

/// Cascaded channel model: first letter is the BS-RIS link, second the RIS-UE link.
enum class ModelTag { FF, NF, FN, NN };

inline const char* to_string(ModelTag t) {
    switch (t) {
    case ModelTag::FF: return "FF";
    case ModelTag::NF: return "NF";
    case ModelTag::FN: return "FN";
    case ModelTag::NN: return "NN";
    }
    return "?";
}

inline std::optional<ModelTag> parse_model_tag(std::string_view s) {
    if (s == "FF") return ModelTag::FF;
    if (s == "NF") return ModelTag::NF;
    if (s == "FN") return ModelTag::FN;
    if (s == "NN") return ModelTag::NN;
    return std::nullopt;
}

inline bool bs_link_is_near(ModelTag t) { return t == ModelTag::NF || t == ModelTag::NN; }
inline bool ue_link_is_near(ModelTag t) { return t == ModelTag::FN || t == ModelTag::NN; }

/// One propagation path of a far-field link. For BS_RIS the arrival angles belong
/// to the RIS and the departure azimuth to the BS; for RIS_UE the departure angles
/// belong to the RIS and the arrival azimuth to the user.
struct PathSpec {
    cplx complex_gain{1.0, 0.0};
    double azimuth_aoa = 0.0;
    double elevation_aoa = kPi / 2;
    double azimuth_aod = 0.0;
    double elevation_aod = kPi / 2;
};

struct FarFieldSpec {
    Link link = Link::BS_RIS;
    std::vector<PathSpec> paths; ///< index 0 is the LoS path
};

struct ChannelRealization {
    CMat g_bs_ris; ///< M x N_B
    CMat g_ris_ue; ///< N_U x M
    ModelTag model_tag = ModelTag::NN;

    Eigen::Index ris_elements() const { return g_bs_ris.rows(); }

    void validate() const {
        if (g_bs_ris.rows() != g_ris_ue.cols())
            throw std::invalid_argument("channel: RIS dimension mismatch between links");
        if (!g_bs_ris.allFinite() || !g_ris_ue.allFinite())
            throw std::invalid_argument("channel: non-finite entries");
    }
};

/// RIS phases theta_m; the applied coefficients are exp(-j theta_m).
struct PhaseShiftVector {
    RVec phases;

    static PhaseShiftVector zeros(Eigen::Index m) { return {RVec::Zero(m)}; }

    CVec coefficients() const {
        CVec c(phases.size());
        for (Eigen::Index i = 0; i < phases.size(); ++i) c(i) = unit_phasor(-phases(i));
        return c;
    }
};

/// ULA response (1/sqrt(N)) exp(-j n (2 pi d / lambda) sin(angle)), n = 0..N-1.
inline CVec ula_response(double angle, int n_elems, const SystemGeometry& g) {
    if (n_elems < 1) throw std::invalid_argument("ula_response: need at least one element");
    const double step = g.wavenumber() * g.spacing() * std::sin(angle);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_elems));
    CVec a(n_elems);
    for (int n = 0; n < n_elems; ++n) a(n) = scale * unit_phasor(-step * n);
    return a;
}

/// UPA response: x factor (phase per index ~ sin(az) sin(el)) kron y factor (~ cos(el)).
inline CVec upa_response(double azimuth, double elevation, int m_x, int m_y, const SystemGeometry& g) {
    if (m_x < 1 || m_y < 1) throw std::invalid_argument("upa_response: need at least one element per axis");
    const double kd = g.wavenumber() * g.spacing();
    const double ux = kd * std::sin(azimuth) * std::sin(elevation);
    const double uy = kd * std::cos(elevation);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_x) * m_y);
    CVec a(m_x * m_y);
    for (int ix = 0; ix < m_x; ++ix)
        for (int iy = 0; iy < m_y; ++iy) a(ix * m_y + iy) = scale * unit_phasor(-(ux * ix + uy * iy));
    return a;
}

/// Saleh-Valenzuela far-field link: sqrt(M N / L) sum_l beta_l a_rx a_tx^H.
inline CMat far_channel(const FarFieldSpec& spec, const SystemGeometry& g) {
    if (spec.paths.empty()) throw std::invalid_argument("far_channel: at least one path required");
    const int m = g.n_ris();
    const auto l = static_cast<double>(spec.paths.size());
    if (spec.link == Link::BS_RIS) {
        const int n = g.n_bs();
        CMat out = CMat::Zero(m, n);
        for (const auto& p : spec.paths) {
            if (!std::isfinite(p.complex_gain.real()) || !std::isfinite(p.complex_gain.imag()))
                throw std::invalid_argument("far_channel: non-finite path gain");
            out += p.complex_gain * upa_response(p.azimuth_aoa, p.elevation_aoa, g.m_x(), g.m_y(), g) *
                   ula_response(p.azimuth_aod, n, g).adjoint();
        }
        return std::sqrt(m * n / l) * out;
    }
    const int n = g.n_ue();
    CMat out = CMat::Zero(n, m);
    for (const auto& p : spec.paths) {
        if (!std::isfinite(p.complex_gain.real()) || !std::isfinite(p.complex_gain.imag()))
            throw std::invalid_argument("far_channel: non-finite path gain");
        out += p.complex_gain * ula_response(p.azimuth_aoa, n, g) *
               upa_response(p.azimuth_aod, p.elevation_aod, g.m_x(), g.m_y(), g).adjoint();
    }
    return std::sqrt(m * n / l) * out;
}

/// Free-space LoS amplitude lambda / (4 pi r).
inline double free_space_amplitude(double r, double wavelength) { return wavelength / (4.0 * kPi * r); }

/// Spherical-wave LoS link with exact element-pair distances.
/// BS_RIS is M x N_B, RIS_UE is N_U x M.
inline CMat near_channel(Link link, const SystemGeometry& g) {
    const double lambda = g.wavelength();
    const double k = g.wavenumber();
    const auto ris = g.element_positions(Node::RIS);
    const auto other = g.element_positions(link == Link::BS_RIS ? Node::BS : Node::UE);
    const auto m = static_cast<Eigen::Index>(ris.size());
    const auto n = static_cast<Eigen::Index>(other.size());
    auto entry = [&](const Vec3& a, const Vec3& b) {
        const double r = distance(a, b);
        if (!(r > 0.0)) throw std::invalid_argument("near_channel: coincident element positions");
        return free_space_amplitude(r, lambda) * unit_phasor(-k * r);
    };
    if (link == Link::BS_RIS) {
        CMat out(m, n);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j) out(i, j) = entry(ris[i], other[j]);
        return out;
    }
    CMat out(n, m);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i) out(j, i) = entry(other[j], ris[i]);
    return out;
}

/// Second-order expansion of the distance between array element n (BS or UE) and RIS
/// element m, taken around the ULA midpoint:
///   r - n~ d sin(a) sin(e) + (n~ d)^2 (1 - sin^2(a) sin^2(e)) / (2 r)
/// where r is the midpoint-to-RIS-element distance and sin(a) sin(e) its x direction cosine.
inline double taylor_distance(Link link, int ris_index, int elem_index, const SystemGeometry& g) {
    const Node node = link == Link::BS_RIS ? Node::BS : Node::UE;
    const Vec3 rel = g.ris_element(ris_index) - g.midpoint(node);
    const double r = rel.norm();
    const int count = g.elements(node);
    const double offset = (elem_index - (count - 1) / 2.0) * g.spacing();
    const double s = rel.x / r;
    return r - offset * s + offset * offset * (1.0 - s * s) / (2.0 * r);
}

inline void check_cascade_shapes(const ChannelRealization& ch, Eigen::Index phi_len) {
    if (ch.g_bs_ris.rows() != phi_len || ch.g_ris_ue.cols() != phi_len)
        throw std::invalid_argument("cascade: phase vector length does not match RIS size");
}

/// H = G_ris_ue diag(phi) G_bs_ris for coefficient vector phi.
inline CMat cascade(const ChannelRealization& ch, const CVec& phi) {
    check_cascade_shapes(ch, phi.size());
    return ch.g_ris_ue * phi.asDiagonal() * ch.g_bs_ris;
}

inline CMat cascade(const ChannelRealization& ch, const PhaseShiftVector& theta) {
    return cascade(ch, theta.coefficients());
}

/// Angles of the LoS path implied by the array midpoints, chosen so that the
/// far-field responses are the planar (first-order) approximation of the exact
/// spherical-wave link.
inline PathSpec los_path(const SystemGeometry& g, Link link, cplx gain) {
    PathSpec p;
    p.complex_gain = gain;
    const Vec3 dir = link == Link::BS_RIS ? (g.ris_mid() - g.bs_mid()) : (g.ue_mid() - g.ris_mid());
    const double r = dir.norm();
    if (!(r > 0.0)) throw std::invalid_argument("los_path: coincident midpoints");
    const double ux = dir.x / r;
    const double uy = dir.y / r;
    const double el = std::acos(std::clamp(uy, -1.0, 1.0));
    const double sin_el = std::sin(el);
    const double az_ris = sin_el > 1e-12 ? std::asin(std::clamp(ux / sin_el, -1.0, 1.0)) : 0.0;
    const double az_ula = std::asin(std::clamp(ux, -1.0, 1.0));
    if (link == Link::BS_RIS) {
        p.azimuth_aoa = az_ris;
        p.elevation_aoa = el;
        p.azimuth_aod = az_ula;
        p.elevation_aod = kPi / 2;
    } else {
        p.azimuth_aod = az_ris;
        p.elevation_aod = el;
        p.azimuth_aoa = az_ula;
        p.elevation_aoa = kPi / 2;
    }
    return p;
}

/// LoS gain that makes the far-field LoS term of an L-path link match the
/// spherical-wave link in amplitude and in phase at the reference elements
/// (index 0 of each steering vector).
inline cplx matched_los_gain(const SystemGeometry& g, Link link, std::size_t n_paths) {
    const double r = g.link_distance(link);
    const double mag = std::sqrt(static_cast<double>(n_paths)) * free_space_amplitude(r, g.wavelength());
    Vec3 dir;
    double path_len = r;
    if (link == Link::BS_RIS) {
        dir = (1.0 / r) * (g.ris_mid() - g.bs_mid());
        path_len += dir.dot(g.ris_element(0) - g.ris_mid()) - dir.dot(g.bs_element(0) - g.bs_mid());
    } else {
        dir = (1.0 / r) * (g.ue_mid() - g.ris_mid());
        path_len += dir.dot(g.ue_element(0) - g.ue_mid()) - dir.dot(g.ris_element(0) - g.ris_mid());
    }
    return mag * unit_phasor(-g.wavenumber() * path_len);
}

enum class FarGainMode { Matched, Unit };

struct ScenarioOptions {
    int nlos_paths = 2;
    double nlos_variance = 0.01; ///< relative to |beta_0|^2
    FarGainMode far_gain = FarGainMode::Matched;
};

/// Everything drawn for one realization: far-field path specs for both links, the
/// exact spherical-wave LoS links, and the physical channel used to score designs.
///
/// The physical link is the exact LoS plus the far-field NLoS scatter of that link.
/// A model's channel swaps the exact LoS of each far-field link for its planar model.
struct Scenario {
    FarFieldSpec bs_ris_spec;
    FarFieldSpec ris_ue_spec;
    CMat near_bs_ris;
    CMat near_ris_ue;
    CMat nlos_bs_ris;
    CMat nlos_ris_ue;
    double bs_far_scale = 1.0;
    double ue_far_scale = 1.0;

    ChannelRealization physical() const { return {near_bs_ris + nlos_bs_ris, near_ris_ue + nlos_ris_ue, ModelTag::NN}; }

    ChannelRealization model(ModelTag tag, const SystemGeometry& g) const {
        ChannelRealization ch;
        ch.model_tag = tag;
        ch.g_bs_ris = bs_link_is_near(tag) ? CMat(near_bs_ris + nlos_bs_ris) : CMat(bs_far_scale * far_channel(bs_ris_spec, g));
        ch.g_ris_ue = ue_link_is_near(tag) ? CMat(near_ris_ue + nlos_ris_ue) : CMat(ue_far_scale * far_channel(ris_ue_spec, g));
        return ch;
    }
};

inline FarFieldSpec draw_far_spec(const SystemGeometry& g, Link link, const ScenarioOptions& opt, CounterRng& rng) {
    FarFieldSpec spec;
    spec.link = link;
    const std::size_t n_paths = 1 + static_cast<std::size_t>(std::max(0, opt.nlos_paths));
    const cplx beta0 = matched_los_gain(g, link, n_paths);
    spec.paths.push_back(los_path(g, link, beta0));
    const double var = opt.nlos_variance * std::norm(beta0);
    for (int l = 0; l < opt.nlos_paths; ++l) {
        PathSpec p;
        p.complex_gain = rng.complex_normal(var);
        p.azimuth_aoa = rng.uniform(-kPi, kPi);
        p.elevation_aoa = rng.uniform(0.0, kPi);
        p.azimuth_aod = rng.uniform(-kPi, kPi);
        p.elevation_aod = rng.uniform(0.0, kPi);
        spec.paths.push_back(p);
    }
    return spec;
}

inline Scenario draw_scenario(const SystemGeometry& g, const ScenarioOptions& opt, CounterRng& rng) {
    Scenario s;
    s.bs_ris_spec = draw_far_spec(g, Link::BS_RIS, opt, rng);
    s.ris_ue_spec = draw_far_spec(g, Link::RIS_UE, opt, rng);
    s.near_bs_ris = near_channel(Link::BS_RIS, g);
    s.near_ris_ue = near_channel(Link::RIS_UE, g);
    auto nlos_only = [&](FarFieldSpec spec) {
        spec.paths[0].complex_gain = 0.0;
        return far_channel(spec, g);
    };
    s.nlos_bs_ris = nlos_only(s.bs_ris_spec);
    s.nlos_ris_ue = nlos_only(s.ris_ue_spec);
    if (opt.far_gain == FarGainMode::Unit) {
        s.bs_far_scale = 1.0 / std::abs(s.bs_ris_spec.paths[0].complex_gain);
        s.ue_far_scale = 1.0 / std::abs(s.ris_ue_spec.paths[0].complex_gain);
    }
    return s;
}

} // namespace risnf
