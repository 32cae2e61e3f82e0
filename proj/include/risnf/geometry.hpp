#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace risnf {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

enum class Node { BS, UE, RIS };
enum class Link { BS_RIS, RIS_UE };
enum class FieldRegion { FarField, NearField };

inline const char* to_string(Link link) { return link == Link::BS_RIS ? "BS_RIS" : "RIS_UE"; }
inline const char* to_string(FieldRegion r) { return r == FieldRegion::FarField ? "FarField" : "NearField"; }

/// Construction parameters for a SystemGeometry. Lengths in meters, frequency in Hz.
struct GeometryParams {
    double carrier_hz = 30e9;
    /// Element spacing; when <= 0 it defaults to half a wavelength.
    double spacing_m = 0.0;
    int n_bs = 16;
    int n_ue = 8;
    int m_x = 60;
    int m_y = 2;
    Vec3 bs_mid{0.0, 0.0, 0.0};
    Vec3 ue_mid{24.0, 0.0, 0.0};
    Vec3 ris_mid{10.0, 0.0, 8.0};
};

/// Spatial layout of the BS ULA, the user ULA and the RIS UPA.
///
/// Both ULAs are parallel to the x axis; the RIS lies in a plane parallel to XY.
/// RIS element m = m_x * M_y + m_y (0-based, m_y fastest), which is the Kronecker
/// order used by the UPA response and every RIS codebook. Immutable once built.
class SystemGeometry {
public:
    explicit SystemGeometry(const GeometryParams& p) : p_(p) {
        if (!(p.carrier_hz > 0.0) || !std::isfinite(p.carrier_hz))
            throw std::invalid_argument("geometry: carrier frequency must be positive");
        if (p.n_bs < 1 || p.n_ue < 1 || p.m_x < 1 || p.m_y < 1)
            throw std::invalid_argument("geometry: element counts must be >= 1");
        for (const Vec3* v : {&p.bs_mid, &p.ue_mid, &p.ris_mid})
            if (!std::isfinite(v->x) || !std::isfinite(v->y) || !std::isfinite(v->z))
                throw std::invalid_argument("geometry: non-finite midpoint");
        wavelength_ = kSpeedOfLight / p.carrier_hz;
        if (p_.spacing_m <= 0.0) p_.spacing_m = wavelength_ / 2.0;
        if (!std::isfinite(p_.spacing_m)) throw std::invalid_argument("geometry: non-finite spacing");
    }

    double wavelength() const { return wavelength_; }
    double carrier_hz() const { return p_.carrier_hz; }
    double spacing() const { return p_.spacing_m; }
    double wavenumber() const { return 2.0 * kPi / wavelength_; }
    int n_bs() const { return p_.n_bs; }
    int n_ue() const { return p_.n_ue; }
    int m_x() const { return p_.m_x; }
    int m_y() const { return p_.m_y; }
    int n_ris() const { return p_.m_x * p_.m_y; }
    const Vec3& bs_mid() const { return p_.bs_mid; }
    const Vec3& ue_mid() const { return p_.ue_mid; }
    const Vec3& ris_mid() const { return p_.ris_mid; }
    const GeometryParams& params() const { return p_; }

    int elements(Node node) const {
        switch (node) {
        case Node::BS: return p_.n_bs;
        case Node::UE: return p_.n_ue;
        case Node::RIS: return n_ris();
        }
        return 0;
    }

    const Vec3& midpoint(Node node) const {
        switch (node) {
        case Node::BS: return p_.bs_mid;
        case Node::UE: return p_.ue_mid;
        case Node::RIS: return p_.ris_mid;
        }
        return p_.bs_mid;
    }

    /// Position of BS antenna n (0-based).
    Vec3 bs_element(int n) const { return p_.bs_mid + Vec3{centered(n, p_.n_bs) * p_.spacing_m, 0.0, 0.0}; }
    Vec3 ue_element(int n) const { return p_.ue_mid + Vec3{centered(n, p_.n_ue) * p_.spacing_m, 0.0, 0.0}; }
    Vec3 ris_element(int ix, int iy) const {
        return p_.ris_mid + Vec3{centered(ix, p_.m_x) * p_.spacing_m, centered(iy, p_.m_y) * p_.spacing_m, 0.0};
    }
    Vec3 ris_element(int m) const { return ris_element(m / p_.m_y, m % p_.m_y); }

    std::vector<Vec3> element_positions(Node node) const {
        std::vector<Vec3> out;
        out.reserve(static_cast<std::size_t>(elements(node)));
        switch (node) {
        case Node::BS:
            for (int n = 0; n < p_.n_bs; ++n) out.push_back(bs_element(n));
            break;
        case Node::UE:
            for (int n = 0; n < p_.n_ue; ++n) out.push_back(ue_element(n));
            break;
        case Node::RIS:
            for (int ix = 0; ix < p_.m_x; ++ix)
                for (int iy = 0; iy < p_.m_y; ++iy) out.push_back(ris_element(ix, iy));
            break;
        }
        return out;
    }

    double aperture(Node node) const {
        const double d = p_.spacing_m;
        switch (node) {
        case Node::BS: return (p_.n_bs - 1) * d;
        case Node::UE: return (p_.n_ue - 1) * d;
        case Node::RIS: return std::hypot((p_.m_x - 1) * d, (p_.m_y - 1) * d);
        }
        return 0.0;
    }

    /// Midpoint-to-midpoint distance of a link.
    double link_distance(Link link) const {
        return link == Link::BS_RIS ? distance(p_.bs_mid, p_.ris_mid) : distance(p_.ris_mid, p_.ue_mid);
    }

    /// Rayleigh boundary 2 (D_a + D_b)^2 / lambda of a link.
    double rayleigh_boundary(Link link) const {
        const double other = link == Link::BS_RIS ? aperture(Node::BS) : aperture(Node::UE);
        const double sum = other + aperture(Node::RIS);
        return 2.0 * sum * sum / wavelength_;
    }

    /// NearField when the link distance is at or inside the Rayleigh boundary.
    FieldRegion classify_link(Link link) const {
        return link_distance(link) <= rayleigh_boundary(link) ? FieldRegion::NearField : FieldRegion::FarField;
    }

    SystemGeometry with_ue(const Vec3& ue) const {
        GeometryParams p = p_;
        p.ue_mid = ue;
        return SystemGeometry(p);
    }

private:
    static double centered(int n, int count) { return n - (count - 1) / 2.0; }

    GeometryParams p_;
    double wavelength_ = 0.0;
};

} // namespace risnf
