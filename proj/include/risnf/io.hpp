#pragma once

#include "risnf/channel.hpp"
#include "risnf/linalg.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace risnf {

/// {"rows": r, "cols": c, "data": [[re, im], ...]} in row-major order.
inline nlohmann::json matrix_to_json(const CMat& m) {
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back({m(i, j).real(), m(i, j).imag()});
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline CMat matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
        throw std::invalid_argument("matrix json: data length does not match shape");
    CMat m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index jj = 0; jj < cols; ++jj, ++k) m(i, jj) = {data[k].at(0).get<double>(), data[k].at(1).get<double>()};
    return m;
}

inline nlohmann::json channel_to_json(const ChannelRealization& ch) {
    return {{"model", to_string(ch.model_tag)}, {"g_bs_ris", matrix_to_json(ch.g_bs_ris)}, {"g_ris_ue", matrix_to_json(ch.g_ris_ue)}};
}

inline ChannelRealization channel_from_json(const nlohmann::json& j) {
    ChannelRealization ch;
    const auto tag = parse_model_tag(j.at("model").get<std::string>());
    if (!tag) throw std::invalid_argument("channel json: unknown model tag");
    ch.model_tag = *tag;
    ch.g_bs_ris = matrix_from_json(j.at("g_bs_ris"));
    ch.g_ris_ue = matrix_from_json(j.at("g_ris_ue"));
    ch.validate();
    return ch;
}

inline void write_channel_json(std::ostream& os, const ChannelRealization& ch) { os << channel_to_json(ch).dump(2) << '\n'; }

inline ChannelRealization read_channel_json(std::istream& is) { return channel_from_json(nlohmann::json::parse(is)); }

} // namespace risnf
