#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crbm/crbm_core.hpp"
#include "crbm/encoding.hpp"
#include "crbm/errors.hpp"

namespace crbm {

/// A trained CRBM with the encoding statistics of its variables.
struct Model {
  LayerConfig layer;
  EncodingStats stats;
  CRBMParams params;

  friend bool operator==(const Model& a, const Model& b) {
    return a.layer == b.layer && a.stats == b.stats && a.params == b.params;
  }
};

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::array<char, 8> kContainerMagic{'C', 'R', 'B', 'M', 'M', 'D', 'L', '\0'};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_u64(std::istream& in, int bytes = 8) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    int c = in.get();
    if (c == EOF) throw FormatError("model container is truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
inline void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace detail

/// Container layout (all integers little-endian):
///   8 bytes magic "CRBMMDL\0", u32 layout version, u64 header length,
///   UTF-8 JSON header (layer configuration + array manifest),
///   then every array listed in the manifest as IEEE-754 binary64.
inline void write_model(const Model& m, std::ostream& out) {
  check_shape(m.layer, m.params);
  const auto V = static_cast<std::uint64_t>(m.layer.visible());
  const auto M = static_cast<std::uint64_t>(m.layer.hidden);
  const auto S = static_cast<std::uint64_t>(m.stats.names.size());
  nlohmann::json header;
  header["layout_version"] = kContainerVersion;
  header["layer"] = {{"lag", m.layer.lag},
                     {"cadence_months", m.layer.cadence_months},
                     {"hidden", m.layer.hidden},
                     {"variables", schema_to_json(m.layer.variables)}};
  header["stats_variables"] = m.stats.names;
  header["arrays"] = nlohmann::json::array({
      {{"name", "location"}, {"rows", V}, {"cols", 1}},
      {{"name", "log_scale"}, {"rows", V}, {"cols", 1}},
      {{"name", "hidden_bias"}, {"rows", M}, {"cols", 1}},
      {{"name", "weights"}, {"rows", V}, {"cols", M}, {"order", "row-major"}},
      {{"name", "stats_mean"}, {"rows", S}, {"cols", 1}},
      {{"name", "stats_scale"}, {"rows", S}, {"cols", 1}},
  });
  std::string h = header.dump();
  out.write(kContainerMagic.data(), kContainerMagic.size());
  detail::put_u32(out, kContainerVersion);
  detail::put_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (Eigen::Index i = 0; i < m.params.location.size(); ++i) detail::put_f64(out, m.params.location[i]);
  for (Eigen::Index i = 0; i < m.params.log_scale.size(); ++i) detail::put_f64(out, m.params.log_scale[i]);
  for (Eigen::Index i = 0; i < m.params.hidden_bias.size(); ++i) detail::put_f64(out, m.params.hidden_bias[i]);
  for (Eigen::Index r = 0; r < m.params.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < m.params.weights.cols(); ++c) detail::put_f64(out, m.params.weights(r, c));
  for (const auto& s : m.stats.values) detail::put_f64(out, s.mean);
  for (const auto& s : m.stats.values) detail::put_f64(out, s.scale);
  if (!out) throw Error("failed writing model container");
}

inline Model read_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kContainerMagic) throw FormatError("not a CRBM model container");
  auto version = static_cast<std::uint32_t>(detail::get_u64(in, 4));
  if (version != kContainerVersion)
    throw FormatError("unsupported container layout version " + std::to_string(version));
  auto hlen = detail::get_u64(in);
  if (hlen > (1ULL << 30)) throw FormatError("model container header is implausibly large");
  std::string h(hlen, '\0');
  in.read(h.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw FormatError("model container is truncated");
  Model m;
  try {
    auto header = nlohmann::json::parse(h);
    const auto& L = header.at("layer");
    m.layer = make_layer(schema_from_json(L.at("variables")), L.at("lag").get<int>(),
                         L.at("cadence_months").get<int>(), L.at("hidden").get<int>());
    m.stats.names = header.at("stats_variables").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model container header: ") + e.what());
  }
  m.params = CRBMParams::zeros(m.layer);
  for (Eigen::Index i = 0; i < m.params.location.size(); ++i) m.params.location[i] = detail::get_f64(in);
  for (Eigen::Index i = 0; i < m.params.log_scale.size(); ++i) m.params.log_scale[i] = detail::get_f64(in);
  for (Eigen::Index i = 0; i < m.params.hidden_bias.size(); ++i) m.params.hidden_bias[i] = detail::get_f64(in);
  for (Eigen::Index r = 0; r < m.params.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < m.params.weights.cols(); ++c) m.params.weights(r, c) = detail::get_f64(in);
  m.stats.values.resize(m.stats.names.size());
  for (auto& s : m.stats.values) s.mean = detail::get_f64(in);
  for (auto& s : m.stats.values) s.scale = detail::get_f64(in);
  return m;
}

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_model(m, out);
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  return read_model(in);
}

}  // namespace crbm
