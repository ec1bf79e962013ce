#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pqcd/channel.hpp"
#include "pqcd/design.hpp"
#include "pqcd/milp.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/signal_model.hpp"

namespace pqcd {

using nlohmann::json;

inline json pmf_to_json(const Pmf& p) { return json(p.p); }

inline Pmf pmf_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument(what + ": expected an array of probabilities");
  Pmf p;
  p.p = j.get<std::vector<double>>();
  try {
    validate_pmf(p);
  } catch (const std::exception& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
  return p;
}

inline json channel_to_json(const Channel& t) {
  json rows = json::array();
  for (int y = 0; y < t.out_size; ++y) {
    json row = json::array();
    for (int x = 0; x < t.in_size; ++x) row.push_back(t.entry(y, x));
    rows.push_back(std::move(row));
  }
  return json{{"out_size", t.out_size}, {"in_size", t.in_size}, {"rows", std::move(rows)}};
}

inline Channel channel_from_json(const json& j, const std::string& what = "channel") {
  if (!j.is_object() || !j.contains("rows"))
    throw std::invalid_argument(what + ": expected an object with a rows field");
  const auto& rows = j.at("rows");
  if (!rows.is_array() || rows.empty())
    throw std::invalid_argument(what + ": rows must be a nonempty array");
  Channel t;
  t.out_size = static_cast<int>(rows.size());
  t.in_size = static_cast<int>(rows.at(0).size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != t.in_size)
      throw std::invalid_argument(what + ": ragged rows");
    for (const auto& v : row) t.a.push_back(v.get<double>());
  }
  if (j.contains("out_size") && j.at("out_size").get<int>() != t.out_size)
    throw std::invalid_argument(what + ": out_size disagrees with rows");
  if (j.contains("in_size") && j.at("in_size").get<int>() != t.in_size)
    throw std::invalid_argument(what + ": in_size disagrees with rows");
  try {
    validate_channel(t);
  } catch (const std::exception& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
  return t;
}

inline json mixture_to_json(const ChannelMixture& mix) {
  json channels = json::array();
  for (const Channel& t : mix.channels) channels.push_back(channel_to_json(t));
  return json{{"channels", std::move(channels)}, {"weights", mix.weights}};
}

inline ChannelMixture mixture_from_json(const json& j, const std::string& what = "mixture") {
  if (!j.is_object() || !j.contains("channels") || !j.contains("weights"))
    throw std::invalid_argument(what + ": expected an object with channels and weights");
  ChannelMixture mix;
  for (const auto& c : j.at("channels"))
    mix.channels.push_back(channel_from_json(c, what + ".channel"));
  mix.weights = j.at("weights").get<std::vector<double>>();
  try {
    validate_channel_mixture(mix);
  } catch (const std::exception& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
  return mix;
}

inline json signal_model_to_json(const SignalModel& m) {
  json post = json::array();
  for (const Pmf& g : m.post) post.push_back(pmf_to_json(g));
  json j{{"pre", pmf_to_json(m.pre)},
         {"post", std::move(post)},
         {"prior", pmf_to_json(m.prior)}};
  if (m.change_point)
    j["change_point"] = *m.change_point;
  else
    j["change_point"] = nullptr;
  return j;
}

inline SignalModel signal_model_from_json(const json& j, const std::string& what = "model") {
  if (!j.is_object() || !j.contains("pre") || !j.contains("post") || !j.contains("prior"))
    throw std::invalid_argument(what + ": expected an object with pre, post, and prior");
  SignalModel m;
  m.pre = pmf_from_json(j.at("pre"), what + ".pre");
  for (const auto& g : j.at("post")) m.post.push_back(pmf_from_json(g, what + ".post"));
  m.prior = pmf_from_json(j.at("prior"), what + ".prior");
  if (j.contains("change_point") && !j.at("change_point").is_null())
    m.change_point = j.at("change_point").get<long long>();
  try {
    validate_signal_model(m);
  } catch (const std::exception& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
  return m;
}

inline json decentralized_model_to_json(const DecentralizedModel& dm) {
  json sensors = json::array();
  for (const SignalModel& s : dm.sensors) sensors.push_back(signal_model_to_json(s));
  return json{{"sensors", std::move(sensors)}, {"prior", pmf_to_json(dm.prior)}};
}

inline DecentralizedModel decentralized_model_from_json(const json& j,
                                                        const std::string& what = "model") {
  if (!j.is_object() || !j.contains("sensors"))
    throw std::invalid_argument(what + ": expected an object with a sensors field");
  DecentralizedModel dm;
  for (const auto& s : j.at("sensors"))
    dm.sensors.push_back(signal_model_from_json(s, what + ".sensor"));
  if (j.contains("prior"))
    dm.prior = pmf_from_json(j.at("prior"), what + ".prior");
  else if (!dm.sensors.empty())
    dm.prior = dm.sensors.front().prior;
  try {
    validate_decentralized_model(dm);
  } catch (const std::exception& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
  return dm;
}

inline json design_result_to_json(const DesignResult& r) {
  return json{{"epsilon_bits", r.epsilon_bits},
              {"max_blocks", r.max_blocks},
              {"value", r.value},
              {"approximate", r.approximate},
              {"partition", r.partition.block_of},
              {"channel", channel_to_json(r.channel)},
              {"stats",
               json{{"partitions_examined", r.stats.partitions_examined},
                    {"bases_examined", r.stats.bases_examined},
                    {"vertices_examined", r.stats.vertices_examined},
                    {"wall_ms", r.stats.wall_ms}}}};
}

inline json decentralized_design_result_to_json(const DecentralizedDesignResult& r) {
  json channels = json::array();
  for (const Channel& t : r.channels) channels.push_back(channel_to_json(t));
  return json{{"epsilon_bits", r.epsilon_bits},
              {"max_blocks", r.max_blocks},
              {"value", r.value},
              {"per_sensor_value", r.per_sensor_value},
              {"approximate", r.approximate},
              {"partition", r.partition.block_of},
              {"channels", std::move(channels)},
              {"stats",
               json{{"partitions_examined", r.stats.partitions_examined},
                    {"bases_examined", r.stats.bases_examined},
                    {"vertices_examined", r.stats.vertices_examined},
                    {"wall_ms", r.stats.wall_ms}}}};
}

inline json milp_result_to_json(const MilpResult& r) {
  const char* status = r.status == LpStatus::optimal
                           ? "optimal"
                           : (r.status == LpStatus::infeasible ? "infeasible" : "unbounded");
  return json{{"status", status}, {"value", r.value},          {"phi", r.phi},
              {"xi", r.xi},       {"delta", r.delta},          {"nodes_explored", r.nodes_explored}};
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": JSON parse failure: " + e.what());
  }
  return j;
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

// a model file is decentralized when it carries a sensors array
inline bool json_is_decentralized(const json& j) { return j.is_object() && j.contains("sensors"); }

}  // namespace pqcd
