#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "swag/dataset.hpp"
#include "swag/error.hpp"
#include "swag/swag.hpp"

namespace swag {

/// Inclusive dimension window for the final selection.
struct DimensionFilter {
  std::size_t min = 1;
  std::size_t max = std::numeric_limits<std::size_t>::max();

  bool contains(std::size_t d) const { return d >= min && d <= max; }
  friend bool operator==(const DimensionFilter&, const DimensionFilter&) = default;
};

struct FinalLibrary {
  std::vector<EvaluatedLearner> learners;
  std::size_t chosen_dimension = 0;
  double threshold = 0.0;
  double delta = 0.0;
};

/// Lower median: the element of rank ceil(len / 2).
inline double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty vector");
  const auto mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

/// Picks the dimension whose candidate errors have the lowest median (ties go
/// to the smaller dimension), takes the delta-quantile of that error vector
/// as threshold and keeps every candidate of every step at or below it.
inline FinalLibrary median_rule(const SwagLibrary& library, double delta,
                                std::optional<DimensionFilter> filter = std::nullopt) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("postprocess.delta", "must lie in (0, 1)");
  const StepResult* best = nullptr;
  double best_median = 0.0;
  for (const auto& step : library.steps) {
    if (step.candidates.empty()) continue;
    double med = lower_median(step.errors());
    if (!best || med < best_median) {
      best = &step;
      best_median = med;
    }
  }
  if (!best) throw Error(ErrorCode::EmptyLibrary, "library has no evaluated candidates");

  FinalLibrary out;
  out.chosen_dimension = best->dimension;
  out.threshold = alpha_quantile(best->errors(), delta);
  out.delta = delta;
  for (const auto& step : library.steps)
    for (const auto& c : step.candidates)
      if (c.error <= out.threshold && (!filter || filter->contains(c.spec.size())))
        out.learners.push_back(c);
  if (out.learners.empty())
    throw Error(ErrorCode::EmptySelection, "dimension filter excludes every selected learner");
  return out;
}

// ---------------------------------------------------------------------------
// Diversity

inline double jaccard(const LearnerSpec& a, const LearnerSpec& b) {
  if (a.size() == 0 || b.size() == 0) throw Error(ErrorCode::EmptyInput, "jaccard of an empty spec");
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

struct JaccardStats {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const JaccardStats&, const JaccardStats&) = default;
};

struct DiversitySummary {
  std::size_t learners = 0;
  std::size_t min_dimension = 0;
  std::size_t max_dimension = 0;
  std::optional<JaccardStats> jaccard;  // absent with fewer than two learners
  friend bool operator==(const DiversitySummary&, const DiversitySummary&) = default;
};

inline DiversitySummary diversity_summary(const std::vector<EvaluatedLearner>& learners) {
  DiversitySummary out;
  out.learners = learners.size();
  if (learners.empty()) return out;
  out.min_dimension = out.max_dimension = learners.front().spec.size();
  for (const auto& l : learners) {
    out.min_dimension = std::min(out.min_dimension, l.spec.size());
    out.max_dimension = std::max(out.max_dimension, l.spec.size());
  }
  if (learners.size() < 2) return out;
  std::vector<double> values;
  values.reserve(learners.size() * (learners.size() - 1) / 2);
  for (std::size_t i = 0; i < learners.size(); ++i)
    for (std::size_t j = i + 1; j < learners.size(); ++j)
      values.push_back(jaccard(learners[i].spec, learners[j].spec));
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  out.jaccard = JaccardStats{0.0, *lo, *hi};
  out.jaccard->median = lower_median(std::move(values));
  return out;
}

inline DiversitySummary diversity_summary(const FinalLibrary& final_library) {
  return diversity_summary(final_library.learners);
}

// ---------------------------------------------------------------------------
// Attribute network

struct NetworkNode {
  std::size_t index = 0;
  std::string name;
  std::size_t frequency = 0;
  friend bool operator==(const NetworkNode&, const NetworkNode&) = default;
};

struct NetworkEdge {
  std::size_t source = 0;  // source < target
  std::size_t target = 0;
  std::size_t weight = 0;
  std::optional<double> sign;  // mean of sign(w_i) * sign(w_j) over learners with signs
  friend bool operator==(const NetworkEdge&, const NetworkEdge&) = default;
};

struct AttributeNetwork {
  std::vector<NetworkNode> nodes;  // ascending index
  std::vector<NetworkEdge> edges;  // lexicographic (source, target)
  friend bool operator==(const AttributeNetwork&, const AttributeNetwork&) = default;
};

/// Attribute frequencies and pairwise co-occurrence counts over the learners.
inline AttributeNetwork build_network(const std::vector<EvaluatedLearner>& learners,
                                      const std::vector<std::string>& attribute_names) {
  std::map<std::size_t, std::size_t> freq;
  struct EdgeAccumulator {
    std::size_t weight = 0;
    double sign_sum = 0.0;
    std::size_t sign_count = 0;
  };
  std::map<std::pair<std::size_t, std::size_t>, EdgeAccumulator> pairs;
  for (const auto& l : learners) {
    const auto& attrs = l.spec.attributes();
    for (std::size_t a : attrs) ++freq[a];
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      for (std::size_t j = i + 1; j < attrs.size(); ++j) {
        auto& acc = pairs[{attrs[i], attrs[j]}];
        ++acc.weight;
        if (l.signs && l.signs->size() == attrs.size()) {
          acc.sign_sum += static_cast<double>((*l.signs)[i] * (*l.signs)[j]);
          ++acc.sign_count;
        }
      }
    }
  }
  AttributeNetwork net;
  for (auto [index, count] : freq) {
    if (index >= attribute_names.size())
      throw Error(ErrorCode::IndexOutOfRange, "attribute index " + std::to_string(index) + " has no name");
    net.nodes.push_back({index, attribute_names[index], count});
  }
  for (const auto& [key, acc] : pairs) {
    NetworkEdge e{key.first, key.second, acc.weight, std::nullopt};
    if (acc.sign_count > 0) e.sign = acc.sign_sum / static_cast<double>(acc.sign_count);
    net.edges.push_back(e);
  }
  return net;
}

inline AttributeNetwork build_network(const FinalLibrary& final_library,
                                      const std::vector<std::string>& attribute_names) {
  return build_network(final_library.learners, attribute_names);
}

inline constexpr int kNetworkFormatVersion = 1;

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

/// Undirected Graphviz graph; node label is the attribute name.
inline std::string export_network_dot(const AttributeNetwork& net) {
  std::ostringstream out;
  out << "// swag.network version " << kNetworkFormatVersion << "\n";
  out << "graph swag {\n";
  for (const auto& n : net.nodes)
    out << "  a" << n.index << " [label=\"" << detail::dot_escape(n.name) << "\", freq=" << n.frequency
        << "];\n";
  for (const auto& e : net.edges) {
    out << "  a" << e.source << " -- a" << e.target << " [weight=" << e.weight;
    if (e.sign) out << ", sign=" << detail::format_double(*e.sign);
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

inline nlohmann::ordered_json network_to_json(const AttributeNetwork& net) {
  nlohmann::ordered_json j;
  j["format"] = "swag.network";
  j["version"] = kNetworkFormatVersion;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : net.nodes)
    j["nodes"].push_back({{"index", n.index}, {"name", n.name}, {"frequency", n.frequency}});
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : net.edges) {
    nlohmann::ordered_json je{{"source", e.source}, {"target", e.target}, {"weight", e.weight}};
    if (e.sign) je["sign"] = *e.sign;
    j["edges"].push_back(std::move(je));
  }
  return j;
}

inline std::string export_network_json(const AttributeNetwork& net) {
  return network_to_json(net).dump(2) + "\n";
}

inline AttributeNetwork parse_network_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("format") != "swag.network") throw Error(ErrorCode::FormatError, "not a swag.network document");
    if (j.at("version") != kNetworkFormatVersion)
      throw Error(ErrorCode::UnsupportedVersion, "unsupported network version " + j.at("version").dump());
    AttributeNetwork net;
    for (const auto& n : j.at("nodes"))
      net.nodes.push_back({n.at("index").get<std::size_t>(), n.at("name").get<std::string>(),
                           n.at("frequency").get<std::size_t>()});
    for (const auto& e : j.at("edges")) {
      NetworkEdge edge{e.at("source").get<std::size_t>(), e.at("target").get<std::size_t>(),
                       e.at("weight").get<std::size_t>(), std::nullopt};
      if (e.contains("sign")) edge.sign = e.at("sign").get<double>();
      net.edges.push_back(edge);
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed network JSON: ") + e.what());
  }
}

enum class NetworkFormat { Dot, Json };

inline std::string export_network(const AttributeNetwork& net, NetworkFormat format) {
  return format == NetworkFormat::Dot ? export_network_dot(net) : export_network_json(net);
}

/// One row per final learner: dimension, attribute names, CV error.
inline std::string final_library_csv(const FinalLibrary& final_library,
                                     const std::vector<std::string>& attribute_names) {
  std::ostringstream out;
  out << "# swag.final version 1\n";
  out << "dimension,attributes,error\n";
  for (const auto& l : final_library.learners) {
    out << l.spec.size() << ',';
    for (std::size_t i = 0; i < l.spec.size(); ++i) {
      if (i) out << ';';
      out << attribute_names.at(l.spec[i]);
    }
    out << ',' << detail::format_double(l.error) << '\n';
  }
  return out.str();
}

}  // namespace swag
