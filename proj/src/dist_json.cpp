#include "streamint/dist_json.hpp"

#include <fstream>

#include "streamint/errors.hpp"

namespace streamint {

using nlohmann::json;

json to_json(const Distribution& d) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ErlangDist>) {
          return {{"type", "erlang"}, {"lambda", v.rate()}, {"k", v.phases()}};
        } else if constexpr (std::is_same_v<T, HyperErlangDist>) {
          json branches = json::array();
          for (const auto& b : v.branches())
            branches.push_back({{"alpha", b.weight}, {"lambda", b.erlang.rate()}, {"k", b.erlang.phases()}});
          return {{"type", "hyper_erlang"}, {"branches", branches}};
        } else if constexpr (std::is_same_v<T, PhaseTypeDist>) {
          json alpha = json::array(), t = json::array();
          for (int i = 0; i < v.order(); ++i) {
            alpha.push_back(v.alpha()(i));
            json row = json::array();
            for (int j = 0; j < v.order(); ++j) row.push_back(v.generator()(i, j));
            t.push_back(row);
          }
          return {{"type", "ph"}, {"alpha", alpha}, {"T", t}};
        } else {
          return {{"type", "point"}, {"value", v.value}};
        }
      },
      d.variant());
}

Distribution distribution_from_json(const json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "erlang") return ErlangDist(j.at("lambda").get<double>(), j.at("k").get<int>());
    if (type == "hyper_erlang") {
      std::vector<ErlangBranch> branches;
      for (const auto& b : j.at("branches"))
        branches.push_back({b.at("alpha").get<double>(), ErlangDist(b.at("lambda").get<double>(), b.at("k").get<int>())});
      return HyperErlangDist(std::move(branches));
    }
    if (type == "ph") {
      const auto& a = j.at("alpha");
      const auto& t = j.at("T");
      const auto n = static_cast<Eigen::Index>(a.size());
      Eigen::VectorXd alpha(n);
      for (Eigen::Index i = 0; i < n; ++i) alpha(i) = a.at(i).get<double>();
      if (static_cast<Eigen::Index>(t.size()) != n) throw InvalidDistribution("T row count does not match alpha");
      Eigen::MatrixXd gen(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(t.at(i).size()) != n) throw InvalidDistribution("T must be square");
        for (Eigen::Index k = 0; k < n; ++k) gen(i, k) = t.at(i).at(k).get<double>();
      }
      return PhaseTypeDist(std::move(alpha), std::move(gen));
    }
    if (type == "point") return PointMass{j.at("value").get<double>()};
    throw InvalidDistribution("unknown distribution type '" + type + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed distribution document: ") + e.what());
  }
}

Distribution validated(const Distribution& d, RepairPolicy policy, std::vector<RepairEntry>* repairs) {
  if (const auto* ph = std::get_if<PhaseTypeDist>(&d.variant())) {
    auto v = validate_generator(*ph, policy);
    if (repairs) repairs->insert(repairs->end(), v.log.begin(), v.log.end());
    return v.dist;
  }
  return d;
}

Distribution load_distribution(const std::filesystem::path& path, RepairPolicy policy,
                               std::vector<RepairEntry>* repairs) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open distribution file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return validated(distribution_from_json(j), policy, repairs);
}

json to_json(const RepairEntry& e) {
  return {{"row", e.row}, {"col", e.col}, {"before", e.before}, {"after", e.after}, {"note", e.note}};
}

}  // namespace streamint
