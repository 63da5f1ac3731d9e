#include "fedsim/presets.hpp"

#include <stdexcept>

#include <json.hpp>

namespace fedsim {

namespace {

Quadraticd scalar_client(double a, double b) {
  Quadraticd q;
  q.A = Eigen::MatrixXd::Constant(1, 1, a);
  q.b = Eigen::VectorXd::Constant(1, b);
  return q;
}

Federationd pair_fed(double a1, double b1, double a2, double b2) {
  Federationd fed;
  fed.clients = {scalar_client(a1, b1), scalar_client(a2, b2)};
  return fed;
}

}  // namespace

Federationd preset(const std::string& name) {
  // groups: client objectives (a/2) x^2 + b x
  if (name == "group1") return pair_fed(1.0, 0.0, 1.0, 0.0);
  if (name == "group2") return pair_fed(1.0, 1.0, 1.0, -1.0);
  if (name == "group3") return pair_fed(4.0 / 3.0, 1.0, 2.0 / 3.0, -1.0);
  if (name == "group4") return pair_fed(2.0, 1.0, 0.0, -1.0);

  // sweep-d<delta>-z<zeta*>: delta in {0, 13 (=1/3), 1}, zeta* in {1, 10, 100}
  const std::string prefix = "sweep-d";
  if (name.rfind(prefix, 0) == 0) {
    const auto zpos = name.find("-z");
    if (zpos != std::string::npos) {
      const std::string d = name.substr(prefix.size(), zpos - prefix.size());
      const std::string z = name.substr(zpos + 2);
      double a1, a2;
      if (d == "0") a1 = a2 = 1.0;
      else if (d == "13") { a1 = 4.0 / 3.0; a2 = 2.0 / 3.0; }
      else if (d == "1") { a1 = 2.0; a2 = 0.0; }
      else throw std::invalid_argument("unknown preset: " + name);
      double zb;
      if (z == "1") zb = 1.0;
      else if (z == "10") zb = 10.0;
      else if (z == "100") zb = 100.0;
      else throw std::invalid_argument("unknown preset: " + name);
      return pair_fed(a1, zb, a2, -zb);
    }
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names = {"group1", "group2", "group3", "group4"};
  for (const char* d : {"0", "13", "1"})
    for (const char* z : {"1", "10", "100"})
      names.push_back(std::string("sweep-d") + d + "-z" + z);
  return names;
}

Federationd federation_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Federationd fed;
  for (const auto& cj : j.at("clients")) {
    Quadraticd q;
    const auto rows = cj.at("A").get<std::vector<std::vector<double>>>();
    const auto d = static_cast<Eigen::Index>(rows.size());
    q.A.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != d)
        throw std::runtime_error("client curvature block is not square");
      for (Eigen::Index k = 0; k < d; ++k) q.A(i, k) = rows[i][k];
    }
    const auto bv = cj.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(bv.size()) != d)
      throw std::runtime_error("linear term length does not match curvature");
    q.b = Eigen::Map<const Eigen::VectorXd>(bv.data(), bv.size());
    q.c = cj.value("c", 0.0);
    if (!q.symmetric()) throw std::runtime_error("client curvature not symmetric");
    if (!fed.clients.empty() && q.dim() != fed.clients.front().dim())
      throw std::runtime_error("clients disagree on dimension");
    fed.clients.push_back(std::move(q));
  }
  if (fed.clients.empty()) throw std::runtime_error("federation has no clients");
  return fed;
}

std::string federation_to_json(const Federationd& fed) {
  nlohmann::ordered_json clients = nlohmann::ordered_json::array();
  for (const auto& q : fed.clients) {
    nlohmann::ordered_json cj;
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < q.dim(); ++i) {
      auto row = nlohmann::ordered_json::array();
      for (Eigen::Index k = 0; k < q.dim(); ++k) row.push_back(q.A(i, k));
      rows.push_back(std::move(row));
    }
    cj["A"] = std::move(rows);
    auto bv = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < q.dim(); ++i) bv.push_back(q.b(i));
    cj["b"] = std::move(bv);
    cj["c"] = q.c;
    clients.push_back(std::move(cj));
  }
  nlohmann::ordered_json j;
  j["clients"] = std::move(clients);
  return j.dump(2);
}

}  // namespace fedsim
