#include "fedsim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fedsim/rng.hpp"
#include "fedsim/sampling.hpp"

namespace fedsim {

namespace {

LabeledDataset finalize(std::vector<std::int32_t> labels) {
  if (labels.empty()) throw std::runtime_error("labels: empty dataset");
  std::int32_t maxl = -1;
  for (auto l : labels) {
    if (l < 0) throw std::runtime_error("labels: negative label");
    maxl = std::max(maxl, l);
  }
  LabeledDataset data{std::move(labels), maxl + 1};
  std::vector<std::int64_t> counts(data.num_classes, 0);
  for (auto l : data.labels) ++counts[l];
  for (int c = 0; c < data.num_classes; ++c)
    if (counts[c] == 0)
      throw std::runtime_error("labels: class " + std::to_string(c) + " has no samples");
  return data;
}

}  // namespace

LabeledDataset load_labels(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::int32_t> labels;
  if (format == "i32") {
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::int64_t>(in.tellg());
    if (bytes % 4 != 0) throw std::runtime_error("i32 label file size not a multiple of 4");
    in.seekg(0);
    labels.resize(bytes / 4);
    for (auto& l : labels) {
      unsigned char buf[4];
      in.read(reinterpret_cast<char*>(buf), 4);
      l = static_cast<std::int32_t>(static_cast<std::uint32_t>(buf[0]) |
                                    (static_cast<std::uint32_t>(buf[1]) << 8) |
                                    (static_cast<std::uint32_t>(buf[2]) << 16) |
                                    (static_cast<std::uint32_t>(buf[3]) << 24));
    }
  } else if (format == "csv") {
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      try {
        labels.push_back(static_cast<std::int32_t>(std::stol(line)));
      } catch (const std::exception&) {
        if (first) { first = false; continue; }  // header row
        throw std::runtime_error("csv labels: bad line '" + line + "'");
      }
      first = false;
    }
  } else {
    throw std::runtime_error("label format must be i32 or csv");
  }
  return finalize(std::move(labels));
}

ClassOwnership allocate_classes(int clients, int classes_per_client,
                                int num_classes, std::uint64_t seed) {
  if (clients < 1 || num_classes < 1) throw std::invalid_argument("allocate_classes: empty");
  if (classes_per_client < 1 || classes_per_client > num_classes)
    throw std::invalid_argument("allocate_classes: need 1 <= C <= num_classes");
  if (static_cast<std::int64_t>(clients) * classes_per_client < num_classes)
    throw std::invalid_argument(
        "allocate_classes: M*C < num_classes leaves some class unowned");

  Rng class_rng(derive_stream(seed, 0, StreamPurpose::class_alloc, 0));
  Rng client_rng(derive_stream(seed, 0, StreamPurpose::class_alloc, 1));
  const auto class_order = sample_permutation(num_classes, class_rng);
  const auto client_order = sample_permutation(clients, client_rng);

  ClassOwnership own;
  own.clients = clients;
  own.classes_per_client = classes_per_client;
  own.owners.resize(num_classes);
  // Deal C consecutive slots of the shuffled class wheel to each shuffled
  // client; wrap-around keeps per-class owner counts within +-1 and each
  // client's classes distinct (C <= num_classes).
  for (int i = 0; i < clients; ++i) {
    const int m = client_order[i];
    const std::int64_t base = static_cast<std::int64_t>(i) * classes_per_client;
    for (int j = 0; j < classes_per_client; ++j) {
      const int c = class_order[(base + j) % num_classes];
      own.owners[c].push_back(m);
    }
  }
  for (auto& v : own.owners) std::sort(v.begin(), v.end());
  return own;
}

namespace {

// Dirichlet(alpha,...,alpha) over k owners via normalized gamma draws.
std::vector<double> dirichlet_draw(int k, double alpha, Rng& rng) {
  std::vector<double> p(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    p[i] = gamma_draw(rng, alpha);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

// proportions -> integer counts summing to n: largest remainder, ties broken
// by position (lower client id first).
std::vector<std::int64_t> largest_remainder(const std::vector<double>& prop,
                                            std::int64_t n) {
  const int k = static_cast<int>(prop.size());
  std::vector<std::int64_t> counts(k);
  std::vector<std::pair<double, int>> rem(k);
  std::int64_t used = 0;
  for (int i = 0; i < k; ++i) {
    const double exact = prop[i] * static_cast<double>(n);
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    rem[i] = {exact - std::floor(exact), i};
    used += counts[i];
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;  // stable: equal remainders keep id order
  });
  for (std::int64_t i = 0; i < n - used; ++i) ++counts[rem[i % k].second];
  return counts;
}

}  // namespace

Partition allocate_samples(const LabeledDataset& data,
                           const ClassOwnership& ownership, double alpha,
                           std::uint64_t seed) {
  if (alpha <= 0.0) throw std::invalid_argument("allocate_samples: alpha must be positive");
  const int num_classes = static_cast<int>(ownership.owners.size());
  std::vector<std::vector<std::int64_t>> by_class(num_classes);
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    by_class[data.labels[i]].push_back(static_cast<std::int64_t>(i));

  Partition part;
  part.assignment.resize(ownership.clients);
  part.classes_per_client = ownership.classes_per_client;
  part.alpha = alpha;
  part.seed = seed;

  for (int c = 0; c < num_classes; ++c) {
    const auto& owners = ownership.owners[c];
    if (owners.empty()) throw std::invalid_argument("allocate_samples: unowned class");
    auto& samples = by_class[c];
    const std::int64_t n = static_cast<std::int64_t>(samples.size());
    if (n < static_cast<std::int64_t>(owners.size()))
      part.warnings.push_back("class " + std::to_string(c) + " has " +
                              std::to_string(n) + " samples for " +
                              std::to_string(owners.size()) + " owners");

    Rng prop_rng(derive_stream(seed, static_cast<std::uint64_t>(c),
                               StreamPurpose::dirichlet, 0));
    auto prop = dirichlet_draw(static_cast<int>(owners.size()), alpha, prop_rng);
    auto counts = largest_remainder(prop, n);

    // keep every owner on this class when possible: steal one sample from the
    // current largest owner for each empty one
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > 0) continue;
      const auto big = std::max_element(counts.begin(), counts.end());
      if (*big >= 2) {
        --*big;
        counts[i] = 1;
      }
    }

    Rng shuffle_rng(derive_stream(seed, static_cast<std::uint64_t>(c),
                                  StreamPurpose::shuffle, 0));
    const auto order = sample_permutation(static_cast<int>(n), shuffle_rng);
    std::int64_t pos = 0;
    for (std::size_t i = 0; i < owners.size(); ++i) {
      for (std::int64_t t = 0; t < counts[i]; ++t)
        part.assignment[owners[i]].push_back(samples[order[pos++]]);
    }
  }
  for (auto& v : part.assignment) std::sort(v.begin(), v.end());
  return part;
}

Partition ex_dir(const LabeledDataset& data, int clients,
                 int classes_per_client, double alpha, std::uint64_t seed) {
  const auto own =
      allocate_classes(clients, classes_per_client, data.num_classes, seed);
  return allocate_samples(data, own, alpha, seed);
}

PartitionStats partition_stats(const Partition& part, const LabeledDataset& data) {
  const int m = static_cast<int>(part.assignment.size());
  PartitionStats st;
  st.class_counts.assign(m, std::vector<std::int64_t>(data.num_classes, 0));
  for (int i = 0; i < m; ++i)
    for (auto idx : part.assignment[i]) ++st.class_counts[i][data.labels[idx]];

  std::vector<std::vector<double>> law(m, std::vector<double>(data.num_classes, 0.0));
  for (int i = 0; i < m; ++i) {
    const double total = static_cast<double>(part.assignment[i].size());
    if (total > 0)
      for (int c = 0; c < data.num_classes; ++c)
        law[i][c] = static_cast<double>(st.class_counts[i][c]) / total;
  }
  double tv_sum = 0.0;
  std::int64_t pairs = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double tv = 0.0;
      for (int c = 0; c < data.num_classes; ++c) tv += std::abs(law[i][c] - law[j][c]);
      tv_sum += tv / 2.0;
      ++pairs;
    }
  st.mean_pairwise_tv = pairs ? tv_sum / static_cast<double>(pairs) : 0.0;
  return st;
}

std::string partition_to_json(const Partition& part) {
  nlohmann::ordered_json j;
  j["meta"]["M"] = part.assignment.size();
  j["meta"]["C"] = part.classes_per_client;
  j["meta"]["alpha"] = part.alpha;
  j["meta"]["seed"] = part.seed;
  j["clients"] = part.assignment;
  if (!part.warnings.empty()) j["warnings"] = part.warnings;
  return j.dump();
}

Partition partition_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Partition part;
  part.classes_per_client = j.at("meta").at("C").get<int>();
  part.alpha = j.at("meta").at("alpha").get<double>();
  part.seed = j.at("meta").at("seed").get<std::uint64_t>();
  part.assignment = j.at("clients").get<std::vector<std::vector<std::int64_t>>>();
  if (j.contains("warnings"))
    part.warnings = j.at("warnings").get<std::vector<std::string>>();
  return part;
}

}  // namespace fedsim
