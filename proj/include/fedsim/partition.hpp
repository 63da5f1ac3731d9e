#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedsim {

struct LabeledDataset {
  std::vector<std::int32_t> labels;  // values in [0, num_classes)
  int num_classes = 0;
};

// Loads labels from a binary file of little-endian int32, or from a one-column
// CSV (optional non-numeric header tolerated). num_classes = max label + 1;
// rejects negative labels and empty classes.
LabeledDataset load_labels(const std::string& path, const std::string& format);

struct ClassOwnership {
  // owners[c] = ascending client ids owning class c; every client appears in
  // exactly C classes, every class has >= 1 owner.
  std::vector<std::vector<int>> owners;
  int clients = 0;
  int classes_per_client = 0;
};

// Balanced block-cyclic deal over shuffled class and client lists: each client
// gets exactly C distinct classes and per-class owner counts differ by at most
// one. Throws when M*C < num_classes (some class would be orphaned) or
// C > num_classes.
ClassOwnership allocate_classes(int clients, int classes_per_client,
                                int num_classes, std::uint64_t seed);

struct Partition {
  std::vector<std::vector<std::int64_t>> assignment;  // per client, ascending
  int classes_per_client = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;  // classes with fewer samples than owners
};

// For each class, splits its samples among the owning clients with
// Dirichlet(alpha)-drawn proportions, largest-remainder rounding (ties to the
// lower client id), and a one-sample steal from the largest owner for owners
// that would otherwise get zero of the class.
Partition allocate_samples(const LabeledDataset& data,
                           const ClassOwnership& ownership, double alpha,
                           std::uint64_t seed);

// allocate_classes + allocate_samples with substreams of one seed.
Partition ex_dir(const LabeledDataset& data, int clients,
                 int classes_per_client, double alpha, std::uint64_t seed);

struct PartitionStats {
  std::vector<std::vector<std::int64_t>> class_counts;  // [client][class]
  double mean_pairwise_tv;  // mean total-variation distance between client label laws
};

PartitionStats partition_stats(const Partition& part, const LabeledDataset& data);

// {"meta":{"M":..,"C":..,"alpha":..,"seed":..},"clients":[[..],..]}
// Canonical (sorted-key, fixed float format) and therefore byte-stable.
std::string partition_to_json(const Partition& part);
Partition partition_from_json(const std::string& text);

}  // namespace fedsim
