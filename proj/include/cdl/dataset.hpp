#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdl/matrix.hpp"

namespace cdl {

// One second of an ARAS-style smart-home log: 20 binary ambient sensors plus
// the activity label (1..27) of each of the two residents.
struct SensorRow {
    std::array<std::uint8_t, 20> sensors{};
    int activity_r1 = 1;
    int activity_r2 = 1;
};

struct SensorLog {
    std::vector<SensorRow> rows;
    std::string house_id;
    int day_index = 0;
};

constexpr std::size_t kSensorCount = 20;
constexpr int kActivityClasses = 27;

struct LabeledDataset {
    Matrix features;             // rows x input_dim
    std::vector<int> labels;     // class indices in [0, num_classes)
    std::size_t num_classes = 0;

    std::size_t rows() const { return features.rows(); }
    std::size_t input_dim() const { return features.cols(); }
    std::vector<std::size_t> class_histogram() const; // counts per class, sums to rows()
    void validate() const;
};

struct PartitionPlan {
    std::size_t num_participants = 0;
    std::vector<std::vector<int>> classes_per_participant; // per-participant class subsets
    std::vector<std::size_t> rows_per_participant;
    std::uint64_t seed = 0;
    // IoT devices feeding each participant; metadata only, defaults to the
    // participant's class count when left empty.
    std::vector<std::size_t> devices_per_participant;

    void validate(std::size_t num_classes) const;
};

// One file = one day: 22 whitespace-separated integers per line,
// 20 sensor bits then the two resident activities. house_id is taken from the
// parent directory name and day_index from the first integer in the filename.
SensorLog parse_aras(const std::string& path);
SensorLog parse_aras_stream(std::istream& in, const std::string& source_name);
void write_aras(const SensorLog& log, const std::string& path);
void write_aras_stream(const SensorLog& log, std::ostream& out);

// Non-overlapping windows of window_seconds rows. Feature = per-sensor mean
// activation, label = majority activity of the chosen resident (ties broken
// toward the smallest label), trailing partial window dropped.
LabeledDataset windowize(const SensorLog& log, std::size_t window_seconds, int resident);

// Split rows among participants: each draws only from its class subset,
// without replacement, disjoint from every other participant. The requested
// row count is spread as evenly as possible over the participant's classes,
// remainder going to the numerically smallest classes.
std::vector<LabeledDataset> partition(const LabeledDataset& data, const PartitionPlan& plan);

// Seeded stratified sample: per class, round(fraction * count) rows but at
// least one. Returned indices are sorted ascending.
std::vector<std::size_t> stratified_sample_indices(const LabeledDataset& data, double fraction,
                                                   std::uint64_t seed);
LabeledDataset make_auxiliary(const LabeledDataset& data, double fraction, std::uint64_t seed);

LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& indices);
std::vector<std::size_t> complement_indices(std::size_t total, const std::vector<std::size_t>& sorted_taken);

// Gaussian class blobs with unit variance. Class means are laid out on the
// coordinate axes so every pair is at least `separation` apart.
LabeledDataset synth_generate(std::size_t num_classes, std::size_t rows_per_class,
                              std::size_t input_dim, double separation, std::uint64_t seed);
std::vector<double> synth_class_mean(std::size_t cls, std::size_t input_dim, double separation);

// CSV with header f0..f{d-1},label.
void save_csv(const LabeledDataset& data, const std::string& path);
std::string to_csv(const LabeledDataset& data);
LabeledDataset load_csv(const std::string& path, std::size_t num_classes = 0); // 0: infer max+1

LabeledDataset concat(const std::vector<LabeledDataset>& parts);

} // namespace cdl
