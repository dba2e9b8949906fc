#include "cdl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "cdl/error.hpp"
#include "cdl/rng.hpp"

namespace cdl {

namespace {

int parse_day_index(const std::string& filename) {
    std::size_t i = 0;
    while (i < filename.size() && !std::isdigit(static_cast<unsigned char>(filename[i]))) ++i;
    if (i == filename.size()) return 0;
    int value = 0;
    while (i < filename.size() && std::isdigit(static_cast<unsigned char>(filename[i]))) {
        value = value * 10 + (filename[i] - '0');
        ++i;
    }
    return value;
}

} // namespace

std::vector<std::size_t> LabeledDataset::class_histogram() const {
    std::vector<std::size_t> hist(num_classes, 0);
    for (int label : labels) hist[static_cast<std::size_t>(label)]++;
    return hist;
}

void LabeledDataset::validate() const {
    if (features.rows() != labels.size()) {
        throw ContractViolation("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                                std::to_string(labels.size()) + " labels");
    }
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
            throw ContractViolation("dataset label " + std::to_string(label) + " outside [0, " +
                                    std::to_string(num_classes) + ")");
        }
    }
    for (double v : features.data()) {
        if (!std::isfinite(v)) throw ContractViolation("dataset contains non-finite feature value");
    }
}

void PartitionPlan::validate(std::size_t num_classes) const {
    if (num_participants < 1) throw ContractViolation("partition plan needs at least one participant");
    if (classes_per_participant.size() != num_participants ||
        rows_per_participant.size() != num_participants) {
        throw ContractViolation("partition plan lists must all have num_participants entries");
    }
    if (!devices_per_participant.empty() && devices_per_participant.size() != num_participants) {
        throw ContractViolation("devices_per_participant must be empty or have num_participants entries");
    }
    for (std::size_t i = 0; i < num_participants; ++i) {
        if (classes_per_participant[i].empty()) {
            throw ContractViolation("participant " + std::to_string(i) + " has an empty class subset");
        }
        if (rows_per_participant[i] == 0) {
            throw ContractViolation("participant " + std::to_string(i) + " requests zero rows");
        }
        for (int cls : classes_per_participant[i]) {
            if (cls < 0 || static_cast<std::size_t>(cls) >= num_classes) {
                throw ContractViolation("participant " + std::to_string(i) + " requests class " +
                                        std::to_string(cls) + " outside [0, " + std::to_string(num_classes) + ")");
            }
        }
    }
}

SensorLog parse_aras_stream(std::istream& in, const std::string& source_name) {
    SensorLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        SensorRow row;
        long values[22];
        for (int c = 0; c < 22; ++c) {
            if (!(ls >> values[c])) {
                throw DataError(source_name + ":" + std::to_string(line_no) +
                                ": expected 22 integer columns, failed at column " + std::to_string(c + 1));
            }
        }
        long extra;
        if (ls >> extra) {
            throw DataError(source_name + ":" + std::to_string(line_no) + ": more than 22 columns");
        }
        for (int c = 0; c < 20; ++c) {
            if (values[c] != 0 && values[c] != 1) {
                throw DataError(source_name + ":" + std::to_string(line_no) + ": sensor column " +
                                std::to_string(c + 1) + " value " + std::to_string(values[c]) +
                                " not in {0,1}");
            }
            row.sensors[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(values[c]);
        }
        for (int c = 20; c < 22; ++c) {
            if (values[c] < 1 || values[c] > kActivityClasses) {
                throw DataError(source_name + ":" + std::to_string(line_no) + ": activity label " +
                                std::to_string(values[c]) + " outside [1, 27]");
            }
        }
        row.activity_r1 = static_cast<int>(values[20]);
        row.activity_r2 = static_cast<int>(values[21]);
        log.rows.push_back(row);
    }
    return log;
}

SensorLog parse_aras(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ARAS file: " + path);
    SensorLog log = parse_aras_stream(in, path);
    const std::filesystem::path p(path);
    log.house_id = p.has_parent_path() ? p.parent_path().filename().string() : "";
    log.day_index = parse_day_index(p.filename().string());
    return log;
}

void write_aras_stream(const SensorLog& log, std::ostream& out) {
    for (const SensorRow& row : log.rows) {
        for (std::size_t c = 0; c < kSensorCount; ++c) out << int(row.sensors[c]) << ' ';
        out << row.activity_r1 << ' ' << row.activity_r2 << '\n';
    }
}

void write_aras(const SensorLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write ARAS file: " + path);
    write_aras_stream(log, out);
}

LabeledDataset windowize(const SensorLog& log, std::size_t window_seconds, int resident) {
    if (window_seconds < 1) throw ContractViolation("windowize: window_seconds must be >= 1");
    if (resident != 1 && resident != 2) throw ContractViolation("windowize: resident must be 1 or 2");

    const std::size_t n_windows = log.rows.size() / window_seconds;
    LabeledDataset out;
    out.num_classes = kActivityClasses;
    out.features = Matrix(n_windows, kSensorCount);
    out.labels.resize(n_windows);

    for (std::size_t w = 0; w < n_windows; ++w) {
        const std::size_t begin = w * window_seconds;
        std::array<double, kSensorCount> sums{};
        std::array<std::size_t, kActivityClasses> activity_counts{};
        for (std::size_t r = begin; r < begin + window_seconds; ++r) {
            const SensorRow& row = log.rows[r];
            for (std::size_t c = 0; c < kSensorCount; ++c) sums[c] += row.sensors[c];
            const int act = resident == 1 ? row.activity_r1 : row.activity_r2;
            activity_counts[static_cast<std::size_t>(act - 1)]++;
        }
        for (std::size_t c = 0; c < kSensorCount; ++c) {
            out.features(w, c) = sums[c] / static_cast<double>(window_seconds);
        }
        std::size_t best = 0;
        for (std::size_t cls = 1; cls < activity_counts.size(); ++cls) {
            if (activity_counts[cls] > activity_counts[best]) best = cls; // ties keep smaller label
        }
        out.labels[w] = static_cast<int>(best);
    }
    return out;
}

std::vector<LabeledDataset> partition(const LabeledDataset& data, const PartitionPlan& plan) {
    data.validate();
    plan.validate(data.num_classes);

    // Per-class index pools, each shuffled once; participants consume from the back.
    std::vector<std::vector<std::size_t>> pools(data.num_classes);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        pools[static_cast<std::size_t>(data.labels[r])].push_back(r);
    }
    for (std::size_t cls = 0; cls < pools.size(); ++cls) {
        std::mt19937_64 rng(mix_seed(plan.seed, cls));
        auto perm = shuffled_indices(pools[cls].size(), rng);
        std::vector<std::size_t> shuffled(pools[cls].size());
        for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = pools[cls][perm[i]];
        pools[cls] = std::move(shuffled);
    }

    std::vector<LabeledDataset> parts;
    parts.reserve(plan.num_participants);
    for (std::size_t p = 0; p < plan.num_participants; ++p) {
        std::vector<int> classes = plan.classes_per_participant[p];
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

        const std::size_t want = plan.rows_per_participant[p];
        const std::size_t base = want / classes.size();
        const std::size_t remainder = want % classes.size();

        std::vector<std::size_t> chosen;
        chosen.reserve(want);
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            const std::size_t quota = base + (ci < remainder ? 1 : 0);
            auto& pool = pools[static_cast<std::size_t>(classes[ci])];
            if (pool.size() < quota) {
                throw DataError("participant " + std::to_string(p) + " needs " + std::to_string(quota) +
                                " rows of class " + std::to_string(classes[ci]) + " but only " +
                                std::to_string(pool.size()) + " remain (deficit " +
                                std::to_string(quota - pool.size()) + ")");
            }
            for (std::size_t i = 0; i < quota; ++i) {
                chosen.push_back(pool.back());
                pool.pop_back();
            }
        }
        std::sort(chosen.begin(), chosen.end());
        parts.push_back(subset(data, chosen));
    }
    return parts;
}

std::vector<std::size_t> stratified_sample_indices(const LabeledDataset& data, double fraction,
                                                   std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw ContractViolation("stratified fraction must be in (0, 1]");
    }
    std::vector<std::vector<std::size_t>> pools(data.num_classes);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        pools[static_cast<std::size_t>(data.labels[r])].push_back(r);
    }
    std::vector<std::size_t> selected;
    for (std::size_t cls = 0; cls < pools.size(); ++cls) {
        auto& pool = pools[cls];
        if (pool.empty()) continue;
        auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
        take = std::max<std::size_t>(take, 1);
        take = std::min(take, pool.size());
        std::mt19937_64 rng(mix_seed(seed, cls));
        auto perm = shuffled_indices(pool.size(), rng);
        for (std::size_t i = 0; i < take; ++i) selected.push_back(pool[perm[i]]);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

LabeledDataset make_auxiliary(const LabeledDataset& data, double fraction, std::uint64_t seed) {
    return subset(data, stratified_sample_indices(data, fraction, seed));
}

LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& indices) {
    LabeledDataset out;
    out.num_classes = data.num_classes;
    out.features = Matrix(indices.size(), data.input_dim());
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= data.rows()) throw ContractViolation("subset index out of range");
        for (std::size_t c = 0; c < data.input_dim(); ++c) out.features(i, c) = data.features(src, c);
        out.labels[i] = data.labels[src];
    }
    return out;
}

std::vector<std::size_t> complement_indices(std::size_t total, const std::vector<std::size_t>& sorted_taken) {
    std::vector<std::size_t> rest;
    rest.reserve(total - sorted_taken.size());
    std::size_t t = 0;
    for (std::size_t i = 0; i < total; ++i) {
        if (t < sorted_taken.size() && sorted_taken[t] == i) {
            ++t;
        } else {
            rest.push_back(i);
        }
    }
    return rest;
}

std::vector<double> synth_class_mean(std::size_t cls, std::size_t input_dim, double separation) {
    // Class c sits on axis (c mod d) at radius separation * (1 + c / d): two
    // classes on the same axis differ by >= separation along it, classes on
    // different axes are >= separation * sqrt(2) apart.
    std::vector<double> mean(input_dim, 0.0);
    const std::size_t axis = cls % input_dim;
    const double radius = separation * (1.0 + static_cast<double>(cls / input_dim));
    mean[axis] = radius;
    return mean;
}

LabeledDataset synth_generate(std::size_t num_classes, std::size_t rows_per_class,
                              std::size_t input_dim, double separation, std::uint64_t seed) {
    if (num_classes < 1 || rows_per_class < 1 || input_dim < 1) {
        throw ContractViolation("synth_generate: counts must be >= 1");
    }
    if (!(separation > 0.0)) throw ContractViolation("synth_generate: separation must be positive");

    LabeledDataset out;
    out.num_classes = num_classes;
    out.features = Matrix(num_classes * rows_per_class, input_dim);
    out.labels.resize(num_classes * rows_per_class);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::size_t row = 0;
    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        const auto mean = synth_class_mean(cls, input_dim, separation);
        for (std::size_t i = 0; i < rows_per_class; ++i, ++row) {
            for (std::size_t c = 0; c < input_dim; ++c) out.features(row, c) = mean[c] + noise(rng);
            out.labels[row] = static_cast<int>(cls);
        }
    }
    return out;
}

std::string to_csv(const LabeledDataset& data) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t c = 0; c < data.input_dim(); ++c) out << 'f' << c << ',';
    out << "label\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.input_dim(); ++c) out << data.features(r, c) << ',';
        out << data.labels[r] << '\n';
    }
    return out.str();
}

void save_csv(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write CSV file: " + path);
    out << to_csv(data);
}

LabeledDataset load_csv(const std::string& path, std::size_t num_classes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty CSV file");
    std::size_t dims = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')); // header cols - 1

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != dims + 1) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(dims + 1) + " columns, got " + std::to_string(row.size()));
        }
        values.insert(values.end(), row.begin(), row.begin() + static_cast<long>(dims));
        labels.push_back(static_cast<int>(std::llround(row.back())));
    }

    LabeledDataset out;
    out.features = Matrix(labels.size(), dims);
    std::copy(values.begin(), values.end(), out.features.data().begin());
    out.labels = std::move(labels);
    if (num_classes == 0) {
        int max_label = -1;
        for (int l : out.labels) max_label = std::max(max_label, l);
        out.num_classes = static_cast<std::size_t>(max_label + 1);
    } else {
        out.num_classes = num_classes;
    }
    out.validate();
    return out;
}

LabeledDataset concat(const std::vector<LabeledDataset>& parts) {
    LabeledDataset out;
    if (parts.empty()) return out;
    out.num_classes = parts.front().num_classes;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.input_dim() != parts.front().input_dim() || p.num_classes != out.num_classes) {
            throw ContractViolation("concat: mismatched dataset shapes");
        }
        total += p.rows();
    }
    out.features = Matrix(total, parts.front().input_dim());
    out.labels.reserve(total);
    std::size_t row = 0;
    for (const auto& p : parts) {
        for (std::size_t r = 0; r < p.rows(); ++r, ++row) {
            for (std::size_t c = 0; c < p.input_dim(); ++c) out.features(row, c) = p.features(r, c);
            out.labels.push_back(p.labels[r]);
        }
    }
    return out;
}

} // namespace cdl
